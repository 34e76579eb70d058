#include "swing/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace swing {

std::string to_string(Siting s) {
    switch (s) {
        case Siting::at_g4: return "g4";
        case Siting::at_l1: return "l1";
        default: return "none";
    }
}

std::string ScenarioConfig::controllers_label() const {
    if (vctrl && sdc) return "vctrl+sdc";
    if (vctrl) return "vctrl";
    if (sdc) return "sdc";
    return "none";
}

std::string ScenarioConfig::tag() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "case%d_pen%02d_pss%s", case_id,
                  static_cast<int>(std::lround(penetration * 100)), pss ? "on" : "off");
    return buf;
}

void validate_scenario(ScenarioConfig& sc, bool explicit_siting, bool explicit_vctrl,
                       bool explicit_sdc) {
    if (sc.case_id < 1 || sc.case_id > 4)
        throw std::invalid_argument("case must be 1..4");

    const Siting required = sc.case_id == 1   ? Siting::none
                            : sc.case_id == 2 ? Siting::at_g4
                                              : Siting::at_l1;
    if (explicit_siting && sc.siting != required)
        throw std::invalid_argument("case " + std::to_string(sc.case_id) +
                                    " requires siting " + to_string(required));
    sc.siting = required;

    if (sc.case_id == 1) {
        if (sc.penetration != 0.0)
            throw std::invalid_argument("case 1 has no wind farm; penetration must be 0");
        if (explicit_vctrl && sc.vctrl)
            throw std::invalid_argument("case 1 has no wind-side controllers");
        if (explicit_sdc && sc.sdc)
            throw std::invalid_argument("case 1 has no wind-side controllers");
        sc.vctrl = sc.sdc = false;
        return;
    }

    if (!(sc.penetration > 0.0 && sc.penetration < 0.9))
        throw std::invalid_argument("penetration must lie in (0, 0.9) when wind is present");

    const bool want = sc.case_id == 4;
    if (explicit_vctrl && sc.vctrl != want)
        throw std::invalid_argument(want ? "case 4 runs the PCC voltage controller"
                                         : "the voltage controller belongs to case 4 only");
    if (explicit_sdc && sc.sdc != want)
        throw std::invalid_argument(want ? "case 4 runs the supplementary damping controller"
                                         : "the damping controller belongs to case 4 only");
    sc.vctrl = sc.sdc = want;
}

namespace {

int bus_index(const json& net, int id) {
    const auto& buses = net.at("buses");
    for (size_t i = 0; i < buses.size(); ++i)
        if (buses[i].at("id").get<int>() == id) return static_cast<int>(i);
    throw std::invalid_argument("config references unknown bus " + std::to_string(id));
}

SyncMachine make_machine(const json& g, double base_mva, bool pss_on, double derate) {
    SyncMachine m;
    m.name = g.at("name").get<std::string>();
    m.bus = g.at("bus").get<int>() - 1;
    m.area = g.at("area").get<int>();
    m.mva = qty(g, "mva") * derate;
    const double r = base_mva / m.mva;
    m.xd = qty(g, "xd") * r;
    m.xq = qty(g, "xq") * r;
    m.xd_tr = qty(g, "xd_tr") * r;
    m.xq_tr = qty(g, "xq_tr") * r;
    m.ra = qty(g, "ra") * r;
    m.td0_tr = qty(g, "td0_tr");
    m.tq0_tr = qty(g, "tq0_tr");
    m.h = qty(g, "h") / r;
    m.d = qty(g, "d") / r;
    const auto& ex = g.at("exciter");
    m.exc.ka = qty(ex, "ka");
    m.exc.ta = qty(ex, "ta");
    m.exc.efd_max = qty(ex, "efd_max");
    m.exc.efd_min = qty(ex, "efd_min");
    m.pss_on = pss_on;
    const auto& ps = g.at("pss");
    m.pss.k = qty(ps, "k");
    m.pss.tw = qty(ps, "tw");
    m.pss.t1_num = qty(ps, "t1_num");
    m.pss.t1_den = qty(ps, "t1_den");
    m.pss.t2_num = qty(ps, "t2_num");
    m.pss.t2_den = qty(ps, "t2_den");
    m.pss.clamp = qty(ps, "clamp");
    return m;
}

Dfig make_wind(const json& wf, double base_mva, double ws, double s_wf, int bus,
               int pcc_bus, const ScenarioConfig& sc) {
    Dfig w;
    w.bus = bus;
    w.pcc_bus = pcc_bus;
    w.s_mva = s_wf;
    w.sb = s_wf / base_mva;
    const double r = base_mva / s_wf;
    w.rs = qty(wf, "rs") * r;
    w.xm = qty(wf, "xm") * r;
    w.xs = qty(wf, "xs") * r;
    w.xr = qty(wf, "xr") * r;
    w.xp = w.xs - w.xm * w.xm / w.xr;
    w.rr = qty(wf, "rr") * r;
    w.t0 = qty(wf, "xr") / (ws * qty(wf, "rr"));   // base-invariant ratio
    w.hw = qty(wf, "h") / r;
    w.kw = qty(wf, "torque_droop");
    w.wr0 = qty(wf, "rotor_speed_ref");
    w.cdc = qty(wf.at("dc_link"), "c") / r;
    w.vdc_ref = qty(wf.at("dc_link"), "v_ref");
    w.rc = qty(wf.at("gsc_coupling"), "r") * r;
    w.xc = qty(wf.at("gsc_coupling"), "x") * r;

    const auto& rsc = wf.at("rsc");
    w.kp_p = qty(rsc.at("power_pi"), "kp");
    w.ki_p = qty(rsc.at("power_pi"), "ki");
    w.kpr = qty(rsc.at("current_pi"), "kp");
    w.kir = qty(rsc.at("current_pi"), "ki");
    w.iq_max = qty(rsc, "iq_limit");
    w.id_max = qty(rsc, "id_limit");
    w.vr_max = qty(rsc, "v_limit");
    const auto& gsc = wf.at("gsc");
    w.kpdc = qty(gsc.at("vdc_pi"), "kp");
    w.kidc = qty(gsc.at("vdc_pi"), "ki");
    w.kpc = qty(gsc.at("current_pi"), "kp");
    w.kic = qty(gsc.at("current_pi"), "ki");
    w.tc = qty(gsc, "converter_lag");
    w.kpll = qty(wf, "pll_gain");
    w.kf = qty(wf, "pcc_freq_filter_gain");

    if (sc.vctrl) {
        w.vctrl_on = true;
        const auto& vc = wf.at("voltage_controller");
        w.vctrl.kp = qty(vc, "kp");
        w.vctrl.ki = qty(vc, "ki");
        w.vctrl.clamp = qty(vc, "clamp");
    }
    if (sc.sdc) {
        const auto& sd = wf.at("sdc");
        LeadLagStack stack;
        stack.k = qty(sd, "k");
        stack.tw = qty(sd, "tw");
        stack.t1_num = qty(sd, "t1_num");
        stack.t1_den = qty(sd, "t1_den");
        stack.t2_num = qty(sd, "t2_num");
        stack.t2_den = qty(sd, "t2_den");
        stack.clamp = qty(sd, "clamp");
        sdc_attach(w, stack);
    }
    return w;
}

} // namespace

CaseSystem build_case(const Config& cfg, const ScenarioConfig& sc) {
    const json& root = cfg.root;
    const json& net = root.at("network");
    const double base_mva = qty(root.at("system"), "base_mva");
    const double fhz = qty(root.at("system"), "frequency");
    const bool wf_present = sc.siting != Siting::none;

    CaseSystem out;
    PowerSystem& sys = out.sys;
    sys.ws = 2 * kPi * fhz;

    for (const auto& b : net.at("buses")) {
        Bus bus;
        bus.id = b.at("id").get<int>();
        const std::string kind = b.at("kind").get<std::string>();
        bus.kind = kind == "slack" ? BusKind::slack
                   : kind == "pv"  ? BusKind::pv
                                   : BusKind::pq;
        sys.buses.push_back(bus);
    }
    int wf_bus = -1, wf_pcc = -1;
    if (wf_present) {
        Bus b12;
        b12.id = root.at("wind_farm").at("connection_bus").get<int>();
        b12.kind = BusKind::pq;
        sys.buses.push_back(b12);
        wf_bus = static_cast<int>(sys.buses.size()) - 1;
        const char* key = sc.siting == Siting::at_g4 ? "at_g4" : "at_l1";
        wf_pcc = bus_index(net, root.at("dispatch").at("wf_tie_in").at(key).get<int>());
    }

    const double ru = qty(net.at("line_unit_params"), "r");
    const double xu = qty(net.at("line_unit_params"), "x");
    const double bu = qty(net.at("line_unit_params"), "b");
    for (const auto& ln : net.at("lines")) {
        Branch br;
        br.from = bus_index(net, ln.at("from").get<int>());
        br.to = bus_index(net, ln.at("to").get<int>());
        const double len = qty(ln, "length");
        br.z = cplx(ru * len, xu * len);
        br.b_shunt = bu * len;
        sys.branches.push_back(br);
    }
    for (const auto& tr : net.at("transformers")) {
        Branch br;
        br.from = bus_index(net, tr.at("from").get<int>());
        br.to = bus_index(net, tr.at("to").get<int>());
        br.z = cplx(0.0, qty(tr, "x") * base_mva / qty(tr, "mva_base"));
        sys.branches.push_back(br);
    }

    // displaced machine: the wind rating comes out of the adjacent unit,
    // which keeps constant per-unit loading on its shrunk base
    std::string displaced;
    if (wf_present) {
        const char* key = sc.siting == Siting::at_g4 ? "at_g4" : "at_l1";
        displaced = root.at("dispatch").at("displaced_machine").at(key).get<std::string>();
    }
    const double s_wf = sc.penetration * 900.0;
    if (wf_present) {
        const auto& wf = root.at("wind_farm");
        Branch br;
        br.from = wf_bus;
        br.to = wf_pcc;
        const double r = base_mva / s_wf;
        br.z = cplx(qty(wf.at("transformer"), "r") * r, qty(wf.at("transformer"), "x") * r);
        sys.branches.push_back(br);
    }

    for (const auto& sh : net.at("shunt_capacitors"))
        sys.fixed_shunts.push_back(
            {bus_index(net, sh.at("bus").get<int>()), cplx(0.0, qty(sh, "q") / base_mva)});
    for (const auto& ld : net.at("loads"))
        sys.loads.push_back({bus_index(net, ld.at("bus").get<int>()),
                             qty(ld, "p") / base_mva, qty(ld, "q") / base_mva});

    const int n = sys.nbus();
    std::vector<BusKind> kinds(n);
    for (int i = 0; i < n; ++i) kinds[i] = sys.buses[i].kind;
    Eigen::VectorXd pset = Eigen::VectorXd::Zero(n), qset = Eigen::VectorXd::Zero(n),
                    vset = Eigen::VectorXd::Ones(n);

    for (const auto& g : root.at("generators")) {
        const bool hit = g.at("name").get<std::string>() == displaced;
        const double derate = hit ? 1.0 - sc.penetration : 1.0;
        SyncMachine m = make_machine(g, base_mva, sc.pss, derate);
        pset(m.bus) = qty(g, "p_set") * derate / base_mva;
        vset(m.bus) = qty(g, "v_set");
        sys.machines.push_back(std::move(m));
    }
    for (const auto& ld : sys.loads) {
        pset(ld.bus) -= ld.p;
        qset(ld.bus) -= ld.q;
    }
    if (wf_present) {
        const double p_wf = sc.penetration * 7.0;
        pset(wf_bus) = p_wf;
        sys.wind = make_wind(root.at("wind_farm"), base_mva, sys.ws, s_wf, wf_bus,
                             wf_pcc, sc);
    }

    for (size_t i = 0; i < sys.branches.size(); ++i) {
        const auto& br = sys.branches[i];
        const int b7 = bus_index(net, 7), b8 = bus_index(net, 8);
        if (br.from == b7 && br.to == b8)
            sys.tie_branch_idx.push_back(static_cast<int>(i));
    }

    sys.ybus = build_ybus(sys.buses, sys.branches, sys.fixed_shunts);
    const auto& ft = root.at("fault");
    sys.ybus = apply_fault(sys.ybus, bus_index(net, ft.at("bus").get<int>()),
                           cplx(qty(ft, "conductance"), 0.0), qty(ft, "t_on"),
                           qty(ft, "t_off"));

    const PowerFlowResult pf = solve_power_flow(sys.ybus.base(), kinds, pset, qset, vset);
    out.op = initialize_devices(sys, pf);
    return out;
}

namespace {

ClassifyThresholds thresholds_from(const Config& cfg) {
    ClassifyThresholds th;
    if (!cfg.root.contains("classification")) return th;
    const json& c = cfg.root.at("classification");
    th.band_lo_hz = c.at("em_band_hz").at("low").get<double>();
    th.band_hi_hz = c.at("em_band_hz").at("high").get<double>();
    th.em_participation_min = c.at("em_participation_min").get<double>();
    th.separation_deg = c.at("cluster_separation_deg").get<double>();
    th.balance_min = c.at("cluster_balance_min").get<double>();
    th.coherence_min = c.at("cluster_coherence_min").get<double>();
    return th;
}

} // namespace

StudyReport run_study(const Config& cfg, const std::vector<ScenarioConfig>& scs) {
    StudyReport rep;
    rep.config_hash = cfg.hash();
    const ClassifyThresholds th = thresholds_from(cfg);
    const double dt = qty(cfg.root.at("simulation"), "dt");
    const double t_end = qty(cfg.root.at("simulation"), "t_end");

    for (const auto& sc : scs) {
        ScenarioResult r;
        r.sc = sc;
        try {
            CaseSystem cs = build_case(cfg, sc);
            const StateSpaceModel ssm = linearize(cs.sys, cs.op);
            const EigenSolution es = eigensolve(ssm.a);

            std::vector<int> angle_rows, speed_rows, areas;
            const auto moff = cs.sys.machine_offsets();
            for (size_t k = 0; k < cs.sys.machines.size(); ++k) {
                angle_rows.push_back(moff[k]);
                speed_rows.push_back(moff[k] + 1);
                areas.push_back(cs.sys.machines[k].area);
            }
            r.em_modes = electromechanical_modes(es, angle_rows, speed_rows, areas, th);
            for (size_t i = 0; i < r.em_modes.size(); ++i)
                if (r.em_modes[i].classification == "inter-area") {
                    r.inter_index = static_cast<int>(i);
                    break;
                }

            r.max_real = -1e30;
            for (int i = 0; i < es.values.size(); ++i) {
                if (std::abs(es.values(i)) < 1e-5) continue;   // angle-reference zero
                r.max_real = std::max(r.max_real, es.values(i).real());
            }
            r.stable = r.max_real < 0;
            r.op_audit = cs.op.audit_report();

            if (sc.timedomain) r.run = simulate(cs.sys, cs.op, t_end, dt);
            r.ok = true;
        } catch (const std::exception& e) {
            r.ok = false;
            r.error = e.what();
            ++rep.errors;
        }
        rep.results.push_back(std::move(r));
    }

    // damping improvements against the case-1 scenario with the same PSS flag
    for (const auto& r : rep.results) {
        if (!r.ok || r.sc.case_id == 1 || r.inter_index < 0) continue;
        const ScenarioResult* base = nullptr;
        for (const auto& b : rep.results)
            if (b.ok && b.sc.case_id == 1 && b.sc.pss == r.sc.pss && b.inter_index >= 0) {
                base = &b;
                break;
            }
        if (!base) continue;
        Improvement imp;
        imp.baseline_tag = base->sc.tag();
        imp.comparison_tag = r.sc.tag();
        imp.label = imp.comparison_tag + " vs " + imp.baseline_tag;
        imp.zeta_before = base->em_modes[base->inter_index].zeta;
        imp.zeta_after = r.em_modes[r.inter_index].zeta;
        imp.percent = damping_improvement(imp.zeta_before, imp.zeta_after);
        rep.improvements.push_back(std::move(imp));
    }
    return rep;
}

std::vector<ScenarioConfig> full_matrix(bool timedomain) {
    std::vector<ScenarioConfig> scs;
    auto add = [&](int c, double pen, bool pss) {
        ScenarioConfig sc;
        sc.case_id = c;
        sc.penetration = pen;
        sc.pss = pss;
        sc.timedomain = timedomain;
        validate_scenario(sc, false, false, false);
        scs.push_back(sc);
    };
    for (bool pss : {false, true}) add(1, 0.0, pss);
    for (int c : {2, 3})
        for (double pen : {0.10, 0.25, 0.35})
            for (bool pss : {false, true}) add(c, pen, pss);
    for (bool pss : {false, true}) add(4, 0.25, pss);
    return scs;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    return f;
}

} // namespace

void write_modes_csv(const std::string& path, const StudyReport& report) {
    std::ofstream f = open_out(path);
    f << "# config " << report.config_hash << "\n";
    f << "case,pss,controllers,penetration,sigma,omega,damping,freq_hz,classification\n";
    char buf[256];
    for (const auto& r : report.results) {
        if (!r.ok) continue;
        for (const auto& m : r.em_modes) {
            std::snprintf(buf, sizeof buf, "%d,%s,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%s\n",
                          r.sc.case_id, r.sc.pss ? "on" : "off",
                          r.sc.controllers_label().c_str(), r.sc.penetration, m.sigma,
                          m.omega, m.zeta, m.freq_hz, m.classification.c_str());
            f << buf;
        }
    }
}

void write_series_csv(const std::string& path, const SimulationRun& run,
                      const std::string& config_hash) {
    std::ofstream f = open_out(path);
    f << "# config " << config_hash << "\n";
    f << "t";
    for (const auto& n : run.channel_names) f << "," << n;
    f << "\n";
    char buf[32];
    for (size_t i = 0; i < run.t.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.6f", run.t[i]);
        f << buf;
        for (const auto& ch : run.channels) {
            std::snprintf(buf, sizeof buf, ",%.6f", ch[i]);
            f << buf;
        }
        f << "\n";
    }
}

void write_events_log(const std::string& path, const SimulationRun& run) {
    std::ofstream f = open_out(path);
    char buf[160];
    for (const auto& ev : run.events) {
        std::snprintf(buf, sizeof buf, "t=%.6f  %s\n", ev.t, ev.what.c_str());
        f << buf;
    }
    if (run.diverged) f << "diverged: " << run.diagnostic << "\n";
    if (run.angle_separated) f << "angle separation exceeded pi\n";
}

void write_report_json(const std::string& path, const StudyReport& report) {
    json doc;
    doc["config_hash"] = report.config_hash;
    doc["errors"] = report.errors;
    json scen = json::array();
    for (const auto& r : report.results) {
        json s;
        s["case"] = r.sc.case_id;
        s["pss"] = r.sc.pss;
        s["controllers"] = r.sc.controllers_label();
        s["penetration"] = r.sc.penetration;
        s["tag"] = r.sc.tag();
        s["ok"] = r.ok;
        if (!r.ok) {
            s["error"] = r.error;
            scen.push_back(std::move(s));
            continue;
        }
        s["stable"] = r.stable;
        s["max_real"] = r.max_real;
        json modes = json::array();
        for (const auto& m : r.em_modes) {
            json jm;
            jm["sigma"] = m.sigma;
            jm["omega"] = m.omega;
            jm["damping"] = m.zeta;
            jm["freq_hz"] = m.freq_hz;
            jm["classification"] = m.classification;
            modes.push_back(std::move(jm));
        }
        s["em_modes"] = std::move(modes);
        if (r.inter_index >= 0) {
            const auto& m = r.em_modes[r.inter_index];
            s["inter_area"] = {{"sigma", m.sigma},
                               {"omega", m.omega},
                               {"damping", m.zeta},
                               {"freq_hz", m.freq_hz}};
        }
        if (r.run) {
            s["timedomain"] = {{"samples", r.run->t.size()},
                               {"diverged", r.run->diverged},
                               {"angle_separated", r.run->angle_separated}};
        }
        scen.push_back(std::move(s));
    }
    doc["scenarios"] = std::move(scen);
    json imps = json::array();
    for (const auto& im : report.improvements) {
        json ji;
        ji["label"] = im.label;
        ji["baseline"] = im.baseline_tag;
        ji["comparison"] = im.comparison_tag;
        ji["zeta_before"] = im.zeta_before;
        ji["zeta_after"] = im.zeta_after;
        ji["percent"] = im.percent;
        imps.push_back(std::move(ji));
    }
    doc["improvements"] = std::move(imps);
    std::ofstream f = open_out(path);
    f << doc.dump(2) << "\n";
}

void write_op_audit(const std::string& path, const ScenarioResult& r) {
    std::ofstream f = open_out(path);
    f << "scenario " << r.sc.tag() << "\n" << r.op_audit;
}

} // namespace swing
