#include "swing/steadystate.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace swing {

namespace {

Eigen::VectorXd pf_mismatch(const Eigen::MatrixXcd& y, const Eigen::VectorXd& th,
                            const Eigen::VectorXd& vm, const Eigen::VectorXd& pset,
                            const Eigen::VectorXd& qset, const std::vector<int>& ang_idx,
                            const std::vector<int>& mag_idx) {
    const int n = static_cast<int>(th.size());
    Eigen::VectorXcd vc(n);
    for (int i = 0; i < n; ++i) vc(i) = std::polar(vm(i), th(i));
    const Eigen::VectorXcd s = vc.cwiseProduct((y * vc).conjugate());
    Eigen::VectorXd mis(ang_idx.size() + mag_idx.size());
    int k = 0;
    for (int i : ang_idx) mis(k++) = pset(i) - s(i).real();
    for (int i : mag_idx) mis(k++) = qset(i) - s(i).imag();
    return mis;
}

} // namespace

PowerFlowResult solve_power_flow(const Eigen::MatrixXcd& y,
                                 const std::vector<BusKind>& kinds,
                                 const Eigen::VectorXd& pset,
                                 const Eigen::VectorXd& qset,
                                 const Eigen::VectorXd& vset,
                                 double tol, int itmax) {
    const int n = static_cast<int>(kinds.size());
    if (y.rows() != n || pset.size() != n || qset.size() != n || vset.size() != n)
        throw std::invalid_argument("power flow input dimensions disagree");

    int nslack = 0;
    std::vector<int> ang_idx, mag_idx;
    for (int i = 0; i < n; ++i) {
        if (kinds[i] == BusKind::slack) ++nslack;
        if (kinds[i] == BusKind::pv) ang_idx.push_back(i);
    }
    for (int i = 0; i < n; ++i)
        if (kinds[i] == BusKind::pq) {
            ang_idx.push_back(i);
            mag_idx.push_back(i);
        }
    if (nslack != 1) throw std::invalid_argument("power flow needs exactly one slack bus");

    Eigen::VectorXd vm(n), th = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) vm(i) = kinds[i] == BusKind::pq ? 1.0 : vset(i);

    const int m = static_cast<int>(ang_idx.size() + mag_idx.size());
    const double h = 1e-7;
    for (int it = 0; it < itmax; ++it) {
        const Eigen::VectorXd mis = pf_mismatch(y, th, vm, pset, qset, ang_idx, mag_idx);
        const double worst = mis.lpNorm<Eigen::Infinity>();
        if (worst < tol) {
            PowerFlowResult r;
            r.v.resize(n);
            for (int i = 0; i < n; ++i) r.v(i) = std::polar(vm(i), th(i));
            r.iterations = it;
            r.mismatch = worst;
            return r;
        }
        Eigen::MatrixXd jac(m, m);
        int col = 0;
        for (int i : ang_idx) {
            Eigen::VectorXd t2 = th;
            t2(i) += h;
            jac.col(col++) = (pf_mismatch(y, t2, vm, pset, qset, ang_idx, mag_idx) - mis) / h;
        }
        for (int i : mag_idx) {
            Eigen::VectorXd v2 = vm;
            v2(i) += h;
            jac.col(col++) = (pf_mismatch(y, th, v2, pset, qset, ang_idx, mag_idx) - mis) / h;
        }
        const Eigen::VectorXd dx = jac.partialPivLu().solve(-mis);
        if (!dx.allFinite()) throw std::runtime_error("power flow Jacobian is singular");
        int k = 0;
        for (int i : ang_idx) th(i) += dx(k++);
        for (int i : mag_idx) vm(i) += dx(k++);
    }
    throw std::runtime_error("power flow did not converge");
}

namespace {

void init_machine(SyncMachine& m, cplx vt, cplx s_inj, double* x0) {
    const cplx ig = std::conj(s_inj / vt);
    const cplx e = vt + cplx(m.ra, m.xq) * ig;
    const double delta = std::arg(e);
    const cplx vdq = to_frame(vt, delta - kPi / 2);
    const cplx idq = to_frame(ig, delta - kPi / 2);
    const double vd = vdq.real(), vq = vdq.imag();
    const double id = idq.real(), iq = idq.imag();
    const double eq = vq + m.ra * iq + m.xd_tr * id;
    const double ed = vd + m.ra * id - m.xq_tr * iq;
    const double efd = eq + (m.xd - m.xd_tr) * id;
    const double pe = ed * id + eq * iq + (m.xq_tr - m.xd_tr) * id * iq;
    m.pm = pe;
    m.vref = std::abs(vt) + efd / m.exc.ka;
    m.initialized = true;
    x0[0] = delta;
    x0[1] = 0.0;
    x0[2] = eq;
    x0[3] = ed;
    x0[4] = efd;
    // PSS states start at zero: washout input is zero at equilibrium.
}

// Back-solves the DFIG equilibrium. The connection bus exports pwf at unity
// power factor; the split between stator and GSC is pinned by the dc-link
// power balance, which the loop solves as a fixed point on the GSC power.
void init_wind(Dfig& w, cplx vb, cplx vpcc, double pwf, double* x0) {
    const double ws = 2 * kPi * 60.0;
    const double slip = 1.0 - w.wr0;
    double pcg = -slip * pwf;
    cplx i_s, e, i_r, vr, i_g;
    auto stator_pass = [&](double pcg_now) {
        const double psg = pwf - pcg_now;
        i_s = std::conj(cplx(psg, 0.0) / vb);
        e = vb + cplx(w.rs, w.xp) * i_s;
        i_r = cplx(0, -1) * e / w.xm + (w.xm / w.xr) * i_s;
        // rotor voltage that holds the internal voltage stationary
        const double ed = e.real(), eq = e.imag();
        const double vrq =
            (-(ed - (w.xs - w.xp) * i_s.imag()) / w.t0 + slip * ws * eq) / (ws * w.xm / w.xr);
        const double vrd =
            ((eq + (w.xs - w.xp) * i_s.real()) / w.t0 + slip * ws * ed) / (ws * w.xm / w.xr);
        vr = cplx(vrd, vrq);
    };
    for (int it = 0; it < 60; ++it) {
        stator_pass(pcg);
        const double pin = -(vr * std::conj(i_r)).real();
        i_g = std::conj(cplx(pcg, 0.0) / vb);
        const double pcg_new = pin - w.rc * std::norm(i_g);
        const bool done = std::abs(pcg_new - pcg) < 1e-14;
        pcg = pcg_new;
        if (done) break;
    }
    stator_pass(pcg);
    i_g = std::conj(cplx(pcg, 0.0) / vb);
    const cplx vcn = vb + cplx(w.rc, w.xc) * i_g;

    const double thp = std::arg(vb);
    const cplx psi = cplx(0, -1) * (vb + w.rs * i_s);
    const double phi = std::arg(psi);
    const cplx irf = to_frame(i_r, phi);
    const cplx vrf = to_frame(vr, phi);
    const cplx igf = to_frame(i_g, thp);
    const cplx vbf = to_frame(vb, thp);
    const cplx vcf = to_frame(vcn, thp);

    w.pref = pwf;
    w.tm0 = (e * std::conj(i_s)).real();
    w.idr0 = irf.real() / w.sb;
    w.vpcc_ref = std::abs(vpcc);
    w.initialized = true;

    x0[0] = e.real();
    x0[1] = e.imag();
    x0[2] = w.wr0;
    x0[3] = 1.0;
    x0[4] = irf.imag() / w.sb;
    x0[5] = vrf.real();
    x0[6] = vrf.imag();
    x0[7] = igf.real() / w.sb;
    x0[8] = vcf.real() - vbf.real();
    x0[9] = vcf.imag() - vbf.imag();
    x0[10] = vcf.real();
    x0[11] = vcf.imag();
    x0[12] = thp;
    x0[13] = std::arg(vpcc);
    // voltage-control integrator and damping stack start at zero: their
    // inputs are deviation signals, zero at the solved point
}

} // namespace

OperatingPoint initialize_devices(PowerSystem& sys, const PowerFlowResult& pf) {
    const int n = sys.nbus();
    if (pf.v.size() != n) throw std::invalid_argument("power flow / system bus count mismatch");

    // injections at the solved point, with loads still modeled as injections
    const Eigen::MatrixXcd y0 = sys.ybus.base();
    const Eigen::VectorXcd s_inj = pf.v.cwiseProduct((y0 * pf.v).conjugate());

    OperatingPoint op;
    op.x0 = Eigen::VectorXd::Zero(sys.nstates());
    op.pf_mismatch = pf.mismatch;
    op.labels = sys.state_labels();

    const auto moff = sys.machine_offsets();
    for (size_t k = 0; k < sys.machines.size(); ++k)
        init_machine(sys.machines[k], pf.v(sys.machines[k].bus),
                     s_inj(sys.machines[k].bus), op.x0.data() + moff[k]);

    if (sys.wind) {
        const double pwf = s_inj(sys.wind->bus).real();
        init_wind(*sys.wind, pf.v(sys.wind->bus), pf.v(sys.wind->pcc_bus), pwf,
                  op.x0.data() + sys.wind_offset());
    }

    // freeze loads as constant admittances at the solved voltage
    for (const auto& ld : sys.loads) {
        const double v2 = std::norm(pf.v(ld.bus));
        sys.fixed_shunts.push_back({ld.bus, cplx(ld.p, -ld.q) / v2});
    }
    sys.loads.clear();
    sys.rebuild_ybus();

    Eigen::VectorXd dx;
    Eigen::VectorXcd v0;
    sys.deriv(op.x0, 0.0, dx, v0);
    op.v0 = v0;
    op.deriv_residual = dx.lpNorm<Eigen::Infinity>();
    return op;
}

std::string OperatingPoint::audit_report() const {
    std::string out;
    char buf[128];
    std::snprintf(buf, sizeof buf, "power flow mismatch   %.3e\n", pf_mismatch);
    out += buf;
    std::snprintf(buf, sizeof buf, "derivative residual   %.3e\n", deriv_residual);
    out += buf;
    for (int i = 0; i < x0.size(); ++i) {
        const char* name = i < static_cast<int>(labels.size()) ? labels[i].c_str() : "?";
        std::snprintf(buf, sizeof buf, "%-14s %+.12e\n", name, x0(i));
        out += buf;
    }
    for (int i = 0; i < v0.size(); ++i) {
        std::snprintf(buf, sizeof buf, "bus%-2d  |V| %.9f  ang %+.9f rad\n", i + 1,
                      std::abs(v0(i)), std::arg(v0(i)));
        out += buf;
    }
    return out;
}

} // namespace swing
