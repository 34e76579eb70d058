#include "swing/system.hpp"

#include <stdexcept>

namespace swing {

int PowerSystem::nstates() const {
    int n = 0;
    for (const auto& m : machines) n += m.nstates();
    if (wind) n += wind->nstates();
    return n;
}

std::vector<int> PowerSystem::machine_offsets() const {
    std::vector<int> off;
    int o = 0;
    for (const auto& m : machines) {
        off.push_back(o);
        o += m.nstates();
    }
    return off;
}

int PowerSystem::wind_offset() const {
    int o = 0;
    for (const auto& m : machines) o += m.nstates();
    return o;
}

std::vector<std::string> PowerSystem::state_labels() const {
    std::vector<std::string> lab;
    for (const auto& m : machines) {
        lab.push_back(m.name + ".delta");
        lab.push_back(m.name + ".domega");
        lab.push_back(m.name + ".eq_tr");
        lab.push_back(m.name + ".ed_tr");
        lab.push_back(m.name + ".efd");
        if (m.pss_on) {
            lab.push_back(m.name + ".pss_w");
            lab.push_back(m.name + ".pss_1");
            lab.push_back(m.name + ".pss_2");
        }
    }
    if (wind) {
        const char* names[14] = {"WF.ep_d",      "WF.ep_q",      "WF.wr",
                                 "WF.vdc",       "WF.rsc_p_i",   "WF.rsc_id_i",
                                 "WF.rsc_iq_i",  "WF.gsc_vdc_i", "WF.gsc_vd_i",
                                 "WF.gsc_vq_i",  "WF.vc_d",      "WF.vc_q",
                                 "WF.pll",       "WF.freq_f"};
        for (const auto* n : names) lab.emplace_back(n);
        if (wind->vctrl_on) lab.emplace_back("WF.vctrl_i");
        if (wind->sdc_on) {
            lab.emplace_back("WF.sdc_w");
            lab.emplace_back("WF.sdc_1");
            lab.emplace_back("WF.sdc_2");
        }
    }
    return lab;
}

void PowerSystem::rebuild_ybus() {
    auto overlays = ybus.overlays();
    ybus = build_ybus(buses, branches, fixed_shunts);
    if (!overlays.empty())
        ybus = AdmittanceMatrix(ybus.base(), std::move(overlays));
}

namespace {

// Interleaved real form of the complex system: block (i,j) of Y becomes
// [[g, -b], [b, g]]. Machine Norton blocks are general 2x2 and are added on
// the diagonal afterwards.
void add_complex_block(Eigen::MatrixXd& g, int i, int j, cplx y) {
    g(2 * i, 2 * j) += y.real();
    g(2 * i, 2 * j + 1) += -y.imag();
    g(2 * i + 1, 2 * j) += y.imag();
    g(2 * i + 1, 2 * j + 1) += y.real();
}

} // namespace

Eigen::VectorXcd PowerSystem::solve_network(const Eigen::VectorXd& x, double t) const {
    const int n = nbus();
    const Eigen::MatrixXcd y = ybus.at(t);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (y(i, j) != cplx(0, 0)) add_complex_block(g, i, j, y(i, j));

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * n);
    const auto moff = machine_offsets();
    for (size_t k = 0; k < machines.size(); ++k) {
        const auto& m = machines[k];
        Eigen::Matrix2d yb;
        Eigen::Vector2d isrc;
        m.norton(x.data() + moff[k], yb, isrc);
        g.block<2, 2>(2 * m.bus, 2 * m.bus) += yb;
        rhs.segment<2>(2 * m.bus) += isrc;
    }
    if (wind) {
        cplx ys, is_src, yc, ic_src;
        wind->norton(x.data() + wind_offset(), ys, is_src, yc, ic_src);
        add_complex_block(g, wind->bus, wind->bus, ys);
        add_complex_block(g, wind->bus, wind->bus, yc);
        rhs(2 * wind->bus) += is_src.real() + ic_src.real();
        rhs(2 * wind->bus + 1) += is_src.imag() + ic_src.imag();
    }

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(g);
    const Eigen::VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite())
        throw std::runtime_error("network current-balance solve failed");
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v(i) = cplx(sol(2 * i), sol(2 * i + 1));
    return v;
}

void PowerSystem::deriv(const Eigen::VectorXd& x, double t, Eigen::VectorXd& dx,
                        Eigen::VectorXcd& v_out) const {
    v_out = solve_network(x, t);
    dx.setZero(x.size());
    const auto moff = machine_offsets();
    for (size_t k = 0; k < machines.size(); ++k) {
        const auto& m = machines[k];
        m.deriv(x.data() + moff[k], v_out(m.bus), dx.data() + moff[k]);
    }
    if (wind) {
        const int o = wind_offset();
        wind->deriv(x.data() + o, v_out(wind->bus), v_out(wind->pcc_bus), dx.data() + o);
    }
}

Eigen::VectorXd PowerSystem::deriv(const Eigen::VectorXd& x, double t) const {
    Eigen::VectorXd dx;
    Eigen::VectorXcd v;
    deriv(x, t, dx, v);
    return dx;
}

double PowerSystem::tie_power(const Eigen::VectorXcd& v) const {
    double p = 0;
    for (int idx : tie_branch_idx) {
        const auto& br = branches[idx];
        const cplx vf = v(br.from), vt = v(br.to);
        const cplx y = 1.0 / br.z;
        const cplx i = (vf - vt) * y + vf * cplx(0, br.b_shunt / 2.0);
        p += (vf * std::conj(i)).real();
    }
    return p;
}

} // namespace swing
