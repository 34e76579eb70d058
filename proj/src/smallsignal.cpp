#include "swing/smallsignal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace swing {

Eigen::MatrixXd jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                         const Eigen::VectorXd& x0) {
    const int n = static_cast<int>(x0.size());
    Eigen::MatrixXd a(n, n);
    for (int j = 0; j < n; ++j) {
        const double h = std::max(1e-6, 1e-6 * std::abs(x0(j)));
        Eigen::VectorXd xp = x0, xm = x0;
        xp(j) += h;
        xm(j) -= h;
        a.col(j) = (f(xp) - f(xm)) / (2 * h);
    }
    return a;
}

StateSpaceModel linearize(const PowerSystem& sys, const OperatingPoint& op) {
    StateSpaceModel m;
    m.state_labels = sys.state_labels();
    const int n = static_cast<int>(op.x0.size());
    if (n != sys.nstates())
        throw std::invalid_argument("operating point does not match system state count");

    m.a = jacobian([&](const Eigen::VectorXd& x) { return sys.deriv(x, 0.0); }, op.x0);

    const bool wf = sys.wind.has_value();
    const int nu = wf ? 1 : 0;
    const int ny = 1 + static_cast<int>(sys.machines.size()) + (wf ? 1 : 0);

    m.b.resize(n, nu);
    if (wf) {
        // input: additive bias on the d-axis rotor current command
        const double h = 1e-6;
        PowerSystem pert = sys;
        pert.wind->d_cmd_bias = h;
        const Eigen::VectorXd fp = pert.deriv(op.x0, 0.0);
        pert.wind->d_cmd_bias = -h;
        const Eigen::VectorXd fm = pert.deriv(op.x0, 0.0);
        m.b.col(0) = (fp - fm) / (2 * h);
        m.input_labels = {"WF.id_cmd_bias"};
    }

    // output rows: tie power (dense), machine speeds (selectors), and the
    // filtered PCC frequency deviation seen by the wind controls
    m.output_labels.push_back("tie.p");
    const double ws = sys.ws;
    auto outputs = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd y(ny);
        const Eigen::VectorXcd v = sys.solve_network(x, 0.0);
        y(0) = sys.tie_power(v);
        const auto moff = sys.machine_offsets();
        for (size_t k = 0; k < sys.machines.size(); ++k) y(1 + k) = x(moff[k] + 1);
        if (wf) {
            const int o = sys.wind_offset();
            const double thf = x(o + 13);
            const double err =
                std::atan2(std::sin(std::arg(v(sys.wind->pcc_bus)) - thf),
                           std::cos(std::arg(v(sys.wind->pcc_bus)) - thf));
            y(ny - 1) = sys.wind->kf * err / ws;
        }
        return y;
    };
    m.c = jacobian(outputs, op.x0);
    for (const auto& mac : sys.machines) m.output_labels.push_back(mac.name + ".domega");
    if (wf) m.output_labels.push_back("WF.dw_pcc");

    m.d = Eigen::MatrixXd::Zero(ny, nu);
    return m;
}

EigenSolution eigensolve(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("eigensolve needs a square matrix");
    Eigen::EigenSolver<Eigen::MatrixXd> slv(a);
    if (slv.info() != Eigen::Success)
        throw std::runtime_error("eigensolver failed to converge");
    EigenSolution es;
    es.values = slv.eigenvalues();
    es.right = slv.eigenvectors();
    es.left = es.right.inverse();   // rows bi-orthonormal to the columns

    // scale-invariant backward error: |A phi - lambda phi| / (|A| |phi|);
    // the absolute residual grows with |A| (fast converter poles) and with
    // the eigenvector conditioning on the left side, neither of which marks
    // a bad solve
    const double anorm = a.norm();
    const int n = static_cast<int>(es.values.size());
    es.residuals.resize(n);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXcd phi = es.right.col(i);
        const double rr = (a * phi - es.values(i) * phi).norm() / phi.norm();
        const Eigen::RowVectorXcd psi = es.left.row(i);
        const double rl = (psi * a - es.values(i) * psi).norm() / psi.norm();
        es.residuals(i) = std::max(rr, rl) / anorm;
        if (es.residuals(i) > 1e-10)
            throw std::runtime_error("eigenpair backward error exceeds contract");
    }
    return es;
}

Mode modal_metrics(cplx lambda) {
    Mode m;
    m.lambda = lambda;
    m.sigma = lambda.real();
    m.omega = std::abs(lambda.imag());
    const double mag = std::abs(lambda);
    if (m.omega == 0.0) {
        m.zeta = m.sigma < 0 ? 1.0 : (m.sigma > 0 ? -1.0 : 0.0);
        m.freq_hz = 0.0;
        m.classification = "non-oscillatory";
    } else {
        m.zeta = mag > 0 ? -m.sigma / mag : 0.0;
        m.freq_hz = m.omega / (2 * kPi);
    }
    return m;
}

std::string classify_mode(const Eigen::VectorXcd& speed_shape,
                          const std::vector<int>& machine_area,
                          const ClassifyThresholds& th) {
    if (speed_shape.size() != static_cast<Eigen::Index>(machine_area.size()))
        throw std::invalid_argument("shape / area list size mismatch");
    cplx c1(0, 0), c2(0, 0);
    double s1 = 1e-30, s2 = 1e-30;
    for (Eigen::Index i = 0; i < speed_shape.size(); ++i) {
        if (machine_area[i] == 1) {
            c1 += speed_shape(i);
            s1 += std::abs(speed_shape(i));
        } else {
            c2 += speed_shape(i);
            s2 += std::abs(speed_shape(i));
        }
    }
    const double a1 = std::abs(c1), a2 = std::abs(c2);
    const double coh = std::min(a1 / s1, a2 / s2);
    const double sep = (a1 > 1e-9 && a2 > 1e-9) ? std::abs(std::arg(c1 / c2)) : 0.0;
    const bool balanced = std::min(a1, a2) > th.balance_min * std::max(a1, a2);
    const bool inter =
        sep > th.separation_deg * kPi / 180.0 && balanced && coh > th.coherence_min;
    return inter ? "inter-area" : "intra-area";
}

std::vector<Mode> electromechanical_modes(const EigenSolution& es,
                                          const std::vector<int>& angle_rows,
                                          const std::vector<int>& speed_rows,
                                          const std::vector<int>& machine_area,
                                          const ClassifyThresholds& th) {
    std::vector<Mode> out;
    const int n = static_cast<int>(es.values.size());
    for (int i = 0; i < n; ++i) {
        const cplx l = es.values(i);
        if (l.imag() <= 0) continue;   // keep one member of each conjugate pair
        const double f = l.imag() / (2 * kPi);
        if (!(f > th.band_lo_hz && f < th.band_hi_hz)) continue;

        Eigen::VectorXcd p =
            es.right.col(i).cwiseProduct(es.left.row(i).transpose());
        cplx rotor(0, 0);
        for (int k : speed_rows) rotor += p(k);
        for (int k : angle_rows) rotor += p(k);
        if (std::abs(rotor) < th.em_participation_min) continue;

        Mode m = modal_metrics(l);
        m.shape.resize(speed_rows.size());
        for (size_t k = 0; k < speed_rows.size(); ++k) m.shape(k) = es.right(speed_rows[k], i);
        m.participation = p;
        m.defective = std::abs(p.sum() - cplx(1, 0)) > 1e-6;
        m.classification = classify_mode(m.shape, machine_area, th);
        out.push_back(std::move(m));
    }
    std::sort(out.begin(), out.end(),
              [](const Mode& a, const Mode& b) { return a.freq_hz < b.freq_hz; });
    return out;
}

Eigen::MatrixXcd transfer_function(const StateSpaceModel& m, cplx s) {
    const int n = static_cast<int>(m.a.rows());
    const Eigen::VectorXcd lam = Eigen::EigenSolver<Eigen::MatrixXd>(m.a, false).eigenvalues();
    for (int i = 0; i < n; ++i)
        if (std::abs(s - lam(i)) < 1e-9)
            throw std::invalid_argument("transfer function evaluated at a system pole");
    Eigen::MatrixXcd si = s * Eigen::MatrixXcd::Identity(n, n) - m.a.cast<cplx>();
    const Eigen::MatrixXcd x = si.partialPivLu().solve(m.b.cast<cplx>());
    return m.c.cast<cplx>() * x + m.d.cast<cplx>();
}

double damping_improvement(double zeta_before, double zeta_after) {
    if (std::abs(zeta_before) < 1e-15)
        throw std::domain_error("baseline damping ratio is zero");
    return 100.0 * (zeta_after - zeta_before) / std::abs(zeta_before);
}

double sdc_phase_audit(const StateSpaceModel& m, const EigenSolution& es,
                       int mode_index, int input, int output,
                       const LeadLagStack& stack) {
    if (mode_index < 0 || mode_index >= es.values.size())
        throw std::out_of_range("mode index");
    if (input < 0 || input >= m.b.cols() || output < 0 || output >= m.c.rows())
        throw std::out_of_range("input/output index");
    const cplx lam = es.values(mode_index);
    if (lam.imag() == 0.0)
        throw std::invalid_argument("phase audit needs an oscillatory mode");
    const cplx num = (es.left.row(mode_index) * m.b.col(input).cast<cplx>())(0);
    const cplx den = (m.c.row(output).cast<cplx>() * es.right.col(mode_index))(0);
    const cplx residue = num * den;
    const cplx h = stack.freq_response(std::abs(lam.imag()));
    const double ang = std::arg(residue * h);
    double off = (ang - kPi) * 180.0 / kPi;
    while (off > 180.0) off -= 360.0;
    while (off < -180.0) off += 360.0;
    return off;
}

} // namespace swing
