#include "swing/timedomain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>

#include "swing/smallsignal.hpp"

namespace swing {

const std::vector<double>& SimulationRun::channel(const std::string& name) const {
    for (size_t i = 0; i < channel_names.size(); ++i)
        if (channel_names[i] == name) return channels[i];
    throw std::out_of_range("unknown channel: " + name);
}

namespace {

struct Segment {
    double a = 0, b = 0;
    double mid() const { return 0.5 * (a + b); }
};

// Splits [0, t_end] at every overlay edge so each segment has one fixed
// network topology; integration never straddles a switching instant.
std::vector<Segment> split_at_overlays(const PowerSystem& sys, double t_end) {
    std::vector<double> edges{0.0, t_end};
    for (const auto& ov : sys.ybus.overlays()) {
        if (ov.t_on > 0 && ov.t_on < t_end) edges.push_back(ov.t_on);
        if (ov.t_off > 0 && ov.t_off < t_end) edges.push_back(ov.t_off);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](double x, double y) { return std::abs(x - y) < 1e-12; }),
                edges.end());
    std::vector<Segment> segs;
    for (size_t i = 0; i + 1 < edges.size(); ++i) segs.push_back({edges[i], edges[i + 1]});
    return segs;
}

} // namespace

SimulationRun simulate(const PowerSystem& sys, const OperatingPoint& op,
                       double t_end, double dt) {
    if (dt <= 0 || t_end <= 0) throw std::invalid_argument("simulate needs dt > 0, t_end > 0");
    const int nx = sys.nstates();
    if (op.x0.size() != nx)
        throw std::invalid_argument("operating point does not match system state count");

    SimulationRun run;
    for (const auto& m : sys.machines) run.channel_names.push_back(m.name + ".delta");
    for (const auto& m : sys.machines) run.channel_names.push_back(m.name + ".domega");
    run.channel_names.push_back("tie.p");
    if (sys.wind) {
        run.channel_names.push_back("WF.v_pcc");
        run.channel_names.push_back("WF.v_dc");
    }
    run.channels.assign(run.channel_names.size(), {});

    for (const auto& ov : sys.ybus.overlays()) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "fault applied at bus %d", ov.bus + 1);
        if (ov.t_on < t_end) run.events.push_back({ov.t_on, buf});
        if (ov.t_off < t_end) run.events.push_back({ov.t_off, "fault cleared"});
    }
    std::sort(run.events.begin(), run.events.end(),
              [](const SimEvent& a, const SimEvent& b) { return a.t < b.t; });

    const auto moff = sys.machine_offsets();
    auto record = (
        [&](double t, const Eigen::VectorXd& x, const Eigen::VectorXcd& v) {
            run.t.push_back(t);
            size_t c = 0;
            for (size_t k = 0; k < sys.machines.size(); ++k)
                run.channels[c++].push_back(x(moff[k]));
            for (size_t k = 0; k < sys.machines.size(); ++k)
                run.channels[c++].push_back(x(moff[k] + 1));
            run.channels[c++].push_back(sys.tie_power(v));
            if (sys.wind) {
                run.channels[c++].push_back(std::abs(v(sys.wind->pcc_bus)));
                run.channels[c++].push_back(x(sys.wind_offset() + 3));
            }
            double dmin = x(moff[0]), dmax = dmin;
            for (size_t k = 1; k < sys.machines.size(); ++k) {
                dmin = std::min(dmin, x(moff[k]));
                dmax = std::max(dmax, x(moff[k]));
            }
            if (dmax - dmin > kPi) run.angle_separated = true;
            run.x_final = x;
        });

    Eigen::VectorXd x = op.x0;
    {
        const Eigen::VectorXcd v0 = sys.solve_network(x, 0.0);
        record(0.0, x, v0);
    }

    const double newton_tol = 1e-10;
    const int newton_max = 12;
    const int max_bisect = 8;

    for (const Segment& seg : split_at_overlays(sys, t_end)) {
        const double ts = seg.mid();   // topology selector: interior of the segment
        // a wild corrector iterate can leave the model's domain (dc link at
        // zero, singular network); treat that as a failed iterate, not a crash
        auto f_try = [&](const Eigen::VectorXd& xx, Eigen::VectorXd& out) {
            try {
                out = sys.deriv(xx, ts);
            } catch (const std::exception&) {
                return false;
            }
            return out.allFinite();
        };

        int m = std::max(1, static_cast<int>(std::lround((seg.b - seg.a) / dt)));
        if (m * dt < seg.b - seg.a - 1e-9) ++m;
        const double h = (seg.b - seg.a) / m;

        Eigen::MatrixXd a_lin =
            jacobian([&](const Eigen::VectorXd& xx) { return sys.deriv(xx, ts); }, x);

        // one trapezoidal step of size hh from x_in; chord Newton with one
        // fresh-Jacobian retry
        auto try_step = [&](const Eigen::VectorXd& x_in, double hh,
                            Eigen::VectorXd& x_out) {
            Eigen::VectorXd f0;
            if (!f_try(x_in, f0)) return false;
            for (int attempt = 0; attempt < 2; ++attempt) {
                Eigen::PartialPivLU<Eigen::MatrixXd> lu(
                    Eigen::MatrixXd::Identity(nx, nx) - (hh / 2) * a_lin);
                Eigen::VectorXd xn = x_in + hh * f0;
                Eigen::VectorXd fn;
                for (int it = 0; it < newton_max; ++it) {
                    if (!f_try(xn, fn)) break;
                    const Eigen::VectorXd g = xn - x_in - (hh / 2) * (f0 + fn);
                    const Eigen::VectorXd dx = lu.solve(-g);
                    xn += dx;
                    if (!xn.allFinite()) break;
                    if (dx.lpNorm<Eigen::Infinity>() < newton_tol) {
                        x_out = xn;
                        return true;
                    }
                }
                if (attempt == 0) {   // refresh the chord matrix and retry
                    Eigen::VectorXd ref = xn.allFinite() ? xn : x_in;
                    a_lin = jacobian(
                        [&](const Eigen::VectorXd& xx) { return sys.deriv(xx, ts); }, ref);
                }
            }
            return false;
        };

        // advances across [0, hh] with recursive bisection on corrector
        // failure (controller limits switch branches inside a step)
        std::function<bool(Eigen::VectorXd&, double, int)> advance =
            [&](Eigen::VectorXd& xx, double hh, int depth) {
                Eigen::VectorXd xn;
                if (try_step(xx, hh, xn)) {
                    xx = xn;
                    return true;
                }
                if (depth >= max_bisect) return false;
                return advance(xx, hh / 2, depth + 1) && advance(xx, hh / 2, depth + 1);
            };

        for (int k = 1; k <= m; ++k) {
            const double t_new = seg.a + k * h;
            if (!advance(x, h, 0)) {
                run.diverged = true;
                char buf[96];
                std::snprintf(buf, sizeof buf, "corrector failed to converge at t=%.6f s",
                              t_new);
                run.diagnostic = buf;
                run.events.push_back({t_new, "integration aborted"});
                return run;
            }
            Eigen::VectorXcd v;
            try {
                v = sys.solve_network(x, ts);
            } catch (const std::exception& e) {
                run.diverged = true;
                run.diagnostic = e.what();
                run.events.push_back({t_new, "integration aborted"});
                return run;
            }
            record(t_new, x, v);
        }
    }
    return run;
}

RingdownFit identify_ringdown_modes(const std::vector<double>& y, double dt,
                                    int max_order, double slowest_hz, double min_cycles) {
    const int n = static_cast<int>(y.size());
    if (dt <= 0) throw std::invalid_argument("ringdown fit needs dt > 0");
    if (n < 8) throw std::invalid_argument("ringdown window has too few samples");
    if ((n - 1) * dt < min_cycles / slowest_hz)
        throw std::invalid_argument("ringdown window shorter than the minimum cycle count");

    // Hankel matrix of the samples; its right singular space is shift
    // invariant with the signal poles as the shift spectrum.
    const int l = n / 3;
    const int rows = n - l;
    Eigen::MatrixXd hank(rows, l + 1);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j <= l; ++j) hank(i, j) = y[i + j];

    Eigen::BDCSVD<Eigen::MatrixXd> svd(hank, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();
    const double s0 = sv(0);
    if (s0 == 0) throw std::invalid_argument("ringdown window is identically zero");
    int order = 0;
    for (int i = 0; i < sv.size() && order < max_order; ++i)
        if (sv(i) > 1e-8 * s0) ++order;

    const Eigen::MatrixXd vm = svd.matrixV().leftCols(order);
    const Eigen::MatrixXd v1 = vm.topRows(l);
    const Eigen::MatrixXd v2 = vm.bottomRows(l);
    const Eigen::MatrixXd shift = v1.colPivHouseholderQr().solve(v2);
    const Eigen::VectorXcd z = Eigen::EigenSolver<Eigen::MatrixXd>(shift).eigenvalues();

    std::vector<cplx> zk;
    for (int i = 0; i < z.size(); ++i)
        if (std::abs(z(i)) > 1e-12) zk.push_back(z(i));
    if (zk.empty()) throw std::runtime_error("ringdown fit found no usable poles");

    // least-squares amplitudes on the full window
    const int mm = static_cast<int>(zk.size());
    Eigen::MatrixXcd vand(n, mm);
    for (int j = 0; j < mm; ++j) {
        cplx p(1, 0);
        for (int i = 0; i < n; ++i) {
            vand(i, j) = p;
            p *= zk[j];
        }
    }
    Eigen::VectorXcd yc(n);
    for (int i = 0; i < n; ++i) yc(i) = y[i];
    const Eigen::VectorXcd amp = vand.colPivHouseholderQr().solve(yc);
    const double ynorm = yc.norm();
    RingdownFit fit;
    fit.residual_ratio = (vand * amp - yc).norm() / ynorm;
    fit.low_confidence = fit.residual_ratio > 0.05;

    for (int j = 0; j < mm; ++j) {
        const cplx lam = std::log(zk[j]) / dt;
        if (lam.imag() < 0) continue;   // conjugate partner carries the same content
        fit.modes.push_back({lam, std::abs(amp(j))});
    }
    std::sort(fit.modes.begin(), fit.modes.end(),
              [](const RingdownMode& a, const RingdownMode& b) {
                  return a.amplitude > b.amplitude;
              });
    return fit;
}

} // namespace swing
