#include "swing/network.hpp"

#include <queue>
#include <stdexcept>

namespace swing {

Eigen::MatrixXcd AdmittanceMatrix::at(double t) const {
    Eigen::MatrixXcd y = base_;
    for (const auto& o : overlays_) {
        if (t >= o.t_on && t < o.t_off) y(o.bus, o.bus) += o.y;
    }
    return y;
}

bool AdmittanceMatrix::overlay_active(double t) const {
    for (const auto& o : overlays_) {
        if (t >= o.t_on && t < o.t_off) return true;
    }
    return false;
}

AdmittanceMatrix build_ybus(const std::vector<Bus>& buses,
                            const std::vector<Branch>& branches,
                            const std::vector<Shunt>& shunts) {
    const int n = static_cast<int>(buses.size());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
    std::vector<std::vector<int>> adj(n);

    for (const auto& br : branches) {
        if (br.from < 0 || br.from >= n || br.to < 0 || br.to >= n)
            throw std::runtime_error("branch endpoint outside bus set");
        if (br.from == br.to)
            throw std::runtime_error("branch with identical endpoints");
        if (std::abs(br.z) == 0.0)
            throw std::runtime_error("zero-impedance branch between buses " +
                                     std::to_string(br.from + 1) + " and " +
                                     std::to_string(br.to + 1));
        const cplx ys = 1.0 / br.z;
        const cplx ysh(0.0, br.b_shunt / 2.0);
        const double a = br.tap;
        y(br.from, br.from) += ys / (a * a) + ysh;
        y(br.to, br.to) += ys + ysh;
        y(br.from, br.to) -= ys / a;
        y(br.to, br.from) -= ys / a;
        adj[br.from].push_back(br.to);
        adj[br.to].push_back(br.from);
    }
    for (const auto& sh : shunts) {
        if (sh.bus < 0 || sh.bus >= n)
            throw std::runtime_error("shunt bus outside bus set");
        y(sh.bus, sh.bus) += sh.y;
    }

    if (n > 0) {
        std::vector<char> seen(n, 0);
        std::queue<int> q;
        q.push(0);
        seen[0] = 1;
        int count = 1;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int w : adj[u]) {
                if (!seen[w]) {
                    seen[w] = 1;
                    ++count;
                    q.push(w);
                }
            }
        }
        if (count != n) throw std::runtime_error("network graph is disconnected");
    }
    return AdmittanceMatrix(std::move(y));
}

AdmittanceMatrix apply_fault(const AdmittanceMatrix& y, int bus, cplx admittance,
                             double t_on, double t_off) {
    if (bus < 0 || bus >= y.order())
        throw std::runtime_error("fault bus outside bus set");
    if (!(t_on < t_off)) throw std::runtime_error("fault window start must precede end");
    auto overlays = y.overlays();
    overlays.push_back(Overlay{t_on, t_off, bus, admittance});
    return AdmittanceMatrix(y.base(), std::move(overlays));
}

} // namespace swing
