#pragma once
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace swing {

using cplx = std::complex<double>;

enum class BusKind { slack, pv, pq };

struct Bus {
    int id = 0;          // external 1-based id
    double base_kv = 0;
    BusKind kind = BusKind::pq;
};

struct Branch {
    int from = 0, to = 0;       // 0-based bus indices
    cplx z;                     // series impedance, pu
    double b_shunt = 0;         // total line charging, pu
    double tap = 1.0;
};

struct Shunt {
    int bus = 0;
    cplx y;                     // admittance to ground, pu
};

// Time-windowed shunt patch; active for t in [t_on, t_off).
struct Overlay {
    double t_on = 0, t_off = 0;
    int bus = 0;
    cplx y;
};

// Nodal admittance matrix with non-destructive fault overlays. Immutable
// after construction; at(t) materializes the matrix valid at time t.
class AdmittanceMatrix {
public:
    AdmittanceMatrix() = default;
    AdmittanceMatrix(Eigen::MatrixXcd base, std::vector<Overlay> overlays = {})
        : base_(std::move(base)), overlays_(std::move(overlays)) {}

    int order() const { return static_cast<int>(base_.rows()); }
    const Eigen::MatrixXcd& base() const { return base_; }
    const std::vector<Overlay>& overlays() const { return overlays_; }

    Eigen::MatrixXcd at(double t) const;
    bool overlay_active(double t) const;

private:
    Eigen::MatrixXcd base_;
    std::vector<Overlay> overlays_;
};

// Assembles the bus admittance matrix. Throws on dangling branch endpoints,
// zero-impedance branches, and disconnected topologies.
AdmittanceMatrix build_ybus(const std::vector<Bus>& buses,
                            const std::vector<Branch>& branches,
                            const std::vector<Shunt>& shunts);

// Returns a copy with one more overlay; the input is untouched.
AdmittanceMatrix apply_fault(const AdmittanceMatrix& y, int bus, cplx admittance,
                             double t_on, double t_off);

} // namespace swing
