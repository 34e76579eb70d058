#pragma once
#include <optional>
#include <string>
#include <vector>

#include "swing/devices.hpp"
#include "swing/network.hpp"

namespace swing {

struct LoadSpec {
    int bus = 0;       // 0-based
    double p = 0, q = 0;   // pu, consumption positive
};

// The assembled dynamic system: network plus devices. The network algebraic
// equations are eliminated inside deriv() by a direct solve of the real
// 2n x 2n current-balance system (machine blocks are general 2x2, so the
// solve cannot stay in complex scalars).
class PowerSystem {
public:
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Shunt> fixed_shunts;     // capacitor banks + converted loads
    std::vector<LoadSpec> loads;         // pre-initialization load spec
    AdmittanceMatrix ybus;               // includes fault overlays
    std::vector<SyncMachine> machines;
    std::optional<Dfig> wind;
    double ws = 2 * kPi * 60.0;          // synchronous speed, rad/s

    // Tie branches (both 110 km circuits on the west side of the tie bus),
    // used for the tie-power output channel.
    std::vector<int> tie_branch_idx;

    int nbus() const { return static_cast<int>(buses.size()); }
    int nstates() const;
    std::vector<int> machine_offsets() const;
    int wind_offset() const;
    std::vector<std::string> state_labels() const;

    void rebuild_ybus();

    // Solves the network at time t for state x. Throws if the current-balance
    // matrix is singular.
    Eigen::VectorXcd solve_network(const Eigen::VectorXd& x, double t) const;

    // Full derivative evaluation; v_out receives the solved bus voltages.
    void deriv(const Eigen::VectorXd& x, double t, Eigen::VectorXd& dx,
               Eigen::VectorXcd& v_out) const;
    Eigen::VectorXd deriv(const Eigen::VectorXd& x, double t = 0.0) const;

    // Active power crossing the tie measured at the west ends of the tie
    // circuits, pu; positive west to east.
    double tie_power(const Eigen::VectorXcd& v) const;
};

} // namespace swing
