#pragma once
#include <string>
#include <vector>

#include "swing/system.hpp"

namespace swing {

struct PowerFlowResult {
    Eigen::VectorXcd v;
    int iterations = 0;
    double mismatch = 0;    // max |delta P|, |delta Q| at convergence
};

// Newton power flow in polar coordinates with a numeric Jacobian (desk-scale
// networks). kinds/pset/qset/vset are per bus; pset/qset are net injections.
PowerFlowResult solve_power_flow(const Eigen::MatrixXcd& y,
                                 const std::vector<BusKind>& kinds,
                                 const Eigen::VectorXd& pset,
                                 const Eigen::VectorXd& qset,
                                 const Eigen::VectorXd& vset,
                                 double tol = 1e-10, int itmax = 50);

struct OperatingPoint {
    Eigen::VectorXd x0;
    Eigen::VectorXcd v0;
    double pf_mismatch = 0;
    double deriv_residual = 0;     // ||f(x0)||_inf after initialization
    std::vector<std::string> labels;

    // Labeled state report for audit.
    std::string audit_report() const;
};

// Back-solves every device so all derivatives vanish at the power-flow
// solution. Converts constant-impedance loads to shunts at the solved
// voltage (they stay fixed afterwards) and rebuilds the admittance matrix.
OperatingPoint initialize_devices(PowerSystem& sys, const PowerFlowResult& pf);

} // namespace swing
