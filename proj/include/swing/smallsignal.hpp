#pragma once
#include <functional>
#include <string>
#include <vector>

#include "swing/steadystate.hpp"
#include "swing/system.hpp"

namespace swing {

// Central-difference Jacobian of f at x0 with h = max(1e-6, 1e-6*|x_j|).
Eigen::MatrixXd jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                         const Eigen::VectorXd& x0);

struct StateSpaceModel {
    Eigen::MatrixXd a, b, c, d;
    std::vector<std::string> state_labels, input_labels, output_labels;
};

// Linearizes the system about the operating point. Inputs: the SDC injection
// point (d-axis rotor current command bias) when a wind farm is present.
// Outputs: tie power, machine speed deviations, and PCC frequency deviation
// when a wind farm is present.
StateSpaceModel linearize(const PowerSystem& sys, const OperatingPoint& op);

struct EigenSolution {
    Eigen::VectorXcd values;
    Eigen::MatrixXcd right;    // columns
    Eigen::MatrixXcd left;     // rows, bi-orthonormal: left.row(i)*right.col(i)=1
    Eigen::VectorXd residuals; // backward error ||A phi - lambda phi||/(||A|| ||phi||)
};

// Dense eigensolution with a backward-error contract (< 1e-10 per pair,
// right and left); throws on violation or non-convergence.
EigenSolution eigensolve(const Eigen::MatrixXd& a);

struct Mode {
    cplx lambda;
    double sigma = 0, omega = 0;   // lambda = sigma +/- j omega, omega >= 0
    double zeta = 0, freq_hz = 0;
    Eigen::VectorXcd shape;        // right eigenvector over machine speed states
    Eigen::VectorXcd participation;  // full-state, sums to 1
    bool defective = false;
    std::string classification;    // inter-area | intra-area | control | non-oscillatory
};

struct ClassifyThresholds {
    double band_lo_hz = 0.1, band_hi_hz = 3.0;
    double em_participation_min = 0.3;
    double separation_deg = 90.0;
    double balance_min = 0.2;
    double coherence_min = 0.5;
};

// zeta = -sigma/sqrt(sigma^2+omega^2), f = omega/2pi. Real eigenvalues map to
// zeta = sign(-sigma), f = 0, non-oscillatory.
Mode modal_metrics(cplx lambda);

// Cluster test over machine speed components: inter-area when the two areas
// swing as coherent opposite-phase clusters of comparable magnitude.
std::string classify_mode(const Eigen::VectorXcd& speed_shape,
                          const std::vector<int>& machine_area,
                          const ClassifyThresholds& th);

// Conjugate-pair-deduplicated electromechanical modes of the system spectrum:
// in-band, rotor-state participation above threshold, classified. Sorted by
// frequency.
std::vector<Mode> electromechanical_modes(const EigenSolution& es,
                                          const std::vector<int>& angle_rows,
                                          const std::vector<int>& speed_rows,
                                          const std::vector<int>& machine_area,
                                          const ClassifyThresholds& th);

// G(s) = C (sI - A)^-1 B by linear solve; throws when s is within 1e-9 of an
// eigenvalue of A.
Eigen::MatrixXcd transfer_function(const StateSpaceModel& m, cplx s);

// 100 * (after - before) / |before|.
double damping_improvement(double zeta_before, double zeta_after);

// Phase-compensation audit for the SDC at an oscillatory mode: the angle, in
// degrees, by which arg(residue * H(lambda)) misses 180 deg (pure damping
// orientation). residue = (psi^T b) * (c phi) for the mode's eigenpair.
double sdc_phase_audit(const StateSpaceModel& m, const EigenSolution& es,
                       int mode_index, int input, int output,
                       const LeadLagStack& stack);

} // namespace swing
