#pragma once
#include <string>
#include <vector>

#include "swing/steadystate.hpp"
#include "swing/system.hpp"

namespace swing {

struct SimEvent {
    double t = 0;
    std::string what;
};

struct SimulationRun {
    std::vector<double> t;
    std::vector<std::string> channel_names;
    std::vector<std::vector<double>> channels;   // channel-major, same length as t
    std::vector<SimEvent> events;
    Eigen::VectorXd x_final;        // state at the last recorded sample
    bool diverged = false;
    bool angle_separated = false;   // max angle spread exceeded pi at some step
    std::string diagnostic;

    const std::vector<double>& channel(const std::string& name) const;
};

// Implicit-trapezoidal integration with the network solved simultaneously at
// every Newton iterate. Steps are aligned to the overlay window edges so the
// fault admittance is present for exactly the steps inside [t_on, t_off).
// Channels: machine angles and speed deviations, tie power, and when a wind
// farm is present PCC voltage and dc-link voltage.
SimulationRun simulate(const PowerSystem& sys, const OperatingPoint& op,
                       double t_end, double dt);

struct RingdownMode {
    cplx lambda;
    double amplitude = 0;
};

struct RingdownFit {
    std::vector<RingdownMode> modes;   // conjugates deduplicated, Im >= 0
    double residual_ratio = 0;         // ||fit - signal|| / ||signal||
    bool low_confidence = false;
};

// Matrix-pencil identification of damped sinusoids from a uniformly sampled
// window. Throws if the window is shorter than min_cycles periods of
// slowest_hz. max_order caps the retained singular space.
RingdownFit identify_ringdown_modes(const std::vector<double>& y, double dt,
                                    int max_order = 8, double slowest_hz = 0.3,
                                    double min_cycles = 4.0);

} // namespace swing
