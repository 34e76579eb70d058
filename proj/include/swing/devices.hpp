#pragma once
#include <array>
#include <string>

#include "swing/network.hpp"

namespace swing {

constexpr double kPi = 3.14159265358979323846;

// Washout followed by two first-order lead-lag stages, gain K, output clamp.
// Three continuous states: washout filter state and one per stage.
struct LeadLagStack {
    double k = 0;
    double tw = 10.0;
    double t1_num = 1.0, t1_den = 1.0;
    double t2_num = 1.0, t2_den = 1.0;
    double clamp = 0;   // 0 disables clamping

    // Continuous form used inside the system derivative: writes dst[0..2],
    // returns the clamped output for input u.
    double eval(const double* st, double u, double* dst) const;

    // H(jw) of the continuous stack including gain (clamp ignored).
    cplx freq_response(double omega) const;

    // Standalone discrete stepper (trapezoidal on the internal states) for
    // driving the stack outside a system integration.
    std::array<double, 3> state{};
    double step(double u, double dt);
    void reset() { state = {0, 0, 0}; }
};

struct Exciter {
    double ka = 200.0;
    double ta = 0.01;       // s
    double efd_max = 8.0, efd_min = -8.0;
};

// Two-axis synchronous machine + static exciter + optional PSS.
// Parameters are stored on the system base (converted at ingestion).
// States: delta, domega, eq_tr, ed_tr, efd [, pss x3].
struct SyncMachine {
    std::string name;
    int bus = 0;            // 0-based
    int area = 1;
    double mva = 900.0;     // rating used for the base conversion
    double xd = 0, xq = 0, xd_tr = 0, xq_tr = 0, ra = 0;
    double td0_tr = 8.0, tq0_tr = 0.4;
    double h = 0, d = 0;
    Exciter exc;
    bool pss_on = false;
    LeadLagStack pss;

    // References established by initialization.
    double pm = 0, vref = 0;
    bool initialized = false;

    int nstates() const { return pss_on ? 8 : 5; }

    // Stator Norton equivalent in the network frame: I = y_blk*(E(x) - V)
    // with a rotor-angle-dependent real 2x2 block (salient machine).
    void norton(const double* st, Eigen::Matrix2d& y_blk, Eigen::Vector2d& i_src) const;

    // State derivatives given the solved terminal voltage.
    void deriv(const double* st, cplx vt, double* dst) const;

    double electrical_power(const double* st, cplx vt) const;
};

// dV/dt of the dc-link capacitor; domain error for v_dc <= 0.
double dc_link_derivative(double p_in, double p_c, double c, double v_dc);

struct PccVoltageController {
    double kp = 2.0, ki = 50.0;
    double clamp = 0.6;
};

// Aggregated DFIG with rotor-side and grid-side converter controls.
// Electrical parameters on the system base; converter control loops operate
// in wind-farm per-unit (signals rescaled by sb at the use sites).
// States (14): ep_d, ep_q, wr, vdc, rsc_p_i, rsc_id_i, rsc_iq_i, gsc_vdc_i,
// gsc_vd_i, gsc_vq_i, vc_d, vc_q, pll, freq_f [, vctrl_i][, sdc x3].
struct Dfig {
    int bus = 0;            // 0-based connection bus (dedicated LV bus)
    int pcc_bus = 0;        // 0-based PCC, measurement point
    double s_mva = 0;       // rating, MVA
    double sb = 0;          // rating / system base, signal conversion factor

    double rs = 0, xm = 0, xs = 0, xr = 0, xp = 0, rr = 0;
    double t0 = 0;          // rotor open-circuit time constant, s
    double hw = 3.5;
    double kw = 1.0;        // mechanical torque droop
    double cdc = 0;         // dc capacitance, system energy base
    double rc = 0, xc = 0;  // GSC coupling

    double kp_p = 0.1, ki_p = 10.0;
    double kpr = 0.3, kir = 8.0;
    double kpdc = 2.0, kidc = 50.0;
    double kpc = 0.5, kic = 20.0;
    double tc = 0.01;
    double kpll = 50.0, kf = 20.0;
    double iq_max = 1.3, id_max = 1.0, vr_max = 0.8;
    double gsc_i_max = 1.0;

    bool vctrl_on = false;
    PccVoltageController vctrl;
    bool sdc_on = false;
    LeadLagStack sdc;

    // References established by initialization.
    double pref = 0, tm0 = 0, idr0 = 0, vpcc_ref = 0, wr0 = 1.2;
    double vdc_ref = 1.0;
    bool initialized = false;

    // Additive bias on the d-axis rotor current command; linearization input
    // hook (the SDC injection point), 0 in normal operation.
    double d_cmd_bias = 0;

    int nstates() const { return 14 + (vctrl_on ? 1 : 0) + (sdc_on ? 3 : 0); }
    int vctrl_index() const { return 14; }
    int sdc_index() const { return 14 + (vctrl_on ? 1 : 0); }

    // Stator and GSC Norton equivalents into the connection bus.
    void norton(const double* st, cplx& y_s, cplx& i_s_src, cplx& y_c, cplx& i_c_src) const;

    void deriv(const double* st, cplx vb, cplx vpcc, double* dst) const;

    // Stator + GSC active power delivered to the connection bus.
    double output_power(const double* st, cplx vb) const;
};

// Attaches a supplementary damping stack to the d-axis command summing
// junction; rejects double attachment.
void sdc_attach(Dfig& wf, const LeadLagStack& stack);

// Frame rotation helpers; rotate(v, a) maps network frame to a frame whose
// d-axis leads by angle a. Inverse pair, round-trip exact to rounding.
inline cplx to_frame(cplx v, double ang) { return v * std::exp(cplx(0, -ang)); }
inline cplx from_frame(cplx v, double ang) { return v * std::exp(cplx(0, ang)); }

} // namespace swing
