#include "swing/devices.hpp"

#include <cmath>
#include <stdexcept>

namespace swing {

namespace {

inline double wrap_angle(double a) { return std::atan2(std::sin(a), std::cos(a)); }

inline double clip(double v, double lo, double hi) {
    return v < lo ? lo : (v > hi ? hi : v);
}

// Anti-windup gate on a PI integrator: 1 strictly inside the command limit,
// 0 at and beyond it, linear over a thin boundary layer. The layer keeps the
// right-hand side Lipschitz for the implicit corrector; it is inactive at any
// equilibrium, where commands sit strictly inside their limits.
inline double aw_gate(double raw, double limit) {
    const double layer = 1e-3 * limit;
    return clip((limit - std::abs(raw)) / layer, 0.0, 1.0);
}

} // namespace

double LeadLagStack::eval(const double* st, double u, double* dst) const {
    const double xw = st[0], x1 = st[1], x2 = st[2];
    const double y1 = u - xw;
    dst[0] = (u - xw) / tw;
    const double r1 = t1_num / t1_den;
    const double y2 = r1 * y1 + (1.0 - r1) * x1;
    dst[1] = (y1 - x1) / t1_den;
    const double r2 = t2_num / t2_den;
    const double y3 = r2 * y2 + (1.0 - r2) * x2;
    dst[2] = (y2 - x2) / t2_den;
    double out = k * y3;
    if (clamp > 0) out = clip(out, -clamp, clamp);
    return out;
}

cplx LeadLagStack::freq_response(double omega) const {
    const cplx s(0.0, omega);
    return k * (s * tw / (s * tw + 1.0)) * ((1.0 + s * t1_num) / (1.0 + s * t1_den)) *
           ((1.0 + s * t2_num) / (1.0 + s * t2_den));
}

double LeadLagStack::step(double u, double dt) {
    if (!std::isfinite(u)) throw std::runtime_error("lead-lag input is not finite");
    // States are linear in (state, input): trapezoidal update solved exactly.
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    Eigen::Vector3d n = Eigen::Vector3d::Zero();
    const double r1 = t1_num / t1_den;
    m(0, 0) = -1.0 / tw;
    n(0) = 1.0 / tw;
    m(1, 0) = -1.0 / t1_den;
    m(1, 1) = -1.0 / t1_den;
    n(1) = 1.0 / t1_den;
    m(2, 0) = -r1 / t2_den;
    m(2, 1) = (1.0 - r1) / t2_den;
    m(2, 2) = -1.0 / t2_den;
    n(2) = r1 / t2_den;

    Eigen::Vector3d x(state[0], state[1], state[2]);
    const Eigen::Matrix3d i3 = Eigen::Matrix3d::Identity();
    // Input held constant over the step.
    Eigen::Vector3d x1 =
        (i3 - 0.5 * dt * m).partialPivLu().solve((i3 + 0.5 * dt * m) * x + dt * n * u);
    state = {x1(0), x1(1), x1(2)};

    double dst[3];
    return eval(state.data(), u, dst);
}

void SyncMachine::norton(const double* st, Eigen::Matrix2d& y_blk,
                         Eigen::Vector2d& i_src) const {
    if (!initialized) throw std::runtime_error(name + " used before initialization");
    const double d = st[0], eq = st[2], ed = st[3];
    const double sd = std::sin(d), cd = std::cos(d);
    Eigen::Matrix2d r;
    r << sd, cd, -cd, sd;
    // Stator algebra: [ed - vd; eq - vq] = [[ra, -xq_tr],[xd_tr, ra]] [id; iq]
    const double det = ra * ra + xq_tr * xd_tr;
    Eigen::Matrix2d zinv;
    zinv << ra / det, xq_tr / det, -xd_tr / det, ra / det;
    y_blk = r * zinv * r.transpose();
    i_src = r * zinv * Eigen::Vector2d(ed, eq);
}

void SyncMachine::deriv(const double* st, cplx vt, double* dst) const {
    if (!initialized) throw std::runtime_error(name + " used before initialization");
    const double delta = st[0], dw = st[1], eq = st[2], ed = st[3], efd = st[4];
    const cplx vdq = to_frame(vt, delta - kPi / 2.0);
    const double vd = vdq.real(), vq = vdq.imag();
    const double det = ra * ra + xq_tr * xd_tr;
    const double id = (ra * (ed - vd) + xq_tr * (eq - vq)) / det;
    const double iq = (-xd_tr * (ed - vd) + ra * (eq - vq)) / det;
    const double pe = ed * id + eq * iq + (xq_tr - xd_tr) * id * iq;

    double vpss = 0.0;
    if (pss_on) vpss = pss.eval(st + 5, dw, dst + 5);

    const double ws = 2 * kPi * 60.0;
    dst[0] = ws * dw;
    dst[1] = (pm - pe - d * dw) / (2.0 * h);
    dst[2] = (-eq - (xd - xd_tr) * id + efd) / td0_tr;
    dst[3] = (-ed + (xq - xq_tr) * iq) / tq0_tr;
    const double efd_t =
        clip(exc.ka * (vref - std::abs(vt) + vpss), exc.efd_min, exc.efd_max);
    dst[4] = (efd_t - efd) / exc.ta;
}

double SyncMachine::electrical_power(const double* st, cplx vt) const {
    const double delta = st[0], eq = st[2], ed = st[3];
    const cplx vdq = to_frame(vt, delta - kPi / 2.0);
    const double vd = vdq.real(), vq = vdq.imag();
    const double det = ra * ra + xq_tr * xd_tr;
    const double id = (ra * (ed - vd) + xq_tr * (eq - vq)) / det;
    const double iq = (-xd_tr * (ed - vd) + ra * (eq - vq)) / det;
    return ed * id + eq * iq + (xq_tr - xd_tr) * id * iq;
}

double dc_link_derivative(double p_in, double p_c, double c, double v_dc) {
    if (v_dc <= 0.0) throw std::domain_error("dc-link voltage must be positive");
    return (p_in - p_c) / (c * v_dc);
}

void Dfig::norton(const double* st, cplx& y_s, cplx& i_s_src, cplx& y_c,
                  cplx& i_c_src) const {
    if (!initialized) throw std::runtime_error("wind farm used before initialization");
    y_s = 1.0 / cplx(rs, xp);
    i_s_src = y_s * cplx(st[0], st[1]);
    y_c = 1.0 / cplx(rc, xc);
    const cplx vcn = from_frame(cplx(st[10], st[11]), st[12]);
    i_c_src = y_c * vcn;
}

void Dfig::deriv(const double* st, cplx vb, cplx vpcc, double* dst) const {
    if (!initialized) throw std::runtime_error("wind farm used before initialization");
    const double ws = 2 * kPi * 60.0;
    const double ep_d = st[0], ep_q = st[1], wr = st[2], vdc = st[3];
    const double xi_p = st[4], xi_rd = st[5], xi_rq = st[6];
    const double xi_dc = st[7], xi_cd = st[8], xi_cq = st[9];
    const double vc_d = st[10], vc_q = st[11], thp = st[12], thf = st[13];

    const cplx e(ep_d, ep_q);
    const cplx ys = 1.0 / cplx(rs, xp);
    const cplx yc = 1.0 / cplx(rc, xc);
    const cplx i_s = ys * (e - vb);
    const cplx i_r = cplx(0, -1) * e / xm + (xm / xr) * i_s;
    const cplx psi = cplx(0, -1) * (vb + rs * i_s);
    const double phi = std::arg(psi);            // stator-flux frame angle
    const cplx irf = to_frame(i_r, phi);
    const double ps = (vb * std::conj(i_s)).real();
    const cplx vcn = from_frame(cplx(vc_d, vc_q), thp);
    const cplx i_g = yc * (vcn - vb);
    const double pc = (vb * std::conj(i_g)).real();
    const double pout = ps + pc;

    // RSC power loop (wind-farm per-unit; hook for losses currently zero).
    const double losses = 0.0;
    const double ep_w = (pref - (pout + losses)) / sb;
    const double iq_cmd = clip(kp_p * ep_w + xi_p, -iq_max, iq_max);
    dst[4] = aw_gate(kp_p * ep_w + xi_p, iq_max) * ki_p * ep_w;

    // Excitation channel: initialized command, voltage controller, SDC.
    double vout = 0.0;
    if (vctrl_on) {
        const double xi_v = st[vctrl_index()];
        const double ev = vpcc_ref - std::abs(vpcc);
        vout = clip(vctrl.kp * ev + xi_v, -vctrl.clamp, vctrl.clamp);
        dst[vctrl_index()] = aw_gate(vctrl.kp * ev + xi_v, vctrl.clamp) * vctrl.ki * ev;
    }
    const double dthf = kf * wrap_angle(std::arg(vpcc) - thf);
    const double dw_pcc = dthf / ws;
    double sout = 0.0;
    if (sdc_on) sout = sdc.eval(st + sdc_index(), dw_pcc, dst + sdc_index());
    const double id_cmd = clip(idr0 + vout + sout + d_cmd_bias, -id_max, id_max);

    // RSC current loop.
    const double ird_w = irf.real() / sb, irq_w = irf.imag() / sb;
    const double ed_i = id_cmd - ird_w, eq_i = iq_cmd - irq_w;
    const double vrd = clip(kpr * ed_i + xi_rd, -vr_max, vr_max);
    const double vrq = clip(kpr * eq_i + xi_rq, -vr_max, vr_max);
    dst[5] = aw_gate(kpr * ed_i + xi_rd, vr_max) * kir * ed_i;
    dst[6] = aw_gate(kpr * eq_i + xi_rq, vr_max) * kir * eq_i;
    const cplx vr = from_frame(cplx(vrd, vrq), phi);   // same scale in both bases

    // Rotor flux dynamics behind the transient reactance.
    const double s = 1.0 - wr;
    dst[0] = -(ep_d - (xs - xp) * i_s.imag()) / t0 + s * ws * ep_q -
             ws * (xm / xr) * vr.imag();
    dst[1] = -(ep_q + (xs - xp) * i_s.real()) / t0 - s * ws * ep_d +
             ws * (xm / xr) * vr.real();

    const double te = (e * std::conj(i_s)).real();
    const double tm = tm0 * (1.0 - kw * (wr - wr0));
    dst[2] = (tm - te) / (2.0 * hw);

    const double p_in = -(vr * std::conj(i_r)).real();
    const double p_gsc = (vcn * std::conj(i_g)).real();
    dst[3] = dc_link_derivative(p_in, p_gsc, cdc, vdc);

    // GSC: dc-voltage loop into the active current, unity-pf reactive channel,
    // inner current loop with grid-voltage feedforward, converter lag.
    const cplx igf = to_frame(i_g, thp);
    const double ida_w = igf.real() / sb, iqa_w = igf.imag() / sb;
    const double edc = vdc - vdc_ref;
    const double ida_cmd = clip(kpdc * edc + xi_dc, -gsc_i_max, gsc_i_max);
    dst[7] = aw_gate(kpdc * edc + xi_dc, gsc_i_max) * kidc * edc;
    const cplx vbf = to_frame(vb, thp);
    const double ecd = ida_cmd - ida_w;
    const double ecq = 0.0 - iqa_w;
    const double vcd_cmd = kpc * ecd + xi_cd + vbf.real();
    const double vcq_cmd = kpc * ecq + xi_cq + vbf.imag();
    dst[8] = kic * ecd;
    dst[9] = kic * ecq;
    dst[10] = (vcd_cmd - vc_d) / tc;
    dst[11] = (vcq_cmd - vc_q) / tc;

    dst[12] = kpll * wrap_angle(std::arg(vb) - thp);
    dst[13] = dthf;
}

double Dfig::output_power(const double* st, cplx vb) const {
    const cplx e(st[0], st[1]);
    const cplx ys = 1.0 / cplx(rs, xp);
    const cplx yc = 1.0 / cplx(rc, xc);
    const cplx i_s = ys * (e - vb);
    const cplx vcn = from_frame(cplx(st[10], st[11]), st[12]);
    const cplx i_g = yc * (vcn - vb);
    return (vb * std::conj(i_s)).real() + (vb * std::conj(i_g)).real();
}

void sdc_attach(Dfig& wf, const LeadLagStack& stack) {
    if (wf.sdc_on) throw std::runtime_error("damping controller already attached");
    wf.sdc = stack;
    wf.sdc_on = true;
}

} // namespace swing
