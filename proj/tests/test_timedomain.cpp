#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"
#include "reference_modes.hpp"
#include "swing/scenarios.hpp"
#include "swing/timedomain.hpp"

using namespace swing;

namespace {

int index_of_time(const SimulationRun& run, double t) {
    for (size_t i = 0; i < run.t.size(); ++i)
        if (std::abs(run.t[i] - t) < 1e-9) return static_cast<int>(i);
    return -1;
}

double peak_to_peak(const std::vector<double>& y, const std::vector<double>& t,
                    double t0, double t1) {
    double lo = 1e300, hi = -1e300;
    for (size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t0 && t[i] <= t1) {
            lo = std::min(lo, y[i]);
            hi = std::max(hi, y[i]);
        }
    return hi - lo;
}

std::vector<double> window(const SimulationRun& run, const std::string& name,
                           double t0) {
    const auto& y = run.channel(name);
    std::vector<double> out;
    for (size_t i = 0; i < run.t.size(); ++i)
        if (run.t[i] >= t0) out.push_back(y[i]);
    return out;
}

const RingdownMode& dominant(const RingdownFit& fit) {
    REQUIRE(!fit.modes.empty());
    size_t best = 0;
    for (size_t i = 1; i < fit.modes.size(); ++i)
        if (fit.modes[i].amplitude > fit.modes[best].amplitude) best = i;
    return fit.modes[best];
}

// mode of the fit closest to a target frequency
const RingdownMode& nearest(const RingdownFit& fit, double omega) {
    REQUIRE(!fit.modes.empty());
    size_t best = 0;
    for (size_t i = 1; i < fit.modes.size(); ++i)
        if (std::abs(fit.modes[i].lambda.imag() - omega) <
            std::abs(fit.modes[best].lambda.imag() - omega))
            best = i;
    return fit.modes[best];
}

} // namespace

TEST_CASE("an unfaulted run holds the equilibrium") {
    for (int case_id : {1, 4}) {
        CAPTURE(case_id);
        CaseSystem cs = oracles::build(case_id, case_id == 1 ? 0.0 : 0.25, true);
        oracles::strip_overlays(cs.sys);
        SimulationRun run = simulate(cs.sys, cs.op, 20.0, 0.01);
        REQUIRE(!run.diverged);
        CHECK(run.events.empty());
        for (size_t c = 0; c < run.channels.size(); ++c) {
            double dev = 0;
            for (double v : run.channels[c]) dev = std::max(dev, std::abs(v - run.channels[c][0]));
            CAPTURE(run.channel_names[c]);
            CHECK(dev < 1e-6);
        }
        CHECK((run.x_final - cs.op.x0).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("fault window lands exactly on integration steps") {
    CaseSystem cs = oracles::build(1, 0.0, true);
    SimulationRun run = simulate(cs.sys, cs.op, 3.0, 0.005);
    REQUIRE(!run.diverged);

    REQUIRE(run.events.size() == 2);
    CHECK(run.events[0].t == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(run.events[0].what.find("fault applied") != std::string::npos);
    CHECK(run.events[1].t == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(run.events[1].what == "fault cleared");

    const int i_on = index_of_time(run, 1.0);
    const int i_off = index_of_time(run, 1.2);
    REQUIRE(i_on > 0);
    REQUIRE(i_off > i_on);

    const auto& tie = run.channel("tie.p");
    // flat until the fault hits
    for (int i = 0; i < i_on; ++i) CHECK(std::abs(tie[i] - tie[0]) < 1e-6);
    // the short at the tie bus collapses the transfer during the window
    double max_dev = 0;
    for (int i = i_on + 1; i < i_off; ++i)
        max_dev = std::max(max_dev, std::abs(tie[i] - tie[0]));
    CHECK(max_dev > 1.0);
    // and the flow recovers toward the pre-fault level once cleared
    CHECK(std::abs(tie[i_off + 40] - tie[0]) < 0.5 * max_dev);
}

TEST_CASE("without stabilizers the post-fault swing grows") {
    CaseSystem cs = oracles::build(1, 0.0, false);
    SimulationRun run = simulate(cs.sys, cs.op, 20.0, 0.01);
    REQUIRE(!run.diverged);
    const auto& tie = run.channel("tie.p");
    const double early = peak_to_peak(tie, run.t, 5.0, 10.0);
    const double late = peak_to_peak(tie, run.t, 14.0, 19.0);
    CHECK(late > 1.02 * early);

    RingdownFit fit = identify_ringdown_modes(window(run, "tie.p", 5.0), 0.01);
    const auto& ref = refmodes::pinned_scenarios()[0].modes[0];   // unstable swing
    const RingdownMode& m = nearest(fit, ref.omega);
    CHECK(m.lambda.real() > 0.0);
    CHECK(std::abs(m.lambda.imag() - ref.omega) / ref.omega < 0.05);
}

TEST_CASE("with stabilizers the post-fault swing decays at the predicted rate") {
    CaseSystem cs = oracles::build(1, 0.0, true);
    SimulationRun run = simulate(cs.sys, cs.op, 20.0, 0.01);
    REQUIRE(!run.diverged);
    const auto& tie = run.channel("tie.p");
    const double early = peak_to_peak(tie, run.t, 3.0, 8.0);
    const double late = peak_to_peak(tie, run.t, 12.0, 17.0);
    CHECK(late < 0.25 * early);

    // nonlinear ringdown against the linear prediction
    RingdownFit fit = identify_ringdown_modes(window(run, "tie.p", 2.0), 0.01);
    const auto& ref = refmodes::pinned_scenarios()[1].modes[0];
    const RingdownMode& m = nearest(fit, ref.omega);
    CHECK(std::abs(m.lambda.real() - ref.sigma) / std::abs(ref.sigma) < 0.10);
    CHECK(std::abs(m.lambda.imag() - ref.omega) / ref.omega < 0.02);
}

TEST_CASE("ringdown identification on synthetic signals") {
    SUBCASE("single damped cosine") {
        std::vector<double> y;
        for (int i = 0; i <= 2000; ++i) {
            const double t = 0.01 * i;
            y.push_back(std::exp(-0.5 * t) * std::cos(4.0 * t));
        }
        RingdownFit fit = identify_ringdown_modes(y, 0.01);
        CHECK(!fit.low_confidence);
        CHECK(fit.residual_ratio < 1e-6);
        const RingdownMode& m = dominant(fit);
        CHECK(std::abs(m.lambda - cplx(-0.5, 4.0)) < 1e-3);
    }
    SUBCASE("two tones are separated") {
        std::vector<double> y;
        for (int i = 0; i <= 3000; ++i) {
            const double t = 0.01 * i;
            y.push_back(std::exp(-0.5 * t) * std::cos(4.0 * t) +
                        0.4 * std::exp(-0.1 * t) * std::cos(1.5 * t + 1.0));
        }
        RingdownFit fit = identify_ringdown_modes(y, 0.01);
        CHECK(!fit.low_confidence);
        CHECK(std::abs(nearest(fit, 4.0).lambda - cplx(-0.5, 4.0)) < 1e-3);
        CHECK(std::abs(nearest(fit, 1.5).lambda - cplx(-0.1, 1.5)) < 1e-3);
    }
    SUBCASE("a constant carries no oscillatory mode") {
        std::vector<double> y(2000, 1.0);
        RingdownFit fit = identify_ringdown_modes(y, 0.01);
        for (const auto& m : fit.modes)
            if (m.lambda.imag() > 1e-3) CHECK(m.amplitude < 1e-9);
    }
    SUBCASE("white noise is flagged low-confidence") {
        std::vector<double> y;
        std::uint64_t s = 0x243f6a8885a308d3ull;   // deterministic LCG
        for (int i = 0; i < 2000; ++i) {
            s = s * 6364136223846793005ull + 1442695040888963407ull;
            y.push_back(static_cast<double>(s >> 11) / 9007199254740992.0 - 0.5);
        }
        RingdownFit fit = identify_ringdown_modes(y, 0.01);
        CHECK(fit.low_confidence);
        CHECK(fit.residual_ratio > 0.05);
    }
    SUBCASE("window shorter than the slowest resolvable cycle count throws") {
        std::vector<double> y(200, 0.0);
        for (int i = 0; i < 200; ++i) y[i] = std::sin(0.04 * i);
        CHECK_THROWS_AS(identify_ringdown_modes(y, 0.01), std::invalid_argument);
    }
    SUBCASE("identically zero window throws") {
        std::vector<double> y(2000, 0.0);
        CHECK_THROWS_AS(identify_ringdown_modes(y, 0.01), std::invalid_argument);
    }
}

TEST_CASE("integrator converges at second order in the step size") {
    CaseSystem cs = oracles::build(1, 0.0, true);
    const Eigen::VectorXd xa = simulate(cs.sys, cs.op, 5.0, 0.01).x_final;
    const Eigen::VectorXd xb = simulate(cs.sys, cs.op, 5.0, 0.005).x_final;
    const Eigen::VectorXd xr = simulate(cs.sys, cs.op, 5.0, 0.0025).x_final;
    const double e1 = (xa - xr).norm();
    const double e2 = (xb - xr).norm();
    // O(dt^2): error against the dt/4 reference shrinks by (4h^2-r^2)/(h^2-r^2)=5
    CHECK(e1 / e2 > 2.5);
    CHECK(e1 / e2 < 6.0);
}

TEST_CASE("simulation is deterministic") {
    CaseSystem cs = oracles::build(4, 0.25, true);
    SimulationRun a = simulate(cs.sys, cs.op, 5.0, 0.005);
    SimulationRun b = simulate(cs.sys, cs.op, 5.0, 0.005);
    REQUIRE(a.t.size() == b.t.size());
    CHECK(a.t == b.t);
    CHECK(a.channels == b.channels);
    CHECK((a.x_final - b.x_final).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("simulation input validation") {
    CaseSystem cs = oracles::build(1, 0.0, true);
    CHECK_THROWS_AS(simulate(cs.sys, cs.op, 5.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(simulate(cs.sys, cs.op, -1.0, 0.01), std::invalid_argument);
    SimulationRun run = simulate(cs.sys, cs.op, 0.5, 0.01);
    CHECK_THROWS_AS(run.channel("no.such.channel"), std::out_of_range);
}
