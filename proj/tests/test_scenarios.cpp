#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "reference_modes.hpp"
#include "swing/scenarios.hpp"

using namespace swing;

namespace {

ScenarioConfig raw(int case_id, double pen, bool pss) {
    ScenarioConfig sc;
    sc.case_id = case_id;
    sc.penetration = pen;
    sc.pss = pss;
    return sc;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

const ScenarioResult& find_result(const StudyReport& rep, int case_id, double pen,
                                  bool pss) {
    for (const auto& r : rep.results)
        if (r.sc.case_id == case_id && r.sc.pss == pss &&
            std::abs(r.sc.penetration - pen) < 1e-9)
            return r;
    REQUIRE(false);
    static ScenarioResult dummy;
    return dummy;
}

double inter_zeta(const ScenarioResult& r) {
    REQUIRE(r.inter_index >= 0);
    return r.em_modes[r.inter_index].zeta;
}

const std::filesystem::path kTmp = [] {
    auto p = std::filesystem::temp_directory_path() / "swing_emitter_tests";
    std::filesystem::create_directories(p);
    return p;
}();

} // namespace

TEST_CASE("scenario validation rules") {
    SUBCASE("case id bounds") {
        ScenarioConfig sc = raw(0, 0.0, true);
        CHECK_THROWS_AS(validate_scenario(sc, false, false, false), std::invalid_argument);
        sc = raw(5, 0.0, true);
        CHECK_THROWS_AS(validate_scenario(sc, false, false, false), std::invalid_argument);
    }
    SUBCASE("the all-synchronous case admits no wind settings") {
        ScenarioConfig sc = raw(1, 0.25, true);
        CHECK_THROWS_AS(validate_scenario(sc, false, false, false), std::invalid_argument);
        sc = raw(1, 0.0, true);
        sc.vctrl = true;
        CHECK_THROWS_AS(validate_scenario(sc, false, true, false), std::invalid_argument);
        sc = raw(1, 0.0, true);
        sc.sdc = true;
        CHECK_THROWS_AS(validate_scenario(sc, false, false, true), std::invalid_argument);
    }
    SUBCASE("sitings are fixed per case") {
        ScenarioConfig sc = raw(2, 0.25, true);
        validate_scenario(sc, false, false, false);
        CHECK(sc.siting == Siting::at_g4);
        sc = raw(3, 0.25, true);
        validate_scenario(sc, false, false, false);
        CHECK(sc.siting == Siting::at_l1);
        sc = raw(4, 0.25, true);
        validate_scenario(sc, false, false, false);
        CHECK(sc.siting == Siting::at_l1);

        sc = raw(2, 0.25, true);
        sc.siting = Siting::at_l1;
        CHECK_THROWS_AS(validate_scenario(sc, true, false, false), std::invalid_argument);
    }
    SUBCASE("penetration bounds when wind is present") {
        ScenarioConfig sc = raw(2, 0.0, true);
        CHECK_THROWS_AS(validate_scenario(sc, false, false, false), std::invalid_argument);
        sc = raw(2, 0.95, true);
        CHECK_THROWS_AS(validate_scenario(sc, false, false, false), std::invalid_argument);
    }
    SUBCASE("the controller pair belongs to the last case only") {
        for (int c : {2, 3}) {
            ScenarioConfig sc = raw(c, 0.25, true);
            sc.vctrl = true;
            CHECK_THROWS_AS(validate_scenario(sc, false, true, false), std::invalid_argument);
            sc = raw(c, 0.25, true);
            sc.sdc = true;
            CHECK_THROWS_AS(validate_scenario(sc, false, false, true), std::invalid_argument);
            sc = raw(c, 0.25, true);
            validate_scenario(sc, false, false, false);
            CHECK(!sc.vctrl);
            CHECK(!sc.sdc);
        }
        ScenarioConfig sc = raw(4, 0.25, true);
        sc.vctrl = false;
        CHECK_THROWS_AS(validate_scenario(sc, false, true, false), std::invalid_argument);
        sc = raw(4, 0.25, true);
        sc.sdc = false;
        CHECK_THROWS_AS(validate_scenario(sc, false, false, true), std::invalid_argument);
        sc = raw(4, 0.25, true);
        validate_scenario(sc, false, false, false);
        CHECK(sc.vctrl);
        CHECK(sc.sdc);
    }
    SUBCASE("tags and controller labels") {
        CHECK(oracles::scenario(2, 0.25, true).tag() == "case2_pen25_psson");
        CHECK(oracles::scenario(1, 0.0, false).tag() == "case1_pen00_pssoff");
        CHECK(oracles::scenario(4, 0.25, true).controllers_label() == "vctrl+sdc");
        CHECK(oracles::scenario(3, 0.10, true).controllers_label() == "none");
    }
}

TEST_CASE("case assembly wiring") {
    const Config& cfg = oracles::default_config();
    SUBCASE("all-synchronous benchmark") {
        CaseSystem cs = oracles::build(1, 0.0, true);
        CHECK(cs.sys.nbus() == 11);
        CHECK(cs.sys.machines.size() == 4);
        CHECK(!cs.sys.wind.has_value());
        CHECK(cs.sys.tie_branch_idx.size() == 2);
        for (const auto& m : cs.sys.machines) CHECK(m.mva == 900.0);
        CHECK(cs.sys.ybus.overlays().size() == 1);
    }
    SUBCASE("wind by the machine takes the adjacent unit's rating") {
        for (double pen : {0.10, 0.25, 0.35}) {
            CAPTURE(pen);
            CaseSystem cs = oracles::build(2, pen, true);
            CHECK(cs.sys.nbus() == 12);
            REQUIRE(cs.sys.wind.has_value());
            CHECK(cs.sys.wind->s_mva == doctest::Approx(900.0 * pen).epsilon(1e-12));
            CHECK(cs.sys.wind->bus == 11);
            const int pcc = cs.sys.wind->pcc_bus;
            const int want_id = cfg.root["dispatch"]["wf_tie_in"]["at_g4"].get<int>();
            CHECK(cs.sys.buses[pcc].id == want_id);
            for (const auto& m : cs.sys.machines)
                CHECK(m.mva == doctest::Approx(m.name == "G4" ? 900.0 * (1.0 - pen) : 900.0));
            CHECK(!cs.sys.wind->vctrl_on);
            CHECK(!cs.sys.wind->sdc_on);
        }
    }
    SUBCASE("wind by the load displaces the sending-area unit") {
        CaseSystem cs = oracles::build(3, 0.25, true);
        const int pcc = cs.sys.wind->pcc_bus;
        const int want_id = cfg.root["dispatch"]["wf_tie_in"]["at_l1"].get<int>();
        CHECK(cs.sys.buses[pcc].id == want_id);
        for (const auto& m : cs.sys.machines)
            CHECK(m.mva == doctest::Approx(m.name == "G2" ? 675.0 : 900.0));
    }
    SUBCASE("controller case arms both wind-side controllers") {
        CaseSystem cs = oracles::build(4, 0.25, true);
        REQUIRE(cs.sys.wind.has_value());
        CHECK(cs.sys.wind->vctrl_on);
        CHECK(cs.sys.wind->sdc_on);
        CHECK(cs.sys.wind->sdc.k > 0.0);
        const int want_id = cfg.root["dispatch"]["wf_tie_in"]["at_l1"].get<int>();
        CHECK(cs.sys.buses[cs.sys.wind->pcc_bus].id == want_id);
    }
}

TEST_CASE("an empty study") {
    StudyReport rep = run_study(oracles::default_config(), {});
    CHECK(rep.results.empty());
    CHECK(rep.improvements.empty());
    CHECK(rep.errors == 0);
    CHECK(rep.config_hash == oracles::default_config().hash());
}

TEST_CASE("full study matrix layout") {
    const std::vector<ScenarioConfig> scs = full_matrix(false);
    REQUIRE(scs.size() == 16);
    int per_case[5] = {0, 0, 0, 0, 0};
    for (const auto& sc : scs) {
        per_case[sc.case_id]++;
        CHECK(!sc.timedomain);
        if (sc.case_id == 4) {
            CHECK(sc.vctrl);
            CHECK(sc.sdc);
        } else {
            CHECK(!sc.vctrl);
            CHECK(!sc.sdc);
        }
    }
    CHECK(per_case[1] == 2);
    CHECK(per_case[2] == 6);
    CHECK(per_case[3] == 6);
    CHECK(per_case[4] == 2);
    for (const auto& sc : full_matrix(true)) CHECK(sc.timedomain);
}

TEST_CASE("study matrix trends and pinned spectra") {
    const StudyReport rep = run_study(oracles::default_config(), full_matrix(false));
    REQUIRE(rep.errors == 0);
    for (const auto& r : rep.results) {
        CAPTURE(r.sc.tag());
        CHECK(r.ok);
        REQUIRE(r.inter_index >= 0);
        CHECK(r.em_modes[r.inter_index].classification == "inter-area");
    }

    SUBCASE("regression against the pinned spectra") {
        for (const auto& pin : refmodes::pinned_scenarios()) {
            const ScenarioResult& r =
                find_result(rep, pin.case_id, pin.penetration, pin.pss);
            CAPTURE(r.sc.tag());
            REQUIRE(r.em_modes.size() == pin.modes.size());
            for (size_t i = 0; i < pin.modes.size(); ++i) {
                CHECK(std::abs(r.em_modes[i].sigma - pin.modes[i].sigma) < 2e-3);
                CHECK(std::abs(r.em_modes[i].omega - pin.modes[i].omega) < 2e-3);
                CHECK(r.em_modes[i].classification == pin.modes[i].classification);
            }
        }
    }

    SUBCASE("wind by the machine strengthens stabilized inter-area damping") {
        const double z10 = inter_zeta(find_result(rep, 2, 0.10, true));
        const double z25 = inter_zeta(find_result(rep, 2, 0.25, true));
        const double z35 = inter_zeta(find_result(rep, 2, 0.35, true));
        CHECK(z10 < z25);
        CHECK(z25 < z35);
        const double base = inter_zeta(find_result(rep, 1, 0.0, true));
        CHECK(base < z10);
    }
    SUBCASE("wind by the load erodes unstabilized inter-area damping") {
        const double z10 = inter_zeta(find_result(rep, 3, 0.10, false));
        const double z25 = inter_zeta(find_result(rep, 3, 0.25, false));
        const double z35 = inter_zeta(find_result(rep, 3, 0.35, false));
        CHECK(z10 > z25);
        CHECK(z25 > z35);
        const double base = inter_zeta(find_result(rep, 1, 0.0, false));
        CHECK(base > z10);
    }
    SUBCASE("the controller pair out-damps both baselines") {
        const double c4 = inter_zeta(find_result(rep, 4, 0.25, true));
        const double c3 = inter_zeta(find_result(rep, 3, 0.25, true));
        const double c1 = inter_zeta(find_result(rep, 1, 0.0, true));
        CHECK(c4 > c3);
        CHECK(c3 > c1);
    }
    SUBCASE("wind by the machine raises the swing frequency") {
        const auto f = [&](double pen) {
            const ScenarioResult& r = find_result(rep, 2, pen, false);
            return r.em_modes[r.inter_index].freq_hz;
        };
        CHECK(f(0.10) < f(0.25));
        CHECK(f(0.25) < f(0.35));
    }
    SUBCASE("only the damping controller flips the unstabilized sign") {
        for (const auto& r : rep.results) {
            if (r.sc.pss) continue;
            CAPTURE(r.sc.tag());
            const double sigma = r.em_modes[r.inter_index].sigma;
            if (r.sc.case_id == 4) {
                CHECK(sigma < 0.0);
                CHECK(r.stable);
            } else {
                CHECK(sigma > 0.0);
                CHECK(!r.stable);
            }
        }
        for (const auto& r : rep.results)
            if (r.sc.pss) CHECK(r.stable);
    }
    SUBCASE("improvement entries are arithmetically consistent") {
        CHECK(rep.improvements.size() == 14);
        for (const auto& im : rep.improvements) {
            CAPTURE(im.label);
            CHECK(im.percent ==
                  doctest::Approx(damping_improvement(im.zeta_before, im.zeta_after))
                      .epsilon(1e-12));
            // the baseline is the matching-stabilizer benchmark scenario
            const bool pss = im.baseline_tag.find("psson") != std::string::npos;
            CHECK(im.zeta_before ==
                  doctest::Approx(inter_zeta(find_result(rep, 1, 0.0, pss))));
        }
    }
}

TEST_CASE("output emitters") {
    std::vector<ScenarioConfig> scs;
    scs.push_back(oracles::scenario(1, 0.0, true));
    scs.push_back(oracles::scenario(4, 0.25, true));
    scs.back().timedomain = true;
    const StudyReport rep = run_study(oracles::default_config(), scs);
    REQUIRE(rep.errors == 0);
    REQUIRE(rep.results.size() == 2);
    REQUIRE(rep.results[1].run.has_value());

    SUBCASE("modes table") {
        const auto path = kTmp / "modes.csv";
        write_modes_csv(path.string(), rep);
        std::istringstream in(slurp(path));
        std::string line;
        REQUIRE(std::getline(in, line));
        CHECK(line == "# config " + rep.config_hash);
        REQUIRE(std::getline(in, line));
        CHECK(line ==
              "case,pss,controllers,penetration,sigma,omega,damping,freq_hz,classification");
        int rows = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            ++rows;
            CHECK(std::count(line.begin(), line.end(), ',') == 8);
        }
        CHECK(rows == 3 + 4);
    }
    SUBCASE("report json round-trips") {
        const auto path = kTmp / "report.json";
        write_report_json(path.string(), rep);
        const json doc = json::parse(slurp(path));
        CHECK(doc.at("config_hash").get<std::string>() == rep.config_hash);
        CHECK(doc.at("errors").get<int>() == 0);
        REQUIRE(doc.at("scenarios").size() == 2);
        CHECK(doc["scenarios"][0]["tag"] == "case1_pen00_psson");
        CHECK(doc["scenarios"][0]["em_modes"].size() == 3);
        CHECK(doc["scenarios"][0]["stable"].get<bool>());
        CHECK(doc["scenarios"][1]["em_modes"].size() == 4);
        CHECK(doc["scenarios"][1]["timedomain"]["samples"].get<int>() > 1000);
        CHECK(!doc["scenarios"][1]["timedomain"]["diverged"].get<bool>());
        REQUIRE(doc.at("improvements").size() == 1);
        CHECK(doc["improvements"][0]["comparison"] == "case4_pen25_psson");
        CHECK(doc["improvements"][0]["baseline"] == "case1_pen00_psson");
    }
    SUBCASE("series table") {
        const auto path = kTmp / "series.csv";
        const SimulationRun& run = *rep.results[1].run;
        write_series_csv(path.string(), run, rep.config_hash);
        std::istringstream in(slurp(path));
        std::string line;
        REQUIRE(std::getline(in, line));
        CHECK(line == "# config " + rep.config_hash);
        REQUIRE(std::getline(in, line));
        std::string header = "t";
        for (const auto& n : run.channel_names) header += "," + n;
        CHECK(line == header);
        int rows = 0;
        while (std::getline(in, line))
            if (!line.empty()) ++rows;
        CHECK(rows == static_cast<int>(run.t.size()));
    }
    SUBCASE("event log") {
        const auto path = kTmp / "events.log";
        write_events_log(path.string(), *rep.results[1].run);
        const std::string text = slurp(path);
        CHECK(text.find("fault applied") != std::string::npos);
        CHECK(text.find("fault cleared") != std::string::npos);
        CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    }
    SUBCASE("emitters are byte-deterministic") {
        const auto pa = kTmp / "a.csv", pb = kTmp / "b.csv";
        write_modes_csv(pa.string(), rep);
        write_modes_csv(pb.string(), rep);
        CHECK(slurp(pa) == slurp(pb));
        write_series_csv(pa.string(), *rep.results[1].run, rep.config_hash);
        write_series_csv(pb.string(), *rep.results[1].run, rep.config_hash);
        CHECK(slurp(pa) == slurp(pb));
    }
    SUBCASE("unwritable output paths are reported") {
        CHECK_THROWS_AS(write_modes_csv("/nonexistent-dir/x.csv", rep),
                        std::runtime_error);
    }
}

TEST_CASE("a failing scenario is recorded, not fatal") {
    // a load far past network capability makes the operating point unsolvable
    Config cfg = oracles::default_config();
    cfg.root["network"]["loads"][0]["p"]["value"] = 96700.0;
    std::vector<ScenarioConfig> scs;
    scs.push_back(oracles::scenario(1, 0.0, true));
    const StudyReport rep = run_study(cfg, scs);
    REQUIRE(rep.results.size() == 1);
    CHECK(!rep.results[0].ok);
    CHECK(!rep.results[0].error.empty());
    CHECK(rep.errors == 1);
    CHECK(rep.improvements.empty());
    CHECK(rep.results[0].em_modes.empty());
}
