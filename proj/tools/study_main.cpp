#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swing/scenarios.hpp"

namespace fs = std::filesystem;
using namespace swing;

namespace {

bool parse_switch(const std::string& s) {
    if (s == "on") return true;
    if (s == "off") return false;
    throw CLI::ValidationError("expected on|off, got '" + s + "'");
}

void print_summary(const StudyReport& rep) {
    for (const auto& r : rep.results) {
        if (!r.ok) {
            std::printf("%-22s ERROR  %s\n", r.sc.tag().c_str(), r.error.c_str());
            continue;
        }
        if (r.inter_index >= 0) {
            const auto& m = r.em_modes[r.inter_index];
            std::printf("%-22s inter-area %+0.4f +/- %0.4fi  zeta=%+0.4f  f=%0.4f Hz  %s\n",
                        r.sc.tag().c_str(), m.sigma, m.omega, m.zeta, m.freq_hz,
                        r.stable ? "stable" : "UNSTABLE");
        } else {
            std::printf("%-22s no inter-area mode   %s\n", r.sc.tag().c_str(),
                        r.stable ? "stable" : "UNSTABLE");
        }
    }
    for (const auto& im : rep.improvements)
        std::printf("improvement %-34s %+0.1f%%  (%.4f -> %.4f)\n", im.label.c_str(),
                    im.percent, im.zeta_before, im.zeta_after);
}

int emit(const Config& cfg, const std::vector<ScenarioConfig>& scs,
         const std::string& out_dir, bool single) {
    const StudyReport rep = run_study(cfg, scs);
    fs::create_directories(out_dir);
    write_modes_csv(out_dir + "/modes.csv", rep);
    write_report_json(out_dir + "/report.json", rep);
    for (const auto& r : rep.results) {
        if (!r.ok || !r.run) continue;
        const std::string stem = single ? "series" : "series_" + r.sc.tag();
        write_series_csv(out_dir + "/" + stem + ".csv", *r.run, rep.config_hash);
        write_events_log(out_dir + "/" + (single ? "events.log" : "events_" + r.sc.tag() + ".log"),
                         *r.run);
    }
    if (single && !rep.results.empty() && rep.results[0].ok)
        write_op_audit(out_dir + "/op_audit.txt", rep.results[0]);
    print_summary(rep);
    std::printf("config %s   outputs in %s\n", rep.config_hash.c_str(), out_dir.c_str());
    return rep.errors > 0 ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"small-signal stability study: two-area network with optional wind farm"};
    app.require_subcommand(1);

    std::string config_path = "config/default.json";
    std::string out_dir = "out";

    auto* run = app.add_subcommand("run", "run one scenario");
    int case_id = 1;
    double penetration = 0.0;
    std::string siting = "auto", pss = "on", vctrl = "auto", sdc = "auto",
                timedomain = "off";
    run->add_option("--case", case_id, "study case 1..4")->required();
    run->add_option("--penetration", penetration, "wind fraction of the displaced machine");
    run->add_option("--siting", siting, "wind tie-in")->check(CLI::IsMember({"g4", "l1", "none", "auto"}));
    run->add_option("--pss", pss, "stabilizers on the machines")->check(CLI::IsMember({"on", "off"}));
    run->add_option("--vctrl", vctrl, "PCC voltage controller")->check(CLI::IsMember({"on", "off", "auto"}));
    run->add_option("--sdc", sdc, "supplementary damping controller")->check(CLI::IsMember({"on", "off", "auto"}));
    run->add_option("--timedomain", timedomain, "fault simulation")->check(CLI::IsMember({"on", "off"}));
    run->add_option("--config", config_path, "configuration file");
    run->add_option("--out", out_dir, "output directory");

    auto* matrix = app.add_subcommand("matrix", "run the study matrix");
    bool paper_matrix = false;
    std::string mx_timedomain = "off";
    matrix->add_flag("--paper", paper_matrix, "the full 16-scenario matrix");
    matrix->add_option("--timedomain", mx_timedomain, "fault simulation per scenario")
        ->check(CLI::IsMember({"on", "off"}));
    matrix->add_option("--config", config_path, "configuration file");
    matrix->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        const Config cfg = Config::load(config_path);
        if (run->parsed()) {
            ScenarioConfig sc;
            sc.case_id = case_id;
            sc.penetration = penetration;
            if (siting == "g4") sc.siting = Siting::at_g4;
            else if (siting == "l1") sc.siting = Siting::at_l1;
            else sc.siting = Siting::none;
            sc.pss = parse_switch(pss);
            if (vctrl != "auto") sc.vctrl = parse_switch(vctrl);
            if (sdc != "auto") sc.sdc = parse_switch(sdc);
            sc.timedomain = parse_switch(timedomain);
            validate_scenario(sc, siting != "auto", vctrl != "auto", sdc != "auto");
            return emit(cfg, {sc}, out_dir, true);
        }
        return emit(cfg, full_matrix(parse_switch(mx_timedomain)), out_dir, false);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
