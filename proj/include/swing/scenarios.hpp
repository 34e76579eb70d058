#pragma once
#include <optional>
#include <string>
#include <vector>

#include "swing/config.hpp"
#include "swing/smallsignal.hpp"
#include "swing/timedomain.hpp"

namespace swing {

enum class Siting { none, at_g4, at_l1 };

std::string to_string(Siting s);

struct ScenarioConfig {
    int case_id = 1;
    double penetration = 0;
    Siting siting = Siting::none;
    bool pss = true;
    bool vctrl = false;
    bool sdc = false;
    bool timedomain = false;

    std::string controllers_label() const;   // none | vctrl | sdc | vctrl+sdc
    std::string tag() const;                 // caseN_penXX_pss{on,off}
};

// Enforces the case coupling rules: case 1 has no wind; cases 2 and 3 run the
// wind farm uncontrolled; case 4 sites at L1 with both controllers on.
// Inconsistent explicit settings throw.
void validate_scenario(ScenarioConfig& sc, bool explicit_siting, bool explicit_vctrl,
                       bool explicit_sdc);

struct CaseSystem {
    PowerSystem sys;
    OperatingPoint op;
};

// Assembles topology, dispatch, devices, and controller switches for one
// scenario and initializes it at equilibrium.
CaseSystem build_case(const Config& cfg, const ScenarioConfig& sc);

struct ScenarioResult {
    ScenarioConfig sc;
    bool ok = false;
    std::string error;
    std::vector<Mode> em_modes;
    int inter_index = -1;              // index into em_modes, -1 if absent
    bool stable = false;               // every eigenvalue real part < 0
    double max_real = 0;               // spectral abscissa excluding the angle-reference zero
    std::optional<SimulationRun> run;
    std::string op_audit;
};

struct Improvement {
    std::string label;
    std::string baseline_tag, comparison_tag;
    double zeta_before = 0, zeta_after = 0, percent = 0;
};

struct StudyReport {
    std::vector<ScenarioResult> results;
    std::vector<Improvement> improvements;
    std::string config_hash;
    int errors = 0;
};

// Runs each scenario, continuing past individual failures; computes damping
// improvements against the case-1 baseline with matching PSS flag when that
// baseline is part of the study.
StudyReport run_study(const Config& cfg, const std::vector<ScenarioConfig>& scs);

// The full 16-scenario study matrix: case 1 x {pss off,on}; cases 2 and 3 x
// {10,25,35%} x {pss off,on}; case 4 at 25% x {pss off,on}.
std::vector<ScenarioConfig> full_matrix(bool timedomain = false);

// Emitters. Fixed ordering and %.6f formatting keep outputs byte-stable.
void write_modes_csv(const std::string& path, const StudyReport& report);
void write_series_csv(const std::string& path, const SimulationRun& run,
                      const std::string& config_hash);
void write_events_log(const std::string& path, const SimulationRun& run);
void write_report_json(const std::string& path, const StudyReport& report);
void write_op_audit(const std::string& path, const ScenarioResult& r);

} // namespace swing
