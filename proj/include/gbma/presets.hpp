#pragma once

// Canned scenario families at desk scale.  Each preset is a named list of
// fully resolved configs run back to back; some also emit an energy-to-
// target summary across the family.

#include <string>
#include <vector>

#include "gbma/scenario.hpp"

namespace gbma {

struct PresetScenario {
    std::string name;  // becomes output.name
    ScenarioConfig cfg;
};

struct Preset {
    std::string name;
    std::string summary;
    std::vector<PresetScenario> scenarios;
    bool energy_summary = false;  // also write <name>_energy.csv
    double energy_target = 0.0;
};

const std::vector<Preset>& all_presets();

// nullptr when no preset has that name.
const Preset* find_preset(const std::string& name);

struct PresetOutputs {
    std::vector<ScenarioOutputs> runs;
    std::string energy_csv_path;  // empty unless the preset emits one
    int exit_code = 0;            // max over the scenario exit codes
};

// Runs every scenario of the preset.  `output_dir` overrides each
// scenario's output.dir when non-empty.
PresetOutputs run_preset(const Preset& preset, const std::string& output_dir);

}  // namespace gbma
