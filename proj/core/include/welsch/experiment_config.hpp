#pragma once

#include <optional>
#include <string>
#include <vector>

#include "welsch/simulation.hpp"

namespace welsch {

/// JSON text <-> ExperimentSpec. Parse errors raise ConfigError naming the
/// offending key. The schema is documented in the README.
ExperimentSpec experiment_from_json_text(const std::string& text);
std::string experiment_to_json_text(const ExperimentSpec& spec, int indent = 2);

/// Built-in desk-scale presets behind the named CLI subcommands.
ExperimentSpec preset_experiment(const std::string& name);
std::vector<std::string> preset_names();

/// Loads a spec starting from a preset, with per-key overrides from an
/// optional JSON config file (file values win over the preset).
ExperimentSpec load_experiment_spec(const std::string& preset,
                                    const std::optional<std::string>& config_path);

/// Writes `<data_path>.provenance.json` with the tool version and the full
/// resolved configuration (seed included). Contents carry no timestamps so
/// reruns are byte-identical.
void write_provenance(const std::string& data_path, const std::string& resolved_config_json);

}  // namespace welsch
