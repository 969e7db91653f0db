#pragma once

#include <string>

#include "cpesim/state.hpp"

namespace cpesim {

/// Parsed run configuration: physical and numerical parameters plus the
/// operational settings of one experiment.
struct RunConfig {
  SimParams params;
  int nx = 32, ny = 32, nz = 9;
  std::string init = "rest";  // preset name or "file:<snapshot path>"
  double amplitude = 0.1;     // perturbation amplitude used by the presets
  double stability_scale = 1e-2;
  std::string out_dir = ".";
  int snapshot_every = 0;  // 0 disables periodic snapshots
  int steps = 100;
  std::string mode = "run";  // {run|mms|stability|fb|check}
};

/// Parses "key = value" lines with '#' comments. Unknown keys, type errors
/// and constraint violations are reported with their line number; the regime
/// key is mandatory.
RunConfig parse_config(const std::string& text);

/// Emits a config file that parses back to the same configuration.
std::string emit_config(const RunConfig& config);

/// Builds the initial state from the configured preset or snapshot file.
PrimState make_initial_state(const Grid& grid, const RunConfig& config);
FbState make_initial_fb_state(const Grid& grid, const RunConfig& config);

/// Perturbation field pair used by the stability experiment presets.
PrimState perturbed_state(const Grid& grid, const RunConfig& config, double scale);

}  // namespace cpesim
