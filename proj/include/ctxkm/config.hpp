#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ctxkm/featio.hpp"
#include "ctxkm/grid.hpp"

namespace ctxkm {

// Every experiment knob, read from a flat dotted-key config file and
// overridable by command-line flags of the same names. Unknown keys are
// rejected.
struct RunConfig {
  GridSpec grid;
  Phi0Mode map_mode = Phi0Mode::linear;
  int hi_levels = 16;
  double gamma = 1.0;
  int depth = 3;
  double svm_cost = 1.0;
  std::map<std::string, double> svm_cost_per_concept;
  double eta = 1e-3;
  int inner_steps = 10;
  int max_outer = 100;
  double tol = 1e-4;
  bool augment_bias = false;
  std::string features_path;
  std::string labels_path;
  std::string output_dir;
  std::uint64_t seed = 42;
  int synth_images = 40;
  int synth_dim = 8;
  double synth_noise = 0.02;

  void validate() const;
};

// Parses `key = value` lines; '#' lines are comments; unknown keys are a
// config error.
RunConfig parse_config_file(const std::string& path);

// Applies one `key`/`value` pair (used for CLI overrides).
void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

// All recognized scalar keys, in echo order.
const std::vector<std::string>& config_keys();

// Echoes the effective configuration as a reparseable config file.
void write_effective_config(std::ostream& os, const RunConfig& cfg);

}  // namespace ctxkm
