#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctxkm/context_learning.hpp"
#include "ctxkm/featio.hpp"
#include "ctxkm/kernel_maps.hpp"
#include "ctxkm/svm.hpp"

namespace ctxkm {

// Everything needed to resume training or run prediction: grid and map
// settings, the (possibly learned) context, the SVM model and the objective
// trace.
struct Checkpoint {
  GridSpec grid;
  Phi0Mode mode = Phi0Mode::linear;
  int hi_levels = 0;
  int raw_dim = 0;
  ContextStack ctx;
  SvmModel model;
  std::vector<double> objective_history;
  int outer_iter = 0;
  bool converged = false;
};

void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);

// Fig-style context export: per layer and sector, every supported edge with
// its weight, plus the grid geometry needed to render overlays.
nlohmann::json context_to_json(const ContextStack& ctx);
ContextStack context_from_json(const nlohmann::json& j);

}  // namespace ctxkm
