#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "ctxkm/kernel_maps.hpp"
#include "ctxkm/svm.hpp"

namespace ctxkm {

// Gradient of the objective w.r.t. the per-layer adjacency matrices; entries
// outside the support mask are exactly zero.
struct ContextGradient {
  std::vector<std::vector<Eigen::MatrixXd>> layers;  // [t][c], n x n

  double squared_norm() const;
};

struct LossGrad {
  double objective = 0.0;  // E: regularizer + weighted hinge
  double hinge_sum = 0.0;  // unweighted sum of hinge terms
  Eigen::MatrixXd pooled_grad;  // dE/dphi_K, one column per image
};

// Objective value and per-image gradient w.r.t. the pooled maps with the SVM
// weights held fixed:
//   G_p = -sum_k C_k Y_k^p w_k [1 - Y_k^p w_k' phi_K > 0].
// pooled must match the model dimension (already augmented if the model is).
LossGrad loss_and_grad_pooled(const SvmModel& model, const Eigen::MatrixXd& pooled,
                              const LabelMatrix& labels);

// Chain rule from the pooled-map gradients down to every layer's adjacency
// matrices. Stacks must come from forward_map under this exact context with
// all layers kept; images are accumulated in index order.
ContextGradient backward_context(const std::vector<MapStack>& stacks, const ContextStack& ctx,
                                 const Eigen::MatrixXd& pooled_grad);

struct LearnOptions {
  double eta = 1e-3;   // P-step learning rate (before backtracking)
  int inner_steps = 10;
  int max_outer = 100;
  double tol = 1e-4;   // relative objective change across outer iterations
  bool augment_bias = false;
  SvmOptions svm;
};

struct OuterLogRow {
  int outer_iter = 0;
  double objective = 0.0;      // E at the end of the iteration
  double svm_objective = 0.0;  // E right after the w-phase
  double hinge_sum = 0.0;
  int backtrack_halvings = 0;
};

struct TrainState {
  ContextStack ctx;
  SvmModel model;  // consistent with ctx (refit after the last P-step)
  std::vector<double> objective_history;  // E after every outer iteration
  std::vector<OuterLogRow> log;
  int outer_iter = 0;
  bool converged = false;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& msg, TrainState last)
      : Error(errc::divergence, msg),
        last_finite(std::make_shared<TrainState>(std::move(last))) {}

  std::shared_ptr<TrainState> last_finite;
};

// Alternating optimization: fit SVM weights on the current maps, then run
// inner_steps gradient steps on the masked adjacency entries with a
// backtracking line search, until the objective stalls or max_outer is hit.
// inner_steps == 0 reproduces the fixed-context pipeline exactly.
TrainState alternate_optimize(const std::vector<ImageFeatures>& images,
                              const LabelMatrix& labels, const ContextStack& init,
                              const Eigen::VectorXd& costs, const LearnOptions& opt);

}  // namespace ctxkm
