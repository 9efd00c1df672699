#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ctxkm/featio.hpp"

namespace ctxkm {

// One-vs-rest linear SVMs over pooled kernel maps: f_k(I) = w_k' phi_K(S_I).
// No bias term unless the maps were trained with an augmented constant
// feature (augmented == true, last weight coordinate).
struct SvmModel {
  std::vector<std::string> concepts;
  Eigen::MatrixXd weights;  // K x D, one row per concept
  Eigen::VectorXd costs;    // C_k
  bool augmented = false;
  std::uint64_t ctx_hash = 0;

  int concept_count() const noexcept { return static_cast<int>(weights.rows()); }
  Eigen::Index dim() const noexcept { return weights.cols(); }
  void validate() const;
};

struct SvmOptions {
  double rel_gap_tol = 1e-6;  // stop when duality gap <= tol * primal
  int max_epochs = 1000;
};

// Appends a constant-1 row (the optional bias feature).
Eigen::MatrixXd augment_pooled(const Eigen::MatrixXd& pooled);

// Trains the K independent hinge-loss problems
//   min_w 0.5 ||w||^2 + C_k * sum_p max(0, 1 - Y_k^p w' x_p)
// by dual coordinate descent with a fixed cyclic visit order, so results are
// deterministic. pooled is D x N, one column per image.
SvmModel train_svm(const Eigen::MatrixXd& pooled, const LabelMatrix& labels,
                   const Eigen::VectorXd& costs, bool augmented = false,
                   const SvmOptions& opt = {});

// w_k' pooled for every concept.
Eigen::VectorXd score_one(const SvmModel& model, const Eigen::VectorXd& pooled);

// N x K score matrix for pooled columns.
Eigen::MatrixXd score_all(const SvmModel& model, const Eigen::MatrixXd& pooled);

// Concepts with strictly positive score; exact zeros are absent.
std::vector<std::string> annotate(const SvmModel& model, const Eigen::VectorXd& pooled);

// Full objective sum_k (0.5 ||w_k||^2 + C_k sum_p hinge).
double svm_objective(const SvmModel& model, const Eigen::MatrixXd& pooled,
                     const LabelMatrix& labels);

void save_model(std::ostream& os, const SvmModel& model);
SvmModel load_model(std::istream& is);

}  // namespace ctxkm
