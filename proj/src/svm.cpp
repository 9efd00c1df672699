#include "ctxkm/svm.hpp"

#include <algorithm>
#include <cmath>

#include "binio.hpp"

namespace ctxkm {
namespace {

constexpr char kModelMagic[4] = {'C', 'T', 'X', 'M'};
constexpr std::uint32_t kModelVersion = 1;

// Dual coordinate descent for one concept (Hsieh et al. style, L1 loss).
// Cyclic visit order keeps the result deterministic.
Eigen::VectorXd solve_binary(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double cost,
                             const Eigen::VectorXd& sq_norms, const SvmOptions& opt) {
  const Eigen::Index n = x.cols();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(x.rows());
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);

  for (int epoch = 0; epoch < opt.max_epochs; ++epoch) {
    for (Eigen::Index p = 0; p < n; ++p) {
      const double grad = y[p] * w.dot(x.col(p)) - 1.0;
      double next;
      if (sq_norms[p] <= 0.0) {
        // Zero feature vector: the dual term is linear in alpha.
        next = grad < 0.0 ? cost : (grad > 0.0 ? 0.0 : alpha[p]);
      } else {
        next = std::clamp(alpha[p] - grad / sq_norms[p], 0.0, cost);
      }
      const double delta = next - alpha[p];
      if (delta != 0.0) {
        w.noalias() += delta * y[p] * x.col(p);
        alpha[p] = next;
      }
    }
    const Eigen::VectorXd margins =
        Eigen::VectorXd::Ones(n) - y.cwiseProduct(x.transpose() * w);
    const double hinge = margins.cwiseMax(0.0).sum();
    const double wnorm2 = w.squaredNorm();
    const double primal = 0.5 * wnorm2 + cost * hinge;
    const double dual = alpha.sum() - 0.5 * wnorm2;
    if (primal - dual <= opt.rel_gap_tol * primal) break;
  }
  return w;
}

}  // namespace

void SvmModel::validate() const {
  if (weights.rows() != static_cast<Eigen::Index>(concepts.size()))
    fail(errc::dimension, "svm model: weight rows do not match concept names");
  if (costs.size() != weights.rows())
    fail(errc::dimension, "svm model: cost count does not match concepts");
  if (!weights.allFinite()) fail(errc::value, "svm model: non-finite weights");
  for (Eigen::Index k = 0; k < costs.size(); ++k)
    if (!(costs[k] > 0.0)) fail(errc::value, "svm model: costs must be positive");
}

Eigen::MatrixXd augment_pooled(const Eigen::MatrixXd& pooled) {
  Eigen::MatrixXd out(pooled.rows() + 1, pooled.cols());
  out.topRows(pooled.rows()) = pooled;
  out.row(pooled.rows()).setOnes();
  return out;
}

SvmModel train_svm(const Eigen::MatrixXd& pooled, const LabelMatrix& labels,
                   const Eigen::VectorXd& costs, bool augmented, const SvmOptions& opt) {
  const Eigen::Index n = pooled.cols();
  const int K = labels.concept_count();
  if (n < 2) fail(errc::value, "svm train: need at least 2 images");
  if (labels.y.rows() != n)
    fail(errc::dimension, "svm train: label rows (" + std::to_string(labels.y.rows()) +
                              ") do not match pooled maps (" + std::to_string(n) + ")");
  if (costs.size() != K) fail(errc::dimension, "svm train: one cost per concept required");
  for (int k = 0; k < K; ++k)
    if (!(costs[k] > 0.0)) fail(errc::value, "svm train: costs must be positive");
  if (!pooled.allFinite()) fail(errc::value, "svm train: non-finite pooled map");

  for (int k = 0; k < K; ++k) {
    const auto col = labels.y.col(k);
    const bool has_pos = (col.array() == 1).any();
    const bool has_neg = (col.array() == -1).any();
    if (!has_pos || !has_neg)
      fail(errc::value, "svm train: concept '" + labels.concepts[k] +
                            "' has single-sign labels (needs both classes)");
  }

  Eigen::VectorXd sq_norms(n);
  for (Eigen::Index p = 0; p < n; ++p) sq_norms[p] = pooled.col(p).squaredNorm();

  SvmModel model;
  model.concepts = labels.concepts;
  model.costs = costs;
  model.augmented = augmented;
  model.weights.resize(K, pooled.rows());
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXd y = labels.y.col(k).cast<double>();
    model.weights.row(k) = solve_binary(pooled, y, costs[k], sq_norms, opt).transpose();
  }
  return model;
}

Eigen::VectorXd score_one(const SvmModel& model, const Eigen::VectorXd& pooled) {
  if (model.augmented && pooled.size() + 1 == model.dim()) {
    Eigen::VectorXd aug(pooled.size() + 1);
    aug << pooled, 1.0;
    return model.weights * aug;
  }
  if (pooled.size() != model.dim())
    fail(errc::dimension, "score: pooled map dimension " + std::to_string(pooled.size()) +
                              " does not match model dimension " + std::to_string(model.dim()));
  return model.weights * pooled;
}

Eigen::MatrixXd score_all(const SvmModel& model, const Eigen::MatrixXd& pooled) {
  if (model.augmented && pooled.rows() + 1 == model.dim())
    return (model.weights * augment_pooled(pooled)).transpose();
  if (pooled.rows() != model.dim())
    fail(errc::dimension, "score: pooled map dimension " + std::to_string(pooled.rows()) +
                              " does not match model dimension " + std::to_string(model.dim()));
  return (model.weights * pooled).transpose();
}

std::vector<std::string> annotate(const SvmModel& model, const Eigen::VectorXd& pooled) {
  const Eigen::VectorXd scores = score_one(model, pooled);
  std::vector<std::string> present;
  for (Eigen::Index k = 0; k < scores.size(); ++k)
    if (scores[k] > 0.0) present.push_back(model.concepts[k]);
  return present;
}

double svm_objective(const SvmModel& model, const Eigen::MatrixXd& pooled,
                     const LabelMatrix& labels) {
  const Eigen::MatrixXd scores = score_all(model, pooled);  // N x K
  if (scores.rows() != labels.y.rows())
    fail(errc::dimension, "svm objective: label count does not match pooled maps");
  double obj = 0.0;
  for (int k = 0; k < model.concept_count(); ++k) {
    obj += 0.5 * model.weights.row(k).squaredNorm();
    for (Eigen::Index p = 0; p < scores.rows(); ++p) {
      const double margin = 1.0 - labels.y(p, k) * scores(p, k);
      if (margin > 0.0) obj += model.costs[k] * margin;
    }
  }
  return obj;
}

void save_model(std::ostream& os, const SvmModel& model) {
  model.validate();
  binio::write_bytes(os, kModelMagic, 4);
  binio::write_u32(os, kModelVersion);
  binio::write_u32(os, static_cast<std::uint32_t>(model.concept_count()));
  binio::write_u64(os, static_cast<std::uint64_t>(model.dim()));
  binio::write_u8(os, model.augmented ? 1 : 0);
  for (const auto& name : model.concepts) binio::write_string(os, name);
  for (int k = 0; k < model.concept_count(); ++k)
    for (Eigen::Index d = 0; d < model.dim(); ++d)
      binio::write_f32(os, static_cast<float>(model.weights(k, d)));
  for (int k = 0; k < model.concept_count(); ++k) binio::write_f64(os, model.costs[k]);
  binio::write_u64(os, model.ctx_hash);
}

SvmModel load_model(std::istream& is) {
  binio::expect_magic(is, kModelMagic, "svm model");
  const std::uint32_t version = binio::read_u32(is, "svm model version");
  if (version != kModelVersion)
    fail(errc::format, "unsupported svm model version " + std::to_string(version));
  const std::uint32_t K = binio::read_u32(is, "svm model concept count");
  const std::uint64_t D = binio::read_u64(is, "svm model dimension");
  if (K == 0 || D == 0 || D > (1ull << 31)) fail(errc::format, "svm model header out of range");
  SvmModel model;
  model.augmented = binio::read_u8(is, "svm model bias flag") != 0;
  model.concepts.reserve(K);
  for (std::uint32_t k = 0; k < K; ++k)
    model.concepts.push_back(binio::read_string(is, "concept name"));
  model.weights.resize(K, static_cast<Eigen::Index>(D));
  for (std::uint32_t k = 0; k < K; ++k)
    for (std::uint64_t d = 0; d < D; ++d)
      model.weights(k, static_cast<Eigen::Index>(d)) = binio::read_f32(is, "svm weights");
  model.costs.resize(K);
  for (std::uint32_t k = 0; k < K; ++k) model.costs[k] = binio::read_f64(is, "svm costs");
  model.ctx_hash = binio::read_u64(is, "svm model context hash");
  model.validate();
  return model;
}

}  // namespace ctxkm
