#include "ctxkm/context_learning.hpp"

#include <cmath>
#include <utility>

namespace ctxkm {
namespace {

struct ForwardResult {
  std::vector<MapStack> stacks;
  Eigen::MatrixXd pooled;  // model input (augmented when requested)
};

ForwardResult forward_all(const std::vector<ImageFeatures>& images, const ContextStack& ctx,
                          bool keep_layers, bool augment) {
  ForwardResult res;
  res.stacks.reserve(images.size());
  for (const auto& img : images) res.stacks.push_back(forward_map(img, ctx, keep_layers));
  const Eigen::Index dim = res.stacks.front().pooled.size();
  res.pooled.resize(dim + (augment ? 1 : 0), static_cast<Eigen::Index>(images.size()));
  for (std::size_t i = 0; i < images.size(); ++i)
    res.pooled.col(static_cast<Eigen::Index>(i)).head(dim) = res.stacks[i].pooled;
  if (augment) res.pooled.row(dim).setOnes();
  return res;
}

ContextStack apply_step(const ContextStack& ctx, const ContextGradient& grad, double step) {
  ContextStack out = ctx;
  for (int t = 0; t < ctx.depth; ++t)
    for (int c = 0; c < ctx.grid.sectors; ++c)
      out.layers[t].matrices[c] -= step * grad.layers[t][c];
  return out;
}

}  // namespace

double ContextGradient::squared_norm() const {
  double s = 0.0;
  for (const auto& layer : layers)
    for (const auto& m : layer) s += m.squaredNorm();
  return s;
}

LossGrad loss_and_grad_pooled(const SvmModel& model, const Eigen::MatrixXd& pooled,
                              const LabelMatrix& labels) {
  const Eigen::Index N = pooled.cols();
  const int K = model.concept_count();
  if (pooled.rows() != model.dim())
    fail(errc::dimension, "loss_and_grad: pooled dimension " + std::to_string(pooled.rows()) +
                              " does not match model dimension " + std::to_string(model.dim()));
  if (labels.y.rows() != N || labels.y.cols() != K)
    fail(errc::dimension, "loss_and_grad: label matrix shape mismatch");

  LossGrad out;
  out.pooled_grad = Eigen::MatrixXd::Zero(pooled.rows(), N);
  for (int k = 0; k < K; ++k) out.objective += 0.5 * model.weights.row(k).squaredNorm();

  const Eigen::MatrixXd scores = model.weights * pooled;  // K x N
  for (int k = 0; k < K; ++k) {
    const double cost = model.costs[k];
    for (Eigen::Index p = 0; p < N; ++p) {
      const double y = static_cast<double>(labels.y(p, k));
      const double margin = 1.0 - y * scores(k, p);
      if (margin > 0.0) {
        out.objective += cost * margin;
        out.hinge_sum += margin;
        out.pooled_grad.col(p) -= cost * y * model.weights.row(k).transpose();
      }
    }
  }
  return out;
}

ContextGradient backward_context(const std::vector<MapStack>& stacks, const ContextStack& ctx,
                                 const Eigen::MatrixXd& pooled_grad) {
  const int n = ctx.grid.cell_count();
  const int C = ctx.grid.sectors;
  const int T = ctx.depth;
  if (stacks.size() != static_cast<std::size_t>(pooled_grad.cols()))
    fail(errc::dimension, "backward_context: one pooled gradient column per image required");
  const std::uint64_t expect_hash = ctx.hash();

  ContextGradient grad;
  grad.layers.assign(T, std::vector<Eigen::MatrixXd>(C, Eigen::MatrixXd::Zero(n, n)));

  const double root_gamma = std::sqrt(ctx.gamma);
  for (std::size_t p = 0; p < stacks.size(); ++p) {
    const MapStack& stack = stacks[p];
    if (!stack.layers_kept || static_cast<int>(stack.per_layer.size()) != T + 1)
      fail(errc::dimension, "backward_context: map stack is missing retained layers");
    if (stack.ctx_hash != expect_hash)
      fail(errc::dimension, "backward_context: stale map stack (context hash mismatch)");
    if (pooled_grad.rows() != stack.pooled.size())
      fail(errc::dimension, "backward_context: pooled gradient dimension mismatch");

    const Eigen::Index d0 = stack.per_layer.front().rows();
    // Sum pooling distributes the image gradient unchanged to every cell.
    Eigen::MatrixXd gt = pooled_grad.col(static_cast<Eigen::Index>(p)).replicate(1, n);
    for (int t = T; t >= 1; --t) {
      const Eigen::MatrixXd& prev = stack.per_layer[t - 1];
      const Eigen::Index dprev = prev.rows();
      Eigen::MatrixXd gprev = Eigen::MatrixXd::Zero(dprev, n);
      for (int c = 0; c < C; ++c) {
        const auto gc = gt.middleRows(d0 + c * dprev, dprev);
        grad.layers[t - 1][c].noalias() += root_gamma * (gc.transpose() * prev);
        gprev.noalias() += gc * ctx.layers[t - 1].matrices[c];
      }
      gt = root_gamma * gprev;  // content block gradient discarded: features are fixed
    }
  }

  for (int t = 0; t < T; ++t)
    for (int c = 0; c < C; ++c)
      grad.layers[t][c] = grad.layers[t][c].cwiseProduct(ctx.layers[t].mask[c]);
  return grad;
}

TrainState alternate_optimize(const std::vector<ImageFeatures>& images,
                              const LabelMatrix& labels, const ContextStack& init,
                              const Eigen::VectorXd& costs, const LearnOptions& opt) {
  if (images.empty()) fail(errc::value, "alternate_optimize: no training images");
  if (labels.y.rows() != static_cast<Eigen::Index>(images.size()))
    fail(errc::dimension, "alternate_optimize: label rows do not match image count");
  if (!(opt.eta >= 0.0)) fail(errc::config, "alternate_optimize: eta must be >= 0");
  if (opt.inner_steps < 0) fail(errc::config, "alternate_optimize: inner_steps must be >= 0");
  if (opt.max_outer < 1) fail(errc::config, "alternate_optimize: max_outer must be >= 1");
  if (!(opt.tol > 0.0)) fail(errc::config, "alternate_optimize: tol must be > 0");
  init.validate();
  maybe_warn_contraction(init);

  TrainState st;
  st.ctx = init;
  const bool learning = opt.inner_steps > 0;

  double prev_e = std::numeric_limits<double>::quiet_NaN();
  bool model_fresh = false;
  for (int outer = 1; outer <= opt.max_outer; ++outer) {
    ForwardResult fwd = forward_all(images, st.ctx, learning, opt.augment_bias);
    st.model = train_svm(fwd.pooled, labels, costs, opt.augment_bias, opt.svm);
    st.model.ctx_hash = st.ctx.hash();
    model_fresh = true;

    LossGrad lg = loss_and_grad_pooled(st.model, fwd.pooled, labels);
    const double svm_phase_obj = lg.objective;
    if (!std::isfinite(lg.objective))
      throw DivergenceError("objective diverged after the SVM phase", st);

    int halvings = 0;
    if (learning) {
      Eigen::MatrixXd g = lg.pooled_grad.topRows(fwd.stacks.front().pooled.size());
      for (int s = 0; s < opt.inner_steps; ++s) {
        const ContextGradient dp = backward_context(fwd.stacks, st.ctx, g);
        if (dp.squared_norm() == 0.0) break;
        double step = opt.eta;
        bool accepted = false;
        for (int j = 0;; ++j) {
          ContextStack cand = apply_step(st.ctx, dp, step);
          ForwardResult trial = forward_all(images, cand, true, opt.augment_bias);
          LossGrad trial_lg = loss_and_grad_pooled(st.model, trial.pooled, labels);
          if (std::isfinite(trial_lg.objective) && trial_lg.objective < lg.objective) {
            st.ctx = std::move(cand);
            fwd = std::move(trial);
            lg = std::move(trial_lg);
            g = lg.pooled_grad.topRows(fwd.stacks.front().pooled.size());
            accepted = true;
            model_fresh = false;
            break;
          }
          if (j == 10) break;
          step *= 0.5;
          ++halvings;
        }
        if (!accepted) break;
      }
    }

    if (!std::isfinite(lg.objective))
      throw DivergenceError("objective diverged during the P-phase", st);

    st.outer_iter = outer;
    st.objective_history.push_back(lg.objective);
    st.log.push_back({outer, lg.objective, svm_phase_obj, lg.hinge_sum, halvings});

    if (!learning) {
      st.converged = true;
      break;
    }
    if (outer >= 2 && std::abs(lg.objective - prev_e) <
                          opt.tol * (std::abs(prev_e) + 1e-300)) {
      st.converged = true;
      break;
    }
    prev_e = lg.objective;
  }

  // Leave the state with SVM weights fit against the final context.
  if (!model_fresh) {
    ForwardResult fwd = forward_all(images, st.ctx, false, opt.augment_bias);
    st.model = train_svm(fwd.pooled, labels, costs, opt.augment_bias, opt.svm);
    st.model.ctx_hash = st.ctx.hash();
  }
  return st;
}

}  // namespace ctxkm
