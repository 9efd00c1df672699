#include "ctxkm/kernel_maps.hpp"

#include <cmath>
#include <sstream>

namespace ctxkm {

std::uint64_t ContextStack::hash() const {
  Fnv1a h;
  h.update_value(gamma);
  h.update_value(depth);
  h.update_value(grid.rows);
  h.update_value(grid.cols);
  h.update_value(grid.radius);
  h.update_value(grid.sectors);
  for (const auto& layer : layers)
    for (const auto& m : layer.matrices)
      h.update(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  return h.digest();
}

void ContextStack::validate() const {
  grid.validate();
  if (!(gamma >= 0.0)) fail(errc::config, "context: gamma must be >= 0");
  if (depth < 1) fail(errc::config, "context: depth must be >= 1");
  if (static_cast<int>(layers.size()) != depth)
    fail(errc::dimension, "context: layer count does not match depth");
  const int n = grid.cell_count();
  const int C = grid.sectors;
  for (int t = 0; t < depth; ++t) {
    const auto& layer = layers[t];
    if (layer.n != n || layer.sector_count() != C)
      fail(errc::dimension, "context: layer " + std::to_string(t) + " has wrong shape");
    for (int c = 0; c < C; ++c) {
      if (layer.matrices[c].rows() != n || layer.matrices[c].cols() != n)
        fail(errc::dimension, "context: adjacency matrix has wrong shape");
      if (!layer.matrices[c].allFinite())
        fail(errc::value, "context: non-finite adjacency entry in layer " + std::to_string(t));
      if (((1.0 - layer.mask[c].array()) * layer.matrices[c].array()).abs().maxCoeff() != 0.0)
        fail(errc::value, "context: nonzero adjacency entry outside the support mask");
      if (t > 0 && (layer.mask[c] - layers[0].mask[c]).cwiseAbs().maxCoeff() != 0.0)
        fail(errc::dimension, "context: support mask differs across layers");
    }
  }
}

ContextStack make_handcrafted_context(const GridSpec& spec, double gamma, int depth) {
  if (!(gamma >= 0.0)) fail(errc::config, "context: gamma must be >= 0");
  if (depth < 1) fail(errc::config, "context: depth must be >= 1");
  ContextStack ctx;
  ctx.grid = spec;
  ctx.gamma = gamma;
  ctx.depth = depth;
  ctx.layers.assign(depth, build_adjacency(spec));
  return ctx;
}

std::int64_t map_dim(int base_dim, int sectors, int depth) {
  if (base_dim < 1) fail(errc::config, "map_dim: base dimension must be >= 1");
  if (sectors < 1 || depth < 0) fail(errc::config, "map_dim: invalid sectors or depth");
  std::int64_t d = base_dim;
  for (int t = 0; t < depth; ++t) {
    d = base_dim + static_cast<std::int64_t>(sectors) * d;
    if (d > (1ll << 31))
      fail(errc::config, "map dimension exceeds 2^31 at layer " + std::to_string(t + 1) +
                             "; reduce depth or sectors");
  }
  return d;
}

MapStack forward_map(const ImageFeatures& img, const ContextStack& ctx, bool keep_layers) {
  const int n = ctx.grid.cell_count();
  const int C = ctx.grid.sectors;
  if (img.cells.cols() != n)
    fail(errc::dimension, "forward_map: image '" + img.image_id + "' has " +
                              std::to_string(img.cells.cols()) + " cells, grid expects " +
                              std::to_string(n));
  if (img.cells.rows() < 1) fail(errc::dimension, "forward_map: empty feature dimension");
  if (static_cast<int>(ctx.layers.size()) != ctx.depth)
    fail(errc::dimension, "forward_map: context layer count does not match depth");
  map_dim(static_cast<int>(img.cells.rows()), C, ctx.depth);  // overflow guard

  const double root_gamma = std::sqrt(ctx.gamma);
  const Eigen::Index d0 = img.cells.rows();

  MapStack out;
  out.ctx_hash = ctx.hash();
  out.layers_kept = keep_layers;
  if (keep_layers) out.per_layer.reserve(ctx.depth + 1);

  Eigen::MatrixXd phi = img.cells;
  if (keep_layers) out.per_layer.push_back(phi);
  for (int t = 0; t < ctx.depth; ++t) {
    const auto& layer = ctx.layers[t];
    const Eigen::Index dt = phi.rows();
    Eigen::MatrixXd next(d0 + C * dt, n);
    next.topRows(d0) = img.cells;
    for (int c = 0; c < C; ++c)
      next.middleRows(d0 + c * dt, dt).noalias() =
          root_gamma * (phi * layer.matrices[c].transpose());
    phi = std::move(next);
    if (keep_layers) out.per_layer.push_back(phi);
  }
  if (!keep_layers) out.per_layer.push_back(std::move(phi));
  out.pooled = out.per_layer.back().rowwise().sum();
  return out;
}

Eigen::MatrixXd gram_fixed_point(const Eigen::MatrixXd& S, const ContextStack& ctx,
                                 int n_images) {
  const int n = ctx.grid.cell_count();
  const int C = ctx.grid.sectors;
  if (n_images < 1) fail(errc::dimension, "gram_fixed_point: need at least one image");
  const Eigen::Index total = static_cast<Eigen::Index>(n) * n_images;
  if (S.rows() != total || S.cols() != total)
    fail(errc::dimension, "gram_fixed_point: S must be " + std::to_string(total) + "x" +
                              std::to_string(total));
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    fail(errc::value, "gram_fixed_point: S is asymmetric beyond tolerance 1e-10");

  Eigen::MatrixXd K = S;
  Eigen::MatrixXd next(total, total);
  for (int t = 0; t < ctx.depth; ++t) {
    const auto& layer = ctx.layers[t];
    next = S;
    for (int p = 0; p < n_images; ++p) {
      for (int q = 0; q < n_images; ++q) {
        const auto block = K.block(static_cast<Eigen::Index>(p) * n,
                                   static_cast<Eigen::Index>(q) * n, n, n);
        auto target = next.block(static_cast<Eigen::Index>(p) * n,
                                 static_cast<Eigen::Index>(q) * n, n, n);
        for (int c = 0; c < C; ++c)
          target.noalias() +=
              ctx.gamma * (layer.matrices[c] * block * layer.matrices[c].transpose());
      }
    }
    K.swap(next);
  }
  return K;
}

double convolution_kernel(const MapStack& a, const MapStack& b) {
  if (a.pooled.size() != b.pooled.size())
    fail(errc::dimension, "convolution_kernel: pooled map dimensions differ (" +
                              std::to_string(a.pooled.size()) + " vs " +
                              std::to_string(b.pooled.size()) + ")");
  return a.pooled.dot(b.pooled);
}

double contraction_bound(const ContextStack& ctx) {
  double worst = 0.0;
  for (const auto& layer : ctx.layers) {
    double s = 0.0;
    for (const auto& m : layer.matrices) {
      const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
      const double norm_inf = m.cwiseAbs().rowwise().sum().maxCoeff();
      s += std::sqrt(norm1 * norm_inf);
    }
    worst = std::max(worst, s);
  }
  return ctx.gamma * worst * worst;
}

void maybe_warn_contraction(const ContextStack& ctx) {
  const double bound = contraction_bound(ctx);
  if (bound >= 1.0) {
    std::ostringstream ss;
    ss << "context stack is not provably contractive (gamma-weighted norm bound " << bound
       << " >= 1); the gram recursion may grow with depth";
    log_warning(ss.str());
  }
}

}  // namespace ctxkm
