#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ctxkm/featio.hpp"
#include "ctxkm/grid.hpp"

namespace ctxkm {

// Per-layer adjacency weights {P_c^(t)}: the learnable context. Every layer
// shares the handcrafted support mask; learning re-weights edges and never
// grows new ones.
struct ContextStack {
  GridSpec grid;
  double gamma = 1.0;
  int depth = 3;                     // T
  std::vector<AdjacencySet> layers;  // depth entries

  std::uint64_t hash() const;
  void validate() const;
};

// All layers initialized to the row-stochastic handcrafted adjacency.
ContextStack make_handcrafted_context(const GridSpec& spec, double gamma, int depth);

// Dimension of the layer-T map for a given base dimension:
// D_0 = base_dim, D_{t+1} = base_dim + sectors * D_t.
std::int64_t map_dim(int base_dim, int sectors, int depth);

// Explicit maps of one image. per_layer holds Phi^(0)..Phi^(T) when layers
// are kept (training), otherwise just Phi^(T); pooled is the cell sum of the
// top layer.
struct MapStack {
  std::vector<Eigen::MatrixXd> per_layer;  // D_t x n, one column per cell
  Eigen::VectorXd pooled;                  // phi_K
  std::uint64_t ctx_hash = 0;
  bool layers_kept = false;

  const Eigen::MatrixXd& top() const { return per_layer.back(); }
};

// Recursive map construction: Phi^(0)_x = V_x and
// Phi^(t+1)_x = concat(V_x, sqrt(gamma) * sum_x' P_c^(t)[x,x'] Phi^(t)_x' for each c).
// Touches no other image.
MapStack forward_map(const ImageFeatures& img, const ContextStack& ctx, bool keep_layers);

// Fixed-point recursion on the gram matrix over all cells of all images:
// K^(0) = S, K^(t+1) = S + gamma * sum_c P_c^(t) K^(t) P_c^(t)', with P_c
// applied block-diagonally per image. Test oracle and debug path; production
// similarity goes through the explicit maps.
Eigen::MatrixXd gram_fixed_point(const Eigen::MatrixXd& S, const ContextStack& ctx,
                                 int n_images);

// Image-level similarity <pooled_a, pooled_b>.
double convolution_kernel(const MapStack& a, const MapStack& b);

// gamma * (max_t sum_c sqrt(|P_c^(t)|_1 * |P_c^(t)|_inf))^2; the gram
// recursion is provably contractive when this is < 1.
double contraction_bound(const ContextStack& ctx);

// Logs a warning when contraction_bound(ctx) >= 1.
void maybe_warn_contraction(const ContextStack& ctx);

}  // namespace ctxkm
