#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ctxkm/grid.hpp"

namespace ctxkm {

// Context-free initial map applied to raw cell features.
enum class Phi0Mode : std::uint8_t { linear = 0, hi = 1 };

std::string to_string(Phi0Mode mode);
Phi0Mode phi0_mode_from_string(const std::string& s);

// Per-cell features of one image after the initial map: column x holds the
// base map V_x, one column per grid cell in row-major cell order.
struct ImageFeatures {
  std::string image_id;
  Eigen::MatrixXd cells;  // base_dim x n
};

// Raw per-cell features as stored on disk (float32, pre-phi0).
struct RawImage {
  std::string image_id;
  Eigen::MatrixXf cells;  // raw_dim x n
};

struct FeatureFile {
  int rows = 0;
  int cols = 0;
  int raw_dim = 0;
  Phi0Mode mode = Phi0Mode::linear;
  int hi_levels = 0;  // 0 when mode is linear
  std::vector<RawImage> images;

  std::vector<std::string> image_ids() const;
};

// Per-image, per-concept membership in {-1, +1}. Rows follow image_ids.
struct LabelMatrix {
  std::vector<std::string> image_ids;
  std::vector<std::string> concepts;
  Eigen::MatrixXi y;  // N x K

  int images() const noexcept { return static_cast<int>(y.rows()); }
  int concept_count() const noexcept { return static_cast<int>(y.cols()); }
  void validate() const;
  // Rows reordered to match `ids`; labels for images outside `ids` are
  // dropped, missing images are an error.
  LabelMatrix aligned_to(const std::vector<std::string>& ids) const;
};

// Identity map of the linear kernel.
Eigen::VectorXd phi0_linear(const Eigen::VectorXd& cell);

// Explicit map of the histogram-intersection kernel on U-level quantized
// entries: each entry v becomes a unary block with round(v*U) slots of
// 1/sqrt(U), so inner products equal sum_i min(q(u_i), q(v_i)).
Eigen::VectorXd phi0_hi(const Eigen::VectorXd& cell, int levels);

// Columns mapped independently; output is (raw_dim * levels) x n for hi.
Eigen::MatrixXd apply_phi0(const Eigen::MatrixXf& raw_cells, Phi0Mode mode, int levels);

void save_features(const std::string& path, const FeatureFile& data);
FeatureFile read_feature_file(const std::string& path);

// Reads a feature file, checks it against the grid and requested mode, and
// returns per-image features with phi0 applied.
std::vector<ImageFeatures> load_features(const std::string& path, const GridSpec& spec,
                                         Phi0Mode mode);

void save_labels(const std::string& path, const LabelMatrix& labels);
LabelMatrix load_labels(const std::string& path);

struct SyntheticOptions {
  int dim = 8;          // raw feature dimension
  double noise = 0.02;  // gaussian sigma applied per entry, then clamped to [0,1]
  Phi0Mode mode = Phi0Mode::linear;
  int hi_levels = 16;
};

struct SyntheticData {
  FeatureFile features;
  LabelMatrix labels;
};

// Two-class dataset whose classes share the same content marginals (cells
// drawn around two prototypes A and B) but differ in arrangement: class
// "arrangement_ab" places A-cells in the left half of the grid, class
// "arrangement_ba" mirrors it. Deterministic given the seed.
SyntheticData gen_synthetic(const GridSpec& spec, int n_images, std::uint64_t seed,
                            const SyntheticOptions& opt = {});

}  // namespace ctxkm
