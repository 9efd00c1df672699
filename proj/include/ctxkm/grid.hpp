#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "ctxkm/common.hpp"

namespace ctxkm {

// Regular cell grid shared by every image in a dataset. Cells are indexed
// row-major: cell = row * cols + col.
struct GridSpec {
  int rows = 8;
  int cols = 10;
  int radius = 1;
  int sectors = 4;

  int cell_count() const noexcept { return rows * cols; }
  int cell_index(int row, int col) const noexcept { return row * cols + col; }
  int cell_row(int cell) const noexcept { return cell / cols; }
  int cell_col(int cell) const noexcept { return cell % cols; }

  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

// Angular sector of a nonzero displacement between two cells. Sectors are
// bins of width 2*pi/C centered on the axis directions, so for C=4 and
// radius 1 they reduce to plain 4-adjacency. Index order for C=4 is
// left=0, right=1, up=2, down=3. A displacement exactly on a bin boundary
// goes to the lower-indexed sector.
int sector_of(int delta_row, int delta_col, int sectors);

// "left"/"right"/"up"/"down" for C=4, "s<k>" otherwise.
std::string sector_name(int sector, int sectors);

// Typed-neighborhood adjacency of one grid. matrices[c](x, x') may be
// nonzero only where mask[c](x, x') == 1, i.e. when x' lies within the disk
// of radius r around x and the displacement falls in sector c.
struct AdjacencySet {
  int n = 0;
  std::vector<Eigen::MatrixXd> matrices;
  std::vector<Eigen::MatrixXd> mask;  // 0/1 support indicators
  std::vector<std::vector<std::pair<int, int>>> edges;  // (from, to) per sector

  int sector_count() const noexcept { return static_cast<int>(matrices.size()); }
  bool masked(int c, int from, int to) const { return mask[c](from, to) != 0.0; }
};

// Handcrafted context: entry (x, x') = 1/deg(x) for every neighbor x' of x,
// where deg(x) counts neighbors across all sectors. The sector-summed matrix
// is therefore row-stochastic on non-isolated cells, and cells with few
// neighbors (corners) carry larger per-edge weights.
AdjacencySet build_adjacency(const GridSpec& spec);

}  // namespace ctxkm
