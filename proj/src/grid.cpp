#include "ctxkm/grid.hpp"

#include <cmath>
#include <limits>

namespace ctxkm {
namespace {

// Geometric bins counted counterclockwise from +col: right, down, left, up
// (row axis points down the image). Remapped so the C=4 sector order is
// left, right, up, down.
constexpr int kAxisSectorIndex[4] = {1, 3, 0, 2};

}  // namespace

void GridSpec::validate() const {
  if (rows < 1 || cols < 1) fail(errc::config, "grid: rows and cols must be >= 1");
  if (radius < 1) fail(errc::config, "grid: radius must be >= 1");
  if (sectors < 1) fail(errc::config, "grid: sectors must be >= 1");
}

int sector_of(int delta_row, int delta_col, int sectors) {
  if (sectors < 1) fail(errc::config, "sector_of: sectors must be >= 1");
  if (delta_row == 0 && delta_col == 0)
    fail(errc::value, "sector_of: zero displacement (self-loop query)");
  if (sectors == 1) return 0;

  if (sectors == 4) {
    // Alignment with the four axis directions is exact in integers.
    const long scores[4] = {delta_col, delta_row, -static_cast<long>(delta_col),
                            -static_cast<long>(delta_row)};
    long best = std::numeric_limits<long>::min();
    int best_index = 4;
    for (int k = 0; k < 4; ++k) {
      if (scores[k] > best) {
        best = scores[k];
        best_index = kAxisSectorIndex[k];
      } else if (scores[k] == best && kAxisSectorIndex[k] < best_index) {
        best_index = kAxisSectorIndex[k];
      }
    }
    return best_index;
  }

  const double norm = std::hypot(static_cast<double>(delta_row), static_cast<double>(delta_col));
  const double tie = 1e-9 * norm;
  double best = -std::numeric_limits<double>::infinity();
  int best_index = sectors;
  for (int k = 0; k < sectors; ++k) {
    const double angle = 2.0 * M_PI * k / sectors;
    const double score = delta_col * std::cos(angle) + delta_row * std::sin(angle);
    if (score > best + tie) {
      best = score;
      best_index = k;
    } else if (score >= best - tie && k < best_index) {
      best_index = k;
    }
  }
  return best_index;
}

std::string sector_name(int sector, int sectors) {
  if (sector < 0 || sector >= sectors) fail(errc::value, "sector_name: index out of range");
  if (sectors == 4) {
    static const char* names[4] = {"left", "right", "up", "down"};
    return names[sector];
  }
  return "s" + std::to_string(sector);
}

AdjacencySet build_adjacency(const GridSpec& spec) {
  spec.validate();
  const int n = spec.cell_count();
  const int C = spec.sectors;
  const int r = spec.radius;
  const long r2 = static_cast<long>(r) * r;

  AdjacencySet adj;
  adj.n = n;
  adj.matrices.assign(C, Eigen::MatrixXd::Zero(n, n));
  adj.mask.assign(C, Eigen::MatrixXd::Zero(n, n));
  adj.edges.assign(C, {});

  for (int row = 0; row < spec.rows; ++row) {
    for (int col = 0; col < spec.cols; ++col) {
      const int x = spec.cell_index(row, col);
      int degree = 0;
      for (int dr = -r; dr <= r; ++dr) {
        for (int dc = -r; dc <= r; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if (static_cast<long>(dr) * dr + static_cast<long>(dc) * dc > r2) continue;
          const int nr = row + dr;
          const int nc = col + dc;
          if (nr < 0 || nr >= spec.rows || nc < 0 || nc >= spec.cols) continue;
          ++degree;
        }
      }
      if (degree == 0) continue;
      const double weight = 1.0 / degree;
      for (int dr = -r; dr <= r; ++dr) {
        for (int dc = -r; dc <= r; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if (static_cast<long>(dr) * dr + static_cast<long>(dc) * dc > r2) continue;
          const int nr = row + dr;
          const int nc = col + dc;
          if (nr < 0 || nr >= spec.rows || nc < 0 || nc >= spec.cols) continue;
          const int xp = spec.cell_index(nr, nc);
          const int c = sector_of(dr, dc, C);
          adj.matrices[c](x, xp) = weight;
          adj.mask[c](x, xp) = 1.0;
          adj.edges[c].emplace_back(x, xp);
        }
      }
    }
  }
  return adj;
}

}  // namespace ctxkm
