#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraclab/grid.hpp"

namespace fraclab {

/// Removed obstacle B(0, rho): nodes with |x| <= rho are constrained to zero.
/// rho = 0 is the empty obstacle. An optional container halfwidth Lc also
/// zeroes every node with max_i |x_i| >= Lc (Dirichlet outer wall).
class Mask {
 public:
  Mask(const Grid& grid, double obstacle_radius, double container_halfwidth = 0.0)
      : grid_(grid), rho_(obstacle_radius), container_(container_halfwidth), inside_(grid.size(), 0) {
    if (!(obstacle_radius >= 0.0)) throw std::invalid_argument("mask obstacle radius must be >= 0");
    if (!(obstacle_radius < 0.25 * grid.halfwidth()))
      throw std::invalid_argument("mask obstacle radius " + std::to_string(obstacle_radius) +
                                  " must be below halfwidth/4 = " + std::to_string(0.25 * grid.halfwidth()));
    if (container_halfwidth < 0.0 || container_halfwidth > grid.halfwidth())
      throw std::invalid_argument("mask container halfwidth must lie in [0, grid halfwidth]");
    if (container_halfwidth > 0.0 && !(obstacle_radius < 0.25 * container_halfwidth))
      throw std::invalid_argument("mask obstacle radius must be below container halfwidth/4");
    for (std::size_t i = 0; i < inside_.size(); ++i) {
      bool masked = rho_ > 0.0 && grid.radius(i) <= rho_;
      if (container_ > 0.0) {
        const auto x = grid.point(i);
        for (int d = 0; d < grid.dim(); ++d) masked = masked || std::abs(x[d]) >= container_;
      }
      if (masked) {
        inside_[i] = 1;
        ++count_;
      }
    }
  }

  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] double obstacle_radius() const { return rho_; }
  [[nodiscard]] double container_halfwidth() const { return container_; }
  [[nodiscard]] bool inside(std::size_t i) const { return inside_[i] != 0; }
  [[nodiscard]] std::size_t masked_count() const { return count_; }
  [[nodiscard]] bool empty() const { return count_ == 0; }

  void apply(Field& f) const {
    check(f);
    for (std::size_t i = 0; i < inside_.size(); ++i)
      if (inside_[i]) f[i] = 0.0;
  }

  /// Largest |f| on constrained nodes.
  [[nodiscard]] double violation(const Field& f) const {
    check(f);
    double worst = 0.0;
    for (std::size_t i = 0; i < inside_.size(); ++i)
      if (inside_[i]) worst = std::max(worst, std::abs(f[i]));
    return worst;
  }

 private:
  void check(const Field& f) const {
    if (!(f.grid() == grid_)) throw std::invalid_argument("grid mismatch between mask and field");
  }

  Grid grid_;
  double rho_;
  double container_;
  std::vector<unsigned char> inside_;
  std::size_t count_ = 0;
};

}  // namespace fraclab
