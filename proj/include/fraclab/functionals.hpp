#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraclab/fracops.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/mask.hpp"

namespace fraclab {

inline constexpr double kMaskTolerance = 1e-14;

struct EnergyBreakdown {
  double quadratic = 0.0;
  double potential = 0.0;
  double total = 0.0;
  double residual_norm = 0.0;  ///< L2 norm of the gradient representer
  double dual_norm = 0.0;      ///< H^{-s} norm of the same representer
};

struct SplitReport {
  double norm_gap = 0.0;
  double lp_gap = 0.0;
  double energy_gap = 0.0;
};

namespace detail {

inline void require_mask_compatible(const Field& f, const Mask* mask) {
  if (!mask) return;
  const double v = mask->violation(f);
  if (v > kMaskTolerance)
    throw std::invalid_argument("field is nonzero on masked nodes (max " + std::to_string(v) + ")");
}

inline Field power_term(const Field& f, double p) {
  Field out(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = std::pow(std::abs(f[i]), p - 2.0) * f[i];
  return out;
}

}  // namespace detail

/// L2 representer of I'(f): ((-Delta)^s + 1) f - |f|^{p-2} f; masked nodes zeroed.
inline Field gradient(const Multiplier& m, const Field& f, double p, const Mask* mask = nullptr) {
  detail::require_mask_compatible(f, mask);
  Field g = apply_shifted(m, f);
  g -= detail::power_term(f, p);
  if (mask) mask->apply(g);
  return g;
}

/// H^{-s} norm: sqrt(sum |g_k|^2 / (symbol + 1)).
inline double dual_norm(const Multiplier& m, const Field& g) {
  return std::sqrt(m.quadratic_form(g, [](double sym) { return 1.0 / (sym + 1.0); }));
}

/// I(f) (mask given) or I_inf(f) (no mask).
inline EnergyBreakdown energy(const Multiplier& m, const Field& f, double p, const Mask* mask = nullptr) {
  detail::require_mask_compatible(f, mask);
  EnergyBreakdown e;
  e.quadratic = 0.5 * hs_sq(m, f);
  e.potential = lp_power(f, p) / p;
  e.total = e.quadratic - e.potential;
  const Field g = gradient(m, f, p, mask);
  e.residual_norm = std::sqrt(inner(g, g));
  e.dual_norm = dual_norm(m, g);
  return e;
}

/// ||f||_s^2 - integral |f|^p.
inline double nehari_residual(const Multiplier& m, const Field& f, double p) { return hs_sq(m, f) - lp_power(f, p); }

/// Gaps of the splitting identities for psi = u_n - u0.
inline SplitReport split_check(const Multiplier& m, const Field& u_n, const Field& u0, double p) {
  u_n.check_same_grid(u0);
  const Field psi = u_n - u0;
  SplitReport r;
  r.norm_gap = std::abs(hs_sq(m, u_n) - hs_sq(m, u0) - hs_sq(m, psi));
  r.lp_gap = std::abs(lp_power(u_n, p) - lp_power(u0, p) - lp_power(psi, p));
  auto total = [&](const Field& f) { return 0.5 * hs_sq(m, f) - lp_power(f, p) / p; };
  r.energy_gap = std::abs(total(u_n) - total(u0) - total(psi));
  return r;
}

/// count * (1/2 - 1/p) * M^{p/(p-2)}.
inline double threshold(int level_count, double M, double p) {
  if (level_count != 1 && level_count != 2) throw std::invalid_argument("threshold level_count must be 1 or 2");
  if (!(M > 0.0)) throw std::invalid_argument("threshold requires M > 0");
  if (!(p > 2.0)) throw std::invalid_argument("threshold requires p > 2");
  return level_count * (0.5 - 1.0 / p) * std::pow(M, p / (p - 2.0));
}

struct CubeMax {
  double value = 0.0;
  std::size_t index = 0;  ///< linear cube index, row-major over the 2L cubes per axis
  Point center{0.0, 0.0, 0.0};
};

/// Max over unit cubes Q_i = -L + c + [0, 1)^dim of the restricted L^p norm.
/// Ties go to the lowest cube index.
inline CubeMax cube_max(const Field& f, double p) {
  const Grid& g = f.grid();
  const double L = g.halfwidth();
  const double cells = 1.0 / g.spacing();
  if (std::abs(L - std::round(L)) > 1e-12 || L < 1.0) throw std::invalid_argument("cube_max requires integer halfwidth");
  if (std::abs(cells - std::round(cells)) > 1e-9) throw std::invalid_argument("cube_max requires h to divide 1");
  const auto per_axis = static_cast<std::size_t>(std::llround(2.0 * L));
  const auto nodes_per_cube = static_cast<std::size_t>(std::llround(cells));
  std::size_t cubes = 1;
  for (int d = 0; d < g.dim(); ++d) cubes *= per_axis;
  std::vector<double> acc(cubes, 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto idx = g.unravel(i);
    std::size_t c = 0;
    for (int d = 0; d < g.dim(); ++d) c = c * per_axis + idx[d] / nodes_per_cube;
    acc[c] += std::pow(std::abs(f[i]), p);
  }
  CubeMax best;
  best.value = -1.0;
  for (std::size_t c = 0; c < cubes; ++c) {
    const double v = std::pow(g.cell_volume() * acc[c], 1.0 / p);
    if (v > best.value) {
      best.value = v;
      best.index = c;
    }
  }
  std::size_t rem = best.index;
  for (int d = g.dim() - 1; d >= 0; --d) {
    best.center[d] = -L + static_cast<double>(rem % per_axis) + 0.5;
    rem /= per_axis;
  }
  return best;
}

}  // namespace fraclab
