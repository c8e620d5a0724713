#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraclab/fracops.hpp"
#include "fraclab/grid.hpp"

namespace fraclab {

/// Quintic smoothstep: 0 for t <= 1, 1 for t >= 2, C2 in between.
inline double cutoff_profile(double t) {
  const double u = std::clamp(t - 1.0, 0.0, 1.0);
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

struct CutoffSpec {
  double rho = 0.0;
};

/// zeta(x) = profile(|x| / rho).
inline Field cutoff_field(const CutoffSpec& spec, const Grid& grid) {
  if (!(spec.rho > 0.0 && spec.rho < 0.25 * grid.halfwidth()))
    throw std::invalid_argument("cutoff radius must satisfy 0 < rho < halfwidth/4");
  Field z(grid);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = cutoff_profile(grid.radius(i) / spec.rho);
  return z;
}

struct TrialFunction {
  Field field;
  double c_norm = 1.0;
};

/// phi_rho(y) = zeta * phi(. - y) / ||zeta * phi(. - y)||_p, y in cells.
inline TrialFunction trial_function(const Field& zeta, const Field& phi, const LatticeVector& y, double p) {
  zeta.check_same_grid(phi);
  LatticeVector back(y.size());
  for (std::size_t d = 0; d < y.size(); ++d) back[d] = -y[d];
  Field v = lattice_shift(phi, back);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= zeta[i];
  const double norm = lp_norm(v, p);
  if (!(norm > 1e-12)) throw std::invalid_argument("trial function vanishes: cutoff annihilates the shifted profile");
  v *= 1.0 / norm;
  return {std::move(v), 1.0 / norm};
}

inline TrialFunction trial_function(const CutoffSpec& spec, const Field& phi, const LatticeVector& y, double p) {
  return trial_function(cutoff_field(spec, phi.grid()), phi, y, p);
}

struct BarycenterSpec {
  double R = 1.0;
};

/// chi(t) = 1 on [0, R], R/t beyond.
inline double barycenter_weight(double t, double R) { return t <= R ? 1.0 : R / t; }

/// Components of chi(|x|) x, one field per axis.
inline std::vector<Field> barycenter_kernel(const BarycenterSpec& spec, const Grid& grid) {
  if (!(spec.R > 0.0)) throw std::invalid_argument("barycenter radius must be positive");
  std::vector<Field> w(static_cast<std::size_t>(grid.dim()), Field(grid));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto x = grid.point(i);
    const double chi = barycenter_weight(grid.radius(i), spec.R);
    for (int d = 0; d < grid.dim(); ++d) w[d][i] = chi * x[d];
  }
  return w;
}

/// tau(f) = integral |f|^2 chi(|x|) x dx.
inline std::vector<double> barycenter(const std::vector<Field>& kernel, const Field& f) {
  std::vector<double> tau(kernel.size(), 0.0);
  const auto v = f.values();
  for (std::size_t d = 0; d < kernel.size(); ++d) {
    kernel[d].check_same_grid(f);
    double acc = 0.0;
    const auto w = kernel[d].values();
    for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * v[i] * w[i];
    tau[d] = f.grid().cell_volume() * acc;
  }
  return tau;
}

inline std::vector<double> barycenter(const BarycenterSpec& spec, const Field& f) {
  return barycenter(barycenter_kernel(spec, f.grid()), f);
}

inline double euclidean_norm(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

/// |S^{N-1}|.
inline double sphere_area(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
    default: throw std::invalid_argument("sphere_area: dim must be 1, 2 or 3");
  }
}

struct DecayCheck {
  std::size_t violations = 0;
  double worst_ratio = 0.0;
};

/// Tests u(z) <= (N/|S^{N-1}|)^{1/2} ||u||_2 / |z|^{N/2} at nodes with |z| > r0.
inline DecayCheck decay_bound_check(const Field& f, double r0) {
  const Grid& g = f.grid();
  const double l2 = std::sqrt(inner(f, f));
  DecayCheck out;
  if (l2 == 0.0) return out;
  const double scale = std::sqrt(g.dim() / sphere_area(g.dim())) * l2;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double r = g.radius(i);
    if (r <= r0) continue;
    const double ratio = f[i] * std::pow(r, 0.5 * g.dim()) / scale;
    out.worst_ratio = std::max(out.worst_ratio, ratio);
    if (ratio > 1.0 + 1e-9) ++out.violations;
  }
  return out;
}

}  // namespace fraclab
