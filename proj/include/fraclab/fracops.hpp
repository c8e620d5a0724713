#pragma once

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "fraclab/fft.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/parallel.hpp"
#include "fraclab/params.hpp"

namespace fraclab {

/// Fourier symbol |xi_k|^{2s} tabulated on the real-transform (half) layout.
/// Frequencies omitted from the table follow from xi -> -xi symmetry.
class Multiplier {
 public:
  Multiplier(const Grid& grid, double s) : grid_(grid), s_(s), symbol_(half_spectrum_size(grid)), weight_(symbol_.size()) {
    if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("multiplier order must satisfy 0 < s <= 1");
    const std::size_t n = grid.n();
    const std::size_t nh = n / 2 + 1;
    const double dk = std::numbers::pi / grid.halfwidth();
    const std::size_t outer = grid.size() / n;
    for (std::size_t o = 0; o < outer; ++o) {
      // outer index enumerates the leading dim-1 axes in row-major order
      double k2_outer = 0.0;
      std::size_t rem = o;
      for (int d = grid.dim() - 2; d >= 0; --d) {
        const double kd = dk * static_cast<double>(signed_frequency(rem % n, n));
        k2_outer += kd * kd;
        rem /= n;
      }
      for (std::size_t k = 0; k < nh; ++k) {
        const double kl = dk * static_cast<double>(signed_frequency(k, n) == -static_cast<long>(n / 2)
                                                       ? static_cast<long>(n / 2)
                                                       : signed_frequency(k, n));
        const double k2 = k2_outer + kl * kl;
        symbol_[o * nh + k] = (k2 == 0.0) ? 0.0 : std::pow(k2, s);
        weight_[o * nh + k] = (k == 0 || k == n / 2) ? 1.0 : 2.0;
      }
    }
  }

  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] double order() const { return s_; }
  [[nodiscard]] const std::vector<double>& symbol() const { return symbol_; }
  /// Multiplicity of each half-layout slot in the full spectrum (1 or 2).
  [[nodiscard]] const std::vector<double>& weight() const { return weight_; }

  /// Symbol at a full frequency vector given as signed integer indices.
  [[nodiscard]] double symbol_at(std::span<const long> k) const {
    const double dk = std::numbers::pi / grid_.halfwidth();
    double k2 = 0.0;
    for (long kd : k) k2 += (dk * kd) * (dk * kd);
    return k2 == 0.0 ? 0.0 : std::pow(k2, s_);
  }

  void check_grid(const Field& f) const {
    if (!(f.grid() == grid_)) throw std::invalid_argument("grid mismatch between multiplier and field");
  }

  /// Applies the Fourier multiplier m(symbol) to f.
  template <typename Fn>
  [[nodiscard]] Field apply(const Field& f, Fn&& fn) const {
    check_grid(f);
    auto half = real_forward(grid_, f.values());
    for (std::size_t i = 0; i < half.size(); ++i) half[i] *= fn(symbol_[i]);
    return Field(grid_, real_inverse(grid_, std::move(half)));
  }

  /// Sum over the full spectrum of fn(symbol) |c_k|^2, scaled to match integrate().
  template <typename Fn>
  [[nodiscard]] double quadratic_form(const Field& f, Fn&& fn) const {
    check_grid(f);
    auto half = real_forward(grid_, f.values());
    std::vector<double> terms(half.size());
    for (std::size_t i = 0; i < half.size(); ++i) terms[i] = weight_[i] * fn(symbol_[i]) * std::norm(half[i]);
    return grid_.cell_volume() / static_cast<double>(grid_.size()) * pairwise_sum(terms);
  }

 private:
  Grid grid_;
  double s_;
  std::vector<double> symbol_;
  std::vector<double> weight_;
};

/// (-Delta)^s f through the Fourier symbol.
inline Field apply_frac_laplacian(const Multiplier& m, const Field& f) {
  return m.apply(f, [](double sym) { return sym; });
}

/// ((-Delta)^s + 1) f.
inline Field apply_shifted(const Multiplier& m, const Field& f) {
  return m.apply(f, [](double sym) { return sym + 1.0; });
}

/// ((-Delta)^s + 1)^{-1} g: the Riesz map from L2 to H^s.
inline Field apply_shifted_inverse(const Multiplier& m, const Field& g) {
  return m.apply(g, [](double sym) { return 1.0 / (sym + 1.0); });
}

struct NormReport {
  double l2_sq = 0.0;
  double seminorm_sq = 0.0;
  double hs_sq = 0.0;
  double lp = 0.0;
};

inline double lp_norm(const Field& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm requires p >= 1");
  double acc = 0.0;
  for (double v : f.values()) acc += std::pow(std::abs(v), p);
  return std::pow(f.grid().cell_volume() * acc, 1.0 / p);
}

/// integral of |f|^p.
inline double lp_power(const Field& f, double p) {
  double acc = 0.0;
  for (double v : f.values()) acc += std::pow(std::abs(v), p);
  return f.grid().cell_volume() * acc;
}

/// H^s norm split: Fourier-side seminorm, rectangle-rule L2 part, and the L^p norm.
inline NormReport hs_norm_sq(const Multiplier& m, const Field& f, double p = 2.0) {
  NormReport r;
  r.seminorm_sq = m.quadratic_form(f, [](double sym) { return sym; });
  r.l2_sq = inner(f, f);
  r.hs_sq = r.l2_sq + r.seminorm_sq;
  r.lp = lp_norm(f, p);
  return r;
}

/// ||f||_s^2 = l2 + seminorm.
inline double hs_sq(const Multiplier& m, const Field& f) { return hs_norm_sq(m, f).hs_sq; }

/// <a, ((-Delta)^s + 1) b> computed in physical space.
inline double hs_inner(const Multiplier& m, const Field& a, const Field& b) { return inner(a, apply_shifted(m, b)); }

// ---------------------------------------------------------------------------
// Gagliardo double sum and the constant linking it to the Fourier form.

/// Largest lattice the O(P^2) oracle accepts.
inline constexpr std::size_t kGagliardoBudget = std::size_t{1} << 14;
/// Above this order the Gagliardo side degenerates like 1/(1-s).
inline constexpr double kGagliardoMaxOrder = 0.9;

namespace detail {

/// Integral over the exterior of the patch prod [lo, hi) of |x - z|^{-N-2s} dz,
/// written as (1/2s) * integral over directions of r_b(omega)^{-2s}.
inline double exterior_kernel_mass(const Point& x, int dim, double lo, double hi, double s) {
  auto boundary_distance = [&](const double* omega) {
    double r = std::numeric_limits<double>::infinity();
    for (int d = 0; d < dim; ++d) {
      if (omega[d] > 0.0) r = std::min(r, (hi - x[d]) / omega[d]);
      else if (omega[d] < 0.0) r = std::min(r, (lo - x[d]) / omega[d]);
    }
    return r;
  };
  const double two_s = 2.0 * s;
  if (dim == 1) return ((x[0] - lo > 0 ? std::pow(x[0] - lo, -two_s) : 0.0) + std::pow(hi - x[0], -two_s)) / two_s;
  if (dim == 2) {
    constexpr int kAngles = 1024;
    double acc = 0.0;
    for (int a = 0; a < kAngles; ++a) {
      const double th = 2.0 * std::numbers::pi * (a + 0.5) / kAngles;
      const double omega[2] = {std::cos(th), std::sin(th)};
      acc += std::pow(boundary_distance(omega), -two_s);
    }
    return acc * (2.0 * std::numbers::pi / kAngles) / two_s;
  }
  // dim 3: midpoint in cos(theta) times uniform azimuth
  constexpr int kPolar = 32;
  constexpr int kAzimuth = 64;
  double acc = 0.0;
  for (int a = 0; a < kPolar; ++a) {
    const double ct = -1.0 + 2.0 * (a + 0.5) / kPolar;
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int b = 0; b < kAzimuth; ++b) {
      const double ph = 2.0 * std::numbers::pi * (b + 0.5) / kAzimuth;
      const double omega[3] = {st * std::cos(ph), st * std::sin(ph), ct};
      acc += std::pow(boundary_distance(omega), -two_s);
    }
  }
  return acc * (2.0 / kPolar) * (2.0 * std::numbers::pi / kAzimuth) / two_s;
}

}  // namespace detail

/// Double Riemann sum of |f(x) - f(z)|^2 / |x - z|^{N+2s} over ordered lattice
/// pairs x != z, distances taken without periodic wrap, plus the exact
/// contribution of pairs with z outside the box (f vanishes there). The box is
/// the union of the node cells, prod [-L - h/2, L - h/2).
///
/// Row blocks are reduced in a fixed order, so the value is bit-identical for
/// any thread count.
inline double gagliardo_oracle(const Field& f, double s, int threads = 1) {
  const Grid& g = f.grid();
  if (g.size() > kGagliardoBudget)
    throw std::invalid_argument("gagliardo_oracle: grid has " + std::to_string(g.size()) + " points, budget is " +
                                std::to_string(kGagliardoBudget));
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("gagliardo_oracle requires 0 < s < 1");
  if (!tail_mass_ok(f)) throw std::invalid_argument("gagliardo_oracle: tail-mass criterion violated (box too small)");

  const int dim = g.dim();
  const std::size_t n = g.n();
  const std::size_t total = g.size();
  const double h = g.spacing();
  const double expo = -(dim + 2.0 * s);

  // kernel by index difference, offset by n-1 per axis
  const std::size_t span_axis = 2 * n - 1;
  std::size_t table_size = 1;
  for (int d = 0; d < dim; ++d) table_size *= span_axis;
  std::vector<double> kernel(table_size, 0.0);
  for (std::size_t t = 0; t < table_size; ++t) {
    std::size_t rem = t;
    double r2 = 0.0;
    for (int d = dim - 1; d >= 0; --d) {
      const double delta = static_cast<double>(static_cast<long>(rem % span_axis) - static_cast<long>(n - 1));
      r2 += delta * delta;
      rem /= span_axis;
    }
    kernel[t] = r2 == 0.0 ? 0.0 : std::pow(h * h * r2, 0.5 * expo);
  }

  std::vector<std::array<std::size_t, 3>> idx(total);
  for (std::size_t i = 0; i < total; ++i) idx[i] = g.unravel(i);
  auto diff_index = [&](std::size_t i, std::size_t j) {
    std::size_t t = 0;
    for (int d = 0; d < dim; ++d) t = t * span_axis + (idx[i][d] + n - 1 - idx[j][d]);
    return t;
  };

  constexpr std::size_t kBlock = 64;
  const std::size_t blocks = (total + kBlock - 1) / kBlock;
  std::vector<double> partial(blocks, 0.0);
  const auto vals = f.values();
  parallel_for(blocks, threads, [&](std::size_t b) {
    double acc = 0.0;
    const std::size_t end = std::min(total, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < total; ++j) {
        const double df = vals[i] - vals[j];
        row += df * df * kernel[diff_index(i, j)];
      }
      acc += row;
    }
    partial[b] = acc;
  });
  const double cell = g.cell_volume();
  double interior = cell * cell * pairwise_sum(partial);

  const double lo = -g.halfwidth() - 0.5 * h;
  const double hi = g.halfwidth() - 0.5 * h;
  std::vector<double> ext(total, 0.0);
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t end = std::min(total, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i)
      if (vals[i] != 0.0) ext[i] = vals[i] * vals[i] * detail::exterior_kernel_mass(g.point(i), dim, lo, hi, s);
  });
  // x in the box, z outside, and the symmetric ordered pair
  return interior + 2.0 * cell * pairwise_sum(ext);
}

/// Closed form of the integral of (1 - cos zeta_1)/|zeta|^{N+2s} over R^N.
inline double cosine_kernel_integral_closed_form(int dim, double s) {
  const double pi = std::numbers::pi;
  return std::pow(pi, 0.5 * dim) * std::tgamma(1.0 - s) / (s * std::pow(2.0, 2.0 * s) * std::tgamma(0.5 * dim + s));
}

/// The same integral by adaptive quadrature: radial part times the angular
/// average of |omega_1|^{2s}.
inline double cosine_kernel_integral_quadrature(int dim, double s) {
  using boost::math::quadrature::gauss_kronrod;
  using boost::math::quadrature::ooura_fourier_cos;
  using boost::math::quadrature::ooura_fourier_sin;
  const double a = 1.0 + 2.0 * s;
  // near zero (1 - cos t) t^{-a} ~ t^{1-2s}/2
  boost::math::quadrature::tanh_sinh<double> ts;
  const double head = ts.integrate(
      [a](double t) {
        if (t < 1e-3) return 0.5 * std::pow(t, 1.0 - (a - 1.0)) * (1.0 - t * t / 12.0);
        return (1.0 - std::cos(t)) * std::pow(t, -a);
      },
      0.0, 1.0);
  // integral over [1, inf) of t^{-a} minus the oscillatory part, shifted to [0, inf)
  const double plain_tail = 1.0 / (2.0 * s);
  ooura_fourier_cos<double> fcos;
  ooura_fourier_sin<double> fsin;
  auto decay = [a](double u) { return std::pow(1.0 + u, -a); };
  const double c = fcos.integrate(decay, 1.0).first;
  const double sn = fsin.integrate(decay, 1.0).first;
  const double osc = std::cos(1.0) * c - std::sin(1.0) * sn;
  const double radial = head + plain_tail - osc;

  double angular = 0.0;
  if (dim == 1) {
    angular = 2.0;
  } else if (dim == 2) {
    angular = 4.0 * gauss_kronrod<double, 61>::integrate(
                        [s](double th) { return std::pow(std::cos(th), 2.0 * s); }, 0.0, 0.5 * std::numbers::pi, 15,
                        1e-14);
  } else {
    angular = 2.0 * std::numbers::pi * 2.0 *
              gauss_kronrod<double, 61>::integrate([s](double t) { return std::pow(t, 2.0 * s); }, 0.0, 1.0, 15,
                                                   1e-14);
  }
  return angular * radial;
}

struct ConversionConstant {
  double value = 0.0;        ///< Fourier/Gagliardo on the width-1 reference Gaussian
  double value_alt = 0.0;    ///< same ratio on the width-1.5 Gaussian
  double quadrature = 0.0;   ///< 1/(2 I(N,s)) with I from adaptive quadrature
  double spread = 0.0;       ///< |value/value_alt - 1|
};

inline constexpr double kConversionStability = 0.01;

/// Lattice for the Gagliardo side of the conversion ratio (within the oracle budget).
inline Grid conversion_reference_grid(int dim) {
  switch (dim) {
    case 1: return Grid(1, 24.0, 8192);
    case 2: return Grid(2, 6.0, 128);
    default: return Grid(3, 5.0, 16);
  }
}

/// Large fine box for the Fourier side, so its truncation error is negligible.
inline Grid conversion_fourier_grid(int dim) {
  switch (dim) {
    case 1: return Grid(1, 256.0, 1 << 16);
    case 2: return Grid(2, 64.0, 1024);
    default: return Grid(3, 24.0, 128);
  }
}

/// Ratio Fourier seminorm / Gagliardo seminorm, measured on two reference
/// Gaussians and checked against the quadrature value.
inline ConversionConstant conversion_constant(const Params& params, int threads = 1) {
  if (!(params.s > 0.0 && params.s <= kGagliardoMaxOrder))
    throw std::invalid_argument("conversion_constant: Gagliardo path is disabled for s > 0.9");
  const Grid g = conversion_reference_grid(params.dim);
  const Grid gf = conversion_fourier_grid(params.dim);
  const Multiplier m(gf, params.s);
  auto gaussian = [](const Grid& grid, double width) {
    return Field::sample(grid, [&](const Point& x) {
      double r2 = 0.0;
      for (int d = 0; d < grid.dim(); ++d) r2 += x[d] * x[d];
      return std::exp(-r2 / (width * width));
    });
  };
  auto ratio = [&](double width) {
    return hs_norm_sq(m, gaussian(gf, width)).seminorm_sq / gagliardo_oracle(gaussian(g, width), params.s, threads);
  };
  ConversionConstant c;
  c.value = ratio(1.0);
  c.value_alt = ratio(1.5);
  c.quadrature = 0.5 / cosine_kernel_integral_quadrature(params.dim, params.s);
  c.spread = std::abs(c.value / c.value_alt - 1.0);
  if (!(c.value > 0.0) || !std::isfinite(c.value) || c.spread > kConversionStability)
    throw std::runtime_error("conversion_constant unstable across reference widths (spread " +
                             std::to_string(c.spread) + "); box too small for this order");
  return c;
}

}  // namespace fraclab
