#pragma once

#include <cmath>
#include <random>

#include "fraclab/grid.hpp"

namespace fraclab::testing {

/// Sum of a few random Gaussian bumps, sign-changing unless `positive`, kept
/// well inside the box.
inline Field random_bumps(const Grid& g, std::mt19937_64& rng, bool positive = false, int count = 4) {
  std::uniform_real_distribution<double> centre(-0.3 * g.halfwidth(), 0.3 * g.halfwidth());
  std::uniform_real_distribution<double> width(0.05 * g.halfwidth(), 0.12 * g.halfwidth());
  std::uniform_real_distribution<double> amp(positive ? 0.2 : -1.0, 1.0);
  Field f(g);
  for (int b = 0; b < count; ++b) {
    Point c{centre(rng), centre(rng), centre(rng)};
    const double w = width(rng);
    const double a = amp(rng);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto x = g.point(i);
      double r2 = 0.0;
      for (int d = 0; d < g.dim(); ++d) r2 += (x[d] - c[d]) * (x[d] - c[d]);
      f[i] += a * std::exp(-r2 / (w * w));
    }
  }
  return f;
}

/// White noise, for properties that must hold for arbitrary samples.
inline Field random_noise(const Grid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = n01(rng);
  return f;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace fraclab::testing
