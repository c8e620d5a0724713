#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numbers>
#include <random>

#include "fraclab/fracops.hpp"
#include "support.hpp"

using namespace fraclab;
using fraclab::testing::rel;

namespace {

double sup_diff(const Field& a, const Field& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

Field gaussian(const Grid& g, double width = 1.0) {
  return Field::sample(g, [&](const Point& x) {
    double r2 = 0.0;
    for (int d = 0; d < g.dim(); ++d) r2 += x[d] * x[d];
    return std::exp(-r2 / (width * width));
  });
}

}  // namespace

TEST_CASE("symbol layout", "[fracops]") {
  const Multiplier m(Grid(2, 3.0, 16), 0.4);
  CHECK(m.symbol()[0] == 0.0);
  const long a[2] = {3, -4}, b[2] = {-4, 3}, c[2] = {5, 0};
  CHECK(m.symbol_at(a) == Catch::Approx(m.symbol_at(b)));
  CHECK(m.symbol_at(a) == Catch::Approx(m.symbol_at(c)));
  CHECK_THROWS_AS(Multiplier(Grid(1, 1.0, 8), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(Multiplier(Grid(1, 1.0, 8), 1.5), std::invalid_argument);
  CHECK_THROWS_AS(apply_frac_laplacian(m, Field(Grid(2, 3.0, 32))), std::invalid_argument);
}

TEST_CASE("operator examples", "[fracops]") {
  const Grid g(1, std::numbers::pi, 64);
  CHECK(sup_diff(apply_frac_laplacian(Multiplier(g, 0.3), Field(g, 2.0)), Field(g)) < 1e-12);

  const Field c2 = Field::sample(g, [](const Point& x) { return std::cos(2.0 * x[0]); });
  CHECK(sup_diff(apply_frac_laplacian(Multiplier(g, 0.5), c2), 2.0 * c2) < 1e-12);
  const Field c3 = Field::sample(g, [](const Point& x) { return std::cos(3.0 * x[0]); });
  CHECK(sup_diff(apply_frac_laplacian(Multiplier(g, 1.0), c3), 9.0 * c3) < 1e-11);

  // s = 1 agrees with the classical second derivative on a Gaussian
  const Grid gw(1, 20.0, 1024);
  const Field f = gaussian(gw);
  const Field lap = Field::sample(gw, [](const Point& x) { return (2.0 - 4.0 * x[0] * x[0]) * std::exp(-x[0] * x[0]); });
  CHECK(sup_diff(apply_frac_laplacian(Multiplier(gw, 1.0), f), lap) < 1e-10);
  const Multiplier m(gw, 0.6);
  CHECK(sup_diff(apply_shifted_inverse(m, apply_shifted(m, f)), f) < 1e-12);
}

TEST_CASE("norm examples", "[fracops]") {
  const Grid g(1, 20.0, 1024);
  const NormReport z = hs_norm_sq(Multiplier(g, 0.5), Field(g), 3.0);
  CHECK(z.l2_sq == 0.0);
  CHECK(z.seminorm_sq == 0.0);
  CHECK(z.lp == 0.0);
  const NormReport r = hs_norm_sq(Multiplier(g, 0.5), gaussian(g), 2.0);
  CHECK(std::abs(r.l2_sq - std::sqrt(std::numbers::pi / 2.0)) < 1e-10);
  CHECK(std::abs(r.lp - std::pow(std::numbers::pi / 2.0, 0.25)) < 1e-10);
  CHECK(r.hs_sq == r.l2_sq + r.seminorm_sq);
  CHECK(lp_norm(Field(g, 3.0), 4.0) == Catch::Approx(3.0 * std::pow(40.0, 0.25)).epsilon(1e-14));
  CHECK_THROWS_AS(lp_norm(Field(g, 1.0), 0.5), std::invalid_argument);
  // single grid mode: seminorm = |xi|^{2s} * L
  const Grid gp(1, std::numbers::pi, 32);
  const Field c4 = Field::sample(gp, [](const Point& x) { return std::cos(4.0 * x[0]); });
  CHECK(rel(hs_norm_sq(Multiplier(gp, 0.35), c4).seminorm_sq, std::pow(4.0, 0.7) * std::numbers::pi) < 1e-12);
}

TEST_CASE("operator and norm properties over random fields", "[fracops][property]") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> order(0.05, 1.0);
  std::uniform_int_distribution<long> off(-100, 100);
  for (const Grid& g : {Grid(1, 12.0, 256), Grid(2, 12.0, 64), Grid(3, 12.0, 16)}) {
    for (int t = 0; t < 100; ++t) {
      const Multiplier m(g, order(rng));
      const Field f = testing::random_bumps(g, rng);
      const Field h = testing::random_noise(g, rng);
      // symmetry
      const double a = inner(apply_frac_laplacian(m, f), h);
      const double b = inner(f, apply_frac_laplacian(m, h));
      CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));
      // positivity and l2 domination
      const NormReport r = hs_norm_sq(m, h);
      CHECK(r.seminorm_sq >= 0.0);
      CHECK(r.hs_sq >= r.l2_sq);
      // Fourier form equals the physical-space pairing
      CHECK(rel(hs_inner(m, f, f), hs_sq(m, f)) < 1e-10);
      // lattice-shift invariance
      LatticeVector z(static_cast<std::size_t>(g.dim()));
      for (auto& v : z) v = off(rng);
      const Field s = lattice_shift(f, z);
      CHECK(rel(hs_sq(m, s), hs_sq(m, f)) < 1e-10);
      CHECK(rel(lp_norm(s, 2.7), lp_norm(f, 2.7)) < 1e-12);
    }
  }
}

TEST_CASE("Sobolev embedding holds with one fitted constant", "[fracops][property]") {
  std::mt19937_64 rng(22);
  const Grid g(2, 10.0, 64);
  const double s = 0.5;
  const double pstar = 2.0 * 2 / (2 - 2 * s);
  const Multiplier m(g, s);
  auto ratio = [&](const Field& f) { return std::pow(lp_norm(f, pstar), 2) / hs_norm_sq(m, f).seminorm_sq; };
  double fitted = 0.0;
  for (int t = 0; t < 30; ++t) fitted = std::max(fitted, ratio(testing::random_bumps(g, rng)));
  for (int t = 0; t < 30; ++t) CHECK(ratio(testing::random_bumps(g, rng)) <= 2.0 * fitted);
}

TEST_CASE("Gagliardo oracle", "[fracops][gagliardo]") {
  const Grid g(1, 12.0, 256);
  CHECK(gagliardo_oracle(Field(g), 0.4) == 0.0);
  CHECK_THROWS_AS(gagliardo_oracle(Field(Grid(1, 1.0, 1 << 15)), 0.4), std::invalid_argument);
  CHECK_THROWS_AS(gagliardo_oracle(Field(g), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gagliardo_oracle(Field(g, 1.0), 0.4), std::invalid_argument);

  std::mt19937_64 rng(23);
  for (int t = 0; t < 10; ++t) {
    const Field f = testing::random_bumps(g, rng);
    const double v = gagliardo_oracle(f, 0.4);
    CHECK(v > 0.0);
    CHECK(rel(gagliardo_oracle(lattice_shift(f, {5}), 0.4), v) < 1e-6);
    Field a = f;
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::abs(a[i]);
    CHECK(gagliardo_oracle(a, 0.4) <= v * (1 + 1e-12));
    CHECK(gagliardo_oracle(f, 0.4, 4) == v);
  }
}

TEST_CASE("cosine kernel quadrature matches the closed form", "[fracops][gagliardo]") {
  for (int dim = 1; dim <= 3; ++dim)
    for (double s : {0.1, 0.3, 0.5, 0.7, 0.9})
      CHECK(rel(cosine_kernel_integral_quadrature(dim, s), cosine_kernel_integral_closed_form(dim, s)) < 1e-8);
}

TEST_CASE("conversion constant", "[fracops][gagliardo]") {
  for (double s : {0.3, 0.5}) {
    const auto c = conversion_constant(Params{s, 3.0, 1});
    CHECK(c.value > 0.0);
    CHECK(c.spread < kConversionStability);
    CHECK(rel(c.value, c.quadrature) < 0.01);
  }
  CHECK_THROWS_AS(conversion_constant(Params{0.95, 3.0, 1}), std::invalid_argument);
}

TEST_CASE("Gagliardo and Fourier seminorms converge together", "[fracops][gagliardo]") {
  const double s = 0.4;
  const double C = 0.5 / cosine_kernel_integral_closed_form(1, s);
  std::vector<double> err;
  for (std::size_t n : {128, 256, 512}) {
    const Grid g(1, 24.0, n);
    const Field f = gaussian(g);
    err.push_back(std::abs(hs_norm_sq(Multiplier(g, s), f).seminorm_sq / (C * gagliardo_oracle(f, s)) - 1.0));
  }
  CHECK(err[2] < 0.05);
  CHECK(err[1] < err[0]);
  CHECK(err[2] < err[1]);
}
