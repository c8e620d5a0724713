#include <catch2/catch_amalgamated.hpp>

#include "fraclab/solver.hpp"
#include "support.hpp"

using namespace fraclab;

namespace {

double sup_diff(const Field& a, const Field& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

}  // namespace

TEST_CASE("local case reproduces sqrt(2) sech", "[solver]") {
  const Grid g(1, 20.0, 1024);
  SolveOptions o;
  o.tol_grad = 1e-9;
  const auto r = minimize(Multiplier(g, 1.0), 4.0, nullptr, o);
  CHECK(r.converged);
  const Field sech = Field::sample(g, [](const Point& x) { return std::sqrt(2.0) / std::cosh(x[0]); });
  CHECK(sup_diff(r.rescaled_solution, sech) < 1e-3);
  CHECK(std::abs(lp_norm(r.minimizer, 4.0) - 1.0) < 1e-10);
  for (double v : r.minimizer.values()) CHECK(v >= 0.0);
  for (std::size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k].quotient <= r.history[k - 1].quotient);
}

TEST_CASE("minimum does not depend on the starting point", "[solver]") {
  const Grid g(1, 24.0, 2048);
  const Multiplier m(g, 0.5);
  SolveOptions a, b;
  a.tol_grad = b.tol_grad = 1e-8;
  b.init_center = {3.0};
  b.init_width = 2.0;
  b.jitter = 0.1;
  b.seed = 9;
  const auto ra = minimize(m, 3.0, nullptr, a);
  const auto rb = minimize(m, 3.0, nullptr, b);
  CHECK(std::abs(ra.quotient - rb.quotient) < 1e-8 * ra.quotient);
}

TEST_CASE("zero penalty is the plain solver", "[solver]") {
  const Grid g(1, 16.0, 512);
  const Multiplier m(g, 0.5);
  SolveOptions a;
  a.jitter = 0.05;
  a.seed = 4;
  SolveOptions b = a;
  b.barycenter_radius = 2.0;
  const auto ra = minimize(m, 3.0, nullptr, a);
  const auto rb = minimize(m, 3.0, nullptr, b);
  REQUIRE(ra.history.size() == rb.history.size());
  for (std::size_t k = 0; k < ra.history.size(); ++k) {
    CHECK(ra.history[k].quotient == rb.history[k].quotient);
    CHECK(ra.history[k].grad_norm == rb.history[k].grad_norm);
    CHECK(ra.history[k].step == rb.history[k].step);
  }
  CHECK(ra.minimizer.data() == rb.minimizer.data());
  // seeded jitter is reproducible
  CHECK(default_init(g, a).data() == default_init(g, a).data());
  SolveOptions c = a;
  c.seed = 5;
  CHECK(default_init(g, a).data() != default_init(g, c).data());
}

TEST_CASE("masked minimization", "[solver]") {
  const Grid g(1, 16.0, 1024);
  const Multiplier m(g, 0.5);
  SolveOptions o;
  o.tol_grad = 1e-6;
  const auto free = minimize(m, 3.0, nullptr, o);
  const Mask mask(g, 1.0);
  SolveOptions mo = o;
  mo.init_center = {6.0};
  const auto masked = minimize(m, 3.0, &mask, mo);
  CHECK(mask.violation(masked.minimizer) == 0.0);
  CHECK(masked.quotient >= free.quotient - 10.0 * o.tol_grad);

  const Mask none(g, 0.0);
  CHECK(none.empty());
  const auto same = minimize(m, 3.0, &none, o);
  CHECK(same.quotient == free.quotient);
}

TEST_CASE("M pair", "[solver]") {
  const Grid g(1, 16.0, 1024);
  SolveOptions o;
  o.tol_grad = 1e-6;
  const auto zero = estimate_M_pair(Params{0.5, 3.0, 1}, g, PairOptions{0.0, 0.0, 0.0, {}}, o);
  CHECK(zero.M_free == zero.M_masked);
  const auto one = estimate_M_pair(Params{0.5, 3.0, 1}, g, PairOptions{1.0, 0.0, 1e-5, {}}, o);
  CHECK(one.M_masked >= one.M_free);
  CHECK_THROWS_AS(estimate_M_pair(Params{0.5, 3.0, 2}, g, PairOptions{}, o), std::invalid_argument);
}

TEST_CASE("barycenter penalty", "[solver]") {
  const Grid g(1, 16.0, 1024);
  const Multiplier m(g, 0.5);
  const Mask mask(g, 0.5);
  SolveOptions o;
  o.tol_grad = 1e-6;
  o.barycenter_radius = 1.5;
  o.barycenter_penalty = 1.0 / (1.5 * 1.5);
  // symmetric init keeps tau at roundoff level
  const Field sym = Field::sample(g, [](const Point& x) { return std::exp(-(std::abs(x[0]) - 2.0) * (std::abs(x[0]) - 2.0)); });
  Field init = sym;
  mask.apply(init);
  const auto r = minimize_with_barycenter(m, 3.0, mask, o, init);
  CHECK(euclidean_norm(r.barycenter) < kBarycenterTolerance * o.barycenter_radius);
  const auto free = minimize(m, 3.0, nullptr, SolveOptions{});
  CHECK(r.quotient > free.quotient);
  SolveOptions bad = o;
  bad.barycenter_penalty = 0.0;
  CHECK_THROWS_AS(minimize_with_barycenter(m, 3.0, mask, bad), std::invalid_argument);
}

TEST_CASE("solver input validation", "[solver]") {
  const Grid g(1, 16.0, 512);
  const Multiplier m(g, 0.5);
  CHECK_THROWS_AS(minimize(m, 3.0, nullptr, SolveOptions{}, Field(g)), std::invalid_argument);
  CHECK_THROWS_AS(minimize(m, 2.0, nullptr, SolveOptions{}), std::invalid_argument);
  SolveOptions bad;
  bad.tol_grad = 0.0;
  bad.max_iters = 0;
  CHECK(bad.violations().size() == 2);
  CHECK_THROWS_AS(minimize(m, 3.0, nullptr, bad), std::invalid_argument);
  SolveOptions pen;
  pen.barycenter_penalty = 1.0;
  CHECK_FALSE(pen.violations().empty());
  CHECK_THROWS_AS(Mask(g, 4.0), std::invalid_argument);
  CHECK_THROWS_AS(Mask(g, 1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(minimize(m, 3.0, nullptr, SolveOptions{}, Field(Grid(1, 16.0, 256), 1.0)), std::invalid_argument);
}
