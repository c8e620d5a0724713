#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraclab/constructions.hpp"
#include "fraclab/fracops.hpp"
#include "fraclab/functionals.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/mask.hpp"
#include "fraclab/params.hpp"

namespace fraclab {

struct SolveOptions {
  int max_iters = 5000;
  double step_init = 0.5;
  double tol_value = 1e-12;  ///< relative decrease of the objective per step
  double tol_grad = 1e-7;    ///< L2 norm of the projected gradient
  bool positivity = true;
  double barycenter_penalty = 0.0;  ///< mu
  std::uint64_t seed = 0;
  double barycenter_radius = 0.0;  ///< R of the weight chi; 0 disables tau tracking
  double jitter = 0.0;             ///< relative amplitude of the seeded init perturbation
  std::vector<double> init_center;  ///< bump center for the default init (origin if empty)
  double init_width = 1.0;

  [[nodiscard]] std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (max_iters < 1) out.push_back("solver.max_iters must be >= 1");
    if (!(step_init > 0.0)) out.push_back("solver.step_init must be positive");
    if (!(tol_value > 0.0)) out.push_back("solver.tol_value must be positive");
    if (!(tol_grad > 0.0)) out.push_back("solver.tol_grad must be positive");
    if (!(barycenter_penalty >= 0.0)) out.push_back("solver.barycenter_penalty must be >= 0");
    if (!(barycenter_radius >= 0.0)) out.push_back("solver.barycenter_radius must be >= 0");
    if (barycenter_penalty > 0.0 && !(barycenter_radius > 0.0))
      out.push_back("solver.barycenter_radius is required when the penalty is active");
    if (!(jitter >= 0.0)) out.push_back("solver.jitter must be >= 0");
    if (!(init_width > 0.0)) out.push_back("solver.init_width must be positive");
    return out;
  }

  void validate() const {
    auto v = violations();
    if (v.empty()) return;
    std::string msg = "invalid solver options:";
    for (const auto& e : v) msg += " " + e + ";";
    throw std::invalid_argument(msg);
  }

  friend bool operator==(const SolveOptions&, const SolveOptions&) = default;
};

struct HistoryRow {
  int iter = 0;
  double quotient = 0.0;  ///< objective: ||u||^2 plus the penalty when mu > 0
  double grad_norm = 0.0;
  double barycenter_norm = 0.0;
  double step = 0.0;
};

struct SolveResult {
  Field minimizer;
  double quotient = 0.0;
  Field rescaled_solution;
  int iterations = 0;
  bool converged = false;
  std::vector<HistoryRow> history;
  double objective = 0.0;
  double grad_norm = 0.0;
  double tangent_grad_norm = 0.0;
  double dual_grad_norm = 0.0;
  std::vector<double> barycenter;
  double penalty = 0.0;
};

/// Gaussian of the given width centred at `center` (origin when empty), with
/// optional multiplicative seeded jitter.
inline Field default_init(const Grid& grid, const SolveOptions& opts) {
  Point c{0.0, 0.0, 0.0};
  for (std::size_t d = 0; d < opts.init_center.size() && d < 3; ++d) c[d] = opts.init_center[d];
  const double w2 = opts.init_width * opts.init_width;
  Field f = Field::sample(grid, [&](const Point& x) {
    double r2 = 0.0;
    for (int d = 0; d < grid.dim(); ++d) r2 += (x[d] - c[d]) * (x[d] - c[d]);
    return std::exp(-r2 / w2);
  });
  if (opts.jitter > 0.0) {
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= 1.0 + opts.jitter * unit(rng);
  }
  return f;
}

namespace detail {

struct Projection {
  const Mask* mask;
  bool positivity;
  double p;

  /// Mask, absolute value, renormalize. Returns false for a vanishing field.
  bool operator()(Field& v) const {
    if (mask) mask->apply(v);
    if (positivity)
      for (double& x : v.values()) x = std::abs(x);
    const double norm = lp_norm(v, p);
    if (!(norm > 0.0) || !std::isfinite(norm)) return false;
    v *= 1.0 / norm;
    return true;
  }
};

}  // namespace detail

/// Projected, H^s-preconditioned gradient descent for ||u||^2 on the unit L^p
/// sphere, optionally over the masked subspace, the nonnegative cone, and with
/// the penalty mu |tau(u)|^2.
inline SolveResult minimize(const Multiplier& m, double p, const Mask* mask, const SolveOptions& opts,
                            std::optional<Field> init = std::nullopt) {
  opts.validate();
  if (!(p > 2.0)) throw std::invalid_argument("minimize requires p > 2");
  const Grid& grid = m.grid();
  if (mask && !(mask->grid() == grid)) throw std::invalid_argument("grid mismatch between mask and multiplier");
  const double mu = opts.barycenter_penalty;
  std::vector<Field> kernel;
  if (opts.barycenter_radius > 0.0) kernel = barycenter_kernel({opts.barycenter_radius}, grid);
  const detail::Projection project{mask, opts.positivity, p};

  Field u = init ? std::move(*init) : default_init(grid, opts);
  m.check_grid(u);
  if (!project(u)) throw std::invalid_argument("initial guess vanishes after projection");

  auto tau_of = [&](const Field& f) { return kernel.empty() ? std::vector<double>{} : barycenter(kernel, f); };
  auto tau_sq = [](const std::vector<double>& t) {
    double a = 0.0;
    for (double x : t) a += x * x;
    return a;
  };
  auto objective = [&](const Field& f, std::vector<double>* tau_out) {
    auto t = tau_of(f);
    double j = hs_sq(m, f);
    if (mu > 0.0) j += mu * tau_sq(t);
    if (tau_out) *tau_out = std::move(t);
    return j;
  };

  std::vector<double> tau;
  double J = objective(u, &tau);
  double step = opts.step_init;
  SolveResult res;
  std::optional<Field> prev_u;
  std::optional<Field> prev_g;
  double gn = 0.0;
  Field g(grid);
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    const Field Au = apply_shifted(m, u);
    const double q = inner(u, Au);
    g = Au;
    const Field pw = detail::power_term(u, p);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= q * pw[i];
    if (mu > 0.0) {
      const double t2 = tau_sq(tau);
      for (std::size_t i = 0; i < g.size(); ++i) {
        double tw = 0.0;
        for (std::size_t d = 0; d < kernel.size(); ++d) tw += tau[d] * kernel[d][i];
        g[i] += mu * (2.0 * tw * u[i] - 2.0 * t2 * pw[i]);
      }
    }
    if (mask) mask->apply(g);
    gn = std::sqrt(inner(g, g));

    Field dir = apply_shifted_inverse(m, g);
    if (mask) mask->apply(dir);
    if (prev_u) {
      const Field du = u - *prev_u;
      const Field dg = g - *prev_g;
      const double den = inner(du, dg);
      if (den > 0.0) step = std::clamp(hs_inner(m, du, du) / den, 1e-8, 1e8);
    }
    prev_u = u;
    prev_g = g;

    Field v(grid);
    double Jv = J;
    std::vector<double> tau_v;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      v = u;
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= step * dir[i];
      if (project(v)) {
        Jv = objective(v, &tau_v);
        if (Jv <= J) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    const double decrease = accepted ? J - Jv : 0.0;
    if (accepted) {
      u = std::move(v);
      J = Jv;
      tau = std::move(tau_v);
    }
    res.history.push_back({it, J, gn, tau.empty() ? 0.0 : euclidean_norm(tau), accepted ? step : 0.0});
    if (decrease < opts.tol_value * J && gn < opts.tol_grad) {
      res.converged = true;
      ++it;
      break;
    }
    if (!accepted) break;
  }
  res.iterations = it;

  // final diagnostics at the returned point
  const Field Au = apply_shifted(m, u);
  const double q = inner(u, Au);
  Field gq = Au;
  const Field pw = detail::power_term(u, p);
  for (std::size_t i = 0; i < gq.size(); ++i) gq[i] -= q * pw[i];
  if (mask) mask->apply(gq);
  res.grad_norm = std::sqrt(inner(gq, gq));
  res.dual_grad_norm = dual_norm(m, gq);
  Field normal = pw;
  if (mask) mask->apply(normal);
  const double nn = inner(normal, normal);
  Field tangent = gq;
  if (nn > 0.0) tangent -= normal * (inner(gq, normal) / nn);
  res.tangent_grad_norm = std::sqrt(inner(tangent, tangent));
  if (!res.converged && res.grad_norm < opts.tol_grad && !res.history.empty() && res.history.back().step == 0.0)
    res.converged = true;

  res.quotient = hs_sq(m, u);
  res.objective = J;
  res.barycenter = tau;
  res.penalty = mu > 0.0 ? mu * tau_sq(tau) : 0.0;
  res.rescaled_solution = u * std::pow(res.quotient, 1.0 / (p - 2.0));
  res.minimizer = std::move(u);
  return res;
}

class ContinuationFailure : public std::runtime_error {
 public:
  ContinuationFailure(const std::string& what, SolveResult last) : std::runtime_error(what), last_(std::move(last)) {}
  [[nodiscard]] const SolveResult& last() const { return last_; }

 private:
  SolveResult last_;
};

/// tau tolerance relative to the weight radius.
inline constexpr double kBarycenterTolerance = 1e-6;

/// Penalty continuation mu in {1, 10, 100} * opts.barycenter_penalty; each
/// stage starts from the previous minimizer. The last stage's quotient is the
/// c0 estimate. Throws ContinuationFailure if |tau| stays above 1e-6 R.
inline SolveResult minimize_with_barycenter(const Multiplier& m, double p, const Mask& mask, const SolveOptions& opts,
                                            std::optional<Field> init = std::nullopt) {
  if (!(opts.barycenter_penalty > 0.0)) throw std::invalid_argument("barycenter continuation requires mu > 0");
  const double tol = kBarycenterTolerance * opts.barycenter_radius;
  SolveResult res;
  std::optional<Field> start = std::move(init);
  int total_iters = 0;
  std::vector<HistoryRow> history;
  for (double factor : {1.0, 10.0, 100.0}) {
    SolveOptions stage = opts;
    stage.barycenter_penalty = opts.barycenter_penalty * factor;
    res = minimize(m, p, &mask, stage, std::move(start));
    for (auto row : res.history) {
      row.iter += total_iters;
      history.push_back(row);
    }
    total_iters += res.iterations;
    start = res.minimizer;
  }
  res.iterations = total_iters;
  res.history = std::move(history);
  const double tn = euclidean_norm(res.barycenter);
  if (!(tn < tol))
    throw ContinuationFailure("barycenter |tau| = " + std::to_string(tn) + " above tolerance " + std::to_string(tol),
                              std::move(res));
  return res;
}

struct MPair {
  double M_free = 0.0;
  double M_masked = 0.0;
  double barycenter_norm = 0.0;  ///< |tau| of the masked minimizer
  bool converged = false;
  SolveResult free;
  SolveResult masked;
};

struct PairOptions {
  double rho = 0.0;
  double container = 0.0;  ///< Dirichlet container halfwidth, 0 for none
  double masked_tol_grad = 0.0;  ///< gradient tolerance for masked solves; 0 keeps opts.tol_grad
  std::vector<std::vector<double>> masked_centers;  ///< empty: matched to the free init when rho = 0, else one center
};

/// M_free from the default init; M_masked as the minimum over masked solves
/// started at each center (with the seeded jitter). With rho = 0 and no
/// container the masked problem is the free one and the same init is used.
inline MPair estimate_M_pair(const Params& params, const Grid& grid, const PairOptions& pair, const SolveOptions& opts) {
  params.validate();
  if (params.dim != grid.dim()) throw std::invalid_argument("params.dim does not match grid dim");
  const Multiplier m(grid, params.s);
  const Mask mask(grid, pair.rho, pair.container);
  MPair out;
  out.free = minimize(m, params.p, nullptr, opts);
  out.M_free = out.free.quotient;

  SolveOptions mopts = opts;
  if (pair.masked_tol_grad > 0.0) mopts.tol_grad = pair.masked_tol_grad;
  if (mopts.barycenter_radius == 0.0) mopts.barycenter_radius = pair.rho > 0.0 ? 3.0 * pair.rho : 1.0;
  if (mask.empty()) {
    out.masked = minimize(m, params.p, &mask, opts);
  } else {
    auto centers = pair.masked_centers;
    if (centers.empty()) {
      const double wall = pair.container > 0.0 ? pair.container : grid.halfwidth();
      std::vector<double> c(static_cast<std::size_t>(grid.dim()), 0.0);
      c[0] = 0.5 * (wall + pair.rho);
      centers.push_back(c);
    }
    bool first = true;
    for (const auto& c : centers) {
      SolveOptions o = mopts;
      o.init_center = c;
      auto r = minimize(m, params.p, &mask, o);
      if (first || r.quotient < out.masked.quotient) out.masked = std::move(r);
      first = false;
    }
  }
  out.M_masked = out.masked.quotient;
  const double R = mopts.barycenter_radius;
  out.barycenter_norm = euclidean_norm(barycenter(BarycenterSpec{R}, out.masked.minimizer));
  out.converged = out.free.converged && out.masked.converged;
  return out;
}

}  // namespace fraclab
