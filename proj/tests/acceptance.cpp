// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "fraclab/cli.hpp"
#include "support.hpp"

using namespace fraclab;
using fraclab::testing::rel;

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void verdict(int id, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// -- criterion 1 -----------------------------------------------------------

void exact_identities() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> order(0.05, 1.0), expo(2.1, 6.0), unit(0.0, 1.0);
  std::uniform_int_distribution<int> dims(1, 3);
  std::uniform_int_distribution<long> off(-64, 64);
  double worst_energy = 0, worst_parseval = 0, worst_shift = 0, worst_bary = 0;
  const int trials = 120;
  for (int t = 0; t < trials; ++t) {
    const int dim = dims(rng);
    const std::size_t n = dim == 1 ? 256 : dim == 2 ? 64 : 16;
    const Grid g(dim, 4.0 + 8.0 * unit(rng), n);
    const Multiplier m(g, order(rng));
    const double p = expo(rng);
    const Field f = testing::random_bumps(g, rng);

    const auto e = energy(m, f, p);
    const double id = (0.5 - 1.0 / p) * hs_sq(m, f) + nehari_residual(m, f, p) / p;
    worst_energy = std::max(worst_energy, std::abs(e.total - id) / std::max(std::abs(e.total), 1e-300));

    std::vector<long> k(static_cast<std::size_t>(dim));
    for (auto& v : k) v = std::uniform_int_distribution<long>(-static_cast<long>(n) / 2 + 1, static_cast<long>(n) / 2 - 1)(rng);
    if (std::all_of(k.begin(), k.end(), [](long v) { return v == 0; })) k[0] = 1;
    const double amp = 0.5 + unit(rng), phase = 2.0 * std::numbers::pi * unit(rng);
    const double dk = std::numbers::pi / g.halfwidth();
    const Field mode = Field::sample(g, [&](const Point& x) {
      double a = phase;
      for (int d = 0; d < dim; ++d) a += dk * static_cast<double>(k[static_cast<std::size_t>(d)]) * x[d];
      return amp * std::cos(a);
    });
    const double expect = (m.symbol_at(k) + 1.0) * amp * amp * g.volume() / 2.0;
    worst_parseval = std::max(worst_parseval, rel(hs_sq(m, mode), expect));

    LatticeVector z(static_cast<std::size_t>(dim));
    for (auto& v : z) v = off(rng);
    const Field s = lattice_shift(f, z);
    worst_shift = std::max({worst_shift, rel(hs_sq(m, s), hs_sq(m, f)), rel(lp_power(s, p), lp_power(f, p)),
                            rel(inner(s, s), inner(f, f))});

    const double R = 0.25 + 4.0 * unit(rng);
    const double tn = euclidean_norm(barycenter(BarycenterSpec{R}, f));
    worst_bary = std::max(worst_bary, (tn - R * inner(f, f)) / (R * inner(f, f)));
  }
  const double rt = seconds(t0);
  const bool ok = worst_energy < 1e-10 && worst_parseval < 1e-10 && worst_shift < 1e-10 && worst_bary <= 1e-10 && rt < 30;
  verdict(1, ok,
          std::to_string(trials) + " fields; energy identity " + fmt(worst_energy) + ", single-mode norm " +
              fmt(worst_parseval) + ", shift invariance " + fmt(worst_shift) + ", barycenter bound excess " +
              fmt(worst_bary) + "; " + fmt(rt) + " s");
}

// -- criterion 2 -----------------------------------------------------------

void oracles() {
  const auto t0 = Clock::now();
  std::string detail;
  bool ok = true;

  {
    const Grid g(1, 20.0, 1024);
    SolveOptions o;
    o.tol_grad = 1e-9;
    const auto r = minimize(Multiplier(g, 1.0), 4.0, nullptr, o);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      err = std::max(err, std::abs(r.rescaled_solution[i] - std::sqrt(2.0) / std::cosh(g.point(i)[0])));
    ok = ok && err < 1e-3;
    detail += "(a) sech sup error " + fmt(err) + (err < 1e-3 ? " ok" : " FAIL");
  }
  {
    auto residual = [](std::size_t n) {
      const Grid g(1, 80.0, n);
      const Field f = Field::sample(g, [](const Point& x) { return 2.0 / (1.0 + x[0] * x[0]); });
      const Field r = gradient(Multiplier(g, 0.5), f, 3.0);
      double sup = 0.0;
      for (double v : r.values()) sup = std::max(sup, std::abs(v));
      return sup;
    };
    const double r1 = residual(4096), r2 = residual(8192);
    const bool b = r1 < 1e-3 && r2 <= 0.5 * r1;
    ok = ok && b;
    detail += "; (b) residual " + fmt(r1) + " -> " + fmt(r2) + (b ? " ok" : " FAIL");
  }
  {
    const double s = 0.4;
    const double C = 0.5 / cosine_kernel_integral_closed_form(1, s);
    std::vector<double> err;
    for (std::size_t n : {128, 256, 512}) {
      const Grid g(1, 24.0, n);
      const Field f = Field::sample(g, [](const Point& x) { return std::exp(-x[0] * x[0]); });
      err.push_back(std::abs(hs_norm_sq(Multiplier(g, s), f).seminorm_sq / (C * gagliardo_oracle(f, s)) - 1.0));
    }
    const bool c = err[2] < 0.05 && err[1] < err[0] && err[2] < err[1];
    ok = ok && c;
    detail += "; (c) seminorm mismatch " + fmt(err[0]) + ", " + fmt(err[1]) + ", " + fmt(err[2]) + (c ? " ok" : " FAIL");
  }
  const double rt = seconds(t0);
  ok = ok && rt < 300;
  verdict(2, ok, detail + "; " + fmt(rt) + " s");
}

// -- criteria 3 to 7 -------------------------------------------------------

struct Reports {
  std::map<std::string, json> report;
  std::map<std::string, double> runtime;
  int exit_code = 0;
  double wall = 0.0;
};

Reports run_all(const fs::path& out, int threads) {
  fs::remove_all(out);
  const std::string config = FRACLAB_SOURCE_DIR "/configs/default.conf";
  const std::string outdir = out.string();
  const std::string nthreads = std::to_string(threads);
  const char* argv[] = {"fraclab", "--config", config.c_str(), "--out", outdir.c_str(), "--threads", nthreads.c_str(), "all"};
  std::ostringstream sink;
  const auto t0 = Clock::now();
  Reports r;
  r.exit_code = run_cli(8, argv, sink, sink);
  r.wall = seconds(t0);
  for (const auto& e : fs::directory_iterator(out)) {
    if (!fs::exists(e.path() / "report.json")) continue;
    const auto name = e.path().filename().string();
    r.report[name] = json::parse(read_text(e.path() / "report.json"));
    r.runtime[name] = json::parse(read_text(e.path() / "environment.json"))["runtime_seconds"].get<double>();
  }
  return r;
}

double scalar(const json& rep, const std::string& name) {
  for (const auto& s : rep["scalars"])
    if (s["name"] == name) return s["value"].is_null() ? std::nan("") : s["value"].get<double>();
  return std::nan("");
}

bool passed(const Reports& r, const std::string& name) {
  const auto it = r.report.find(name);
  return it != r.report.end() && it->second["verdict"] == "pass" && verdict_from_json(it->second) == Verdict::Pass;
}

std::string state(const Reports& r, const std::string& name) {
  const auto it = r.report.find(name);
  return name + " " + (it == r.report.end() ? std::string("missing") : it->second["verdict"].get<std::string>());
}

double runtime(const Reports& r, const std::string& name) {
  const auto it = r.runtime.find(name);
  return it == r.runtime.end() ? 1e300 : it->second;
}

void suite_criteria(const Reports& r) {
  {
    const double rt = runtime(r, "exterior_minimization");
    const bool ok = passed(r, "exterior_minimization") && rt < 600;
    const auto& rep = r.report.count("exterior_minimization") ? r.report.at("exterior_minimization") : json::object();
    verdict(3, ok,
            state(r, "exterior_minimization") + ", final relative gap " + fmt(scalar(rep, "final_relative_gap")) + "; " +
                fmt(rt) + " s");
  }
  {
    const double rt = runtime(r, "trial_convergence") + runtime(r, "threshold_scan") + runtime(r, "ground_state");
    const auto& gs = r.report.count("ground_state") ? r.report.at("ground_state") : json::object();
    const double decay = scalar(gs, "decay_violations");
    const bool ok = passed(r, "trial_convergence") && passed(r, "threshold_scan") && decay == 0.0 && rt < 900;
    verdict(4, ok,
            state(r, "trial_convergence") + ", " + state(r, "threshold_scan") + ", decay violations " + fmt(decay) +
                "; " + fmt(rt) + " s");
  }
  {
    const double rt = runtime(r, "barycenter_gap") + runtime(r, "level_bracket");
    const bool ok = passed(r, "barycenter_gap") && passed(r, "level_bracket") && rt < 900;
    const auto& lb = r.report.count("level_bracket") ? r.report.at("level_bracket") : json::object();
    verdict(5, ok,
            state(r, "barycenter_gap") + ", " + state(r, "level_bracket") + ", c0/M " + fmt(scalar(lb, "lower_over_M")) +
                ", upper/M " + fmt(scalar(lb, "upper_over_M")) + "; " + fmt(rt) + " s");
  }
  {
    const double rt = runtime(r, "splitting");
    const bool ok = passed(r, "splitting") && rt < 300;
    verdict(6, ok, state(r, "splitting") + "; " + fmt(rt) + " s");
  }
}

std::vector<std::string> payload_files(const fs::path& root) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() != "environment.json")
      out.push_back(fs::relative(e.path(), root).generic_string());
  std::sort(out.begin(), out.end());
  return out;
}

void determinism(const fs::path& a, const fs::path& b) {
  const auto fa = payload_files(a), fb = payload_files(b);
  std::size_t differ = 0;
  for (const auto& f : fa)
    if (std::find(fb.begin(), fb.end(), f) == fb.end() || read_text(a / f) != read_text(b / f)) ++differ;
  const bool ok = fa == fb && differ == 0 && !fa.empty();
  verdict(7, ok, std::to_string(fa.size()) + " payload files compared, " + std::to_string(differ) + " differ" +
                     (fa == fb ? "" : ", file sets differ"));
}

}  // namespace

int main() {
  exact_identities();
  oracles();
  const fs::path root = fs::temp_directory_path() / "fraclab_acceptance";
  const Reports one = run_all(root / "threads1", 1);
  suite_criteria(one);
  const Reports eight = run_all(root / "threads8", 8);
  determinism(root / "threads1", root / "threads8");
  std::printf("all: %.1f s with 1 thread, %.1f s with 8 threads\n", one.wall, eight.wall);
  return failures == 0 ? 0 : 1;
}
