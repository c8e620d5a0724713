#pragma once

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fraclab/config.hpp"
#include "fraclab/experiments.hpp"
#include "fraclab/io.hpp"

namespace fraclab {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitInconclusive = 2;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitBadConfig = 65;
inline constexpr int kExitNoInput = 66;

using Runner = std::function<ExperimentReport(Context&)>;

inline const std::vector<std::pair<std::string, Runner>>& runners() {
  static const std::vector<std::pair<std::string, Runner>> table = {
      {"ground-state", run_limit_problem},     {"exterior-min", run_exterior_sweep},
      {"trial-scan", run_trial_convergence},   {"threshold-scan", run_threshold_scan},
      {"barycenter-gap", run_barycenter_gap},  {"level-bracket", run_level_bracket},
      {"splitting", run_splitting},
  };
  return table;
}

/// 0 when every report passes, 1 when any fails, 2 when any is inconclusive and none fail.
inline int exit_code(const std::vector<Verdict>& verdicts) {
  bool inconclusive = false;
  for (auto v : verdicts) {
    if (v == Verdict::Fail) return kExitFail;
    if (v == Verdict::Inconclusive) inconclusive = true;
  }
  return inconclusive ? kExitInconclusive : kExitPass;
}

inline ExperimentReport run_guarded(const std::string& name, const Runner& run, Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    return run(ctx);
  } catch (const std::exception& e) {
    ExperimentReport r;
    r.name = name;
    r.inconclusive.push_back(std::string("runner aborted: ") + e.what());
    r.verdict = Verdict::Inconclusive;
    r.runtime_seconds = detail::seconds_since(t0);
    return r;
  }
}

/// NormReport of the configured snapshot, or of exp(-|x|^2) on the configured grid.
inline json norms_json(const Config& c, const fs::path& config_dir) {
  Field f;
  std::string source;
  if (!c.norms_snapshot.empty()) {
    fs::path p = c.norms_snapshot;
    if (p.is_relative()) p = config_dir / p;
    f = read_snapshot(p).field;
    source = c.norms_snapshot;
  } else {
    f = Field::sample(c.grid(), [&](const Point& x) {
      double r2 = 0.0;
      for (int d = 0; d < c.params.dim; ++d) r2 += x[d] * x[d];
      return std::exp(-r2);
    });
    source = "gaussian";
  }
  const Multiplier m(f.grid(), c.params.s);
  json j = to_json(hs_norm_sq(m, f, c.params.p));
  j["source"] = source;
  return j;
}

/// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Pseudospectral laboratory for fractional ground states in exterior domains", "fraclab"};
  std::string config_path;
  std::string outdir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  app.add_option("--config", config_path, "flat key = value configuration file");
  app.add_option("--out", outdir, "output directory (overrides output.dir)");
  app.add_option("--seed", seed, "seed for initial-guess jitter (overrides solver.seed)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 1024));
  app.require_subcommand(1);
  std::vector<std::string> names;
  for (const auto& [n, r] : runners()) names.push_back(n);
  names.push_back("norms");
  names.push_back("all");
  for (const auto& n : names) app.add_subcommand(n, "run " + n)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  Config cfg;
  fs::path config_dir = fs::current_path();
  if (!config_path.empty()) {
    std::string text;
    try {
      text = read_text(config_path);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitNoInput;
    }
    try {
      cfg = parse_config(text);
    } catch (const ConfigError& e) {
      err << e.what() << "\n";
      return kExitBadConfig;
    }
    config_dir = fs::path(config_path).parent_path();
  }
  if (seed) cfg.solver.seed = *seed;
  if (!outdir.empty()) cfg.output_dir = outdir;

  if (command == "norms") {
    try {
      const json j = norms_json(cfg, config_dir);
      out << j.dump(2) << "\n";
      write_text(fs::path(cfg.output_dir) / "norms" / "report.json", j.dump(2) + "\n");
      return kExitPass;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitNoInput;
    }
  }

  Context ctx;
  ctx.config = cfg;
  ctx.threads = threads;
  ctx.cache = std::make_shared<GroundStateCache>(fs::path(cfg.output_dir) / "cache");
  std::vector<Verdict> verdicts;
  for (const auto& [name, run] : runners()) {
    if (command != "all" && command != name) continue;
    auto report = run_guarded(name, run, ctx);
    write_report(report, cfg.output_dir, threads);
    out << name << ": " << verdict_name(report.verdict) << "\n";
    verdicts.push_back(report.verdict);
  }
  return exit_code(verdicts);
}

}  // namespace fraclab
