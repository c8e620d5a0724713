#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "fraclab/grid.hpp"
#include "fraclab/params.hpp"
#include "fraclab/solver.hpp"

namespace fraclab {

/// Every problem found while reading a config, in file order.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
  [[nodiscard]] const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid config:";
    for (const auto& e : v) out += "\n  " + e;
    return out;
  }
  std::vector<std::string> problems_;
};

struct Config {
  Params params{0.3, 3.0, 1};
  double grid_halfwidth = 8.0;
  std::size_t grid_n = 32768;
  SolveOptions solver;
  double masked_tol_grad = 1e-4;
  std::string output_dir = "out";

  double decay_radius = 1.0;

  // exterior minimization sweep
  Params sweep_params{0.4, 4.0, 1};
  double sweep_rho = 1.0;
  std::vector<double> sweep_halfwidths{10.0, 20.0, 40.0};
  double sweep_spacing = 0.0390625;
  double sweep_padding = 2.0;

  // trial-function convergence
  std::vector<double> trial_rhos{1.0, 0.5, 0.25};
  std::vector<double> trial_ys{0.0, 1.0, 2.0, 5.0};

  // threshold scan
  std::vector<double> scan_rhos{0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625, 0.001953125};
  double scan_y_max = 6.0;
  double scan_y_step = 0.25;
  double scan_fine_radius = 6.0;

  // barycenter gap and level bracket
  double gap_rho = 0.001953125;
  double gap_R = 0.0;    ///< 0 selects 3 rho
  double gap_mu0 = 0.0;  ///< 0 selects 1/R^2
  double gap_y_max = 6.0;

  // splitting
  double split_halfwidth = 64.0;
  std::size_t split_n = 32768;
  std::vector<double> split_shifts{7, 8, 9, 10, 11, 12, 13, 14};  ///< log2 of the shift in cells

  std::string norms_snapshot;

  [[nodiscard]] Grid grid() const { return Grid(params.dim, grid_halfwidth, grid_n); }
  [[nodiscard]] double gap_radius() const { return gap_R > 0.0 ? gap_R : 3.0 * gap_rho; }
  [[nodiscard]] double gap_penalty() const { return gap_mu0 > 0.0 ? gap_mu0 : 1.0 / (gap_radius() * gap_radius()); }

  /// Grid n for one container halfwidth of the sweep; 0 if not a power of two.
  [[nodiscard]] std::size_t sweep_n(double halfwidth) const {
    const double raw = 2.0 * sweep_padding * halfwidth / sweep_spacing;
    const auto n = static_cast<std::size_t>(std::llround(raw));
    if (std::abs(raw - static_cast<double>(n)) > 1e-9 || n < 8 || (n & (n - 1)) != 0) return 0;
    return n;
  }

  [[nodiscard]] std::vector<std::string> violations() const;

  friend bool operator==(const Config&, const Config&) = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline bool parse_double(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::vector<std::string> split_list(const std::string& raw) {
  std::string body = trim(raw);
  if (!body.empty() && body.front() == '[') {
    if (body.back() != ']') return {"\x01"};
    body = body.substr(1, body.size() - 2);
  }
  std::vector<std::string> items;
  if (trim(body).empty()) return items;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  return items;
}

/// One entry of the key table: how to read and write a config field.
struct KeyBinding {
  std::function<std::string(Config&, const std::string&)> read;  ///< returns an error message or ""
  std::function<std::string(const Config&)> write;
};

inline KeyBinding bind_double(double Config::*field) {
  return {[field](Config& c, const std::string& v) -> std::string {
            return parse_double(v, c.*field) ? "" : "expected a number, got '" + v + "'";
          },
          [field](const Config& c) { return format_double(c.*field); }};
}

template <typename Get>
KeyBinding bind_double_fn(Get get) {
  return {[get](Config& c, const std::string& v) -> std::string {
            return parse_double(v, get(c)) ? "" : "expected a number, got '" + v + "'";
          },
          [get](const Config& c) { return format_double(get(const_cast<Config&>(c))); }};
}

template <typename Get>
KeyBinding bind_int_fn(Get get) {
  return {[get](Config& c, const std::string& v) -> std::string {
            long long x = 0;
            auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
            if (ec != std::errc() || ptr != v.data() + v.size()) return "expected an integer, got '" + v + "'";
            using T = std::remove_reference_t<decltype(get(c))>;
            if (x < 0 && !std::is_signed_v<T>) return "expected a nonnegative integer, got '" + v + "'";
            get(c) = static_cast<T>(x);
            return "";
          },
          [get](const Config& c) { return std::to_string(get(const_cast<Config&>(c))); }};
}

inline KeyBinding bind_list(std::vector<double> Config::*field) {
  return {[field](Config& c, const std::string& v) -> std::string {
            auto items = split_list(v);
            if (items.size() == 1 && items[0] == "\x01") return "unterminated list '" + v + "'";
            std::vector<double> out;
            for (const auto& it : items) {
              double x = 0.0;
              if (!parse_double(it, x)) return "expected a list of numbers, got '" + v + "'";
              out.push_back(x);
            }
            c.*field = std::move(out);
            return "";
          },
          [field](const Config& c) {
            std::string s = "[";
            for (std::size_t i = 0; i < (c.*field).size(); ++i) s += (i ? ", " : "") + format_double((c.*field)[i]);
            return s + "]";
          }};
}

inline KeyBinding bind_string(std::string Config::*field) {
  return {[field](Config& c, const std::string& v) -> std::string {
            c.*field = v;
            return "";
          },
          [field](const Config& c) { return c.*field; }};
}

inline const std::map<std::string, KeyBinding>& key_table() {
  static const std::map<std::string, KeyBinding> table = [] {
    std::map<std::string, KeyBinding> t;
    t["params.s"] = bind_double_fn([](Config& c) -> double& { return c.params.s; });
    t["params.p"] = bind_double_fn([](Config& c) -> double& { return c.params.p; });
    t["params.dim"] = bind_int_fn([](Config& c) -> int& { return c.params.dim; });
    t["grid.halfwidth"] = bind_double(&Config::grid_halfwidth);
    t["grid.n"] = bind_int_fn([](Config& c) -> std::size_t& { return c.grid_n; });
    t["solver.max_iters"] = bind_int_fn([](Config& c) -> int& { return c.solver.max_iters; });
    t["solver.step_init"] = bind_double_fn([](Config& c) -> double& { return c.solver.step_init; });
    t["solver.tol_value"] = bind_double_fn([](Config& c) -> double& { return c.solver.tol_value; });
    t["solver.tol_grad"] = bind_double_fn([](Config& c) -> double& { return c.solver.tol_grad; });
    t["solver.masked_tol_grad"] = bind_double(&Config::masked_tol_grad);
    t["solver.positivity"] = {[](Config& c, const std::string& v) -> std::string {
                                if (v == "true") c.solver.positivity = true;
                                else if (v == "false") c.solver.positivity = false;
                                else return "expected true or false, got '" + v + "'";
                                return "";
                              },
                              [](const Config& c) { return std::string(c.solver.positivity ? "true" : "false"); }};
    t["solver.seed"] = bind_int_fn([](Config& c) -> std::uint64_t& { return c.solver.seed; });
    t["solver.jitter"] = bind_double_fn([](Config& c) -> double& { return c.solver.jitter; });
    t["solver.init_width"] = bind_double_fn([](Config& c) -> double& { return c.solver.init_width; });
    t["output.dir"] = bind_string(&Config::output_dir);
    t["limit.decay_radius"] = bind_double(&Config::decay_radius);
    t["sweep.s"] = bind_double_fn([](Config& c) -> double& { return c.sweep_params.s; });
    t["sweep.p"] = bind_double_fn([](Config& c) -> double& { return c.sweep_params.p; });
    t["sweep.dim"] = bind_int_fn([](Config& c) -> int& { return c.sweep_params.dim; });
    t["sweep.rho"] = bind_double(&Config::sweep_rho);
    t["sweep.halfwidths"] = bind_list(&Config::sweep_halfwidths);
    t["sweep.spacing"] = bind_double(&Config::sweep_spacing);
    t["sweep.padding"] = bind_double(&Config::sweep_padding);
    t["trial.rhos"] = bind_list(&Config::trial_rhos);
    t["trial.ys"] = bind_list(&Config::trial_ys);
    t["scan.rhos"] = bind_list(&Config::scan_rhos);
    t["scan.y_max"] = bind_double(&Config::scan_y_max);
    t["scan.y_step"] = bind_double(&Config::scan_y_step);
    t["scan.fine_radius"] = bind_double(&Config::scan_fine_radius);
    t["gap.rho"] = bind_double(&Config::gap_rho);
    t["gap.R"] = bind_double(&Config::gap_R);
    t["gap.mu0"] = bind_double(&Config::gap_mu0);
    t["gap.y_max"] = bind_double(&Config::gap_y_max);
    t["split.halfwidth"] = bind_double(&Config::split_halfwidth);
    t["split.n"] = bind_int_fn([](Config& c) -> std::size_t& { return c.split_n; });
    t["split.shifts"] = bind_list(&Config::split_shifts);
    t["norms.snapshot"] = bind_string(&Config::norms_snapshot);
    return t;
  }();
  return table;
}

}  // namespace detail

inline std::vector<std::string> Config::violations() const {
  std::vector<std::string> out;
  auto add = [&](const std::vector<std::string>& v) { out.insert(out.end(), v.begin(), v.end()); };
  add(params.violations());
  add(Grid::violations(params.dim, grid_halfwidth, grid_n));
  add(solver.violations());
  if (!(masked_tol_grad > 0.0)) out.push_back("solver.masked_tol_grad must be positive");
  if (output_dir.empty()) out.push_back("output.dir must not be empty");
  if (!(decay_radius > 0.0)) out.push_back("limit.decay_radius must be positive");

  for (auto e : sweep_params.violations()) out.push_back("sweep: " + e);
  if (!(sweep_rho >= 0.0)) out.push_back("sweep.rho must be >= 0");
  if (sweep_halfwidths.empty()) out.push_back("sweep.halfwidths must not be empty");
  if (!std::is_sorted(sweep_halfwidths.begin(), sweep_halfwidths.end()) ||
      std::adjacent_find(sweep_halfwidths.begin(), sweep_halfwidths.end()) != sweep_halfwidths.end())
    out.push_back("sweep.halfwidths must be strictly increasing");
  if (!(sweep_padding >= 1.0)) out.push_back("sweep.padding must be >= 1");
  if (!(sweep_spacing > 0.0)) out.push_back("sweep.spacing must be positive");
  for (double L : sweep_halfwidths) {
    if (!(L > 0.0)) {
      out.push_back("sweep.halfwidths entries must be positive");
      continue;
    }
    if (sweep_spacing > 0.0 && sweep_n(L) == 0)
      out.push_back("sweep: 2 * padding * " + detail::format_double(L) + " / spacing is not a power of two >= 8");
    if (!(sweep_rho < 0.25 * L)) out.push_back("sweep.rho must be below a quarter of every sweep halfwidth");
  }

  const double quarter = 0.25 * grid_halfwidth;
  auto check_rhos = [&](const std::vector<double>& rhos, const char* key) {
    if (rhos.empty()) out.push_back(std::string(key) + " must not be empty");
    for (double r : rhos)
      if (!(r > 0.0 && r < quarter)) out.push_back(std::string(key) + " entries must lie in (0, halfwidth/4)");
  };
  check_rhos(trial_rhos, "trial.rhos");
  check_rhos(scan_rhos, "scan.rhos");
  if (trial_ys.empty()) out.push_back("trial.ys must not be empty");
  for (double y : trial_ys)
    if (!(y >= 0.0 && y < grid_halfwidth)) out.push_back("trial.ys entries must lie in [0, halfwidth)");
  if (!(scan_y_max > 0.0 && scan_y_max < grid_halfwidth)) out.push_back("scan.y_max must lie in (0, halfwidth)");
  if (!(scan_y_step > 0.0)) out.push_back("scan.y_step must be positive");
  if (!(scan_fine_radius >= 0.0)) out.push_back("scan.fine_radius must be >= 0");
  if (!(gap_rho > 0.0 && gap_rho < quarter)) out.push_back("gap.rho must lie in (0, halfwidth/4)");
  if (!(gap_R >= 0.0)) out.push_back("gap.R must be >= 0");
  if (gap_R > 0.0 && gap_R < gap_rho) out.push_back("gap.R must contain the obstacle (R >= rho)");
  if (!(gap_mu0 >= 0.0)) out.push_back("gap.mu0 must be >= 0");
  if (!(gap_y_max > 0.0 && gap_y_max < grid_halfwidth)) out.push_back("gap.y_max must lie in (0, halfwidth)");

  for (auto e : Grid::violations(params.dim, split_halfwidth, split_n)) out.push_back("split: " + e);
  if (split_shifts.empty()) out.push_back("split.shifts must not be empty");
  for (double k : split_shifts)
    if (!(k >= 0.0 && k == std::floor(k) && std::ldexp(1.0, static_cast<int>(k)) <= 0.5 * static_cast<double>(split_n)))
      out.push_back("split.shifts entries must be integers k with 2^k <= split.n/2");
  return out;
}

/// Parses the flat `section.key = value` format. Comments start with '#'.
/// Collects every syntax and constraint problem before throwing ConfigError.
inline Config parse_config(std::string_view text) {
  Config c;
  std::vector<std::string> problems;
  std::map<std::string, int> seen;
  const auto& table = detail::key_table();
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) {
      problems.push_back(where + "syntax error, expected 'key = value'");
      continue;
    }
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (key.empty() || value.empty()) {
      problems.push_back(where + "syntax error, empty key or value");
      continue;
    }
    const auto it = table.find(key);
    if (it == table.end()) {
      problems.push_back(where + "unknown key '" + key + "'");
      continue;
    }
    if (auto [prev, inserted] = seen.emplace(key, line_no); !inserted) {
      problems.push_back(where + "duplicate key '" + key + "' (first set on line " + std::to_string(prev->second) + ")");
      continue;
    }
    if (auto err = it->second.read(c, value); !err.empty()) problems.push_back(where + key + ": " + err);
  }
  for (auto& v : c.violations()) problems.push_back(std::move(v));
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

/// Every key with its current value, in key order.
inline std::map<std::string, std::string> config_entries(const Config& c) {
  std::map<std::string, std::string> out;
  for (const auto& [key, binding] : detail::key_table()) out[key] = binding.write(c);
  return out;
}

inline std::string serialize_config(const Config& c) {
  std::string out;
  for (const auto& [key, value] : config_entries(c))
    if (!value.empty()) out += key + " = " + value + "\n";
  return out;
}

}  // namespace fraclab
