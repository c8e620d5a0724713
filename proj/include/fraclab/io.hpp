#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fraclab/config.hpp"
#include "fraclab/fracops.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/params.hpp"

namespace fraclab {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Snapshot {
  Field field;
  Params params;
  std::string description;
};

/// Writes <base>.f64 (little-endian doubles, row-major) and the <base>.json sidecar.
inline void write_snapshot(const fs::path& base, const Field& f, const Params& params, const std::string& description) {
  if (!base.parent_path().empty()) fs::create_directories(base.parent_path());
  fs::path bin = base;
  bin += ".f64";
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + bin.string());
  for (double v : f.values()) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  const json side = {{"dim", f.grid().dim()},         {"n", f.grid().n()}, {"halfwidth", f.grid().halfwidth()},
                     {"s", params.s},                 {"p", params.p},     {"description", description}};
  fs::path meta = base;
  meta += ".json";
  std::ofstream(meta) << side.dump(2) << "\n";
}

/// Reads a snapshot given either the .f64 path, the .json path, or the base.
inline Snapshot read_snapshot(fs::path path) {
  if (path.extension() == ".f64" || path.extension() == ".json") path.replace_extension();
  fs::path meta = path;
  meta += ".json";
  fs::path bin = path;
  bin += ".f64";
  std::ifstream mf(meta);
  if (!mf) throw std::runtime_error("cannot read snapshot sidecar " + meta.string());
  json side;
  try {
    mf >> side;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed snapshot sidecar " + meta.string() + ": " + e.what());
  }
  for (const char* key : {"dim", "n", "halfwidth", "s", "p"})
    if (!side.contains(key)) throw std::runtime_error("snapshot sidecar lacks '" + std::string(key) + "'");
  const Grid g(side["dim"].get<int>(), side["halfwidth"].get<double>(), side["n"].get<std::size_t>());
  std::ifstream bf(bin, std::ios::binary | std::ios::ate);
  if (!bf) throw std::runtime_error("cannot read snapshot data " + bin.string());
  const auto bytes = static_cast<std::size_t>(bf.tellg());
  if (bytes != g.size() * sizeof(double))
    throw std::runtime_error("snapshot " + bin.string() + " holds " + std::to_string(bytes / sizeof(double)) +
                             " values, sidecar implies " + std::to_string(g.size()));
  bf.seekg(0);
  std::vector<double> values(g.size());
  for (double& v : values) {
    std::uint64_t bits = 0;
    bf.read(reinterpret_cast<char*>(&bits), sizeof bits);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v = std::bit_cast<double>(bits);
  }
  Snapshot snap{Field(g, std::move(values)), Params{side["s"].get<double>(), side["p"].get<double>(), g.dim()},
                side.value("description", std::string{})};
  if (!snap.field.all_finite()) throw std::runtime_error("snapshot " + bin.string() + " contains non-finite values");
  return snap;
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) {
    if (row.size() != columns.size()) throw std::logic_error("table row width does not match header");
    rows.push_back(std::move(row));
  }
};

/// CSV with a header row; numbers in shortest round-trip form.
inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? "," : "") + t.columns[c];
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + detail::format_double(row[c]);
    out += "\n";
  }
  return out;
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json to_json(const NormReport& r) {
  return {{"l2_sq", r.l2_sq}, {"seminorm_sq", r.seminorm_sq}, {"hs_sq", r.hs_sq}, {"lp", r.lp}};
}

inline json to_json(const EnergyBreakdown& e) {
  return {{"quadratic", e.quadratic},         {"potential", e.potential}, {"total", e.total},
          {"residual_norm", e.residual_norm}, {"dual_norm", e.dual_norm}};
}

inline json to_json(const SplitReport& r) {
  return {{"norm_gap", r.norm_gap}, {"lp_gap", r.lp_gap}, {"energy_gap", r.energy_gap}};
}

inline Table history_table(const std::vector<HistoryRow>& history) {
  Table t{{"iter", "quotient", "grad_norm", "barycenter_norm", "step"}, {}};
  for (const auto& h : history) t.add({static_cast<double>(h.iter), h.quotient, h.grad_norm, h.barycenter_norm, h.step});
  return t;
}

}  // namespace fraclab
