#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "fraclab/config.hpp"
#include "fraclab/io.hpp"
#include "support.hpp"

using namespace fraclab;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("fraclab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("parse examples", "[config]") {
  const Config c = parse_config("# comment\nparams.s = 0.45\nparams.p = 3.5  # trailing\n\nparams.dim = 1\ngrid.n = 64\n"
                                "grid.halfwidth = 12\ntrial.ys = [0, 1.5, 3]\nsolver.positivity = false\n");
  CHECK(c.params.s == 0.45);
  CHECK(c.params.p == 3.5);
  CHECK(c.params.dim == 1);
  CHECK(c.grid() == Grid(1, 12.0, 64));
  CHECK(c.trial_ys == std::vector<double>{0.0, 1.5, 3.0});
  CHECK_FALSE(c.solver.positivity);
  CHECK(parse_config("") == Config{});
}

TEST_CASE("parse errors are collected", "[config]") {
  try {
    parse_config("params.s = 1.5\nparams.p = 2\nbogus.key = 1\nnot a pair\nparams.s = 0.5\ngrid.n = 100\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const auto& p = e.problems();
    auto has = [&](const std::string& needle) {
      return std::any_of(p.begin(), p.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
    };
    CHECK(has("line 3: unknown key 'bogus.key'"));
    CHECK(has("line 4: syntax error"));
    CHECK(has("line 5: duplicate key 'params.s'"));
    CHECK(has("params.s must satisfy"));
    CHECK(has("params.p must exceed 2"));
    CHECK(has("grid.n"));
  }
  CHECK_THROWS_AS(parse_config("params.s = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("params.dim = 3\nparams.s = 0.5\nparams.p = 3.5\n"), ConfigError);
}

TEST_CASE("serialize round trip", "[config]") {
  Config c;
  c.params = {0.35, 3.25, 1};
  c.grid_halfwidth = 10.0;
  c.grid_n = 128;
  c.trial_ys = {0.1, 1.0 / 3.0};
  c.solver.tol_grad = 3.3e-9;
  c.output_dir = "elsewhere";
  CHECK(parse_config(serialize_config(c)) == c);
  CHECK(parse_config(serialize_config(Config{})) == Config{});
  CHECK(parse_config(read_text(FRACLAB_SOURCE_DIR "/configs/default.conf")).violations().empty());
}

TEST_CASE("snapshot round trip", "[io]") {
  const auto dir = scratch("snap");
  std::mt19937_64 rng(51);
  const Grid g(2, 3.0, 16);
  const Field f = testing::random_noise(g, rng);
  write_snapshot(dir / "f", f, Params{0.4, 3.0, 2}, "noise");
  const auto s = read_snapshot(dir / "f.f64");
  CHECK(s.field.grid() == g);
  CHECK(s.field.data() == f.data());
  CHECK(s.params == Params{0.4, 3.0, 2});
  CHECK(s.description == "noise");
  CHECK(read_snapshot(dir / "f").field.data() == f.data());
  fs::resize_file(dir / "f.f64", 8 * 100);
  CHECK_THROWS_AS(read_snapshot(dir / "f"), std::runtime_error);
  CHECK_THROWS_AS(read_snapshot(dir / "missing"), std::runtime_error);

  const auto bundled = read_snapshot(FRACLAB_SOURCE_DIR "/configs/gaussian_1d");
  CHECK(bundled.field.grid() == Grid(1, 20.0, 1024));
  CHECK(integrate(bundled.field) == Catch::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-12));
}

TEST_CASE("tables and JSON records", "[io]") {
  Table t{{"a", "b"}, {}};
  t.add({1.0, 0.1});
  t.add({-2.5, 1e-300});
  CHECK(to_csv(t) == "a,b\n1,0.1\n-2.5,1e-300\n");
  CHECK_THROWS_AS(t.add({1.0}), std::logic_error);
  const json j = to_json(NormReport{1.0, 2.0, 3.0, 4.0});
  for (const char* k : {"l2_sq", "seminorm_sq", "hs_sq", "lp"}) CHECK(j.contains(k));
  CHECK(to_json(SplitReport{}).size() == 3);
  CHECK(to_json(EnergyBreakdown{}).size() == 5);
  const auto h = history_table({{0, 1.0, 0.5, 0.0, 0.25}});
  CHECK(to_csv(h) == "iter,quotient,grad_norm,barycenter_norm,step\n0,1,0.5,0,0.25\n");
}
