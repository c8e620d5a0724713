#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fraclab {

/// Upper bound on n^dim; 2^26 doubles is 512 MiB per field.
inline constexpr std::size_t kMaxGridPoints = std::size_t{1} << 26;

using Point = std::array<double, 3>;
using LatticeVector = std::vector<long>;

/// Periodic box [-L, L)^dim sampled with n points per axis.
class Grid {
 public:
  Grid() = default;
  Grid(int dim, double halfwidth, std::size_t n) : dim_(dim), halfwidth_(halfwidth), n_(n) {
    auto v = violations(dim, halfwidth, n);
    if (!v.empty()) {
      std::string msg = "invalid grid:";
      for (const auto& e : v) msg += " " + e + ";";
      throw std::invalid_argument(msg);
    }
  }

  static std::vector<std::string> violations(int dim, double halfwidth, std::size_t n) {
    std::vector<std::string> out;
    if (dim < 1 || dim > 3) out.push_back("grid dim must be 1, 2 or 3");
    if (!(halfwidth > 0.0) || !std::isfinite(halfwidth)) out.push_back("grid.halfwidth must be positive");
    if (n < 8 || (n & (n - 1)) != 0) out.push_back("grid.n must be a power of two >= 8");
    if (dim >= 1 && dim <= 3 && n >= 8) {
      std::size_t total = 1;
      for (int d = 0; d < dim; ++d) {
        if (total > kMaxGridPoints / n) {
          total = kMaxGridPoints + 1;
          break;
        }
        total *= n;
      }
      if (total > kMaxGridPoints) out.push_back("grid n^dim exceeds the memory budget");
    }
    return out;
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] double halfwidth() const { return halfwidth_; }
  [[nodiscard]] std::size_t n() const { return n_; }
  [[nodiscard]] double spacing() const { return 2.0 * halfwidth_ / static_cast<double>(n_); }
  [[nodiscard]] double cell_volume() const { return std::pow(spacing(), dim_); }
  [[nodiscard]] double volume() const { return std::pow(2.0 * halfwidth_, dim_); }

  [[nodiscard]] std::size_t size() const {
    std::size_t total = 1;
    for (int d = 0; d < dim_; ++d) total *= n_;
    return total;
  }

  /// Coordinate of index i along one axis.
  [[nodiscard]] double coord(std::size_t i) const { return -halfwidth_ + spacing() * static_cast<double>(i); }

  /// Row-major decode: the last axis varies fastest.
  [[nodiscard]] std::array<std::size_t, 3> unravel(std::size_t linear) const {
    std::array<std::size_t, 3> idx{0, 0, 0};
    for (int d = dim_ - 1; d >= 0; --d) {
      idx[d] = linear % n_;
      linear /= n_;
    }
    return idx;
  }

  [[nodiscard]] std::size_t ravel(const std::array<std::size_t, 3>& idx) const {
    std::size_t linear = 0;
    for (int d = 0; d < dim_; ++d) linear = linear * n_ + idx[d];
    return linear;
  }

  [[nodiscard]] Point point(std::size_t linear) const {
    auto idx = unravel(linear);
    Point x{0.0, 0.0, 0.0};
    for (int d = 0; d < dim_; ++d) x[d] = coord(idx[d]);
    return x;
  }

  [[nodiscard]] double radius(std::size_t linear) const {
    auto x = point(linear);
    double r2 = 0.0;
    for (int d = 0; d < dim_; ++d) r2 += x[d] * x[d];
    return std::sqrt(r2);
  }

  /// Linear index of the node at the origin (index n/2 on every axis).
  [[nodiscard]] std::size_t origin_index() const {
    return ravel({n_ / 2, dim_ > 1 ? n_ / 2 : 0, dim_ > 2 ? n_ / 2 : 0});
  }

  /// Nearest lattice vector (in cells) to a physical displacement.
  [[nodiscard]] LatticeVector to_lattice(std::span<const double> displacement) const {
    LatticeVector out(static_cast<std::size_t>(dim_), 0);
    for (int d = 0; d < dim_ && d < static_cast<int>(displacement.size()); ++d)
      out[d] = std::lround(displacement[d] / spacing());
    return out;
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.dim_ == b.dim_ && a.halfwidth_ == b.halfwidth_ && a.n_ == b.n_;
  }

 private:
  int dim_ = 1;
  double halfwidth_ = 1.0;
  std::size_t n_ = 8;
};

/// Real samples on a grid, row-major.
class Field {
 public:
  Field() = default;
  explicit Field(const Grid& grid, double value = 0.0) : grid_(grid), values_(grid.size(), value) {}
  Field(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw std::invalid_argument("field length " + std::to_string(values_.size()) + " does not match grid size " +
                                  std::to_string(grid_.size()));
  }

  /// Samples fn(x) at every node.
  template <typename Fn>
  static Field sample(const Grid& grid, Fn&& fn) {
    Field f(grid);
    for (std::size_t i = 0; i < f.size(); ++i) f.values_[i] = fn(grid.point(i));
    return f;
  }

  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<double> values() { return values_; }
  [[nodiscard]] const std::vector<double>& data() const { return values_; }
  [[nodiscard]] std::vector<double>& data() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  [[nodiscard]] bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  Field& operator+=(const Field& o) {
    check_same_grid(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_same_grid(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  Field& operator*=(double c) {
    for (double& v : values_) v *= c;
    return *this;
  }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, double c) { return a *= c; }
  friend Field operator*(double c, Field a) { return a *= c; }

  void check_same_grid(const Field& o) const {
    if (!(grid_ == o.grid_)) throw std::invalid_argument("grid mismatch between fields");
  }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Rectangle rule: h^dim * sum of values.
inline double integrate(const Field& f) {
  double acc = 0.0;
  for (double v : f.values()) acc += v;
  return f.grid().cell_volume() * acc;
}

/// L2 inner product by the rectangle rule.
inline double inner(const Field& a, const Field& b) {
  a.check_same_grid(b);
  double acc = 0.0;
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return a.grid().cell_volume() * acc;
}

/// g[i] = f[(i + offset) mod n] per axis, i.e. g(x) = f(x + offset*h).
inline Field lattice_shift(const Field& f, const LatticeVector& offset) {
  const Grid& g = f.grid();
  if (offset.size() != static_cast<std::size_t>(g.dim()))
    throw std::invalid_argument("lattice offset has " + std::to_string(offset.size()) + " components, grid has dim " +
                                std::to_string(g.dim()));
  const auto n = static_cast<long>(g.n());
  std::array<std::size_t, 3> shift{0, 0, 0};
  for (int d = 0; d < g.dim(); ++d) shift[d] = static_cast<std::size_t>(((offset[d] % n) + n) % n);
  Field out(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto idx = g.unravel(i);
    for (int d = 0; d < g.dim(); ++d) idx[d] = (idx[d] + shift[d]) % g.n();
    out[i] = f[g.ravel(idx)];
  }
  return out;
}

/// Fraction of the L2 mass sitting in the outer shell max_i |x_i| >= (1 - shell) L.
inline double tail_mass_fraction(const Field& f, double shell = 0.1) {
  const Grid& g = f.grid();
  const double cut = (1.0 - shell) * g.halfwidth();
  double total = 0.0;
  double outer = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double m = f[i] * f[i];
    total += m;
    auto x = g.point(i);
    double inf_norm = 0.0;
    for (int d = 0; d < g.dim(); ++d) inf_norm = std::max(inf_norm, std::abs(x[d]));
    if (inf_norm >= cut) outer += m;
  }
  return total > 0.0 ? outer / total : 0.0;
}

/// Box adequacy surrogate: outer-shell mass below 1e-6 of the total.
inline constexpr double kTailMassTolerance = 1e-6;

inline bool tail_mass_ok(const Field& f) { return tail_mass_fraction(f) < kTailMassTolerance; }

}  // namespace fraclab
