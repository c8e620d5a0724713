#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fraclab {

/// Problem triple for (-Delta)^s u + u = |u|^{p-2} u on R^dim.
struct Params {
  double s = 0.5;
  double p = 3.0;
  int dim = 1;

  /// 2N/(N-2s); +infinity when dim <= 2s.
  [[nodiscard]] double critical_exponent() const {
    const double denom = dim - 2.0 * s;
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return 2.0 * dim / denom;
  }

  /// dim <= 2s skips the subcritical gate; such runs are for validation only.
  [[nodiscard]] bool validation_only() const { return dim <= 2.0 * s; }

  /// Every violated invariant, in a fixed order. Empty means admissible.
  [[nodiscard]] std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (!(s > 0.0 && s <= 1.0)) out.push_back("params.s must satisfy 0 < s <= 1");
    if (dim < 1 || dim > 3) out.push_back("params.dim must be 1, 2 or 3");
    if (!(p > 2.0)) out.push_back("params.p must exceed 2");
    if (s > 0.0 && dim >= 1 && !validation_only() && p > 2.0 && !(p < critical_exponent())) {
      std::ostringstream os;
      os << "params.p = " << p << " is not subcritical (2_s^* = " << critical_exponent() << ")";
      out.push_back(os.str());
    }
    return out;
  }

  void validate() const {
    auto v = violations();
    if (v.empty()) return;
    std::string msg = "invalid params:";
    for (const auto& e : v) msg += " " + e + ";";
    throw std::invalid_argument(msg);
  }

  friend bool operator==(const Params&, const Params&) = default;
};

}  // namespace fraclab
