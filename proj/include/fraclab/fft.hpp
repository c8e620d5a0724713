#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "fraclab/grid.hpp"

namespace fraclab {

using Complex = std::complex<double>;

namespace detail {

enum class PlanKind { RealForward, RealInverse, ComplexForward, ComplexInverse };

/// Process-wide FFTW plan cache. Planning is serialized (FFTW's planner is not
/// thread-safe); execution uses the new-array interface, which is. Plans are
/// built with FFTW_ESTIMATE | FFTW_UNALIGNED so the chosen codelets depend
/// only on the shape, never on buffer alignment or timing.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(PlanKind kind, int dim, std::size_t n) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(kind, dim, n);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    int dims[3] = {static_cast<int>(n), static_cast<int>(n), static_cast<int>(n)};
    std::size_t total = 1;
    for (int d = 0; d < dim; ++d) total *= n;
    const std::size_t half = total / n * (n / 2 + 1);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = nullptr;
    switch (kind) {
      case PlanKind::RealForward: {
        auto* in = fftw_alloc_real(total);
        auto* out = fftw_alloc_complex(half);
        plan = fftw_plan_dft_r2c(dim, dims, in, out, flags);
        fftw_free(in);
        fftw_free(out);
        break;
      }
      case PlanKind::RealInverse: {
        auto* in = fftw_alloc_complex(half);
        auto* out = fftw_alloc_real(total);
        plan = fftw_plan_dft_c2r(dim, dims, in, out, flags);
        fftw_free(in);
        fftw_free(out);
        break;
      }
      case PlanKind::ComplexForward:
      case PlanKind::ComplexInverse: {
        auto* in = fftw_alloc_complex(total);
        auto* out = fftw_alloc_complex(total);
        plan = fftw_plan_dft(dim, dims, in, out, kind == PlanKind::ComplexForward ? FFTW_FORWARD : FFTW_BACKWARD,
                             flags);
        fftw_free(in);
        fftw_free(out);
        break;
      }
    }
    if (!plan) throw std::runtime_error("FFTW planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }
  std::mutex mutex_;
  std::map<std::tuple<PlanKind, int, std::size_t>, fftw_plan> plans_;
};

inline fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace detail

/// Number of half-spectrum entries for a real transform on this grid.
inline std::size_t half_spectrum_size(const Grid& g) { return g.size() / g.n() * (g.n() / 2 + 1); }

/// Unnormalized r2c transform (last axis halved).
inline std::vector<Complex> real_forward(const Grid& g, std::span<const double> values) {
  std::vector<Complex> out(half_spectrum_size(g));
  auto plan = detail::PlanCache::instance().get(detail::PlanKind::RealForward, g.dim(), g.n());
  fftw_execute_dft_r2c(plan, const_cast<double*>(values.data()), detail::as_fftw(out.data()));
  return out;
}

/// Inverse of real_forward including the 1/N factor. Consumes its argument.
inline std::vector<double> real_inverse(const Grid& g, std::vector<Complex> half) {
  std::vector<double> out(g.size());
  auto plan = detail::PlanCache::instance().get(detail::PlanKind::RealInverse, g.dim(), g.n());
  fftw_execute_dft_c2r(plan, detail::as_fftw(half.data()), out.data());
  const double scale = 1.0 / static_cast<double>(g.size());
  for (double& v : out) v *= scale;
  return out;
}

/// Full complex DFT coefficients c_k = sum_j f_j exp(-2 pi i k.j / n), standard index order.
struct Spectrum {
  Grid grid;
  std::vector<Complex> coeffs;

  /// integrate(f^2) = volume / N^2 * sum |c_k|^2 for the field this came from.
  [[nodiscard]] double parseval_energy() const {
    double acc = 0.0;
    for (const auto& c : coeffs) acc += std::norm(c);
    const double total = static_cast<double>(grid.size());
    return grid.volume() / (total * total) * acc;
  }
};

inline Spectrum forward_transform(const Field& f) {
  const Grid& g = f.grid();
  Spectrum s{g, std::vector<Complex>(g.size())};
  std::vector<Complex> in(f.values().begin(), f.values().end());
  auto plan = detail::PlanCache::instance().get(detail::PlanKind::ComplexForward, g.dim(), g.n());
  fftw_execute_dft(plan, detail::as_fftw(in.data()), detail::as_fftw(s.coeffs.data()));
  return s;
}

/// Real part of the normalized inverse DFT; the imaginary part is roundoff for
/// a conjugate-symmetric spectrum.
inline Field inverse_transform(const Spectrum& s) {
  const Grid& g = s.grid;
  if (s.coeffs.size() != g.size()) throw std::invalid_argument("spectrum length does not match grid");
  std::vector<Complex> in = s.coeffs;
  std::vector<Complex> out(g.size());
  auto plan = detail::PlanCache::instance().get(detail::PlanKind::ComplexInverse, g.dim(), g.n());
  fftw_execute_dft(plan, detail::as_fftw(in.data()), detail::as_fftw(out.data()));
  Field f(g);
  const double scale = 1.0 / static_cast<double>(g.size());
  for (std::size_t i = 0; i < out.size(); ++i) f[i] = out[i].real() * scale;
  return f;
}

/// Signed integer frequency index for DFT slot k: 0..n/2-1 then -n/2..-1.
inline long signed_frequency(std::size_t k, std::size_t n) {
  return k < n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

}  // namespace fraclab
