#pragma once

#include <array>
#include <cstddef>

namespace reorient::detail {

/// Truncated power series c0 + c1 t + ... + c_{N-1} t^{N-1}; enough arithmetic
/// to push the polynomial equations of motion through Taylor-mode
/// differentiation.
template <std::size_t N>
struct Series {
  std::array<double, N> c{};

  Series() = default;
  Series(double v) { c[0] = v; }  // NOLINT(google-explicit-constructor)

  friend Series operator+(const Series& a, const Series& b) {
    Series r;
    for (std::size_t i = 0; i < N; ++i) r.c[i] = a.c[i] + b.c[i];
    return r;
  }
  friend Series operator-(const Series& a, const Series& b) {
    Series r;
    for (std::size_t i = 0; i < N; ++i) r.c[i] = a.c[i] - b.c[i];
    return r;
  }
  friend Series operator-(const Series& a) {
    Series r;
    for (std::size_t i = 0; i < N; ++i) r.c[i] = -a.c[i];
    return r;
  }
  friend Series operator*(const Series& a, const Series& b) {
    Series r;
    for (std::size_t i = 0; i < N; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k <= i; ++k) s += a.c[k] * b.c[i - k];
      r.c[i] = s;
    }
    return r;
  }
};

}  // namespace reorient::detail
