#pragma once

// Reference computations that do not share code with the library.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

inline std::vector<double> nodes(double L, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t j = 0; j < n; ++j) x[j] = -L + 2.0 * L * static_cast<double>(j) / static_cast<double>(n);
  return x;
}

inline double bump(double x, double c, double w, double a) {
  const double s = (x - c) / w;
  return std::abs(s) < 1.0 ? a * std::exp(-1.0 / (1.0 - s * s)) : 0.0;
}

/// cosh(L - |x|) / (2 sinh L), straight from the closed form (fine for moderate L).
inline double periodic_green(double x, double L) { return std::cosh(L - std::abs(x)) / (2.0 * std::sinh(L)); }

/// O(n^2) DFT, unnormalized, forward sign -1.
inline std::vector<cplx> dft(const std::vector<cplx>& f) {
  const std::size_t n = f.size();
  std::vector<cplx> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    cplx acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      acc += f[j] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(j * k % n) / static_cast<double>(n));
    }
    out[k] = acc;
  }
  return out;
}

/// Signed mode index of DFT bin k.
inline long mode(std::size_t k, std::size_t n) {
  return k <= n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

/// Fourier coefficients (normalized by n) of the product of two trigonometric
/// polynomials given by their coefficients, truncated to |mode| < n/2.
inline std::vector<cplx> truncated_product_coefficients(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  const std::size_t n = a.size();
  const long half = static_cast<long>(n / 2);
  std::vector<cplx> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const long ki = mode(i, n), kj = mode(j, n);
      if (ki == half || kj == half) continue;
      const long k = ki + kj;
      if (k <= -half || k >= half) continue;
      out[static_cast<std::size_t>((k + static_cast<long>(n)) % static_cast<long>(n))] += a[i] * b[j];
    }
  }
  return out;
}

/// Closed-form period of the m/n peakon pair started at separation d0.
inline double waltz_period(double m, double n, double d0) {
  const double h = m * n * std::exp(-std::abs(d0)) / 2.0;
  const double sigma = m + n;
  return 2.0 * std::sqrt(sigma * sigma - 8.0 * h) / h;
}

}  // namespace oracle
