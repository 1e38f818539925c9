#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "ccch/field.hpp"

namespace ccch {

/// Periodized Green function of 1 - d^2/dx^2 on [-L, L):
///   p_L(x) = cosh(L - |x|) / (2 sinh L),
/// evaluated in a form that does not overflow for large L. Tends to
/// exp(-|x|)/2 as L grows.
inline double green_kernel_eval(double x, double half_length) {
  const double a = std::abs(x);
  const double L = half_length;
  return (std::exp(-a) + std::exp(-(2.0 * L - a))) / (2.0 * (1.0 - std::exp(-2.0 * L)));
}

/// d/dx of green_kernel_eval for x != 0 (returns 0 at x == 0).
inline double green_kernel_slope(double x, double half_length) {
  if (x == 0.0) return 0.0;
  const double a = std::abs(x);
  const double L = half_length;
  const double mag = (std::exp(-a) - std::exp(-(2.0 * L - a))) / (2.0 * (1.0 - std::exp(-2.0 * L)));
  return x > 0.0 ? -mag : mag;
}

/// Direct-sum convolution of f with the periodized kernel.
///
/// The integrand p_L(x_i - y) f(y) has a slope jump of size f(x_i) at y = x_i
/// (a grid node), so the plain periodic trapezoid sum is only second order.
/// The leading Euler-Maclaurin term for that kink, -h^2 f(x_i) / 12, is added
/// back, which leaves an O(h^4) rule for smooth f. O(N^2); used as an
/// independent check of helmholtz_inverse.
inline RealField convolve_green_quadrature(const RealField& f) {
  const Grid& g = f.grid();
  const std::size_t n = g.size();
  const double h = g.spacing();
  std::vector<double> kernel(n);
  for (std::size_t d = 0; d < n; ++d) {
    kernel[d] = green_kernel_eval(g.wrap(static_cast<double>(d) * h), g.half_length());
  }
  RealField out(g);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += kernel[(i + n - j) % n] * f[j];
    out[i] = h * acc - h * h / 12.0 * f[i];
  }
  return out;
}

/// Split of the Green-function convolution at node x_i into its left and
/// right contributions,
///   I1 = 1/2 e^{-x} int_{-L}^{x} e^{y} m(y) dy,
///   I2 = 1/2 e^{x}  int_{x}^{L}  e^{-y} m(y) dy,
/// so that u = I1 + I2 and u_x = -I1 + I2 (for m supported away from +-L).
/// Trapezoid rule with the Euler-Maclaurin endpoint-slope correction, the
/// slope of m taken by central differences.
inline std::pair<double, double> decompose_I1_I2(const RealField& m, std::size_t x_index) {
  const Grid& g = m.grid();
  const std::size_t n = g.size();
  if (x_index >= n) throw ContractError("decompose_I1_I2: node index out of range");
  const double h = g.spacing();
  const double x = g.node(x_index);
  auto at = [&](long j) { return m[static_cast<std::size_t>((j % static_cast<long>(n) + static_cast<long>(n)) % static_cast<long>(n))]; };
  auto slope = [&](long j) { return (at(j + 1) - at(j - 1)) / (2.0 * h); };
  // The correction is asymptotic; on the edge of a steep tail it can exceed
  // the sum it corrects, and is then dropped.
  auto corrected = [](double sum, double corr) { return std::abs(corr) < std::abs(sum) ? sum + corr : sum; };
  const auto i = static_cast<long>(x_index);
  const auto nn = static_cast<long>(n);

  // Left: nodes 0..i, integrand e^{y-x} m(y).
  double left = 0.0;
  if (i > 0) {
    for (long j = 0; j <= i; ++j) {
      const double w = (j == 0 || j == i) ? 0.5 : 1.0;
      left += w * std::exp(g.node(static_cast<std::size_t>(j)) - x) * at(j);
    }
    left *= h;
    auto dg = [&](long j) {
      return std::exp(g.node(static_cast<std::size_t>(j)) - x) * (at(j) + slope(j));
    };
    left = corrected(left, -h * h / 12.0 * (dg(i) - dg(0)));
  }

  // Right: nodes i..n (node n is +L, periodic image of node 0), integrand e^{x-y} m(y).
  double right = 0.0;
  {
    auto y_of = [&](long j) { return -g.half_length() + static_cast<double>(j) * h; };
    for (long j = i; j <= nn; ++j) {
      const double w = (j == i || j == nn) ? 0.5 : 1.0;
      right += w * std::exp(x - y_of(j)) * at(j);
    }
    right *= h;
    auto dg = [&](long j) { return std::exp(x - y_of(j)) * (slope(j) - at(j)); };
    right = corrected(right, -h * h / 12.0 * (dg(nn) - dg(i)));
  }
  return {0.5 * left, 0.5 * right};
}

}  // namespace ccch
