#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <type_traits>
#include <vector>

#include "ccch/errors.hpp"
#include "ccch/grid.hpp"

namespace ccch {

using cplx = std::complex<double>;

template <class T>
concept FieldScalar = std::is_same_v<T, double> || std::is_same_v<T, cplx>;

/// Samples of a real or complex function on a Grid. Value type.
template <FieldScalar T>
class Field {
 public:
  using value_type = T;

  explicit Field(const Grid& grid) : grid_(grid), samples_(grid.size(), T{}) {}

  Field(const Grid& grid, std::vector<T> samples)
      : grid_(grid), samples_(std::move(samples)) {
    if (samples_.size() != grid_.size()) {
      throw ContractError("field sample count does not match grid size");
    }
  }

  /// Samples f(x_j) at every node.
  template <class F>
  static Field sample(const Grid& grid, F&& f) {
    Field out(grid);
    for (std::size_t j = 0; j < grid.size(); ++j) out[j] = static_cast<T>(f(grid.node(j)));
    return out;
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return samples_.size(); }

  T& operator[](std::size_t j) { return samples_[j]; }
  const T& operator[](std::size_t j) const { return samples_[j]; }

  std::span<T> values() { return samples_; }
  std::span<const T> values() const { return samples_; }

  auto begin() { return samples_.begin(); }
  auto end() { return samples_.end(); }
  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

  double max_abs() const {
    double mx = 0.0;
    for (const T& v : samples_) mx = std::max(mx, std::abs(v));
    return mx;
  }

  bool all_finite() const {
    return std::all_of(samples_.begin(), samples_.end(), [](const T& v) {
      if constexpr (std::is_same_v<T, double>) {
        return std::isfinite(v);
      } else {
        return std::isfinite(v.real()) && std::isfinite(v.imag());
      }
    });
  }

  Field& operator+=(const Field& o) {
    check_same_grid(o);
    for (std::size_t j = 0; j < size(); ++j) samples_[j] += o.samples_[j];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_same_grid(o);
    for (std::size_t j = 0; j < size(); ++j) samples_[j] -= o.samples_[j];
    return *this;
  }
  Field& operator*=(double s) {
    for (T& v : samples_) v *= s;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator*(Field a, double s) { return a *= s; }

  /// a += s * b
  void axpy(double s, const Field& b) {
    check_same_grid(b);
    for (std::size_t j = 0; j < size(); ++j) samples_[j] += s * b.samples_[j];
  }

  void check_same_grid(const Field& o) const {
    if (!(grid_ == o.grid_)) throw ContractError("fields live on different grids");
  }

 private:
  Grid grid_;
  std::vector<T> samples_;
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;

inline ComplexField to_complex(const RealField& f) {
  ComplexField out(f.grid());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = f[j];
  return out;
}

inline ComplexField to_complex(const RealField& re, const RealField& im) {
  re.check_same_grid(im);
  ComplexField out(re.grid());
  for (std::size_t j = 0; j < re.size(); ++j) out[j] = cplx(re[j], im[j]);
  return out;
}

inline RealField real_part(const ComplexField& f) {
  RealField out(f.grid());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = f[j].real();
  return out;
}

inline RealField imag_part(const ComplexField& f) {
  RealField out(f.grid());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = f[j].imag();
  return out;
}

inline ComplexField conj(const ComplexField& f) {
  ComplexField out(f.grid());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = std::conj(f[j]);
  return out;
}

template <FieldScalar T>
double max_abs_diff(const Field<T>& a, const Field<T>& b) {
  a.check_same_grid(b);
  double mx = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) mx = std::max(mx, std::abs(a[j] - b[j]));
  return mx;
}

/// Uniform-grid quadrature of a periodic field (rectangle = trapezoid here).
template <FieldScalar T>
T integrate(const Field<T>& f) {
  T acc{};
  for (const T& v : f) acc += v;
  return acc * f.grid().spacing();
}

}  // namespace ccch
