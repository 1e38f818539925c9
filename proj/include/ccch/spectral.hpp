#pragma once

#include <vector>

#include "ccch/fft.hpp"
#include "ccch/field.hpp"

namespace ccch {

using Spectrum = std::vector<cplx>;

namespace detail {

inline void require_finite(const auto& f, const char* what) {
  if (!f.all_finite()) throw NumericError(std::string(what) + ": non-finite input");
}

template <FieldScalar T>
Field<T> narrow(const Grid& g, const std::vector<cplx>& values) {
  Field<T> out(g);
  for (std::size_t j = 0; j < values.size(); ++j) {
    if constexpr (std::is_same_v<T, double>) {
      out[j] = values[j].real();
    } else {
      out[j] = values[j];
    }
  }
  return out;
}

}  // namespace detail

template <FieldScalar T>
Spectrum spectrum(const Field<T>& f) {
  const std::size_t n = f.size();
  std::vector<cplx> in(f.begin(), f.end());
  Spectrum out(n);
  fft::plan_for(n).forward(in, out);
  return out;
}

template <FieldScalar T>
Field<T> from_spectrum(const Grid& g, const Spectrum& s) {
  std::vector<cplx> out(s.size());
  fft::plan_for(s.size()).inverse(s, out);
  return detail::narrow<T>(g, out);
}

/// i k f_hat; the Nyquist bin is zeroed so real input stays real.
inline Spectrum differentiate(const Grid& g, Spectrum s) {
  for (std::size_t j = 0; j < s.size(); ++j) {
    s[j] = g.is_nyquist(j) ? cplx{} : s[j] * cplx(0.0, g.wavenumber(j));
  }
  return s;
}

/// Applies (1 + k^2)^{-1}, the Fourier symbol of (1 - d^2/dx^2)^{-1}.
inline Spectrum smooth(const Grid& g, Spectrum s) {
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double k = g.wavenumber(j);
    s[j] /= 1.0 + k * k;
  }
  return s;
}

/// Applies (1 + k^2), the symbol of 1 - d^2/dx^2.
inline Spectrum roughen(const Grid& g, Spectrum s) {
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double k = g.wavenumber(j);
    s[j] *= 1.0 + k * k;
  }
  return s;
}

/// d/dx in the Fourier basis of the periodic grid.
template <FieldScalar T>
Field<T> spectral_derivative(const Field<T>& f) {
  detail::require_finite(f, "spectral_derivative");
  return from_spectrum<T>(f.grid(), differentiate(f.grid(), spectrum(f)));
}

/// Solves (1 - d^2/dx^2) g = f on the periodic grid.
template <FieldScalar T>
Field<T> helmholtz_inverse(const Field<T>& f) {
  detail::require_finite(f, "helmholtz_inverse");
  return from_spectrum<T>(f.grid(), smooth(f.grid(), spectrum(f)));
}

/// (1 - d^2/dx^2) f, spectrally.
template <FieldScalar T>
Field<T> helmholtz_forward(const Field<T>& f) {
  detail::require_finite(f, "helmholtz_forward");
  return from_spectrum<T>(f.grid(), roughen(f.grid(), spectrum(f)));
}

/// Exact products of band-limited fields by 3/2 zero-padding.
///
/// A spectrum with N bins is lifted to a physical grid of 3N/2 points, where
/// products of two such fields are alias-free for every retained bin; the
/// product is transformed back and truncated to the original band. The
/// Nyquist bin is excluded from the band on both sides.
class PaddedTransform {
 public:
  explicit PaddedTransform(std::size_t n)
      : n_(n), m_(3 * n / 2), big_(fft::plan_for(3 * n / 2)) {}

  std::size_t padded_size() const { return m_; }

  /// Spectrum (N bins) -> physical samples on the padded grid.
  std::vector<cplx> lift(const Spectrum& s) const {
    std::vector<cplx> g(m_, cplx{});
    const std::size_t h = n_ / 2;
    for (std::size_t j = 0; j < h; ++j) g[j] = s[j];
    for (std::size_t j = 1; j < h; ++j) g[m_ - j] = s[n_ - j];
    std::vector<cplx> out(m_);
    big_.inverse(g, out);
    const double scale = static_cast<double>(m_) / static_cast<double>(n_);
    for (auto& v : out) v *= scale;
    return out;
  }

  /// Physical samples on the padded grid -> spectrum truncated to N bins.
  Spectrum lower(const std::vector<cplx>& physical) const {
    std::vector<cplx> g(m_);
    big_.forward(physical, g);
    const double scale = static_cast<double>(n_) / static_cast<double>(m_);
    Spectrum s(n_, cplx{});
    const std::size_t h = n_ / 2;
    for (std::size_t j = 0; j < h; ++j) s[j] = g[j] * scale;
    for (std::size_t j = 1; j < h; ++j) s[n_ - j] = g[m_ - j] * scale;
    return s;
  }

 private:
  std::size_t n_;
  std::size_t m_;
  const fft::Plan& big_;
};

/// Alias-free product a*b of two fields, truncated to the grid's band.
template <FieldScalar T>
Field<T> dealiased_product(const Field<T>& a, const Field<T>& b) {
  a.check_same_grid(b);
  PaddedTransform pad(a.size());
  auto pa = pad.lift(spectrum(a));
  const auto pb = pad.lift(spectrum(b));
  for (std::size_t j = 0; j < pa.size(); ++j) pa[j] *= pb[j];
  return from_spectrum<T>(a.grid(), pad.lower(pa));
}

}  // namespace ccch
