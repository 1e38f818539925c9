#pragma once

#include <cfloat>
#include <cstdio>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ccch/field.hpp"
#include "ccch/solver.hpp"
#include "ccch/spectral.hpp"

namespace ccch {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
};

/// Smallest node interval containing every |f| > epsilon; nullopt if none.
template <FieldScalar T>
std::optional<Interval> support_measure(const Field<T>& f, double epsilon) {
  if (!(epsilon > 0.0)) throw ContractError("support_measure: epsilon must be positive");
  std::optional<std::size_t> first;
  std::size_t last = 0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (std::abs(f[j]) > epsilon) {
      if (!first) first = j;
      last = j;
    }
  }
  if (!first) return std::nullopt;
  return Interval{f.grid().node(*first), f.grid().node(last)};
}

/// H = int (u v + u_x v_x) dx. For complex arguments the real part is
/// returned.
template <FieldScalar T>
double energy_H(const Field<T>& u, const Field<T>& v) {
  u.check_same_grid(v);
  const Field<T> ux = spectral_derivative(u);
  const Field<T> vx = spectral_derivative(v);
  double acc = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) acc += std::real(u[j] * v[j] + ux[j] * vx[j]);
  return acc * u.grid().spacing();
}

/// H = 1/2 int (|u|^2 + |u_x|^2) dx, the energy of the complex reduction.
inline double energy_H_complex(const ComplexField& u) {
  const ComplexField ux = spectral_derivative(u);
  double acc = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) acc += std::norm(u[j]) + std::norm(ux[j]);
  return 0.5 * acc * u.grid().spacing();
}

/// P = int (m + n) dx (real part).
template <FieldScalar T>
double momentum_P(const Field<T>& m, const Field<T>& n) {
  m.check_same_grid(n);
  double acc = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) acc += std::real(m[j] + n[j]);
  return acc * m.grid().spacing();
}

/// Inclusive node range used for the exponentially weighted integrals.
struct NodeWindow {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

/// Joint epsilon-support of m and n, padded by `pad` nodes. The weights
/// e^{+-y} reach e^{L} at the window edges, so the window must stay `band`
/// units away from +-L; otherwise DomainError (domain too small). Returns
/// nullopt when both fields are below threshold everywhere.
template <FieldScalar T>
std::optional<NodeWindow> moment_window(const Field<T>& m, const Field<T>& n, double eps_m, double eps_n,
                                        std::size_t pad = 4, double band = 2.0) {
  m.check_same_grid(n);
  const Grid& g = m.grid();
  const auto sm = support_measure(m, eps_m);
  const auto sn = support_measure(n, eps_n);
  if (!sm && !sn) return std::nullopt;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : {sm, sn}) {
    if (s) {
      lo = std::min(lo, s->lo);
      hi = std::max(hi, s->hi);
    }
  }
  const double h = g.spacing();
  lo -= static_cast<double>(pad) * h;
  hi += static_cast<double>(pad) * h;
  if (lo < -g.half_length() + band || hi > g.half_length() - band) {
    throw DomainError("momentum support [" + std::to_string(lo) + ", " + std::to_string(hi) +
                      "] reaches the window edge band; enlarge half_length");
  }
  const auto idx = [&](double x) { return static_cast<std::size_t>(std::llround((x + g.half_length()) / h)); };
  return NodeWindow{idx(lo), idx(hi)};
}

namespace detail {

template <FieldScalar T>
double weighted_integral(const Field<T>& f, const NodeWindow& w, double sign) {
  const Grid& g = f.grid();
  double acc = 0.0;
  for (std::size_t j = w.lo; j <= w.hi; ++j) {
    const double weight = (j == w.lo || j == w.hi) ? 0.5 : 1.0;
    acc += weight * std::exp(sign * g.node(j)) * std::real(f[j]);
  }
  return acc * g.spacing();
}

}  // namespace detail

struct ExpMoments {
  double Eu_plus = 0.0;
  double Eu_minus = 0.0;
  double Ev_plus = 0.0;
  double Ev_minus = 0.0;

  double E_plus() const { return Eu_plus + Ev_plus; }
  double E_minus() const { return Eu_minus + Ev_minus; }
};

/// E^u_+- = int e^{+-y} m dy and E^v_+- = int e^{+-y} n dy over the window
/// (trapezoid rule). For complex fields the real parts are integrated, so
/// E_+- are exact in the conjugate reduction.
template <FieldScalar T>
ExpMoments exp_moments(const Field<T>& m, const Field<T>& n, const std::optional<NodeWindow>& window) {
  m.check_same_grid(n);
  if (!window) return {};
  return {detail::weighted_integral(m, *window, 1.0), detail::weighted_integral(m, *window, -1.0),
          detail::weighted_integral(n, *window, 1.0), detail::weighted_integral(n, *window, -1.0)};
}

template <FieldScalar T>
ExpMoments exp_moments(const Field<T>& m, const Field<T>& n, double eps_m, double eps_n) {
  return exp_moments(m, n, moment_window(m, n, eps_m, eps_n));
}

/// (int e^x m dx, int e^{-x} m dx) over the epsilon-support of m. Both vanish
/// exactly when u = p * m is compactly supported.
template <FieldScalar T>
std::pair<double, double> zero_integral_check(const Field<T>& m, double eps) {
  const auto w = moment_window(m, m, eps, eps);
  if (!w) return {0.0, 0.0};
  return {detail::weighted_integral(m, *w, 1.0), detail::weighted_integral(m, *w, -1.0)};
}

struct MomentRateCheck {
  double rate_plus = 0.0;    ///< int e^{y}(2uv + u_x v_x) dy, the rate of E_+
  double rate_minus = 0.0;   ///< -int e^{-y}(2uv + u_x v_x) dy, the rate of E_-
  double discrepancy_plus = 0.0;
  double discrepancy_minus = 0.0;
};

/// Rates of E_+- predicted from the velocity fields, compared with finite
/// differences of E_+- taken from neighbouring snapshots.
template <FieldScalar T>
MomentRateCheck moment_rate_check(const Field<T>& u, const Field<T>& v, double fd_plus, double fd_minus,
                                  double floor = 1e-300) {
  u.check_same_grid(v);
  const Grid& g = u.grid();
  const Field<T> ux = spectral_derivative(u);
  const Field<T> vx = spectral_derivative(v);
  double plus = 0.0;
  double minus = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double density = std::real(2.0 * u[j] * v[j] + ux[j] * vx[j]);
    plus += std::exp(g.node(j)) * density;
    minus += std::exp(-g.node(j)) * density;
  }
  MomentRateCheck out;
  out.rate_plus = plus * g.spacing();
  out.rate_minus = -minus * g.spacing();
  out.discrepancy_plus = std::abs(fd_plus - out.rate_plus) / std::max(std::abs(out.rate_plus), floor);
  out.discrepancy_minus = std::abs(fd_minus - out.rate_minus) / std::max(std::abs(out.rate_minus), floor);
  return out;
}

enum class Side { left, right };

struct TailFit {
  double slope = kNaN;               ///< d log|u| / dx
  double coefficient = kNaN;         ///< mean of |u| e^{x} (right) or |u| e^{-x} (left)
  double coefficient_spread = kNaN;  ///< (max - min) / mean of the same
  std::size_t nodes = 0;
};

/// Least-squares fit of log|u| against x on the tail beyond `support_edge`.
/// Uses nodes strictly beyond the edge, no further than halfway to the window
/// boundary (where the periodic image is negligible), and above
/// 100 * machine epsilon relative to max|u|.
template <FieldScalar T>
TailFit tail_fit(const Field<T>& u, Side side, double support_edge) {
  const Grid& g = u.grid();
  const double L = g.half_length();
  const double floor = 1e2 * DBL_EPSILON * u.max_abs();
  const double far = side == Side::right ? support_edge + 0.5 * (L - support_edge)
                                         : support_edge - 0.5 * (support_edge + L);
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = g.node(j);
    const bool beyond = side == Side::right ? (x > support_edge && x <= far) : (x < support_edge && x >= far);
    const double a = std::abs(u[j]);
    if (beyond && a > floor) {
      xs.push_back(x);
      ys.push_back(std::log(a));
    }
  }
  if (xs.size() < 10) {
    throw MeasurementError("tail_fit: only " + std::to_string(xs.size()) + " qualifying tail nodes");
  }
  const auto n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  TailFit fit;
  fit.nodes = xs.size();
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double cmin = std::numeric_limits<double>::infinity();
  double cmax = 0.0;
  double csum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double coeff = std::exp(ys[i] + (side == Side::right ? xs[i] : -xs[i]));
    cmin = std::min(cmin, coeff);
    cmax = std::max(cmax, coeff);
    csum += coeff;
  }
  fit.coefficient = csum / n;
  fit.coefficient_spread = (cmax - cmin) / fit.coefficient;
  return fit;
}

template <FieldScalar T>
double tail_slope(const Field<T>& u, Side side, double support_edge) {
  return tail_fit(u, side, support_edge).slope;
}

/// max over nodes within `band` of +-L of max(|u|, |v|) e^{L - |x|}.
template <FieldScalar T>
double boundary_contamination(const Field<T>& u, const Field<T>& v, double band = 2.0) {
  const Grid& g = u.grid();
  const double L = g.half_length();
  double worst = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double ax = std::abs(g.node(j));
    if (ax >= L - band) worst = std::max(worst, std::max(std::abs(u[j]), std::abs(v[j])) * std::exp(L - ax));
  }
  return worst;
}

/// Thresholds used when building records; absolute values.
struct DiagnosticsSettings {
  double eps_m = 0.0;
  double eps_n = 0.0;
  double eps_u = 0.0;
  double eps_v = 0.0;
  /// boundary_contamination must stay below tail_tolerance * max(|u|, |v|).
  double tail_tolerance = 1e-8;
  double edge_band = 2.0;
};

/// Support thresholds epsilon_support * max|f_0| for each field of the
/// initial state (floored so an all-zero field still gets a positive value).
inline DiagnosticsSettings make_settings(const PdeState& initial, double epsilon_support = 1e-10,
                                         double tail_tolerance = 1e-8) {
  const auto vel = recover_velocity(initial);
  auto eps = [&](double mx) { return epsilon_support * (mx > 0.0 ? mx : 1.0); };
  return {eps(initial.m.max_abs()), eps(initial.n.max_abs()), eps(vel.u.max_abs()), eps(vel.v.max_abs()),
          tail_tolerance, 2.0};
}

struct DiagnosticsRecord {
  double t = 0.0;
  double H = 0.0;
  double P = 0.0;
  double Eu_plus = kNaN;
  double Eu_minus = kNaN;
  double Ev_plus = kNaN;
  double Ev_minus = kNaN;
  double E_plus = kNaN;
  double E_minus = kNaN;
  std::optional<Interval> supp_m, supp_n, supp_u, supp_v;
  double tail_slope_left = kNaN;
  double tail_slope_right = kNaN;
  double max_abs = 0.0;
  double boundary_contamination = 0.0;
  std::optional<double> pullback_residual;
  bool moments_valid = true;
};

/// Every monitored quantity of one snapshot. In the complex reduction H is
/// the complex energy 1/2 int (|u|^2 + |u_x|^2).
inline DiagnosticsRecord compute_record(const PdeState& s, const DiagnosticsSettings& cfg) {
  DiagnosticsRecord rec;
  rec.t = s.t;
  const auto vel = recover_velocity(s);
  if (s.mode == Mode::complex_conjugate) {
    rec.H = energy_H_complex(vel.u);
  } else {
    rec.H = energy_H(real_part(vel.u), real_part(vel.v));
  }
  rec.P = momentum_P(s.m, s.n);
  rec.supp_m = support_measure(s.m, cfg.eps_m);
  rec.supp_n = support_measure(s.n, cfg.eps_n);
  rec.supp_u = support_measure(vel.u, cfg.eps_u);
  rec.supp_v = support_measure(vel.v, cfg.eps_v);
  rec.max_abs = std::max(s.m.max_abs(), s.n.max_abs());
  rec.boundary_contamination = boundary_contamination(vel.u, vel.v, cfg.edge_band);
  const double scale = std::max({vel.u.max_abs(), vel.v.max_abs(), DBL_MIN});
  rec.moments_valid = rec.boundary_contamination <= cfg.tail_tolerance * scale;
  try {
    const ExpMoments e = exp_moments(s.m, s.n, cfg.eps_m, cfg.eps_n);
    rec.Eu_plus = e.Eu_plus;
    rec.Eu_minus = e.Eu_minus;
    rec.Ev_plus = e.Ev_plus;
    rec.Ev_minus = e.Ev_minus;
    rec.E_plus = e.E_plus();
    rec.E_minus = e.E_minus();
  } catch (const DomainError&) {
    rec.moments_valid = false;
  }
  if (rec.supp_m) {
    try {
      rec.tail_slope_right = tail_slope(vel.u, Side::right, rec.supp_m->hi);
    } catch (const MeasurementError&) {
    }
    try {
      rec.tail_slope_left = tail_slope(vel.u, Side::left, rec.supp_m->lo);
    } catch (const MeasurementError&) {
    }
  }
  return rec;
}

/// CSV column order of DiagnosticsRecord rows.
inline std::vector<std::string> record_columns(bool with_pullback) {
  std::vector<std::string> cols{"t",         "H",         "P",         "Eu_plus",        "Eu_minus",
                                "Ev_plus",   "Ev_minus",  "E_plus",    "E_minus",        "supp_m_lo",
                                "supp_m_hi", "supp_u_lo", "supp_u_hi", "tail_slope_left", "tail_slope_right",
                                "max_abs",   "boundary_contamination"};
  if (with_pullback) cols.emplace_back("pullback_residual");
  return cols;
}

inline void write_csv_header(std::ostream& os, bool with_pullback) {
  const auto cols = record_columns(with_pullback);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
}

inline void write_csv_row(std::ostream& os, const DiagnosticsRecord& r, bool with_pullback) {
  char buf[64];
  auto num = [&](double x) -> const char* {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  };
  auto lo = [](const std::optional<Interval>& s) { return s ? s->lo : kNaN; };
  auto hi = [](const std::optional<Interval>& s) { return s ? s->hi : kNaN; };
  const double vals[] = {r.t,       r.H,        r.P,       r.Eu_plus,          r.Eu_minus,         r.Ev_plus,
                         r.Ev_minus, r.E_plus,  r.E_minus, lo(r.supp_m),       hi(r.supp_m),       lo(r.supp_u),
                         hi(r.supp_u), r.tail_slope_left, r.tail_slope_right, r.max_abs, r.boundary_contamination};
  bool first = true;
  for (double v : vals) {
    os << (first ? "" : ",") << num(v);
    first = false;
  }
  if (with_pullback) os << ',' << num(r.pullback_residual.value_or(kNaN));
  os << '\n';
}

}  // namespace ccch
