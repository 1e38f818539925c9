#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ccch/field.hpp"
#include "ccch/green.hpp"

namespace ccch {

/// Two peakon families: m = sum_a m_a delta(x - q_a), n = sum_b n_b delta(x - r_b).
struct PeakonState {
  double t = 0.0;
  std::vector<double> q;
  std::vector<double> m_amp;
  std::vector<double> r;
  std::vector<double> n_amp;

  std::size_t m_count() const { return q.size(); }
  std::size_t n_count() const { return r.size(); }

  void validate() const {
    if (q.size() != m_amp.size() || r.size() != n_amp.size()) {
      throw ContractError("peakon state: position/amplitude lengths differ");
    }
    auto finite = [](const std::vector<double>& xs) {
      for (double x : xs) {
        if (!std::isfinite(x)) return false;
      }
      return true;
    };
    if (!std::isfinite(t) || !finite(q) || !finite(m_amp) || !finite(r) || !finite(n_amp)) {
      throw NumericError("peakon state: non-finite entry");
    }
  }

  /// The same configuration with the two families exchanged.
  PeakonState swapped() const { return {t, r, n_amp, q, m_amp}; }
};

/// Time derivatives of a PeakonState, same layout.
struct PeakonRates {
  std::vector<double> dq;
  std::vector<double> dm;
  std::vector<double> dr;
  std::vector<double> dn;
};

namespace detail {

/// Branch of K(d) = exp(-|d|)/2 used for one (a, b) pair: +1 for d > 0,
/// -1 for d < 0, 0 for a pair sitting on top of each other with no relative
/// motion. On each branch the kernel is the smooth function exp(-side*d)/2,
/// which is what lets the integrator step across a collision at full order.
using SidePattern = std::vector<int>;

inline double branch_kernel(double d, int side) {
  return side == 0 ? 0.5 : 0.5 * std::exp(-static_cast<double>(side) * d);
}

inline double branch_slope(double d, int side) {
  return side == 0 ? 0.0 : -static_cast<double>(side) * 0.5 * std::exp(-static_cast<double>(side) * d);
}

inline PeakonRates rates_on_branch(const PeakonState& ps, const SidePattern& side) {
  const std::size_t M = ps.m_count();
  const std::size_t N = ps.n_count();
  PeakonRates k{std::vector<double>(M, 0.0), std::vector<double>(M, 0.0),
                std::vector<double>(N, 0.0), std::vector<double>(N, 0.0)};
  for (std::size_t a = 0; a < M; ++a) {
    double vel = 0.0;
    double grad = 0.0;
    for (std::size_t b = 0; b < N; ++b) {
      const double d = ps.q[a] - ps.r[b];
      const int s = side[a * N + b];
      vel += ps.n_amp[b] * branch_kernel(d, s);
      grad += ps.n_amp[b] * branch_slope(d, s);
    }
    k.dq[a] = vel;
    k.dm[a] = -ps.m_amp[a] * grad;
  }
  for (std::size_t b = 0; b < N; ++b) {
    double vel = 0.0;
    double grad = 0.0;
    for (std::size_t a = 0; a < M; ++a) {
      const double d = ps.r[b] - ps.q[a];
      const int s = -side[a * N + b];
      vel += ps.m_amp[a] * branch_kernel(d, s);
      grad += ps.m_amp[a] * branch_slope(d, s);
    }
    k.dr[b] = vel;
    k.dn[b] = -ps.n_amp[b] * grad;
  }
  return k;
}

inline int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

/// Sign of q_a - r_b; at an exact collision, the side the pair is moving to.
inline SidePattern side_pattern(const PeakonState& ps) {
  const std::size_t M = ps.m_count();
  const std::size_t N = ps.n_count();
  SidePattern side(M * N, 0);
  for (std::size_t a = 0; a < M; ++a) {
    for (std::size_t b = 0; b < N; ++b) side[a * N + b] = sign_of(ps.q[a] - ps.r[b]);
  }
  const PeakonRates k = rates_on_branch(ps, side);
  for (std::size_t a = 0; a < M; ++a) {
    for (std::size_t b = 0; b < N; ++b) {
      if (side[a * N + b] == 0) side[a * N + b] = sign_of(k.dq[a] - k.dr[b]);
    }
  }
  return side;
}

inline PeakonState shifted(const PeakonState& ps, const PeakonRates& k, double a) {
  PeakonState out = ps;
  for (std::size_t i = 0; i < out.q.size(); ++i) {
    out.q[i] += a * k.dq[i];
    out.m_amp[i] += a * k.dm[i];
  }
  for (std::size_t i = 0; i < out.r.size(); ++i) {
    out.r[i] += a * k.dr[i];
    out.n_amp[i] += a * k.dn[i];
  }
  return out;
}

inline PeakonState rk4_on_branch(const PeakonState& ps, double dt, const SidePattern& side) {
  const PeakonRates k1 = rates_on_branch(ps, side);
  const PeakonRates k2 = rates_on_branch(shifted(ps, k1, 0.5 * dt), side);
  const PeakonRates k3 = rates_on_branch(shifted(ps, k2, 0.5 * dt), side);
  const PeakonRates k4 = rates_on_branch(shifted(ps, k3, dt), side);
  PeakonState out = ps;
  out.t = ps.t + dt;
  const double w = dt / 6.0;
  auto combine = [w](std::vector<double>& y, const std::vector<double>& a, const std::vector<double>& b,
                     const std::vector<double>& c, const std::vector<double>& d) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += w * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
  };
  combine(out.q, k1.dq, k2.dq, k3.dq, k4.dq);
  combine(out.m_amp, k1.dm, k2.dm, k3.dm, k4.dm);
  combine(out.r, k1.dr, k2.dr, k3.dr, k4.dr);
  combine(out.n_amp, k1.dn, k2.dn, k3.dn, k4.dn);
  return out;
}

/// Pairs whose ordering in `after` contradicts their branch.
inline std::vector<std::size_t> crossed_pairs(const PeakonState& after, const SidePattern& side) {
  std::vector<std::size_t> out;
  const std::size_t N = after.n_count();
  for (std::size_t idx = 0; idx < side.size(); ++idx) {
    if (side[idx] == 0) continue;
    const double d = after.q[idx / N] - after.r[idx % N];
    if (sign_of(d) == -side[idx]) out.push_back(idx);
  }
  return out;
}

}  // namespace detail

/// q_a' = sum_b n_b K(q_a - r_b),  m_a' = -m_a sum_b n_b K'(q_a - r_b),
/// r_b' = sum_a m_a K(r_b - q_a),  n_b' = -n_b sum_a m_a K'(r_b - q_a),
/// with K(x) = exp(-|x|)/2 and the odd convention K'(0) = 0.
inline PeakonRates peakon_rhs(const PeakonState& ps) {
  ps.validate();
  const std::size_t M = ps.m_count();
  const std::size_t N = ps.n_count();
  detail::SidePattern side(M * N);
  for (std::size_t a = 0; a < M; ++a) {
    for (std::size_t b = 0; b < N; ++b) side[a * N + b] = detail::sign_of(ps.q[a] - ps.r[b]);
  }
  // At d == 0 the branch kernel gives K = 1/2 and K' = 0, the odd convention.
  return detail::rates_on_branch(ps, side);
}

/// h = sum_{a,b} m_a n_b K(q_a - r_b).
inline double peakon_hamiltonian(const PeakonState& ps) {
  double h = 0.0;
  for (std::size_t a = 0; a < ps.m_count(); ++a) {
    for (std::size_t b = 0; b < ps.n_count(); ++b) {
      h += ps.m_amp[a] * ps.n_amp[b] * 0.5 * std::exp(-std::abs(ps.q[a] - ps.r[b]));
    }
  }
  return h;
}

inline double peakon_total_momentum(const PeakonState& ps) {
  double s = 0.0;
  for (double x : ps.m_amp) s += x;
  for (double x : ps.n_amp) s += x;
  return s;
}

/// Velocity fields u = sum_a m_a p_L(x - q_a), v = sum_b n_b p_L(x - r_b)
/// sampled on g with the periodized kernel.
inline std::pair<RealField, RealField> peakon_fields(const PeakonState& ps, const Grid& g) {
  ps.validate();
  const double L = g.half_length();
  auto check = [L](double pos) {
    if (!(pos > -L && pos < L)) {
      throw DomainError("peakon position " + std::to_string(pos) + " outside the window");
    }
  };
  for (double x : ps.q) check(x);
  for (double x : ps.r) check(x);
  RealField u(g);
  RealField v(g);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = g.node(j);
    for (std::size_t a = 0; a < ps.m_count(); ++a) {
      u[j] += ps.m_amp[a] * green_kernel_eval(g.wrap(x - ps.q[a]), L);
    }
    for (std::size_t b = 0; b < ps.n_count(); ++b) {
      v[j] += ps.n_amp[b] * green_kernel_eval(g.wrap(x - ps.r[b]), L);
    }
  }
  return {u, v};
}

class PeakonBlowUp : public std::runtime_error {
 public:
  PeakonBlowUp(const std::string& what, PeakonState last_valid)
      : std::runtime_error(what), last_valid_(std::move(last_valid)) {}
  const PeakonState& last_valid() const { return last_valid_; }

 private:
  PeakonState last_valid_;
};

struct PeakonOptions {
  /// <= 0 selects 1e6 * max(1, max |amplitude|) of the initial state.
  double blowup_threshold = 0.0;
  /// Keep every k-th step in the returned trajectory (the final state is
  /// always kept).
  std::size_t record_every = 1;
};

/// One RK4 step of length dt. Within a step the kernel branch of every pair
/// is frozen; when a pair changes order inside the step, the crossing time is
/// located by bisection, the step is split there and the pair's branch is
/// flipped for the remainder.
inline PeakonState step_peakons(const PeakonState& ps, double dt) {
  if (!(dt > 0.0)) throw ContractError("step_peakons: dt must be positive");
  PeakonState cur = ps;
  double remaining = dt;
  detail::SidePattern side = detail::side_pattern(cur);
  for (int split = 0; split < 64 && remaining > 0.0; ++split) {
    const PeakonState trial = detail::rk4_on_branch(cur, remaining, side);
    const auto crossed = detail::crossed_pairs(trial, side);
    if (crossed.empty()) {
      cur = trial;
      remaining = 0.0;
      break;
    }
    double first = remaining;
    for (std::size_t idx : crossed) {
      const std::size_t N = cur.n_count();
      auto gap = [&](double tau) {
        const PeakonState y = detail::rk4_on_branch(cur, tau, side);
        return static_cast<double>(side[idx]) * (y.q[idx / N] - y.r[idx % N]);
      };
      double lo = 0.0;
      double hi = remaining;
      for (int it = 0; it < 80 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (gap(mid) > 0.0 ? lo : hi) = mid;
      }
      first = std::min(first, hi);
    }
    cur = detail::rk4_on_branch(cur, first, side);
    remaining -= first;
    for (std::size_t idx : detail::crossed_pairs(cur, side)) side[idx] = -side[idx];
    // A pair landing exactly on d == 0 keeps moving to the other side.
    const std::size_t N = cur.n_count();
    for (std::size_t idx = 0; idx < side.size(); ++idx) {
      if (cur.q[idx / N] == cur.r[idx % N]) side[idx] = detail::side_pattern(cur)[idx];
    }
  }
  cur.t = ps.t + dt;
  return cur;
}

/// Fixed-step march of the peakon ODEs from ps.t to t_end.
inline std::vector<PeakonState> evolve_peakons(const PeakonState& ps, double t_end, double dt,
                                               const PeakonOptions& opt = {}) {
  ps.validate();
  if (!(dt > 0.0)) throw ContractError("evolve_peakons: dt must be positive");
  if (t_end < ps.t) throw ContractError("evolve_peakons: t_end precedes the initial time");
  double amp0 = 1.0;
  for (double x : ps.m_amp) amp0 = std::max(amp0, std::abs(x));
  for (double x : ps.n_amp) amp0 = std::max(amp0, std::abs(x));
  const double threshold = opt.blowup_threshold > 0.0 ? opt.blowup_threshold : 1e6 * amp0;
  const std::size_t stride = std::max<std::size_t>(1, opt.record_every);

  const auto steps = static_cast<std::size_t>(std::ceil((t_end - ps.t) / dt - 1e-9));
  std::vector<PeakonState> out;
  out.reserve(steps / stride + 2);
  out.push_back(ps);
  PeakonState cur = ps;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_next = std::min(t_end, ps.t + static_cast<double>(k) * dt);
    PeakonState next = step_peakons(cur, t_next - cur.t);
    next.t = t_next;
    double peak = 0.0;
    for (double x : next.m_amp) peak = std::max(peak, std::abs(x));
    for (double x : next.n_amp) peak = std::max(peak, std::abs(x));
    if (!(peak <= threshold)) {
      throw PeakonBlowUp("peakon amplitudes exceed blow-up threshold at t = " + std::to_string(next.t),
                         cur);
    }
    cur = std::move(next);
    if (k % stride == 0 || k == steps) out.push_back(cur);
  }
  return out;
}

struct WaltzMeasurement {
  double period = 0.0;
  double swap_error = 0.0;
};

namespace detail {

inline PeakonState interpolate(const std::vector<PeakonState>& traj, double t) {
  if (t <= traj.front().t) return traj.front();
  if (t >= traj.back().t) return traj.back();
  std::size_t hi = 1;
  while (traj[hi].t < t) ++hi;
  const PeakonState& a = traj[hi - 1];
  const PeakonState& b = traj[hi];
  const double w = (t - a.t) / (b.t - a.t);
  auto mix = [w](const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = (1.0 - w) * x[i] + w * y[i];
    return z;
  };
  return {t, mix(a.q, b.q), mix(a.m_amp, b.m_amp), mix(a.r, b.r), mix(a.n_amp, b.n_amp)};
}

}  // namespace detail

/// Period and half-period amplitude exchange of a single m/n peakon pair.
///
/// The orbit is tracked in the relative coordinates (q - r, m_1 - n_1), which
/// are unaffected by the mean drift of the pair. The coordinate that leaves
/// its initial value fastest (relative to its range over the run) defines a
/// section; the period is the first time it crosses back through its initial
/// value in the initial direction with the other coordinate back near its
/// initial value, with the crossing time linearly interpolated between samples.
inline WaltzMeasurement measure_waltz(const std::vector<PeakonState>& traj) {
  if (traj.size() < 3) throw MeasurementError("measure_waltz: trajectory too short");
  for (const auto& s : traj) {
    if (s.m_count() != 1 || s.n_count() != 1) {
      throw ContractError("measure_waltz: needs exactly one peakon per family");
    }
  }
  const std::size_t n = traj.size();
  std::vector<double> sep(n);
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) {
    sep[i] = traj[i].q[0] - traj[i].r[0];
    diff[i] = traj[i].m_amp[0] - traj[i].n_amp[0];
  }
  auto range = [](const std::vector<double>& c) {
    const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
    return *hi - *lo;
  };
  const double sep_range = range(sep);
  const double diff_range = range(diff);
  if (!(sep_range > 0.0) && !(diff_range > 0.0)) {
    throw MeasurementError("measure_waltz: the pair does not move relative to each other");
  }
  const double sep_rate = sep_range > 0.0 ? std::abs(sep[1] - sep[0]) / sep_range : 0.0;
  const double diff_rate = diff_range > 0.0 ? std::abs(diff[1] - diff[0]) / diff_range : 0.0;
  const bool use_sep = sep_rate >= diff_rate;
  const std::vector<double>& c = use_sep ? sep : diff;
  const std::vector<double>& other = use_sep ? diff : sep;
  const double other_range = use_sep ? diff_range : sep_range;
  const double c0 = c[0];
  const int dir = detail::sign_of(c[1] - c0);
  if (dir == 0) throw MeasurementError("measure_waltz: section coordinate is stationary at t0");

  std::optional<double> period;
  for (std::size_t k = 2; k < n && !period; ++k) {
    const double a = dir * (c[k - 1] - c0);
    const double b = dir * (c[k] - c0);
    if (!(a < 0.0 && b >= 0.0)) continue;
    const double w = a / (a - b);
    const double t_cross = traj[k - 1].t + w * (traj[k].t - traj[k - 1].t);
    const double other_cross = other[k - 1] + w * (other[k] - other[k - 1]);
    if (std::abs(other_cross - other[0]) <= 1e-2 * other_range + 1e-12) {
      period = t_cross - traj[0].t;
    }
  }
  if (!period) throw MeasurementError("measure_waltz: trajectory shorter than one period");

  const PeakonState half = detail::interpolate(traj, traj[0].t + 0.5 * *period);
  const double swap = std::abs(half.m_amp[0] - traj[0].n_amp[0]) +
                      std::abs(half.n_amp[0] - traj[0].m_amp[0]);
  return {*period, swap};
}

struct WaltzScanPoint {
  double separation = 0.0;
  double period = std::numeric_limits<double>::quiet_NaN();
};

/// Measures the waltz period for each separation r(0) - q(0) in `separations`
/// (q(0) = 0). Points where no full period fits in t_max are left NaN.
inline std::vector<WaltzScanPoint> scan_waltz_period(double m1, double n1,
                                                     const std::vector<double>& separations,
                                                     double dt, double t_max) {
  std::vector<WaltzScanPoint> out;
  for (double s : separations) {
    const PeakonState ps{0.0, {0.0}, {m1}, {s}, {n1}};
    WaltzScanPoint pt{s};
    try {
      pt.period = measure_waltz(evolve_peakons(ps, t_max, dt)).period;
    } catch (const MeasurementError&) {
    }
    out.push_back(pt);
  }
  return out;
}

}  // namespace ccch
