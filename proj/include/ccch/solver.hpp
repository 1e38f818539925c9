#pragma once

#include <array>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "ccch/field.hpp"
#include "ccch/spectral.hpp"

namespace ccch {

/// Which invariant manifold of the system the state is constrained to.
enum class Mode {
  coupled,            ///< general real (m, n)
  ch_reduction,       ///< m == n: two copies of the Camassa-Holm equation
  complex_conjugate,  ///< n == conj(m): the scalar complex reduction
};

inline std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::coupled: return "coupled";
    case Mode::ch_reduction: return "ch_reduction";
    case Mode::complex_conjugate: return "complex_conjugate";
  }
  return "?";
}

/// Momenta m = u - u_xx and n = v - v_xx at time t. Stored complex in every
/// mode; the real modes keep zero imaginary parts.
struct PdeState {
  double t = 0.0;
  ComplexField m;
  ComplexField n;
  Mode mode = Mode::coupled;

  const Grid& grid() const { return m.grid(); }
};

/// Projects (m, n) onto the mode's manifold: real parts for the real modes,
/// the average of m and n for the CH reduction, and the conjugate-symmetric
/// part for the complex reduction.
inline void impose_mode(PdeState& s) {
  s.m.check_same_grid(s.n);
  switch (s.mode) {
    case Mode::coupled:
      for (std::size_t j = 0; j < s.m.size(); ++j) {
        s.m[j] = s.m[j].real();
        s.n[j] = s.n[j].real();
      }
      break;
    case Mode::ch_reduction:
      for (std::size_t j = 0; j < s.m.size(); ++j) {
        const double avg = 0.5 * (s.m[j].real() + s.n[j].real());
        s.m[j] = avg;
        s.n[j] = avg;
      }
      break;
    case Mode::complex_conjugate:
      for (std::size_t j = 0; j < s.m.size(); ++j) {
        const cplx w = 0.5 * (s.m[j] + std::conj(s.n[j]));
        s.m[j] = w;
        s.n[j] = std::conj(w);
      }
      break;
  }
}

inline PdeState make_state(double t, ComplexField m, ComplexField n, Mode mode) {
  m.check_same_grid(n);
  PdeState s{t, std::move(m), std::move(n), mode};
  impose_mode(s);
  return s;
}

inline PdeState make_state(double t, const RealField& m, const RealField& n, Mode mode) {
  return make_state(t, to_complex(m), to_complex(n), mode);
}

/// Deviation of the state from its mode's manifold (0 for coupled).
inline double mode_constraint_error(const PdeState& s) {
  double err = 0.0;
  for (std::size_t j = 0; j < s.m.size(); ++j) {
    switch (s.mode) {
      case Mode::coupled: break;
      case Mode::ch_reduction: err = std::max(err, std::abs(s.m[j] - s.n[j])); break;
      case Mode::complex_conjugate: err = std::max(err, std::abs(s.m[j] - std::conj(s.n[j]))); break;
    }
  }
  return err;
}

struct VelocityPair {
  ComplexField u;
  ComplexField v;
};

/// u = p * m, v = p * n.
inline VelocityPair recover_velocity(const PdeState& s) {
  return {helmholtz_inverse(s.m), helmholtz_inverse(s.n)};
}

struct MomentumRate {
  ComplexField dm;
  ComplexField dn;
};

/// Right-hand side of the momentum form
///   m_t = -(2 v_x m + v m_x),   n_t = -(2 u_x n + u n_x),
/// with u, v recovered spectrally and every product formed alias-free on the
/// 3/2-padded grid.
inline MomentumRate rhs_momentum(const PdeState& s) {
  const Grid& g = s.grid();
  if (!s.m.all_finite() || !s.n.all_finite()) throw NumericError("rhs_momentum: non-finite state");
  const Spectrum mh = spectrum(s.m);
  const Spectrum nh = spectrum(s.n);
  const Spectrum uh = smooth(g, mh);
  const Spectrum vh = smooth(g, nh);

  PaddedTransform pad(g.size());
  const auto u = pad.lift(uh);
  const auto v = pad.lift(vh);
  const auto ux = pad.lift(differentiate(g, uh));
  const auto vx = pad.lift(differentiate(g, vh));
  const auto m = pad.lift(mh);
  const auto n = pad.lift(nh);
  const auto mx = pad.lift(differentiate(g, mh));
  const auto nx = pad.lift(differentiate(g, nh));

  std::vector<cplx> dm(pad.padded_size());
  std::vector<cplx> dn(pad.padded_size());
  for (std::size_t j = 0; j < dm.size(); ++j) {
    dm[j] = -(2.0 * vx[j] * m[j] + v[j] * mx[j]);
    dn[j] = -(2.0 * ux[j] * n[j] + u[j] * nx[j]);
  }
  MomentumRate out{from_spectrum<cplx>(g, pad.lower(dm)), from_spectrum<cplx>(g, pad.lower(dn))};
  if (!out.dm.all_finite() || !out.dn.all_finite()) {
    throw NumericError("rhs_momentum: non-finite right-hand side");
  }
  return out;
}

/// Largest step allowed by the advective guard 0.5 h / max(|u|, |v|, eps).
inline double stability_bound(const PdeState& s) {
  const auto [u, v] = recover_velocity(s);
  const double speed = std::max({u.max_abs(), v.max_abs(), 1e-12});
  return 0.5 * s.grid().spacing() / speed;
}

/// Thrown when the momenta exceed the blow-up threshold. Carries the last
/// state that was still below it, and for evolve() the snapshots so far.
class BlowUp : public std::runtime_error {
 public:
  BlowUp(const std::string& what, PdeState last_valid)
      : std::runtime_error(what), last_valid_(std::move(last_valid)) {}

  const PdeState& last_valid() const { return last_valid_; }
  const std::vector<PdeState>& partial() const { return partial_; }
  void set_partial(std::vector<PdeState> p) { partial_ = std::move(p); }

 private:
  PdeState last_valid_;
  std::vector<PdeState> partial_;
};

inline double default_blowup_threshold(const PdeState& initial) {
  return 1e6 * std::max({1.0, initial.m.max_abs(), initial.n.max_abs()});
}

/// Receives the four RK4 stage states of one step and the step size.
using StageHook = std::function<void(const std::array<PdeState, 4>&, double)>;

struct StepOptions {
  double blowup_threshold = std::numeric_limits<double>::infinity();
  bool check_stability = true;
  StageHook on_stages;
};

namespace detail {

inline PdeState shifted(const PdeState& s, double t, const MomentumRate& k, double a) {
  PdeState out = s;
  out.t = t;
  out.m.axpy(a, k.dm);
  out.n.axpy(a, k.dn);
  return out;
}

/// Classical RK4 update with a signed step; no guards.
inline PdeState rk4_advance(const PdeState& s, double dt, const StageHook& hook = {}) {
  std::array<PdeState, 4> y{s, s, s, s};
  const MomentumRate k1 = rhs_momentum(y[0]);
  y[1] = shifted(s, s.t + 0.5 * dt, k1, 0.5 * dt);
  const MomentumRate k2 = rhs_momentum(y[1]);
  y[2] = shifted(s, s.t + 0.5 * dt, k2, 0.5 * dt);
  const MomentumRate k3 = rhs_momentum(y[2]);
  y[3] = shifted(s, s.t + dt, k3, dt);
  const MomentumRate k4 = rhs_momentum(y[3]);
  if (hook) hook(y, dt);

  PdeState out = s;
  out.t = s.t + dt;
  const double w = dt / 6.0;
  for (std::size_t j = 0; j < out.m.size(); ++j) {
    out.m[j] += w * (k1.dm[j] + 2.0 * k2.dm[j] + 2.0 * k3.dm[j] + k4.dm[j]);
    out.n[j] += w * (k1.dn[j] + 2.0 * k2.dn[j] + 2.0 * k3.dn[j] + k4.dn[j]);
  }
  impose_mode(out);
  return out;
}

}  // namespace detail

/// One classical Runge-Kutta step of the semi-discrete system.
inline PdeState step_rk4(const PdeState& s, double dt, const StepOptions& opt = {}) {
  if (!(dt > 0.0)) throw ContractError("step_rk4: dt must be positive");
  if (opt.check_stability) {
    const double bound = stability_bound(s);
    if (dt > bound * (1.0 + 1e-12)) {
      throw ContractError("step_rk4: dt = " + std::to_string(dt) + " exceeds stability bound " +
                          std::to_string(bound));
    }
  }
  PdeState next = detail::rk4_advance(s, dt, opt.on_stages);
  const double peak = std::max(next.m.max_abs(), next.n.max_abs());
  if (!next.m.all_finite() || !next.n.all_finite() || peak > opt.blowup_threshold) {
    throw BlowUp("blow-up at t = " + std::to_string(next.t) + ": max momentum " +
                     std::to_string(peak) + " exceeds threshold " +
                     std::to_string(opt.blowup_threshold),
                 s);
  }
  return next;
}

/// Snapshots of one run; times strictly increasing, one grid and mode.
struct Trajectory {
  std::vector<PdeState> snapshots;

  const PdeState& front() const { return snapshots.front(); }
  const PdeState& back() const { return snapshots.back(); }
  std::size_t size() const { return snapshots.size(); }
};

struct EvolveOptions {
  /// <= 0 selects default_blowup_threshold(initial).
  double blowup_threshold = 0.0;
  bool check_stability = true;
  /// Called for every snapshot, including the initial one.
  std::function<void(const PdeState&)> on_snapshot;
  StageHook on_stages;
};

/// Fixed-step RK4 march from s.t to t_end. Each interval between consecutive
/// output times is split into ceil(interval / dt) equal steps so every output
/// time is hit exactly. The initial state is always the first snapshot and
/// t_end is always the last.
inline Trajectory evolve(const PdeState& s, double t_end, double dt,
                         std::vector<double> output_times, const EvolveOptions& opt = {}) {
  if (!(dt > 0.0)) throw ContractError("evolve: dt must be positive");
  if (t_end < s.t) throw ContractError("evolve: t_end precedes the initial time");
  for (std::size_t i = 0; i < output_times.size(); ++i) {
    const double to = output_times[i];
    if (to < s.t || to > t_end) throw ContractError("evolve: output time outside [t0, t_end]");
    if (i > 0 && !(to > output_times[i - 1])) throw ContractError("evolve: output times must increase");
  }
  std::vector<double> targets;
  for (double to : output_times) {
    if (to > s.t) targets.push_back(to);
  }
  if (targets.empty() || targets.back() < t_end) {
    if (t_end > s.t) targets.push_back(t_end);
  }

  StepOptions step_opt;
  step_opt.blowup_threshold =
      opt.blowup_threshold > 0.0 ? opt.blowup_threshold : default_blowup_threshold(s);
  step_opt.check_stability = opt.check_stability;
  step_opt.on_stages = opt.on_stages;

  Trajectory traj;
  traj.snapshots.push_back(s);
  if (opt.on_snapshot) opt.on_snapshot(s);

  PdeState cur = s;
  double t_prev = s.t;
  for (double target : targets) {
    const double span = target - t_prev;
    const long steps = std::max(1L, static_cast<long>(std::ceil(span / dt - 1e-9)));
    const double h = span / static_cast<double>(steps);
    for (long k = 0; k < steps; ++k) {
      try {
        cur = step_rk4(cur, h, step_opt);
      } catch (BlowUp& e) {
        e.set_partial(traj.snapshots);
        throw;
      }
    }
    cur.t = target;
    traj.snapshots.push_back(cur);
    if (opt.on_snapshot) opt.on_snapshot(cur);
    t_prev = target;
  }
  return traj;
}

/// Real form (r, s) of the complex reduction, u = r + i s.
struct RealFormState {
  double t = 0.0;
  RealField r;
  RealField s;
};

/// Right-hand side (r_t, s_t) of the complex reduction written for the real
/// and imaginary parts of u: builds m = (1 - d^2)(r + i s), n = conj(m),
/// evaluates the momentum form and maps the rate back through p *.
inline std::pair<RealField, RealField> rhs_complex_real_form(const RealField& r, const RealField& s) {
  r.check_same_grid(s);
  const ComplexField m = helmholtz_forward(to_complex(r, s));
  const PdeState state{0.0, m, conj(m), Mode::complex_conjugate};
  const ComplexField du = helmholtz_inverse(rhs_momentum(state).dm);
  return {real_part(du), imag_part(du)};
}

inline RealFormState step_rk4_real_form(const RealFormState& y, double dt) {
  if (!(dt > 0.0)) throw ContractError("step_rk4_real_form: dt must be positive");
  auto shifted = [](const RealFormState& base, const std::pair<RealField, RealField>& k, double a) {
    RealFormState out = base;
    out.r.axpy(a, k.first);
    out.s.axpy(a, k.second);
    return out;
  };
  const auto k1 = rhs_complex_real_form(y.r, y.s);
  const auto y2 = shifted(y, k1, 0.5 * dt);
  const auto k2 = rhs_complex_real_form(y2.r, y2.s);
  const auto y3 = shifted(y, k2, 0.5 * dt);
  const auto k3 = rhs_complex_real_form(y3.r, y3.s);
  const auto y4 = shifted(y, k3, dt);
  const auto k4 = rhs_complex_real_form(y4.r, y4.s);
  RealFormState out = y;
  out.t = y.t + dt;
  const double w = dt / 6.0;
  for (std::size_t j = 0; j < out.r.size(); ++j) {
    out.r[j] += w * (k1.first[j] + 2.0 * k2.first[j] + 2.0 * k3.first[j] + k4.first[j]);
    out.s[j] += w * (k1.second[j] + 2.0 * k2.second[j] + 2.0 * k3.second[j] + k4.second[j]);
  }
  return out;
}

}  // namespace ccch
