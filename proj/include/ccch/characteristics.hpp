#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "ccch/field.hpp"
#include "ccch/solver.hpp"
#include "ccch/spectral.hpp"

namespace ccch {

/// Which momentum a flow map transports. m is carried by phi, the flow of v;
/// n is carried by xi, the flow of u.
enum class Carried { m, n };

/// Positions and Jacobians of one flow map at a set of labels.
struct FlowMap {
  std::vector<double> position;
  std::vector<double> jacobian;
};

struct CharacteristicSet {
  double t = 0.0;
  std::vector<double> labels;  ///< initial positions
  FlowMap phi;                 ///< dphi/dt = v(phi): carries m
  FlowMap xi;                  ///< dxi/dt  = u(xi):  carries n

  const FlowMap& carrier(Carried c) const { return c == Carried::m ? phi : xi; }
};

/// Identity flow at every `stride`-th grid node (node 0, the window edge
/// itself, is skipped).
inline CharacteristicSet make_characteristics(const Grid& g, double t0, std::size_t stride = 4) {
  if (stride == 0) throw ContractError("make_characteristics: stride must be positive");
  CharacteristicSet cs;
  cs.t = t0;
  for (std::size_t j = stride; j < g.size(); j += stride) cs.labels.push_back(g.node(j));
  cs.phi = {cs.labels, std::vector<double>(cs.labels.size(), 1.0)};
  cs.xi = cs.phi;
  return cs;
}

/// Four-point Lagrange (cubic) interpolation of periodic samples at x.
inline double interpolate_cubic(const RealField& f, double x) {
  const Grid& g = f.grid();
  const auto n = static_cast<long>(g.size());
  const double s = (g.wrap(x) + g.half_length()) / g.spacing();
  auto i = static_cast<long>(std::floor(s));
  const double w = s - static_cast<double>(i);
  auto at = [&](long j) { return f[static_cast<std::size_t>(((j % n) + n) % n)]; };
  const double fm = at(i - 1);
  const double f0 = at(i);
  const double f1 = at(i + 1);
  const double f2 = at(i + 2);
  return -w * (w - 1.0) * (w - 2.0) / 6.0 * fm + (w + 1.0) * (w - 1.0) * (w - 2.0) / 2.0 * f0 -
         (w + 1.0) * w * (w - 2.0) / 2.0 * f1 + (w + 1.0) * w * (w - 1.0) / 6.0 * f2;
}

/// Velocities and their slopes at one RK stage.
struct StageFields {
  RealField u;
  RealField ux;
  RealField v;
  RealField vx;
};

inline StageFields stage_fields(const RealField& u, const RealField& v) {
  return {u, spectral_derivative(u), v, spectral_derivative(v)};
}

inline StageFields stage_fields(const PdeState& s) {
  const auto vel = recover_velocity(s);
  return stage_fields(real_part(vel.u), real_part(vel.v));
}

namespace detail {

/// RK4 for (x, log J) under dx/dt = w(x), d(log J)/dt = w_x(x), with stage
/// velocity fields supplied per stage.
inline FlowMap advance_flow(const FlowMap& f, const std::array<const RealField*, 4>& w,
                            const std::array<const RealField*, 4>& wx, double dt, double L) {
  const std::size_t n = f.position.size();
  FlowMap out = f;
  for (std::size_t i = 0; i < n; ++i) {
    const double x0 = f.position[i];
    const double k1 = interpolate_cubic(*w[0], x0);
    const double g1 = interpolate_cubic(*wx[0], x0);
    const double k2 = interpolate_cubic(*w[1], x0 + 0.5 * dt * k1);
    const double g2 = interpolate_cubic(*wx[1], x0 + 0.5 * dt * k1);
    const double k3 = interpolate_cubic(*w[2], x0 + 0.5 * dt * k2);
    const double g3 = interpolate_cubic(*wx[2], x0 + 0.5 * dt * k2);
    const double k4 = interpolate_cubic(*w[3], x0 + dt * k3);
    const double g4 = interpolate_cubic(*wx[3], x0 + dt * k3);
    const double x1 = x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!(x1 >= -L && x1 < L)) {
      throw DomainError("characteristic left the window at label " + std::to_string(i) +
                        "; enlarge half_length");
    }
    out.position[i] = x1;
    out.jacobian[i] = f.jacobian[i] * std::exp(dt / 6.0 * (g1 + 2.0 * g2 + 2.0 * g3 + g4));
  }
  return out;
}

}  // namespace detail

/// Advances both flow maps by dt given the velocity fields at the four RK4
/// stages (start, two midpoint estimates, end). The Jacobians follow
/// J(t + dt) = J(t) exp(int w_x(x(s)) ds) with the integral taken by the same
/// stages.
inline CharacteristicSet advect(const CharacteristicSet& cs, const std::array<StageFields, 4>& stages,
                                double dt) {
  if (!(dt > 0.0)) throw ContractError("advect: dt must be positive");
  const double L = stages[0].u.grid().half_length();
  CharacteristicSet out = cs;
  out.t = cs.t + dt;
  out.phi = detail::advance_flow(cs.phi, {&stages[0].v, &stages[1].v, &stages[2].v, &stages[3].v},
                                 {&stages[0].vx, &stages[1].vx, &stages[2].vx, &stages[3].vx}, dt, L);
  out.xi = detail::advance_flow(cs.xi, {&stages[0].u, &stages[1].u, &stages[2].u, &stages[3].u},
                                {&stages[0].ux, &stages[1].ux, &stages[2].ux, &stages[3].ux}, dt, L);
  return out;
}

/// Advances with velocities frozen over the step.
inline CharacteristicSet advect(const CharacteristicSet& cs, const RealField& u, const RealField& v,
                                double dt) {
  const StageFields s = stage_fields(u, v);
  return advect(cs, {s, s, s, s}, dt);
}

/// StageHook that keeps a CharacteristicSet in step with an evolve() run.
class CharacteristicTracker {
 public:
  explicit CharacteristicTracker(CharacteristicSet cs) : cs_(std::move(cs)) {}

  StageHook hook() {
    return [this](const std::array<PdeState, 4>& y, double dt) {
      const std::array<StageFields, 4> st{stage_fields(y[0]), stage_fields(y[1]), stage_fields(y[2]),
                                          stage_fields(y[3])};
      cs_ = advect(cs_, st, dt);
      cs_.t = y[0].t + dt;
    };
  }

  const CharacteristicSet& current() const { return cs_; }

 private:
  CharacteristicSet cs_;
};

/// max_i | f(x_i(t), t) J_i(t)^2 - f_0(label_i) |, with f = m along phi or
/// f = n along xi.
inline double pullback_residual(const PdeState& state, const CharacteristicSet& cs,
                                const RealField& initial, Carried which) {
  if (std::abs(state.t - cs.t) > 1e-9 * std::max(1.0, std::abs(state.t))) {
    throw ContractError("pullback_residual: state and characteristics are at different times");
  }
  const RealField f = real_part(which == Carried::m ? state.m : state.n);
  const FlowMap& flow = cs.carrier(which);
  double worst = 0.0;
  for (std::size_t i = 0; i < cs.labels.size(); ++i) {
    const double lhs = interpolate_cubic(f, flow.position[i]) * flow.jacobian[i] * flow.jacobian[i];
    worst = std::max(worst, std::abs(lhs - interpolate_cubic(initial, cs.labels[i])));
  }
  return worst;
}

/// Images (x(alpha, t), x(beta, t)) of the initial support endpoints under
/// the flow that carries `which`, by linear interpolation over labels.
inline std::pair<double, double> support_bounds(const CharacteristicSet& cs, double alpha, double beta,
                                                Carried which) {
  if (!(alpha < beta)) throw ContractError("support_bounds: need alpha < beta");
  if (cs.labels.size() < 2 || alpha < cs.labels.front() || beta > cs.labels.back()) {
    throw ContractError("support_bounds: endpoints outside the label range");
  }
  const FlowMap& flow = cs.carrier(which);
  auto image = [&](double x) {
    const auto it = std::upper_bound(cs.labels.begin(), cs.labels.end(), x);
    std::size_t hi = static_cast<std::size_t>(it - cs.labels.begin());
    if (hi >= cs.labels.size()) hi = cs.labels.size() - 1;
    const std::size_t lo = hi - 1;
    const double w = (x - cs.labels[lo]) / (cs.labels[hi] - cs.labels[lo]);
    return (1.0 - w) * flow.position[lo] + w * flow.position[hi];
  };
  return {image(alpha), image(beta)};
}

/// Centred finite-difference Jacobian dx/dlabel at interior labels (end
/// entries copied from their neighbours).
inline std::vector<double> finite_difference_jacobian(const CharacteristicSet& cs, Carried which) {
  const FlowMap& flow = cs.carrier(which);
  const std::size_t n = cs.labels.size();
  std::vector<double> out(n, 1.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i] = (flow.position[i + 1] - flow.position[i - 1]) / (cs.labels[i + 1] - cs.labels[i - 1]);
  }
  if (n >= 3) {
    out.front() = out[1];
    out.back() = out[n - 2];
  }
  return out;
}

}  // namespace ccch
