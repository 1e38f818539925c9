#include <gtest/gtest.h>

#include "ccch/ccch.hpp"
#include "oracles.hpp"

using namespace ccch;

namespace {
PeakonState pair(double m, double n, double q, double r) { return {0.0, {q}, {m}, {r}, {n}}; }
}  // namespace

TEST(PeakonRhs, Collision) {
  const auto k = peakon_rhs(pair(10, 1, 0, 0));
  EXPECT_DOUBLE_EQ(k.dq[0], 0.5);
  EXPECT_DOUBLE_EQ(k.dr[0], 5.0);
  EXPECT_EQ(k.dm[0], 0.0);
  EXPECT_EQ(k.dn[0], 0.0);
}

TEST(PeakonRhs, LogTwoSeparation) {
  const auto k = peakon_rhs(pair(10, 1, 0, std::log(2.0)));
  EXPECT_NEAR(k.dq[0], 0.25, 1e-15);
  EXPECT_NEAR(k.dr[0], 2.5, 1e-15);
  // d = q - r < 0: m decays at rate h, n grows at the same rate.
  EXPECT_NEAR(k.dm[0], -2.5, 1e-14);
  EXPECT_EQ(k.dm[0] + k.dn[0], 0.0);
}

TEST(PeakonRhs, AmplitudeRatesCancelForAnyPair) {
  for (double d : {-3.0, -0.1, 0.2, 4.0}) {
    const auto k = peakon_rhs(pair(3.0, -2.0, d, 0.0));
    EXPECT_NEAR(k.dm[0] + k.dn[0], 0.0, 1e-15);
  }
}

TEST(PeakonHamiltonian, ClosedForms) {
  EXPECT_DOUBLE_EQ(peakon_hamiltonian(pair(10, 1, 0, 0)), 5.0);
  EXPECT_NEAR(peakon_hamiltonian(pair(10, 1, std::log(2.0), 0)), 2.5, 1e-14);
  EXPECT_EQ(peakon_hamiltonian(PeakonState{0.0, {1.0}, {3.0}, {}, {}}), 0.0);
  EXPECT_EQ(peakon_hamiltonian(PeakonState{}), 0.0);
}

TEST(PeakonFields, EmptyFamilies) {
  const Grid g = make_grid(10.0, 128);
  const auto [u, v] = peakon_fields(PeakonState{}, g);
  EXPECT_EQ(u.max_abs(), 0.0);
  EXPECT_EQ(v.max_abs(), 0.0);
}

TEST(PeakonFields, SinglePeakon) {
  const Grid g = make_grid(30.0, 2048);
  const auto [u, v] = peakon_fields(PeakonState{0.0, {0.0}, {10.0}, {}, {}}, g);
  EXPECT_NEAR(u[1024], 5.0, 1e-12);
  for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(u[j], 10.0 * oracle::periodic_green(g.node(j), 30.0), 1e-12);
  EXPECT_EQ(v.max_abs(), 0.0);
}

TEST(PeakonFields, MatchesVelocityOfDiscreteDeltas) {
  const Grid g = make_grid(30.0, 2048);
  const PeakonState ps{0.0, {g.node(900)}, {2.0}, {g.node(1100)}, {1.5}};
  const auto [u, v] = peakon_fields(ps, g);
  RealField m(g), n(g);
  m[900] = 2.0 / g.spacing();
  n[1100] = 1.5 / g.spacing();
  const auto vel = recover_velocity(make_state(0.0, m, n, Mode::coupled));
  EXPECT_LT(max_abs_diff(to_complex(u), vel.u), 2.0 * g.spacing());
  EXPECT_LT(max_abs_diff(to_complex(v), vel.v), 1.5 * g.spacing());
}

TEST(PeakonFields, OutsideWindow) {
  const Grid g = make_grid(5.0, 64);
  EXPECT_THROW(peakon_fields(PeakonState{0.0, {6.0}, {1.0}, {}, {}}, g), DomainError);
}

TEST(EvolvePeakons, ZeroAmplitudesStationary) {
  const auto tr = evolve_peakons(pair(0, 0, -1, 2), 1.0, 0.1);
  EXPECT_EQ(tr.back().q[0], -1.0);
  EXPECT_EQ(tr.back().r[0], 2.0);
}

TEST(EvolvePeakons, ConservationOverTwentyUnits) {
  const PeakonState ps = pair(10, 1, 0, 5);
  const auto tr = evolve_peakons(ps, 20.0, 1e-3);
  const double h0 = peakon_hamiltonian(ps);
  double dsum = 0.0, dh = 0.0;
  for (const auto& s : tr) {
    dsum = std::max(dsum, std::abs(s.m_amp[0] + s.n_amp[0] - 11.0));
    dh = std::max(dh, std::abs(peakon_hamiltonian(s) - h0) / h0);
    ASSERT_GT(s.m_amp[0], 0.0);
    ASSERT_GT(s.n_amp[0], 0.0);
  }
  EXPECT_LT(dsum, 1e-10);
  EXPECT_LT(dh, 1e-8);
  EXPECT_DOUBLE_EQ(tr.back().t, 20.0);
}

TEST(EvolvePeakons, RelativeMotionBounded) {
  const auto tr = evolve_peakons(pair(10, 1, 0, 1), 30.0, 1e-3);
  double lo = 1e300, hi = -1e300;
  for (const auto& s : tr) {
    lo = std::min(lo, s.q[0] - s.r[0]);
    hi = std::max(hi, s.q[0] - s.r[0]);
  }
  // Widest separation is reached at m = n; h conservation gives
  // |d|max = |d0| + log(sigma^2 / (4 m n)).
  const double dmax = 1.0 + std::log(121.0 / 40.0);
  EXPECT_NEAR(lo, -dmax, 1e-6);
  EXPECT_NEAR(hi, dmax, 1e-6);
}

TEST(EvolvePeakons, ExchangeCommutes) {
  const PeakonState ps{0.0, {-1.0, 0.5}, {3.0, 1.0}, {0.0, 2.0}, {2.0, 0.5}};
  const auto a = evolve_peakons(ps, 3.0, 1e-2).back().swapped();
  const auto b = evolve_peakons(ps.swapped(), 3.0, 1e-2).back();
  EXPECT_EQ(a.q, b.q);
  EXPECT_EQ(a.r, b.r);
  EXPECT_EQ(a.m_amp, b.m_amp);
  EXPECT_EQ(a.n_amp, b.n_amp);
}

TEST(EvolvePeakons, SymmetricCollisionIsAmplitudeStationary) {
  const auto tr = evolve_peakons(pair(2, 2, 0.3, 0.3), 2.0, 1e-2);
  EXPECT_EQ(tr.back().m_amp[0], 2.0);
  EXPECT_EQ(tr.back().n_amp[0], 2.0);
  EXPECT_NEAR(tr.back().q[0], 0.3 + 2.0, 1e-12);
}

TEST(EvolvePeakons, BlowUpGuard) {
  PeakonOptions opt;
  opt.blowup_threshold = 10.2;  // the orbit peaks at m ~ 10.42
  EXPECT_THROW(evolve_peakons(pair(10, 1, 0, -0.5), 5.0, 1e-3, opt), PeakonBlowUp);
  EXPECT_THROW(evolve_peakons(pair(10, 1, 0, 1), 1.0, 0.0), ContractError);
}

TEST(MeasureWaltz, ClosedFormPeriods) {
  for (double d0 : {0.0, 0.5, 1.5}) {
    const double T = oracle::waltz_period(10, 1, d0);
    const auto w = measure_waltz(evolve_peakons(pair(10, 1, 0, d0), 1.2 * T, 1e-3));
    EXPECT_NEAR(w.period, T, 1e-6 * T) << d0;
    EXPECT_LT(w.swap_error, 1e-6 * 11) << d0;
  }
  EXPECT_DOUBLE_EQ(oracle::waltz_period(10, 1, 0.0), 3.6);
}

TEST(MeasureWaltz, SymmetricPair) {
  const double T = oracle::waltz_period(2, 2, 1.0);
  const auto w = measure_waltz(evolve_peakons(pair(2, 2, 0, 1), 1.2 * T, 1e-3));
  EXPECT_NEAR(w.period, T, 1e-6 * T);
  EXPECT_LT(w.swap_error, 1e-9);
}

TEST(MeasureWaltz, TooShort) {
  EXPECT_THROW(measure_waltz(evolve_peakons(pair(10, 1, 0, 5), 20.0, 1e-2)), MeasurementError);
  EXPECT_THROW(measure_waltz({pair(10, 1, 0, 5)}), MeasurementError);
}

TEST(MeasureWaltz, CalibrationScanFindsFigurePeriod) {
  const auto pts = scan_waltz_period(10, 1, {0.0, 0.01, 0.05, 0.5, 1.0}, 1e-3, 8.0);
  ASSERT_EQ(pts.size(), 5u);
  EXPECT_NEAR(pts[0].period, 3.6, 1e-6);
  EXPECT_NEAR(pts[1].period, 3.6, 0.05);
  EXPECT_GT(std::abs(pts[3].period - 3.6), 0.05);
}

// Mollified deltas follow the peakon ODEs up to the mollifier scale.
TEST(PeakonVsPde, MollifiedPairTracksOdes) {
  const Grid g = make_grid(30.0, 4096);
  ScenarioConfig cfg;
  cfg.m0 = "mollified_peakon(-1, 2, 0.3)";
  cfg.n0 = "mollified_peakon(1, 1, 0.3)";
  auto [m, n] = build_initial_condition(cfg, g);
  const Trajectory tr = evolve(make_state(0.0, m, n, Mode::coupled), 1.0, 5e-4, {});
  const PdeState& s = tr.back();
  auto moments = [&](const ComplexField& f) {
    double mass = 0.0, first = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      mass += f[j].real() * g.spacing();
      first += g.node(j) * f[j].real() * g.spacing();
    }
    return std::pair{mass, first / mass};
  };
  const auto ode = evolve_peakons(pair(2, 1, -1, 1), 1.0, 1e-3).back();
  const auto [mm, mq] = moments(s.m);
  const auto [nm, nr] = moments(s.n);
  EXPECT_NEAR(mm, ode.m_amp[0], 2e-2);
  EXPECT_NEAR(nm, ode.n_amp[0], 2e-2);
  EXPECT_NEAR(mq, ode.q[0], 2e-2);
  EXPECT_NEAR(nr, ode.r[0], 2e-2);
}
