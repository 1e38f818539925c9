#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "ccch/ccch.hpp"
#include "oracles.hpp"

using namespace ccch;
using std::numbers::pi;

TEST(Grid, PiSixteen) {
  const Grid g = make_grid(pi, 16);
  EXPECT_DOUBLE_EQ(g.spacing(), 2.0 * pi / 16.0);
  EXPECT_DOUBLE_EQ(g.node(0), -pi);
}

TEST(Grid, DefaultWindow) {
  const Grid g = make_grid(30.0, 2048);
  EXPECT_DOUBLE_EQ(g.spacing(), 60.0 / 2048.0);
  EXPECT_NEAR(g.spacing() * 2048.0, 60.0, 1e-13);
  for (std::size_t j = 1; j < g.size(); ++j) ASSERT_LT(g.node(j - 1), g.node(j));
}

TEST(Grid, RejectsBadParameters) {
  EXPECT_THROW(make_grid(-1.0, 64), ConfigError);
  EXPECT_THROW(make_grid(0.0, 64), ConfigError);
  EXPECT_THROW(make_grid(1.0, 1000), ConfigError);
  EXPECT_THROW(make_grid(1.0, 8), ConfigError);
}

TEST(Grid, WrapsIntoWindow) {
  const Grid g = make_grid(2.0, 16);
  EXPECT_DOUBLE_EQ(g.wrap(2.5), -1.5);
  EXPECT_DOUBLE_EQ(g.wrap(-2.5), 1.5);
  EXPECT_DOUBLE_EQ(g.wrap(2.0), -2.0);
}

TEST(Field, ValueSemantics) {
  const Grid g = make_grid(1.0, 16);
  RealField a(g);
  RealField b = a;
  b[3] = 1.0;
  EXPECT_EQ(a[3], 0.0);
  EXPECT_THROW(a += RealField(make_grid(2.0, 16)), ContractError);
}

TEST(SpectralDerivative, SineGivesCosine) {
  const Grid g = make_grid(pi, 64);
  const auto f = RealField::sample(g, [](double x) { return std::sin(x); });
  const auto d = spectral_derivative(f);
  for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(d[j], std::cos(g.node(j)), 1e-14);
}

TEST(SpectralDerivative, ConstantGivesZero) {
  const Grid g = make_grid(3.0, 32);
  const auto d = spectral_derivative(RealField::sample(g, [](double) { return 4.2; }));
  EXPECT_LT(d.max_abs(), 1e-13);
}

TEST(SpectralDerivative, ThirdHarmonic) {
  const Grid g = make_grid(pi, 64);
  const auto d = spectral_derivative(RealField::sample(g, [](double x) { return std::sin(3 * x); }));
  double err = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) err = std::max(err, std::abs(d[j] - 3.0 * std::cos(3.0 * g.node(j))));
  EXPECT_LT(err, 1e-12);
}

TEST(SpectralDerivative, RejectsNonFinite) {
  const Grid g = make_grid(1.0, 16);
  RealField f(g);
  f[2] = std::nan("");
  EXPECT_THROW(spectral_derivative(f), NumericError);
}

TEST(SpectralDerivative, MatchesNaiveDft) {
  const Grid g = make_grid(2.0, 32);
  std::mt19937 rng(7);
  std::normal_distribution<double> nd;
  std::vector<oracle::cplx> coeff(g.size(), 0.0);
  for (long k = -10; k <= 10; ++k) {
    const std::size_t i = static_cast<std::size_t>((k + 32) % 32);
    coeff[i] = oracle::cplx(nd(rng), nd(rng));
  }
  // f = sum c_k exp(i k (x + L) pi / L), exact derivative from the coefficients.
  ComplexField f(g), exact(g);
  for (std::size_t j = 0; j < g.size(); ++j) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double k = static_cast<double>(oracle::mode(i, g.size())) * pi / 2.0;
      const oracle::cplx e = std::polar(1.0, k * (g.node(j) + 2.0));
      f[j] += coeff[i] * e;
      exact[j] += oracle::cplx(0.0, k) * coeff[i] * e;
    }
  }
  EXPECT_LT(max_abs_diff(spectral_derivative(f), exact), 1e-11);
}

TEST(HelmholtzInverse, Zero) {
  const Grid g = make_grid(5.0, 64);
  EXPECT_EQ(helmholtz_inverse(RealField(g)).max_abs(), 0.0);
}

TEST(HelmholtzInverse, Eigenfunction) {
  const Grid g = make_grid(5.0, 64);
  for (int j : {1, 3, 7}) {
    const double k = 2.0 * pi * j / 10.0;
    const auto f = RealField::sample(g, [k](double x) { return std::cos(k * x); });
    const auto u = helmholtz_inverse(f);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(u[i], std::cos(k * g.node(i)) / (1 + k * k), 1e-14);
  }
}

TEST(HelmholtzInverse, RoundTripOnBandLimitedData) {
  const Grid g = make_grid(4.0, 128);
  const auto f = RealField::sample(g, [](double x) { return std::exp(std::sin(pi * x / 4.0)); });
  EXPECT_LT(max_abs_diff(helmholtz_inverse(helmholtz_forward(f)), f), 1e-12);
  EXPECT_LT(max_abs_diff(helmholtz_forward(helmholtz_inverse(f)), f), 1e-12);
}

// The kernel has a kink, so the band-limited inverse of a discrete delta
// cannot match it to 1e-6. Its peak error is the aliased tail of the kink,
// sum over |mode| >= N/2 of 1/(L(1+k^2)) ~ h/pi^2, and the error decays
// away from the kink.
TEST(HelmholtzInverse, DiscreteDeltaWithinAliasingBound) {
  const Grid g = make_grid(30.0, 2048);
  RealField delta(g);
  const std::size_t c = g.size() / 2;
  delta[c] = 1.0 / g.spacing();
  const auto u = helmholtz_inverse(delta);
  const double bound = g.spacing() / (pi * pi);
  double peak_err = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double exact = oracle::periodic_green(g.node(j), 30.0);
    peak_err = std::max(peak_err, std::abs(u[j] - exact));
    if (std::abs(g.node(j)) > 5.0) EXPECT_LT(std::abs(u[j] - exact), 1e-6 * 0.5) << g.node(j);
  }
  EXPECT_LT(peak_err, bound);
  EXPECT_GT(peak_err, 0.25 * bound);
}

TEST(GreenKernel, ClosedFormValues) {
  EXPECT_NEAR(green_kernel_eval(0.0, 30.0), 0.5, 1e-10);
  EXPECT_NEAR(green_kernel_eval(std::log(2.0), 30.0), 0.25, 1e-10);
  EXPECT_NEAR(green_kernel_eval(1.0, 2.0), std::cosh(1.0) / (2.0 * std::sinh(2.0)), 1e-15);
  EXPECT_NEAR(green_kernel_eval(2.0, 2.0), 1.0 / (2.0 * std::sinh(2.0)), 1e-15);
}

TEST(GreenKernel, EvenAndDecreasing) {
  const double L = 7.0;
  double prev = green_kernel_eval(0.0, L);
  for (int i = 1; i <= 700; ++i) {
    const double x = i * 0.01;
    EXPECT_EQ(green_kernel_eval(x, L), green_kernel_eval(-x, L));
    const double cur = green_kernel_eval(x, L);
    EXPECT_LT(cur, prev);
    prev = cur;
  }
}

TEST(GreenKernel, NoOverflowOnWideWindows) {
  EXPECT_NEAR(green_kernel_eval(1.0, 800.0), 0.5 * std::exp(-1.0), 1e-15);
  EXPECT_TRUE(std::isfinite(green_kernel_eval(800.0, 800.0)));
}

TEST(Quadrature, Zero) {
  const Grid g = make_grid(10.0, 64);
  EXPECT_EQ(convolve_green_quadrature(RealField(g)).max_abs(), 0.0);
}

TEST(Quadrature, DiscreteDeltaReproducesKernel) {
  const Grid g = make_grid(10.0, 256);
  RealField delta(g);
  delta[128] = 1.0 / g.spacing();
  const auto u = convolve_green_quadrature(delta);
  // Away from the delta the direct sum is the kernel itself; at the delta the
  // kink correction -h^2 f / 12 shifts it by h / 12.
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double want = oracle::periodic_green(g.node(j) - g.node(128), 10.0) - (j == 128 ? g.spacing() / 12.0 : 0.0);
    EXPECT_NEAR(u[j], want, 1e-13) << j;
  }
}

TEST(Quadrature, AgreesWithSpectralInverseOnBump) {
  const Grid g = make_grid(30.0, 2048);
  const auto f = RealField::sample(g, [](double x) { return oracle::bump(x, 1.0, 4.0, 2.0); });
  EXPECT_LT(max_abs_diff(convolve_green_quadrature(f), helmholtz_inverse(f)), 1e-6);
}

TEST(Quadrature, SecondOrderInSpacing) {
  // Error against the spectral path shrinks at least like h^2.
  double prev = 0.0;
  for (std::size_t n : {128u, 256u, 512u}) {
    const Grid g = make_grid(15.0, n);
    const auto f = RealField::sample(g, [](double x) { return oracle::bump(x, 0.0, 3.0, 1.0); });
    const double err = max_abs_diff(convolve_green_quadrature(f), helmholtz_inverse(f));
    if (prev > 0.0) EXPECT_LT(err, prev / 3.9);
    prev = err;
  }
}

TEST(DecomposeI1I2, Zero) {
  const Grid g = make_grid(10.0, 64);
  const auto [a, b] = decompose_I1_I2(RealField(g), 5);
  EXPECT_EQ(a, 0.0);
  EXPECT_EQ(b, 0.0);
}

TEST(DecomposeI1I2, NonnegativeMomentum) {
  const Grid g = make_grid(10.0, 256);
  const auto m = RealField::sample(g, [](double x) { return oracle::bump(x, 0.0, 2.0, 1.0); });
  for (std::size_t j = 0; j < g.size(); j += 7) {
    const auto [a, b] = decompose_I1_I2(m, j);
    EXPECT_GE(a, 0.0);
    EXPECT_GE(b, 0.0);
  }
  EXPECT_THROW(decompose_I1_I2(m, g.size()), ContractError);
}

TEST(DecomposeI1I2, ReconstructsVelocityAndSlope) {
  const Grid g = make_grid(30.0, 2048);
  const auto m = RealField::sample(g, [](double x) { return oracle::bump(x, -1.0, 5.0, 1.0); });
  const auto u = helmholtz_inverse(m);
  const auto ux = spectral_derivative(u);
  double err = 0.0;
  for (std::size_t j = 0; j < g.size(); j += 3) {
    const auto [i1, i2] = decompose_I1_I2(m, j);
    err = std::max({err, std::abs(i1 + i2 - u[j]), std::abs(i2 - i1 - ux[j])});
  }
  EXPECT_LT(err, 1e-5);
}

TEST(Dealiasing, ProductMatchesTruncatedConvolution) {
  const Grid g = make_grid(pi, 32);
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  std::vector<oracle::cplx> ca(32, 0.0), cb(32, 0.0);
  for (long k = -15; k <= 15; ++k) {
    const auto i = static_cast<std::size_t>((k + 32) % 32);
    ca[i] = {nd(rng), nd(rng)};
    cb[i] = {nd(rng), nd(rng)};
  }
  auto synth = [&](const std::vector<oracle::cplx>& c) {
    ComplexField f(g);
    for (std::size_t j = 0; j < 32; ++j) {
      for (std::size_t i = 0; i < 32; ++i) {
        f[j] += c[i] * std::polar(1.0, 2.0 * pi * static_cast<double>(oracle::mode(i, 32) * static_cast<long>(j)) / 32.0);
      }
    }
    return f;
  };
  const ComplexField a = synth(ca), b = synth(cb);
  const ComplexField p = dealiased_product(a, b);
  const auto want = oracle::truncated_product_coefficients(ca, cb);
  std::vector<oracle::cplx> pv(p.values().begin(), p.values().end());
  const auto got = oracle::dft(pv);
  for (std::size_t k = 0; k < 32; ++k) EXPECT_LT(std::abs(got[k] / 32.0 - want[k]), 1e-11) << k;
}

TEST(Dealiasing, ExactForLowModeProducts) {
  const Grid g = make_grid(pi, 64);
  const auto a = RealField::sample(g, [](double x) { return std::sin(5 * x); });
  const auto b = RealField::sample(g, [](double x) { return std::cos(7 * x); });
  const auto p = dealiased_product(a, b);
  for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(p[j], std::sin(5 * g.node(j)) * std::cos(7 * g.node(j)), 1e-14);
}
