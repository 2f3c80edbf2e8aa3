#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "bds/genfun.hpp"
#include "bds/ode.hpp"

using namespace bds;

namespace {

const RateTriple kPaperRates{0.0188, 0.00268, 0.0147};

// test-only oracle: integrate the type-2 Riccati itself with the generic
// stepper, independent of the closed-form path under test
cd riccati_ode_oracle(GenFunKind kind, double r, double t, cd s2, const RateTriple& rates) {
  const RiccatiCoef c = riccati_coef(kind, r, rates);
  std::vector<cd> y{s2};
  OdeOptions opt;
  opt.rtol = 1e-12;
  opt.atol = 1e-14;
  integrate_dopri5(
      y, 0.0, t, opt,
      [&](double, const std::vector<cd>& s, std::vector<cd>& ds) {
        ds[0] = c.kappa * s[0] * s[0] - c.b * s[0] + c.c;
      },
      [](std::size_t) { return std::string("riccati oracle"); });
  return y[0];
}

}  // namespace

TEST(Phi2, InitialCondition) {
  const cd s2(0.2, -0.9);
  EXPECT_LT(std::abs(phi2_closed(0.0, s2, kPaperRates) - s2), 1e-14);
}

TEST(Phi2, NormalizationAtOne) {
  for (double t : {0.3, 1.0, 5.0, 20.0})
    EXPECT_LT(std::abs(phi2_closed(t, cd(1, 0), kPaperRates) - cd(1, 0)), 1e-12) << t;
}

TEST(Phi2, PureDeathClosedForm) {
  // lambda = 0 reduces the Riccati to a linear equation with solution
  // 1 + (s2-1) e^{-mu t}, the Bernoulli survival generating function
  const RateTriple rates{0.0, 0.0, 0.31};
  const cd s2(-0.4, 0.55);
  for (double t : {0.5, 2.0, 9.0}) {
    const cd want = 1.0 + (s2 - 1.0) * std::exp(-0.31 * t);
    EXPECT_LT(std::abs(phi2_closed(t, s2, rates) - want), 1e-13);
  }
}

TEST(H2Closed, BirthAtRoneEqualsPhi2) {
  const cd s2(0.7, 0.3);
  for (double t : {0.5, 3.0}) {
    const cd h2 = h2_closed(GenFunKind::Birth, 1.0, t, s2, kPaperRates);
    EXPECT_LT(std::abs(h2 - phi2_closed(t, s2, kPaperRates)), 1e-10);
  }
}

TEST(H2Closed, ParticleTimeAtRzeroEqualsPhi2) {
  const cd s2(0.1, -0.8);
  for (double t : {0.5, 3.0}) {
    const cd h2 = h2_closed(GenFunKind::ParticleTime, 0.0, t, s2, kPaperRates);
    EXPECT_LT(std::abs(h2 - phi2_closed(t, s2, kPaperRates)), 1e-10);
  }
}

TEST(H2Closed, ShiftAtRoneEqualsPhi2) {
  const cd s2(0.5, 0.5);
  const cd h2 = h2_closed(GenFunKind::Shift, 1.0, 2.0, s2, kPaperRates);
  EXPECT_LT(std::abs(h2 - phi2_closed(2.0, s2, kPaperRates)), 1e-12);
}

TEST(H2Closed, DeathAgainstIndependentOdeOracle) {
  const RateTriple rates{0.5, 0.3, 0.45};
  const cd s2(0.7, 0.0);
  const cd closed = h2_closed(GenFunKind::Death, 0.5, 1.0, s2, rates);
  const cd oracle = riccati_ode_oracle(GenFunKind::Death, 0.5, 1.0, s2, rates);
  EXPECT_LT(std::abs(closed - oracle), 1e-8);
}

TEST(H2Closed, AllKindsAgainstOdeOracleOnCircle) {
  const RateTriple rates{0.11, 0.07, 0.16};
  for (GenFunKind kind : {GenFunKind::Probability, GenFunKind::Birth, GenFunKind::Shift,
                          GenFunKind::Death, GenFunKind::ParticleTime}) {
    const double r = kind == GenFunKind::ParticleTime ? 0.2 : 0.6;
    for (double ang : {0.0, 1.1, 2.7, 4.9}) {
      const cd s2 = std::exp(cd(0, ang));
      const cd closed = h2_closed(kind, r, 2.5, s2, rates);
      const cd oracle = riccati_ode_oracle(kind, r, 2.5, s2, rates);
      EXPECT_LT(std::abs(closed - oracle), 1e-9)
          << kind_name(kind) << " at angle " << ang;
    }
  }
}

TEST(H2Closed, RiccatiFixedPointResidual) {
  // the constant y roots must zero the right-hand side
  for (GenFunKind kind : {GenFunKind::Birth, GenFunKind::Death, GenFunKind::ParticleTime}) {
    const double r = kind == GenFunKind::ParticleTime ? 0.3 : 0.5;
    const RiccatiCoef c = riccati_coef(kind, r, kPaperRates);
    const double disc = c.b * c.b - 4 * c.kappa * c.c;
    ASSERT_GT(disc, 0);
    for (double root : {(c.b + std::sqrt(disc)) / (2 * c.kappa),
                        (c.b - std::sqrt(disc)) / (2 * c.kappa)}) {
      const double resid = c.kappa * root * root - c.b * root + c.c;
      EXPECT_LT(std::abs(resid), 1e-10 * std::max(1.0, std::abs(root)));
    }
  }
}

TEST(H2Closed, DegenerateNudgeContinuity) {
  // outputs just below and above the lambda == mu switch stay close
  const double mu = 0.02;
  const cd s2(0.36, -0.66);
  const double eps = 1e-8 * 2 * mu;  // threshold scale
  const RateTriple below{mu - 0.4 * eps, 0.01, mu};
  const RateTriple above{mu - 2.5 * eps, 0.01, mu};
  const cd a = phi2_closed(4.0, s2, below);
  const cd b = phi2_closed(4.0, s2, above);
  EXPECT_LT(std::abs(a - b), 1e-6);
  EXPECT_TRUE(std::isfinite(a.real()) && std::isfinite(a.imag()));
  // exactly equal rates never produce NaN
  const RateTriple equal{mu, 0.01, mu};
  const cd c = phi2_closed(4.0, s2, equal);
  EXPECT_TRUE(std::isfinite(c.real()) && std::isfinite(c.imag()));
  EXPECT_LT(std::abs(c - a), 1e-6);
}

TEST(H1Solve, TimeZeroReturnsS1GridBitForBit) {
  const GridSpec grid = GridSpec::make(16);
  const OdeOptions ode;
  for (GenFunKind kind : {GenFunKind::Probability, GenFunKind::Shift}) {
    const ComplexGrid g = h1_solve(kind, 1.0, 0.0, grid, kPaperRates, ode);
    for (int u = 0; u < 16; ++u)
      for (int w = 0; w < 16; ++w) {
        EXPECT_EQ(g.at(u, w).real(), grid.points[u].real());
        EXPECT_EQ(g.at(u, w).imag(), grid.points[u].imag());
      }
  }
}

TEST(H1Solve, ProbabilityNormalizationAtOnes) {
  const GridSpec grid = GridSpec::make(8);
  const OdeOptions ode;
  for (double t : {0.5, 2.0, 10.0}) {
    const ComplexGrid g = h1_solve(GenFunKind::Probability, 1.0, t, grid, kPaperRates, ode);
    EXPECT_LT(std::abs(g.at(0, 0) - cd(1, 0)), 1e-9) << t;  // s1 = s2 = 1
  }
}

TEST(H1Solve, ModulusBoundOnUnitTorus) {
  const GridSpec grid = GridSpec::make(32);
  const OdeOptions ode;
  for (double t : {0.5, 4.0, 12.0}) {
    const ComplexGrid g = h1_solve(GenFunKind::Probability, 1.0, t, grid, kPaperRates, ode);
    for (const cd& z : g.v) EXPECT_LE(std::abs(z), 1.0 + 1e-8);
  }
}

TEST(H1Solve, CountSwitchedOffMatchesProbability) {
  const GridSpec grid = GridSpec::make(16);
  const OdeOptions ode;
  const ComplexGrid phi1 = h1_solve(GenFunKind::Probability, 1.0, 3.0, grid, kPaperRates, ode);
  for (GenFunKind kind : {GenFunKind::Birth, GenFunKind::Shift, GenFunKind::Death}) {
    const ComplexGrid h = h1_solve(kind, 1.0, 3.0, grid, kPaperRates, ode);
    for (std::size_t i = 0; i < h.v.size(); ++i)
      EXPECT_LT(std::abs(h.v[i] - phi1.v[i]), 1e-8) << kind_name(kind);
  }
  const ComplexGrid pt = h1_solve(GenFunKind::ParticleTime, 0.0, 3.0, grid, kPaperRates, ode);
  for (std::size_t i = 0; i < pt.v.size(); ++i)
    EXPECT_LT(std::abs(pt.v[i] - phi1.v[i]), 1e-8);
}

TEST(H1Solve, ProductionMatchesSerialReference) {
  const GridSpec grid = GridSpec::make(16);
  const OdeOptions ode;
  for (GenFunKind kind : {GenFunKind::Probability, GenFunKind::Death}) {
    const double r = kind == GenFunKind::Probability ? 1.0 : 0.99999;
    const ComplexGrid fast = h1_solve(kind, r, 2.0, grid, kPaperRates, ode);
    const ComplexGrid ref = h1_solve_reference(kind, r, 2.0, grid, kPaperRates, ode);
    for (std::size_t i = 0; i < fast.v.size(); ++i)
      EXPECT_LT(std::abs(fast.v[i] - ref.v[i]), 1e-7) << kind_name(kind) << " i=" << i;
  }
}

TEST(RDerivative, ZeroAtTimeZero) {
  const GridSpec grid = GridSpec::make(8);
  const RDerivative d =
      g1_r_derivative(GenFunKind::Birth, 0.0, grid, kPaperRates, OdeOptions{});
  for (const cd& z : d.d_h1.v) EXPECT_EQ(std::abs(z), 0.0);
  for (const cd& z : d.d_h2.v) EXPECT_EQ(std::abs(z), 0.0);
}

TEST(RDerivative, NoShiftsMeansZeroShiftDerivative) {
  const RateTriple rates{0.12, 0.0, 0.08};
  const GridSpec grid = GridSpec::make(16);
  const RDerivative d = g1_r_derivative(GenFunKind::Shift, 2.0, grid, rates, OdeOptions{});
  for (const cd& z : d.d_h1.v) EXPECT_LT(std::abs(z), 1e-10);
  for (const cd& z : d.d_h2.v) EXPECT_LT(std::abs(z), 1e-10);
}

TEST(RDerivative, MeanBirthsFromDerivativeAtOnes) {
  // summing inverted coefficients equals evaluating G at s1 = s2 = 1, which
  // must match the first-moment value a*lambda*(e^{(lambda-mu)t}-1)/(lambda-mu)
  const GridSpec grid = GridSpec::make(8);
  const double t = 1.0;
  const RDerivative d = g1_r_derivative(GenFunKind::Birth, t, grid, kPaperRates, OdeOptions{});
  const double want = kPaperRates.lambda *
                      (std::exp((kPaperRates.lambda - kPaperRates.mu) * t) - 1.0) /
                      (kPaperRates.lambda - kPaperRates.mu);
  EXPECT_NEAR(d.d_h1.at(0, 0).real(), want, 1e-9);  // a = 1: G(1,1) = dH1/dr(1,1)
  EXPECT_NEAR(d.d_h1.at(0, 0).imag(), 0.0, 1e-12);
}
