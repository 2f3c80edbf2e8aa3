#include <gtest/gtest.h>

#include <cmath>

#include "bds/baselines.hpp"
#include "bds/sim.hpp"
#include "bds/spectral.hpp"

using namespace bds;

namespace {

PanelDataset reduced_data(std::vector<ReducedRow> rows) {
  return validate_dataset(rows, nullptr);
}

ReducedInterval iv_of(long a, long b, long c) { return {a, b, c, 0.0, 1.0}; }

}  // namespace

TEST(FmClassify, OneEventReading) {
  EXPECT_EQ(fm_classify(iv_of(5, 5, 0)), FmClass::None);
  EXPECT_EQ(fm_classify(iv_of(5, 5, 1)), FmClass::Birth);
  EXPECT_EQ(fm_classify(iv_of(5, 4, 0)), FmClass::Death);
  EXPECT_EQ(fm_classify(iv_of(12, 11, 1)), FmClass::Shift);
  EXPECT_EQ(fm_classify(iv_of(5, 3, 0)), FmClass::Complex);
  EXPECT_EQ(fm_classify(iv_of(5, 5, 2)), FmClass::Complex);
  EXPECT_EQ(fm_classify(iv_of(5, 4, 2)), FmClass::Complex);
  EXPECT_EQ(fm_classify(iv_of(5, 3, 1)), FmClass::Complex);
}

TEST(FmLoglik, NoEventIntervalValue) {
  // k = 10, theta = 0.0362, dt = 1 -> -0.362
  const RateTriple rates{0.0188, 0.0027, 0.0147};
  ASSERT_NEAR(rates.theta(), 0.0362, 1e-15);
  const PanelDataset data = reduced_data({{"p1", 0.0, 1.0, 10, 10, 0, 2}});
  EXPECT_NEAR(fm_loglik(data, rates), -0.362, 1e-12);
}

TEST(FmLoglik, ShiftIntervalFormula) {
  const RateTriple rates{0.0188, 0.00268, 0.0147};
  const PanelDataset data = reduced_data({{"p1", 0.0, 1.0, 12, 11, 1, 2}});
  const double want = std::log(rates.nu / rates.theta()) - 12 * rates.theta() * 1.0;
  EXPECT_DOUBLE_EQ(fm_loglik(data, rates), want);
}

TEST(FmLoglik, ComplexChangesAreExcludedAndCounted) {
  const PanelDataset data = reduced_data(
      {{"p1", 0.0, 1.0, 5, 5, 0, 2}, {"p1", 1.0, 2.0, 5, 2, 3, 3}});
  const RateTriple rates{0.1, 0.05, 0.1};
  EXPECT_DOUBLE_EQ(fm_loglik(data, rates), -5 * rates.theta());
  const FmCounts c = fm_counts(data);
  EXPECT_EQ(c.n_none, 1);
  EXPECT_EQ(c.dropped, 1);
}

TEST(FmTransitionProb, NoEventMatchesBranchingFastPathBitwise) {
  const RateTriple rates{0.0188, 0.00268, 0.0147};
  for (long a : {1L, 5L, 12L})
    for (double t : {0.4, 1.0, 7.0})
      EXPECT_EQ(fm_transition_prob(a, a, 0, t, rates),
                std::exp(-static_cast<double>(a) * rates.theta() * t));
}

TEST(FmTransitionProb, NeverExceedsBranchingOnMultiPathCells) {
  // (12,0) -> (11,1) is reachable by one shift or by birth+death histories;
  // FM only prices the shift, so it must sit at or below the branching value
  const RateTriple rates{0.0188, 0.00268, 0.0147};
  SpectralOptions opt;
  for (double t : {0.5, 1.0, 2.0, 5.0, 10.0}) {
    const TransitionMatrix tm = invert_probabilities(12, t, rates, opt);
    const double fm = fm_transition_prob(12, 11, 1, t, rates);
    EXPECT_LE(fm, tm.at(11, 1) + 1e-12) << t;
  }
}

TEST(FmTransitionProb, ZeroOutsideTheOneEventNeighborhood) {
  const RateTriple rates{0.1, 0.1, 0.1};
  EXPECT_DOUBLE_EQ(fm_transition_prob(10, 8, 0, 1.0, rates), 0.0);
  EXPECT_DOUBLE_EQ(fm_transition_prob(10, 10, 2, 1.0, rates), 0.0);
  EXPECT_DOUBLE_EQ(fm_transition_prob(10, 9, 2, 1.0, rates), 0.0);
}

TEST(FitFm, SingleNoEventIntervalFloorsRates) {
  const PanelDataset data = reduced_data({{"p1", 0.0, 1.0, 8, 8, 0, 2}});
  const FmFit fit = fit_fm(data);
  EXPECT_TRUE(fit.floored);
  EXPECT_TRUE(fit.converged);
  EXPECT_LE(fit.rates.lambda, 1e-11);
}

TEST(FitFm, AllDroppedIsAnError) {
  const PanelDataset data = reduced_data({{"p1", 0.0, 1.0, 5, 1, 3, 2}});
  EXPECT_THROW(fit_fm(data), ValidationError);
}

TEST(FitFm, RecoverersRatesOnShortIntervals) {
  // with dt -> 0 the FM and branching likelihoods agree to first order
  PanelRecipe r;
  r.n_patients = 700;
  r.min_intervals = 1;
  r.max_intervals = 1;
  r.dt = 0.05;
  r.init_min = 5;
  r.init_max = 15;
  r.rates = RateTriple{0.07, 0.02, 0.12};
  const PanelDataset data = simulate_panel(r, 8811);
  const FmFit fm = fit_fm(data);
  ASSERT_TRUE(fm.converged);

  const Design design = Design::from(data, ModelSpec::intercept_only());
  EmOptions opt;
  opt.with_se = false;
  opt.spectral.n_grid = 32;
  const FitResult em = fit_em(data, design, std::nullopt, opt);
  ASSERT_TRUE(em.converged);

  EXPECT_NEAR(fm.rates.lambda / std::exp(em.beta.beta_lambda[0]), 1.0, 0.1);
  EXPECT_NEAR(fm.rates.mu / std::exp(em.beta.beta_mu[0]), 1.0, 0.1);
}

TEST(NelderMead, QuadraticSanity) {
  auto f = [](const Eigen::VectorXd& x) { return -(x[0] - 1.7) * (x[0] - 1.7); };
  DirectOptions opt;
  opt.tol = 1e-12;
  const NmResult nm = nelder_mead_maximize(f, Eigen::VectorXd::Zero(1), opt);
  EXPECT_TRUE(nm.converged);
  EXPECT_NEAR(nm.x[0], 1.7, 1e-6);
}

TEST(NelderMead, HitsIterationCapWhenAskedToStopEarly) {
  auto f = [](const Eigen::VectorXd& x) { return -x.squaredNorm(); };
  DirectOptions opt;
  opt.tol = 0.0;  // unreachable
  opt.max_iter = 25;
  const NmResult nm = nelder_mead_maximize(f, Eigen::VectorXd::Ones(3), opt);
  EXPECT_FALSE(nm.converged);
  EXPECT_EQ(nm.iterations, 25);
}

TEST(FitDirect, AgreesWithEmOnInterceptModel) {
  PanelRecipe r;
  r.n_patients = 80;
  r.min_intervals = 2;
  r.max_intervals = 2;
  r.dt = 0.5;
  r.init_min = 2;
  r.init_max = 10;
  r.rates = RateTriple{0.07, 0.02, 0.12};
  const PanelDataset data = simulate_panel(r, 2718);
  const Design design = Design::from(data, ModelSpec::intercept_only());

  EmOptions opt;
  opt.with_se = false;
  opt.spectral.n_grid = 32;
  const FitResult em = fit_em(data, design, std::nullopt, opt);
  const FitResult direct =
      fit_direct(data, design, moment_start(data, design), DirectOptions{}, opt);
  ASSERT_TRUE(em.converged);

  // same objective, two optimizers
  EXPECT_NEAR(em.loglik, direct.loglik, 1e-3);
  EXPECT_GE(em.loglik, direct.loglik - 1e-4);

  // the reported direct loglik is the objective at the returned point
  const double recomputed = observed_loglik(data, design, direct.beta, opt);
  EXPECT_DOUBLE_EQ(direct.loglik, recomputed);
}
