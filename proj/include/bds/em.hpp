#ifndef BDS_EM_HPP
#define BDS_EM_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bds/model_spec.hpp"
#include "bds/spectral.hpp"

namespace bds {

struct EmOptions {
  double tol = 1e-6;          // relative observed-loglik change
  int max_iter = 500;
  bool accelerate = true;     // closed-form fast path for no-change intervals
  bool with_se = true;
  SpectralOptions spectral;   // n_grid 0 means size from the data
  int n_threads = 0;
  double rate_floor = 1e-12;
};

// Per-patient expected sufficient statistics; loglik is the observed
// log-likelihood at the beta the E-step was run at (free by-product).
struct ExpectedSuffStats {
  Eigen::VectorXd births, shifts, deaths, ptime;
  double loglik = 0;
};

ExpectedSuffStats e_step(const PanelDataset& data, const Design& design,
                         const RegressionCoefficients& beta, const EmOptions& opt);

double observed_loglik(const PanelDataset& data, const Design& design,
                       const RegressionCoefficients& beta, const EmOptions& opt);

// Expected complete-data objective (up to the beta-free constant), its
// analytic gradient and block-diagonal Hessian in the flattened coefficients.
double q_objective(const ExpectedSuffStats& stats, const Design& design,
                   const RegressionCoefficients& beta);
Eigen::VectorXd q_gradient(const ExpectedSuffStats& stats, const Design& design,
                           const RegressionCoefficients& beta);
Eigen::MatrixXd q_hessian(const ExpectedSuffStats& stats, const Design& design,
                          const RegressionCoefficients& beta);

RegressionCoefficients m_step(const ExpectedSuffStats& stats, const Design& design,
                              const RegressionCoefficients& beta_init,
                              double rate_floor = 1e-12, bool* floored = nullptr);

// FM-style moment start: naive event counts over naive particle time, logs
// into the intercepts, zeros elsewhere.
RegressionCoefficients moment_start(const PanelDataset& data, const Design& design);

struct TraceRow {
  int iter = 0;
  double loglik = 0, delta = 0, seconds = 0;
};

struct CoefStats {
  std::string name;
  double est = 0, se = 0, lo = 0, hi = 0;
  bool se_ok = false;
};

struct FitResult {
  std::string method;
  ModelSpec spec;
  RegressionCoefficients beta;
  double loglik = 0;
  std::vector<TraceRow> trace;
  int n_iterations = 0;
  bool converged = false;
  bool floored = false;
  bool boundary = false;   // some fitted rate is within a whisker of zero
  int k = 0;               // total coefficient count
  double n_units = 0;      // BIC sample-size convention (default: intervals)
  double bic_value = 0;
  std::vector<CoefStats> coef;
  std::string se_note;
};

FitResult fit_em(const PanelDataset& data, const Design& design,
                 const std::optional<RegressionCoefficients>& beta0,
                 const EmOptions& opt);

struct SeResult {
  bool ok = false;
  Eigen::VectorXd se;
  Eigen::MatrixXd cov;
  std::string note;
};

// Wald standard errors from the inverse negative numerical Hessian of the
// observed log-likelihood (central differences, relative step 1e-4).
SeResult standard_errors(const PanelDataset& data, const Design& design,
                         const RegressionCoefficients& beta_hat, const EmOptions& opt);

// Same construction for an arbitrary objective; lets tests pin the quadratic case.
SeResult standard_errors_of(const std::function<double(const Eigen::VectorXd&)>& loglik,
                            const Eigen::VectorXd& x, double rel_step = 1e-4,
                            int n_threads = 0);

double bic(double loglik, int k, double n_units);

// Fills coef table (Wald 95% CIs), bic, and flags on a fitted result.
void finalize_fit(FitResult& fit, const PanelDataset& data, const Design& design,
                  const EmOptions& opt);

// Grid-size resolution shared by every consumer: explicit n wins, otherwise
// the data rule.
SpectralOptions resolve_spectral(const PanelDataset& data, const EmOptions& opt);

}  // namespace bds

#endif
