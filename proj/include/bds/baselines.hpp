#ifndef BDS_BASELINES_HPP
#define BDS_BASELINES_HPP

#include <array>

#include "bds/em.hpp"

namespace bds {

enum class FmClass { None, Birth, Shift, Death, Complex };

// At-most-one-event reading of a reduced interval: birth (0 lost, 1 new),
// death (1 lost, 0 new), shift (1 lost, 1 new), none, or complex (dropped).
FmClass fm_classify(const ReducedInterval& iv);

struct FmCounts {
  long n_none = 0, n_birth = 0, n_shift = 0, n_death = 0, dropped = 0;

  long usable() const { return n_none + n_birth + n_shift + n_death; }
};

FmCounts fm_counts(const PanelDataset& data);

// Transition probability table of the frequent-monitoring approximation:
// e^{-k theta t} for no change, (rate/theta) e^{-k theta t} for one event,
// zero elsewhere.  Used for head-to-head probability comparisons.
double fm_transition_prob(long a, long l, long m, double t, const RateTriple& rates);

// Sum of log FM probabilities over usable intervals (complex changes are
// excluded); no-event intervals contribute -k theta dt.
double fm_loglik(const PanelDataset& data, const RateTriple& rates);

struct FmFit {
  RateTriple rates;
  std::array<double, 3> se_log{};   // SEs of log rates
  bool se_ok = false;
  double loglik = 0;                // maximized FM objective
  FmCounts counts;
  bool converged = false;
  bool floored = false;
};

// Maximum likelihood under the frequent-monitoring model.  The one-event
// formula above is not a proper likelihood (rescaling all rates toward zero
// always increases it), so the fit maximizes the standard at-most-one-event
// form: e^{-k theta dt} for no event and (rate/theta)(1 - e^{-k theta dt})
// for an event, which matches it to first order in theta*dt.
FmFit fit_fm(const PanelDataset& data);

struct DirectOptions {
  double tol = 1e-6;
  int max_iter = 2000;
  double simplex_step = 0.2;
};

struct NmResult {
  Eigen::VectorXd x;
  double value = 0;
  int iterations = 0;
  bool converged = false;
};

// Nelder-Mead simplex maximization with coefficients (1, 2, 0.5, 0.5);
// stops when the simplex value spread falls below tol relative to the best.
NmResult nelder_mead_maximize(const std::function<double(const Eigen::VectorXd&)>& f,
                              const Eigen::VectorXd& x0, const DirectOptions& opt);

// Derivative-free maximization of the observed log-likelihood with a
// Nelder-Mead simplex (reflection 1, expansion 2, contraction 0.5,
// shrink 0.5).  Hitting the iteration cap flags the result.
FitResult fit_direct(const PanelDataset& data, const Design& design,
                     const RegressionCoefficients& beta0, const DirectOptions& dopt,
                     const EmOptions& opt);

}  // namespace bds

#endif
