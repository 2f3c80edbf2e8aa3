#include "bds/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace bds {

FmClass fm_classify(const ReducedInterval& iv) {
  const long lost = iv.a - iv.b;
  if (lost == 0 && iv.c_new == 0) return FmClass::None;
  if (lost == 0 && iv.c_new == 1) return FmClass::Birth;
  if (lost == 1 && iv.c_new == 0) return FmClass::Death;
  if (lost == 1 && iv.c_new == 1) return FmClass::Shift;
  return FmClass::Complex;
}

FmCounts fm_counts(const PanelDataset& data) {
  FmCounts c;
  for (const auto& p : data.patients) {
    for (const auto& iv : p.intervals) {
      switch (fm_classify(iv)) {
        case FmClass::None: ++c.n_none; break;
        case FmClass::Birth: ++c.n_birth; break;
        case FmClass::Shift: ++c.n_shift; break;
        case FmClass::Death: ++c.n_death; break;
        case FmClass::Complex: ++c.dropped; break;
      }
    }
  }
  return c;
}

double fm_transition_prob(long a, long l, long m, double t, const RateTriple& rates) {
  const double theta = rates.theta();
  const double tail = std::exp(-static_cast<double>(a) * theta * t);
  if (l == a && m == 0) return tail;
  if (theta == 0) return 0.0;
  if (l == a && m == 1) return rates.lambda / theta * tail;
  if (l == a - 1 && m == 0) return rates.mu / theta * tail;
  if (l == a - 1 && m == 1) return rates.nu / theta * tail;
  return 0.0;
}

double fm_loglik(const PanelDataset& data, const RateTriple& rates) {
  rates.check_valid();
  const double theta = rates.theta();
  double ll = 0;
  for (const auto& p : data.patients) {
    for (const auto& iv : p.intervals) {
      const double exponent = -static_cast<double>(iv.a) * theta * iv.dt();
      switch (fm_classify(iv)) {
        case FmClass::None: ll += exponent; break;
        case FmClass::Birth: ll += std::log(rates.lambda / theta) + exponent; break;
        case FmClass::Shift: ll += std::log(rates.nu / theta) + exponent; break;
        case FmClass::Death: ll += std::log(rates.mu / theta) + exponent; break;
        case FmClass::Complex: break;  // excluded
      }
    }
  }
  return ll;
}

namespace {

// proper FM objective used by the fit (see header)
struct FmData {
  // (k*dt) per no-event interval and per event interval
  std::vector<double> kdt_none, kdt_event;
  FmCounts counts;
};

FmData collect_fm(const PanelDataset& data) {
  FmData fd;
  fd.counts = fm_counts(data);
  for (const auto& p : data.patients) {
    for (const auto& iv : p.intervals) {
      const double kdt = static_cast<double>(iv.a) * iv.dt();
      switch (fm_classify(iv)) {
        case FmClass::None: fd.kdt_none.push_back(kdt); break;
        case FmClass::Complex: break;
        default: fd.kdt_event.push_back(kdt); break;
      }
    }
  }
  return fd;
}

double fm_objective(const FmData& fd, const RateTriple& r) {
  const double theta = r.theta();
  double ll = 0;
  for (double kdt : fd.kdt_none) ll += -kdt * theta;
  const long ne = fd.counts.n_birth + fd.counts.n_shift + fd.counts.n_death;
  if (ne > 0) {
    ll += fd.counts.n_birth * std::log(r.lambda / theta);
    ll += fd.counts.n_shift * std::log(r.nu / theta);
    ll += fd.counts.n_death * std::log(r.mu / theta);
    for (double kdt : fd.kdt_event) ll += std::log1p(-std::exp(-kdt * theta));
  }
  return ll;
}

// d/dtheta of the profile objective (rate ratios fixed at the count ratios)
double fm_profile_dtheta(const FmData& fd, double theta, long n_event) {
  double d = 0;
  for (double kdt : fd.kdt_none) d -= kdt;
  for (double kdt : fd.kdt_event) d += kdt / std::expm1(kdt * theta);
  (void)n_event;
  return d;
}

}  // namespace

FmFit fit_fm(const PanelDataset& data) {
  const FmData fd = collect_fm(data);
  FmFit fit;
  fit.counts = fd.counts;
  if (fd.counts.usable() == 0)
    throw ValidationError("fit_fm: every interval was dropped as a complex change");

  const long ne = fd.counts.n_birth + fd.counts.n_shift + fd.counts.n_death;
  const double floor = 1e-12;

  if (ne == 0) {
    // no events: the likelihood decreases in theta, rates sit at the floor
    fit.rates = {floor, floor, floor};
    fit.floored = true;
    fit.converged = true;
    fit.loglik = fm_objective(fd, fit.rates);
    return fit;
  }

  // At a stationary point the rates are proportional to the event counts,
  // leaving a one-dimensional concave problem in theta.
  const double total_none = std::accumulate(fd.kdt_none.begin(), fd.kdt_none.end(), 0.0);
  double theta;
  if (total_none == 0) {
    // no no-event intervals: objective increases in theta without bound
    theta = 1e6;
    fit.converged = false;
  } else {
    double lo = 1e-12, hi = 1.0;
    while (fm_profile_dtheta(fd, hi, ne) > 0 && hi < 1e12) hi *= 2;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (fm_profile_dtheta(fd, mid, ne) > 0 ? lo : hi) = mid;
    }
    theta = 0.5 * (lo + hi);
    fit.converged = true;
  }

  fit.rates.lambda = std::max(theta * fd.counts.n_birth / ne, floor);
  fit.rates.nu = std::max(theta * fd.counts.n_shift / ne, floor);
  fit.rates.mu = std::max(theta * fd.counts.n_death / ne, floor);
  fit.floored = fd.counts.n_birth == 0 || fd.counts.n_shift == 0 || fd.counts.n_death == 0;
  fit.loglik = fm_objective(fd, fit.rates);

  // observed information in log-rate coordinates, central differences
  const Eigen::Vector3d x(std::log(fit.rates.lambda), std::log(fit.rates.nu),
                          std::log(fit.rates.mu));
  auto f = [&](const Eigen::VectorXd& v) {
    return fm_objective(fd, {std::exp(v[0]), std::exp(v[1]), std::exp(v[2])});
  };
  const SeResult se = standard_errors_of(f, x, 1e-4, 1);
  if (se.ok) {
    fit.se_ok = true;
    for (int i = 0; i < 3; ++i) fit.se_log[i] = se.se[i];
  }
  return fit;
}

NmResult nelder_mead_maximize(const std::function<double(const Eigen::VectorXd&)>& f,
                              const Eigen::VectorXd& x0, const DirectOptions& opt) {
  const long n = x0.size();
  std::vector<Eigen::VectorXd> x(n + 1, x0);
  for (long i = 0; i < n; ++i) x[i + 1][i] += opt.simplex_step;
  std::vector<double> fx(n + 1);
  for (long i = 0; i <= n; ++i) fx[i] = f(x[i]);

  auto order = [&]() {
    std::vector<long> idx(n + 1);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](long a, long b) { return fx[a] > fx[b]; });
    std::vector<Eigen::VectorXd> x2(n + 1);
    std::vector<double> f2(n + 1);
    for (long i = 0; i <= n; ++i) {
      x2[i] = x[idx[i]];
      f2[i] = fx[idx[i]];
    }
    x.swap(x2);
    fx.swap(f2);
  };

  NmResult out;
  int iter = 0;
  for (; iter < opt.max_iter; ++iter) {
    order();
    if (std::isfinite(fx[n]) && (fx[0] - fx[n]) / (std::abs(fx[0]) + 1.0) < opt.tol) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (long i = 0; i < n; ++i) centroid += x[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = centroid + 1.0 * (centroid - x[n]);
    const double fr = f(xr);
    if (fr > fx[0]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (xr - centroid);
      const double fe = f(xe);
      if (fe > fr) {
        x[n] = xe;
        fx[n] = fe;
      } else {
        x[n] = xr;
        fx[n] = fr;
      }
    } else if (fr > fx[n - 1]) {
      x[n] = xr;
      fx[n] = fr;
    } else {
      const bool outside = fr > fx[n];
      const Eigen::VectorXd base = outside ? xr : x[n];
      const Eigen::VectorXd xc = centroid + 0.5 * (base - centroid);
      const double fc = f(xc);
      if (fc > (outside ? fr : fx[n])) {
        x[n] = xc;
        fx[n] = fc;
      } else {
        for (long i = 1; i <= n; ++i) {
          x[i] = x[0] + 0.5 * (x[i] - x[0]);
          fx[i] = f(x[i]);
        }
      }
    }
  }
  order();
  out.x = x[0];
  out.value = fx[0];
  out.iterations = iter;
  return out;
}

FitResult fit_direct(const PanelDataset& data, const Design& design,
                     const RegressionCoefficients& beta0, const DirectOptions& dopt,
                     const EmOptions& opt) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();

  FitResult fit;
  fit.method = "direct";
  fit.spec = design.spec;
  fit.k = design.spec.n_params();
  fit.n_units = static_cast<double>(data.n_intervals());

  auto value = [&](const Eigen::VectorXd& v) -> double {
    try {
      return observed_loglik(data, design, unflatten(design.spec, v), opt);
    } catch (const NumericError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  const NmResult nm = nelder_mead_maximize(value, beta0.flat(), dopt);
  fit.converged = nm.converged;
  fit.beta = unflatten(design.spec, nm.x);
  // the reported value is the objective recomputed at the returned point
  fit.loglik = value(nm.x);
  fit.n_iterations = nm.iterations;
  fit.trace.push_back({nm.iterations, fit.loglik, 0.0,
                       std::chrono::duration<double>(clock::now() - t_start).count()});
  finalize_fit(fit, data, design, opt);
  return fit;
}

}  // namespace bds
