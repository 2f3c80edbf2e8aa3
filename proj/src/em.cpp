#include "bds/em.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bds {

SpectralOptions resolve_spectral(const PanelDataset& data, const EmOptions& opt) {
  SpectralOptions s = opt.spectral;
  if (s.n_grid == 0) s.n_grid = choose_grid_size(data.max_count());
  return s;
}

namespace {

std::vector<RateTriple> patient_rates(const PanelDataset& data, const Design& design,
                                      const RegressionCoefficients& beta) {
  std::vector<RateTriple> rates(data.patients.size());
  for (std::size_t p = 0; p < data.patients.size(); ++p)
    rates[p] = design.rates_for(static_cast<long>(p), beta);
  return rates;
}

bool fast_path(const ReducedInterval& iv, bool accelerate) {
  return accelerate && iv.no_change();
}

}  // namespace

ExpectedSuffStats e_step(const PanelDataset& data, const Design& design,
                         const RegressionCoefficients& beta, const EmOptions& opt) {
  const SpectralOptions sp = resolve_spectral(data, opt);
  const long m = static_cast<long>(data.patients.size());
  ExpectedSuffStats st;
  st.births = Eigen::VectorXd::Zero(m);
  st.shifts = Eigen::VectorXd::Zero(m);
  st.deaths = Eigen::VectorXd::Zero(m);
  st.ptime = Eigen::VectorXd::Zero(m);

  const std::vector<RateTriple> rates = patient_rates(data, design, beta);

  std::vector<std::pair<RateTriple, double>> keys;
  for (long p = 0; p < m; ++p)
    for (const auto& iv : data.patients[p].intervals)
      if (iv.a > 0 && !fast_path(iv, opt.accelerate))
        keys.push_back({rates[p], iv.dt()});

  SpectralCache cache(sp, /*with_moments=*/true, opt.n_threads);
  cache.prepare(keys);

  for (long p = 0; p < m; ++p) {
    for (const auto& iv : data.patients[p].intervals) {
      if (iv.a == 0) {
        if (iv.c_new > 0)
          throw NumericError("impossible transition for interval " + iv.describe() +
                             ": no particles can appear from an extinct state");
        continue;  // stays at (0,0) with probability 1
      }
      if (fast_path(iv, opt.accelerate)) {
        st.ptime[p] += static_cast<double>(iv.a) * iv.dt();
        st.loglik += -static_cast<double>(iv.a) * rates[p].theta() * iv.dt();
        continue;
      }
      const IntervalExpectations e =
          interval_expectations_cached(iv, rates[p], cache, sp);
      st.births[p] += e.e_birth;
      st.shifts[p] += e.e_shift;
      st.deaths[p] += e.e_death;
      st.ptime[p] += e.e_time;
      st.loglik += std::log(e.prob);
    }
  }
  return st;
}

double observed_loglik(const PanelDataset& data, const Design& design,
                       const RegressionCoefficients& beta, const EmOptions& opt) {
  const SpectralOptions sp = resolve_spectral(data, opt);
  const std::vector<RateTriple> rates = patient_rates(data, design, beta);
  const long m = static_cast<long>(data.patients.size());

  std::vector<std::pair<RateTriple, double>> keys;
  for (long p = 0; p < m; ++p)
    for (const auto& iv : data.patients[p].intervals)
      if (iv.a > 0 && !fast_path(iv, opt.accelerate))
        keys.push_back({rates[p], iv.dt()});

  SpectralCache cache(sp, /*with_moments=*/false, opt.n_threads);
  cache.prepare(keys);

  double ll = 0;
  for (long p = 0; p < m; ++p) {
    for (const auto& iv : data.patients[p].intervals) {
      if (iv.a == 0) {
        if (iv.c_new > 0)
          throw NumericError("impossible transition for interval " + iv.describe());
        continue;
      }
      if (fast_path(iv, opt.accelerate)) {
        ll += -static_cast<double>(iv.a) * rates[p].theta() * iv.dt();
        continue;
      }
      const Inverted& inv = cache.get(rates[p], iv.dt(), iv.a);
      if (iv.b >= inv.probs.n || iv.c_new >= inv.probs.n)
        throw NumericError("interval " + iv.describe() + " does not fit on the grid");
      const double prob = inv.probs.at(iv.b, iv.c_new);
      if (prob < sp.prob_floor)
        throw NumericError("impossible transition for interval " + iv.describe() +
                           ": probability below floor");
      ll += std::log(prob);
    }
  }
  return ll;
}

// --- Eq. 14 objective ------------------------------------------------------

namespace {

const Eigen::VectorXd& stat_for(const ExpectedSuffStats& s, int rate) {
  return rate == 0 ? s.births : rate == 1 ? s.shifts : s.deaths;
}

}  // namespace

double q_objective(const ExpectedSuffStats& stats, const Design& design,
                   const RegressionCoefficients& beta) {
  double q = 0;
  for (int rate = 0; rate < 3; ++rate) {
    const Eigen::MatrixXd Zb = design.block(rate);
    const Eigen::VectorXd eta = Zb * beta.block(rate);
    const Eigen::VectorXd& s = stat_for(stats, rate);
    q += s.dot(eta) - stats.ptime.dot(eta.array().exp().matrix());
  }
  return q;
}

Eigen::VectorXd q_gradient(const ExpectedSuffStats& stats, const Design& design,
                           const RegressionCoefficients& beta) {
  Eigen::VectorXd g(design.spec.n_params());
  long off = 0;
  for (int rate = 0; rate < 3; ++rate) {
    const Eigen::MatrixXd Zb = design.block(rate);
    const Eigen::VectorXd rate_p = (Zb * beta.block(rate)).array().exp();
    const Eigen::VectorXd& s = stat_for(stats, rate);
    const Eigen::VectorXd gb = Zb.transpose() * (s - stats.ptime.cwiseProduct(rate_p));
    g.segment(off, gb.size()) = gb;
    off += gb.size();
  }
  return g;
}

Eigen::MatrixXd q_hessian(const ExpectedSuffStats& stats, const Design& design,
                          const RegressionCoefficients& beta) {
  const int n = design.spec.n_params();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  long off = 0;
  for (int rate = 0; rate < 3; ++rate) {
    const Eigen::MatrixXd Zb = design.block(rate);
    const Eigen::VectorXd w = stats.ptime.cwiseProduct(
        (Zb * beta.block(rate)).array().exp().matrix());
    const long c = Zb.cols();
    h.block(off, off, c, c) = -(Zb.transpose() * w.asDiagonal() * Zb);
    off += c;
  }
  return h;
}

RegressionCoefficients m_step(const ExpectedSuffStats& stats, const Design& design,
                              const RegressionCoefficients& beta_init,
                              double rate_floor, bool* floored) {
  static const char* rate_names[3] = {"lambda", "nu", "mu"};
  RegressionCoefficients beta = beta_init;
  if (floored) *floored = false;

  for (int rate = 0; rate < 3; ++rate) {
    const Eigen::MatrixXd Zb = design.block(rate);
    const Eigen::VectorXd& s = stat_for(stats, rate);
    Eigen::VectorXd b = beta.block(rate);

    auto rates_of = [&](const Eigen::VectorXd& bb) {
      return (Zb * bb).array().exp().max(rate_floor).matrix().eval();
    };
    auto q_of = [&](const Eigen::VectorXd& bb) {
      return s.dot(Zb * bb) - stats.ptime.dot(rates_of(bb));
    };

    for (int it = 0; it < 10; ++it) {
      const Eigen::VectorXd r = rates_of(b);
      const Eigen::VectorXd w = stats.ptime.cwiseProduct(r);
      const Eigen::VectorXd grad = Zb.transpose() * (s - w);
      if (grad.lpNorm<Eigen::Infinity>() < 1e-8) break;
      if (w.sum() < 1e-280) break;  // rates pinned at the floor, nothing to fit
      const Eigen::MatrixXd h = Zb.transpose() * w.asDiagonal() * Zb;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
      if (ldlt.info() != Eigen::Success ||
          ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff()))
        throw NumericError(std::string("singular Hessian block for rate ") +
                           rate_names[rate] +
                           " in the M-step (no usable particle time in some direction)");
      Eigen::VectorXd step = ldlt.solve(grad);
      // safeguard: halve until the block objective does not decrease
      const double q0 = q_of(b);
      double scale = 1.0;
      bool accepted = false;
      for (int half = 0; half < 9; ++half) {
        const Eigen::VectorXd cand = b + scale * step;
        if (cand.allFinite() && q_of(cand) >= q0) {
          b = cand;
          accepted = true;
          break;
        }
        scale *= 0.5;
      }
      if (!accepted) break;
    }
    if (floored && (Zb * b).array().exp().minCoeff() <= rate_floor * 1.0001)
      *floored = true;
    beta.block(rate) = b;
  }
  return beta;
}

RegressionCoefficients moment_start(const PanelDataset& data, const Design& design) {
  double n_birth = 0, n_shift = 0, n_death = 0, total_time = 0;
  for (const auto& p : data.patients) {
    for (const auto& iv : p.intervals) {
      const long lost = iv.a - iv.b;
      const long sh = std::min(lost, iv.c_new);
      n_shift += static_cast<double>(sh);
      n_death += static_cast<double>(lost - sh);
      n_birth += static_cast<double>(iv.c_new - sh);
      total_time += static_cast<double>(iv.a) * iv.dt();
    }
  }
  total_time = std::max(total_time, 1e-12);
  const double rate0[3] = {std::max(n_birth, 0.5) / total_time,
                           std::max(n_shift, 0.5) / total_time,
                           std::max(n_death, 0.5) / total_time};

  RegressionCoefficients beta = design.zero_beta();
  for (int rate = 0; rate < 3; ++rate) {
    const auto& cols = design.spec.cols[rate];
    for (std::size_t j = 0; j < cols.size(); ++j)
      if (cols[j] == 0) beta.block(rate)[static_cast<long>(j)] = std::log(rate0[rate]);
  }
  return beta;
}

double bic(double loglik, int k, double n_units) {
  return -2.0 * loglik + k * std::log(n_units);
}

FitResult fit_em(const PanelDataset& data, const Design& design,
                 const std::optional<RegressionCoefficients>& beta0,
                 const EmOptions& opt) {
  using clock = std::chrono::steady_clock;
  FitResult fit;
  fit.method = "em";
  fit.spec = design.spec;
  fit.k = design.spec.n_params();
  fit.n_units = static_cast<double>(data.n_intervals());

  RegressionCoefficients beta = beta0 ? *beta0 : moment_start(data, design);
  double prev_ll = 0;
  bool have_prev = false;

  for (int iter = 0; iter <= opt.max_iter; ++iter) {
    const auto t0 = clock::now();
    const ExpectedSuffStats stats = e_step(data, design, beta, opt);
    const double ll = stats.loglik;
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    fit.trace.push_back({iter, ll, have_prev ? ll - prev_ll : 0.0, secs});
    if (have_prev && std::abs(ll - prev_ll) / (std::abs(ll) + 1.0) < opt.tol) {
      fit.converged = true;
      fit.loglik = ll;
      fit.n_iterations = iter;
      break;
    }
    prev_ll = ll;
    have_prev = true;
    fit.loglik = ll;
    fit.n_iterations = iter;
    if (iter == opt.max_iter) break;  // flagged, not thrown

    bool floored = false;
    beta = m_step(stats, design, beta, opt.rate_floor, &floored);
    fit.floored = fit.floored || floored;
  }
  fit.beta = beta;
  finalize_fit(fit, data, design, opt);
  return fit;
}

void finalize_fit(FitResult& fit, const PanelDataset& data, const Design& design,
                  const EmOptions& opt) {
  fit.bic_value = bic(fit.loglik, fit.k, fit.n_units);

  double min_rate = std::numeric_limits<double>::infinity();
  for (long p = 0; p < static_cast<long>(data.patients.size()); ++p) {
    const RateTriple r = design.rates_for(p, fit.beta);
    min_rate = std::min({min_rate, r.lambda, r.nu, r.mu});
  }
  fit.boundary = min_rate < 1e-9;

  SeResult se;
  if (opt.with_se) {
    se = standard_errors(data, design, fit.beta, opt);
    fit.se_note = se.note;
  } else {
    se.note = "standard errors not requested";
  }

  static const char* rate_names[3] = {"lambda", "nu", "mu"};
  const Eigen::VectorXd flat = fit.beta.flat();
  fit.coef.clear();
  long off = 0;
  for (int rate = 0; rate < 3; ++rate) {
    for (int col : design.spec.cols[rate]) {
      CoefStats c;
      c.name = std::string(rate_names[rate]) + ":" +
               (col < static_cast<int>(data.covariate_names.size())
                    ? data.covariate_names[col]
                    : std::to_string(col));
      c.est = flat[off];
      if (se.ok) {
        c.se = se.se[off];
        c.lo = c.est - 1.959963984540054 * c.se;
        c.hi = c.est + 1.959963984540054 * c.se;
        c.se_ok = true;
      }
      fit.coef.push_back(c);
      ++off;
    }
  }
}

SeResult standard_errors_of(const std::function<double(const Eigen::VectorXd&)>& loglik,
                            const Eigen::VectorXd& x, double rel_step, int n_threads) {
  const long p = x.size();
  Eigen::VectorXd h(p);
  for (long i = 0; i < p; ++i) h[i] = rel_step * std::max(std::abs(x[i]), 1.0);

  // enumerate all evaluation points, run them in parallel
  std::vector<Eigen::VectorXd> pts;
  pts.push_back(x);
  for (long i = 0; i < p; ++i) {
    Eigen::VectorXd a = x, b = x;
    a[i] += h[i];
    b[i] -= h[i];
    pts.push_back(a);
    pts.push_back(b);
  }
  for (long i = 0; i < p; ++i)
    for (long j = i + 1; j < p; ++j)
      for (int si = -1; si <= 1; si += 2)
        for (int sj = -1; sj <= 1; sj += 2) {
          Eigen::VectorXd a = x;
          a[i] += si * h[i];
          a[j] += sj * h[j];
          pts.push_back(a);
        }

  std::vector<double> f(pts.size());
  std::vector<std::string> errors(pts.size());
  const long npts = static_cast<long>(pts.size());
#ifdef _OPENMP
  const int nt = n_threads > 0 ? n_threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nt)
#endif
  for (long i = 0; i < npts; ++i) {
    try {
      f[i] = loglik(pts[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
      f[i] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  SeResult out;
  for (const auto& e : errors)
    if (!e.empty()) {
      out.note = "loglik evaluation failed near the optimum: " + e;
      return out;
    }

  Eigen::MatrixXd hess(p, p);
  const double f0 = f[0];
  for (long i = 0; i < p; ++i)
    hess(i, i) = (f[1 + 2 * i] - 2 * f0 + f[2 + 2 * i]) / (h[i] * h[i]);
  std::size_t idx = 1 + 2 * static_cast<std::size_t>(p);
  for (long i = 0; i < p; ++i)
    for (long j = i + 1; j < p; ++j) {
      const double fpp = f[idx++], fpm = f[idx++], fmp = f[idx++], fmm = f[idx++];
      hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4 * h[i] * h[j]);
    }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(-hess);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0) {
    out.note = "observed information is not positive definite (min eigenvalue " +
               std::to_string(eig.eigenvalues().minCoeff()) + ", max " +
               std::to_string(eig.eigenvalues().maxCoeff()) + ")";
    return out;
  }
  out.cov = (-hess).inverse();
  out.se = out.cov.diagonal().cwiseSqrt();
  out.ok = true;
  out.note = "ok";
  return out;
}

SeResult standard_errors(const PanelDataset& data, const Design& design,
                         const RegressionCoefficients& beta_hat, const EmOptions& opt) {
  EmOptions inner = opt;
  inner.n_threads = 1;  // parallelism lives across Hessian evaluation points
  auto f = [&](const Eigen::VectorXd& v) {
    return observed_loglik(data, design, unflatten(design.spec, v), inner);
  };
  return standard_errors_of(f, beta_hat.flat(), 1e-4, opt.n_threads);
}

}  // namespace bds
