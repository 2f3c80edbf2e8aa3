#include "bds/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "bds/fft.hpp"

namespace bds {

int choose_grid_size(long max_count) {
  long want = 2 * std::max(max_count, 0L) + 8;
  int n = 32;
  while (n < want) n <<= 1;
  return n;
}

double TransitionMatrix::sum() const {
  double s = 0;
  for (double x : p) s += x;
  return s;
}

namespace {

std::vector<cd> grid_pow(const std::vector<cd>& base, long e) {
  std::vector<cd> out(base.size(), cd(1.0, 0.0));
  if (e <= 0) return out;
  std::vector<cd> b = base;
  long k = e;
  while (true) {
    if (k & 1)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    k >>= 1;
    if (!k) break;
    for (std::size_t i = 0; i < b.size(); ++i) b[i] *= b[i];
  }
  return out;
}

// Inverse transform of one coefficient grid: forward FFT / N^2, imaginary
// residue checked then discarded, small negatives clamped.
std::vector<double> invert_grid(std::vector<cd> g, int n, const char* what,
                                double* max_imag, double* min_real) {
  fft2_forward(g, n);
  const double scale = 1.0 / (static_cast<double>(n) * n);
  double mi = 0, mr = 0, mabs = 0;
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const cd z = g[i] * scale;
    mi = std::max(mi, std::abs(z.imag()));
    mr = std::min(mr, z.real());
    mabs = std::max(mabs, std::abs(z.real()));
    out[i] = z.real();
  }
  const double tol = 1e-8 * std::max(1.0, mabs);
  if (mi > tol)
    throw NumericError(std::string("spectral inversion of ") + what +
                       " grid left imaginary residue " + std::to_string(mi));
  if (mr < -tol)
    throw NumericError(std::string("spectral inversion of ") + what +
                       " grid left negative mass " + std::to_string(mr));
  for (double& x : out) x = std::max(x, 0.0);
  if (max_imag) *max_imag = mi;
  if (min_real) *min_real = mr;
  return out;
}

double boundary_band_mass(const std::vector<double>& p, int n) {
  const int band = std::max(2, n / 16);
  double mass = 0;
  for (int l = 0; l < n; ++l)
    for (int m = 0; m < n; ++m)
      if (l >= n - band || m >= n - band) mass += p[static_cast<std::size_t>(l) * n + m];
  return mass;
}

TransitionMatrix probs_from_grid(std::vector<cd> g, int n, long a, double t,
                                 const RateTriple& rates, const SpectralOptions& opt) {
  TransitionMatrix tm;
  tm.n = n;
  tm.a = a;
  tm.t = t;
  tm.rates = rates;
  tm.p = invert_grid(std::move(g), n, "probability", &tm.max_imag, &tm.min_real);
  for (double& x : tm.p) x = std::min(x, 1.0);
  tm.tail_mass = boundary_band_mass(tm.p, n);
  if (tm.tail_mass > opt.alias_tol && !opt.allow_alias)
    throw NumericError("aliasing alarm: boundary band holds mass " +
                       std::to_string(tm.tail_mass) + " > " +
                       std::to_string(opt.alias_tol) +
                       "; increase the grid size (or pass allow-alias)");
  return tm;
}

}  // namespace

GridBundle solve_bundle(double t, const RateTriple& rates, const SpectralOptions& opt,
                        bool with_moments) {
  if (!is_power_of_two(opt.n_grid) || opt.n_grid < 8)
    throw NumericError("grid size must be a power of two >= 8");
  GridBundle b;
  b.grid = GridSpec::make(opt.n_grid);
  b.phi1 = h1_solve(GenFunKind::Probability, 1.0, t, b.grid, rates, opt.ode);
  b.has_moments = with_moments;
  if (with_moments) {
    const GenFunKind kinds[4] = {GenFunKind::Birth, GenFunKind::Shift,
                                 GenFunKind::Death, GenFunKind::ParticleTime};
    for (int i = 0; i < 4; ++i)
      b.dh1[i] = g1_r_derivative(kinds[i], t, b.grid, rates, opt.ode).d_h1;
  }
  return b;
}

Inverted invert_from_bundle(const GridBundle& bundle, long a, const SpectralOptions& opt) {
  const int n = bundle.grid.n;
  if (a >= n)
    throw NumericError("start count " + std::to_string(a) +
                       " does not fit on a grid of size " + std::to_string(n));
  Inverted out;
  if (a == 0) {
    // extinct process: absorbed at (0,0)
    out.probs.n = n;
    out.probs.a = 0;
    out.probs.t = bundle.phi1.meta.t;
    out.probs.rates = bundle.phi1.meta.rates;
    out.probs.p.assign(static_cast<std::size_t>(n) * n, 0.0);
    out.probs.p[0] = 1.0;
    if (bundle.has_moments) {
      out.moments.n = n;
      out.moments.a = 0;
      out.moments.t = out.probs.t;
      out.moments.rates = out.probs.rates;
      out.moments.m_plus.assign(out.probs.p.size(), 0.0);
      out.moments.m_shift.assign(out.probs.p.size(), 0.0);
      out.moments.m_minus.assign(out.probs.p.size(), 0.0);
      out.moments.m_star.assign(out.probs.p.size(), 0.0);
    }
    return out;
  }

  const std::vector<cd> pow_a = grid_pow(bundle.phi1.v, a);
  out.probs = probs_from_grid(pow_a, n, a, bundle.phi1.meta.t, bundle.phi1.meta.rates, opt);

  if (bundle.has_moments) {
    // start (a,0): G = a * phi1^{a-1} * dH1/dr, particle time with the
    // Laplace-transform sign flip so coefficients are +E[R 1{...}]
    std::vector<cd> pow_am1 = grid_pow(bundle.phi1.v, a - 1);
    for (auto& z : pow_am1) z *= static_cast<double>(a);
    out.moments.n = n;
    out.moments.a = a;
    out.moments.t = bundle.phi1.meta.t;
    out.moments.rates = bundle.phi1.meta.rates;
    const char* names[4] = {"birth moment", "shift moment", "death moment",
                            "particle-time moment"};
    std::vector<double>* dst[4] = {&out.moments.m_plus, &out.moments.m_shift,
                                   &out.moments.m_minus, &out.moments.m_star};
    for (int i = 0; i < 4; ++i) {
      std::vector<cd> g(pow_am1.size());
      const double sign = i == 3 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < g.size(); ++j)
        g[j] = sign * pow_am1[j] * bundle.dh1[i].v[j];
      *dst[i] = invert_grid(std::move(g), n, names[i], nullptr, nullptr);
    }
  }
  return out;
}

TransitionMatrix invert_probabilities(long a, double t, const RateTriple& rates,
                                      const SpectralOptions& opt) {
  return invert_from_bundle(solve_bundle(t, rates, opt, false), a, opt).probs;
}

TransitionMatrix invert_probabilities_general(long j, long k, double t,
                                              const RateTriple& rates,
                                              const SpectralOptions& opt) {
  const int n = opt.n_grid;
  if (j + k >= n)
    throw NumericError("start counts do not fit on the grid");
  const GridSpec grid = GridSpec::make(n);
  const ComplexGrid phi1 = h1_solve(GenFunKind::Probability, 1.0, t, grid, rates, opt.ode);
  H2Evaluator h2(GenFunKind::Probability, 1.0, nudge_degenerate(rates));
  h2.set_time(t);
  std::vector<cd> g = grid_pow(phi1.v, j);
  for (int w = 0; w < n; ++w) {
    cd p2 = cd(1.0, 0.0);
    const cd v2 = h2.eval(grid.points[w]);
    for (long e = 0; e < k; ++e) p2 *= v2;
    for (int u = 0; u < n; ++u) g[static_cast<std::size_t>(u) * n + w] *= p2;
  }
  return probs_from_grid(std::move(g), n, j + k, t, rates, opt);
}

MomentMatrices invert_moments(long a, double t, const RateTriple& rates,
                              const SpectralOptions& opt) {
  if (a < 1) throw NumericError("invert_moments requires a >= 1");
  return invert_from_bundle(solve_bundle(t, rates, opt, true), a, opt).moments;
}

namespace {

IntervalExpectations expectations_from(const Inverted& inv, const ReducedInterval& iv,
                                       const SpectralOptions& opt) {
  IntervalExpectations e;
  const int n = inv.probs.n;
  if (iv.b >= n || iv.c_new >= n)
    throw NumericError("interval " + iv.describe() + " does not fit on a grid of size " +
                       std::to_string(n) + "; increase the grid size");
  e.prob = inv.probs.at(iv.b, iv.c_new);
  if (e.prob < opt.prob_floor)
    throw NumericError("impossible transition for interval " + iv.describe() +
                       ": probability " + std::to_string(e.prob) +
                       " below floor (data/model mismatch or grid too small)");
  e.e_birth = inv.moments.plus(iv.b, iv.c_new) / e.prob;
  e.e_shift = inv.moments.shift(iv.b, iv.c_new) / e.prob;
  e.e_death = inv.moments.minus(iv.b, iv.c_new) / e.prob;
  e.e_time = inv.moments.star(iv.b, iv.c_new) / e.prob;
  return e;
}

}  // namespace

IntervalExpectations interval_expectations(const ReducedInterval& iv,
                                           const RateTriple& rates,
                                           const SpectralOptions& opt) {
  iv.check_valid();
  if (iv.a == 0) {
    if (iv.c_new > 0)
      throw NumericError("impossible transition for interval " + iv.describe() +
                         ": no particles can appear from an extinct state");
    return {1.0, 0.0, 0.0, 0.0, 0.0};
  }
  const GridBundle b = solve_bundle(iv.dt(), rates, opt, true);
  return expectations_from(invert_from_bundle(b, iv.a, opt), iv, opt);
}

// --- cache ---------------------------------------------------------------

std::size_t SpectralCache::KeyHash::operator()(const Key& k) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint64_t x : {k.l, k.n, k.m, k.t}) {
    h ^= x;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h);
}

std::size_t SpectralCache::KeyAHash::operator()(const KeyA& k) const {
  return KeyHash{}(k.k) ^ (static_cast<std::size_t>(k.a) * 0x9e3779b97f4a7c15ULL);
}

SpectralCache::Key SpectralCache::make_key(const RateTriple& r, double dt) {
  auto bits = [](double x) {
    std::uint64_t u;
    static_assert(sizeof(u) == sizeof(x));
    std::memcpy(&u, &x, sizeof(u));
    return u;
  };
  return Key{bits(r.lambda), bits(r.nu), bits(r.mu), bits(dt)};
}

SpectralCache::SpectralCache(const SpectralOptions& opt, bool with_moments, int n_threads)
    : opt_(opt), with_moments_(with_moments), n_threads_(n_threads) {}

void SpectralCache::prepare(const std::vector<std::pair<RateTriple, double>>& keys) {
  std::vector<std::pair<RateTriple, double>> missing;
  for (const auto& [r, dt] : keys) {
    const Key k = make_key(r, dt);
    if (!bundles_.count(k)) {
      bundles_.emplace(k, nullptr);  // reserve so duplicates collapse
      missing.push_back({r, dt});
    }
  }
  std::vector<std::unique_ptr<GridBundle>> solved(missing.size());
  const long nm = static_cast<long>(missing.size());
#ifdef _OPENMP
  const int nt = n_threads_ > 0 ? n_threads_ : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nt)
#endif
  for (long i = 0; i < nm; ++i) {
    solved[i] = std::make_unique<GridBundle>(
        solve_bundle(missing[i].second, missing[i].first, opt_, with_moments_));
  }
  for (long i = 0; i < nm; ++i)
    bundles_[make_key(missing[i].first, missing[i].second)] = std::move(solved[i]);
}

const GridBundle& SpectralCache::bundle(const RateTriple& rates, double dt) {
  const Key k = make_key(rates, dt);
  auto it = bundles_.find(k);
  if (it == bundles_.end() || !it->second) {
    auto b = std::make_unique<GridBundle>(solve_bundle(dt, rates, opt_, with_moments_));
    it = bundles_.insert_or_assign(k, std::move(b)).first;
  }
  return *it->second;
}

const Inverted& SpectralCache::get(const RateTriple& rates, double dt, long a) {
  const KeyA ka{make_key(rates, dt), a};
  auto it = inverted_.find(ka);
  if (it == inverted_.end()) {
    auto inv = std::make_unique<Inverted>(invert_from_bundle(bundle(rates, dt), a, opt_));
    it = inverted_.emplace(ka, std::move(inv)).first;
  }
  return *it->second;
}

IntervalExpectations interval_expectations_cached(const ReducedInterval& iv,
                                                  const RateTriple& rates,
                                                  SpectralCache& cache,
                                                  const SpectralOptions& opt) {
  iv.check_valid();
  if (iv.a == 0) {
    if (iv.c_new > 0)
      throw NumericError("impossible transition for interval " + iv.describe() +
                         ": no particles can appear from an extinct state");
    return {1.0, 0.0, 0.0, 0.0, 0.0};
  }
  return expectations_from(cache.get(rates, iv.dt(), iv.a), iv, opt);
}

}  // namespace bds
