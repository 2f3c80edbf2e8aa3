#include "bds/sim.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "bds/rng.hpp"

namespace bds {

const char* event_name(EventType e) {
  switch (e) {
    case EventType::Birth: return "birth";
    case EventType::Shift: return "shift";
    case EventType::Death: return "death";
  }
  return "?";
}

namespace {

// occupied-site bookkeeping with O(1) uniform pick and removal
struct SiteSet {
  std::vector<int> occ;
  std::unordered_set<int> lookup;

  void insert(int s) {
    occ.push_back(s);
    lookup.insert(s);
  }
  void remove_at(std::size_t idx) {
    lookup.erase(occ[idx]);
    occ[idx] = occ.back();
    occ.pop_back();
  }
  bool contains(int s) const { return lookup.count(s) != 0; }
  long size() const { return static_cast<long>(occ.size()); }
};

int draw_empty_site(const SiteSet& sites, long S, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(S) - 1);
  while (true) {
    const int s = pick(rng);
    if (!sites.contains(s)) return s;
  }
}

}  // namespace

Trajectory simulate(long genome_size, const RateTriple& rates,
                    const std::vector<int>& init_sites,
                    const std::vector<double>& obs_times, std::uint64_t seed) {
  rates.check_valid();
  for (std::size_t i = 1; i < obs_times.size(); ++i)
    if (!(obs_times[i] > obs_times[i - 1]))
      throw ValidationError("observation times must be strictly increasing");
  if (static_cast<long>(init_sites.size()) > genome_size)
    throw ValidationError("initial genotype does not fit in the genome");

  std::mt19937_64 rng = make_stream(seed, 0);
  SiteSet sites;
  for (int s : init_sites) {
    if (sites.contains(s)) throw ValidationError("duplicate site in initial genotype");
    sites.insert(s);
  }

  Trajectory out;
  const double theta = rates.theta();
  const double t_end = obs_times.empty() ? 0.0 : obs_times.back();
  double t = 0;
  std::size_t next_obs = 0;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto record_until = [&](double up_to) {
    while (next_obs < obs_times.size() && obs_times[next_obs] <= up_to) {
      std::vector<int> g = sites.occ;
      std::sort(g.begin(), g.end());
      out.genotypes.push_back(std::move(g));
      ++next_obs;
    }
  };

  while (t < t_end) {
    const long k = sites.size();
    if (k == 0 || theta == 0.0) {
      record_until(t_end);
      break;
    }
    const double wait = std::exponential_distribution<double>(k * theta)(rng);
    const double t_next = t + wait;
    record_until(std::min(t_next, t_end));
    if (t_next >= t_end) {
      out.particle_time += (t_end - t) * k;
      t = t_end;
      break;
    }
    out.particle_time += wait * k;
    t = t_next;

    const double u = unif(rng) * theta;
    if (u < rates.lambda) {
      if (k >= genome_size)
        throw NumericError("genome saturated (population reached genome size " +
                           std::to_string(genome_size) + ") during simulation");
      const int target = draw_empty_site(sites, genome_size, rng);
      sites.insert(target);
      out.events.push_back({t, EventType::Birth, -1, target});
      ++out.births;
    } else if (u < rates.lambda + rates.nu) {
      if (k >= genome_size)
        throw NumericError("genome saturated (population reached genome size " +
                           std::to_string(genome_size) + ") during simulation");
      // target drawn over the S-k sites empty before the event, so the
      // vacated source itself is never a target
      std::uniform_int_distribution<std::size_t> pick(0, sites.occ.size() - 1);
      const std::size_t idx = pick(rng);
      const int from = sites.occ[idx];
      const int target = draw_empty_site(sites, genome_size, rng);
      sites.remove_at(idx);
      sites.insert(target);
      out.events.push_back({t, EventType::Shift, from, target});
      ++out.shifts;
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, sites.occ.size() - 1);
      const std::size_t idx = pick(rng);
      const int from = sites.occ[idx];
      sites.remove_at(idx);
      out.events.push_back({t, EventType::Death, from, -1});
      ++out.deaths;
    }
  }
  record_until(t_end);
  return out;
}

void wilson_interval(long count, long n, double* lo, double* hi) {
  const double z = 1.959963984540054;
  const double z2 = z * z;
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(count) / nn;
  const double denom = 1.0 + z2 / nn;
  const double center = phat + z2 / (2 * nn);
  const double half = z * std::sqrt(phat * (1 - phat) / nn + z2 / (4 * nn * nn));
  *lo = std::max(0.0, (center - half) / denom);
  *hi = std::min(1.0, (center + half) / denom);
}

namespace {

std::vector<int> fresh_genotype(long a) {
  std::vector<int> g(a);
  for (long i = 0; i < a; ++i) g[i] = static_cast<int>(i);
  return g;
}

// reduced endpoint of one realization started from sites {0..a-1}
std::pair<long, long> reduced_endpoint(long a, const std::vector<int>& end) {
  long b = 0;
  for (int s : end)
    if (s < a) ++b;
  return {b, static_cast<long>(end.size()) - b};
}

int resolve_threads(int n_threads) {
#ifdef _OPENMP
  return n_threads > 0 ? n_threads : omp_get_max_threads();
#else
  (void)n_threads;
  return 1;
#endif
}

}  // namespace

McTransition mc_transition(long a, double t, const RateTriple& rates, long n_reps,
                           std::uint64_t seed, int n_grid, long genome_size,
                           int n_threads) {
  if (n_reps < 100) throw ValidationError("mc_transition needs at least 100 replicates");
  McTransition out;
  out.n = n_grid;
  out.n_reps = n_reps;
  std::vector<long> counts(static_cast<std::size_t>(n_grid) * n_grid, 0);
  const std::vector<double> obs{t > 0 ? t : 1e-300};

  std::vector<std::pair<long, long>> ends(n_reps);
  const int nt = resolve_threads(n_threads);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt)
#endif
  for (long rep = 0; rep < n_reps; ++rep) {
    if (t == 0.0) {
      ends[rep] = {a, 0};
    } else {
      const Trajectory tr =
          simulate(genome_size, rates, fresh_genotype(a), obs, seed + 0x1000 * rep);
      ends[rep] = reduced_endpoint(a, tr.genotypes.at(0));
    }
  }
  (void)nt;
  for (const auto& [b, c] : ends) {
    if (b < n_grid && c < n_grid) ++counts[static_cast<std::size_t>(b) * n_grid + c];
  }
  out.cells.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out.cells[i].count = counts[i];
    out.cells[i].p = static_cast<double>(counts[i]) / n_reps;
    wilson_interval(counts[i], n_reps, &out.cells[i].lo, &out.cells[i].hi);
  }
  return out;
}

namespace {

McStats finalize_stats(const std::vector<std::array<double, 4>>& acc, long attempts) {
  McStats s;
  s.n = static_cast<long>(acc.size());
  if (attempts > 0) s.acceptance = static_cast<double>(s.n) / attempts;
  if (s.n == 0) return s;
  double mean[4] = {0, 0, 0, 0};
  for (const auto& r : acc)
    for (int i = 0; i < 4; ++i) mean[i] += r[i];
  for (double& m : mean) m /= s.n;
  double var[4] = {0, 0, 0, 0};
  for (const auto& r : acc)
    for (int i = 0; i < 4; ++i) var[i] += (r[i] - mean[i]) * (r[i] - mean[i]);
  for (double& v : var) v = s.n > 1 ? v / (s.n - 1.0) : 0.0;
  s.births = mean[0];
  s.shifts = mean[1];
  s.deaths = mean[2];
  s.ptime = mean[3];
  s.se_births = std::sqrt(var[0] / s.n);
  s.se_shifts = std::sqrt(var[1] / s.n);
  s.se_deaths = std::sqrt(var[2] / s.n);
  s.se_ptime = std::sqrt(var[3] / s.n);
  return s;
}

}  // namespace

McStats mc_conditioned_stats(long a, long b, long c, double t, const RateTriple& rates,
                             long n_reps, std::uint64_t seed, long genome_size,
                             int n_threads) {
  const std::vector<double> obs{t};
  std::vector<char> hit(n_reps, 0);
  std::vector<std::array<double, 4>> stats(n_reps);
  const int nt = resolve_threads(n_threads);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt)
#endif
  for (long rep = 0; rep < n_reps; ++rep) {
    const Trajectory tr =
        simulate(genome_size, rates, fresh_genotype(a), obs, seed + 0x1000 * rep);
    const auto [eb, ec] = reduced_endpoint(a, tr.genotypes.at(0));
    if (eb == b && ec == c) {
      hit[rep] = 1;
      stats[rep] = {static_cast<double>(tr.births), static_cast<double>(tr.shifts),
                    static_cast<double>(tr.deaths), tr.particle_time};
    }
  }
  (void)nt;
  std::vector<std::array<double, 4>> acc;
  for (long rep = 0; rep < n_reps; ++rep)
    if (hit[rep]) acc.push_back(stats[rep]);
  if (acc.empty() || static_cast<double>(acc.size()) / n_reps < 1e-4)
    throw NumericError("conditioned Monte Carlo acceptance below 1e-4 for endpoint (" +
                       std::to_string(b) + "," + std::to_string(c) +
                       "); use unconditioned sums instead");
  return finalize_stats(acc, n_reps);
}

McStats mc_unconditioned_stats(long a, double t, const RateTriple& rates, long n_reps,
                               std::uint64_t seed, long genome_size, int n_threads) {
  const std::vector<double> obs{t};
  std::vector<std::array<double, 4>> stats(n_reps);
  const int nt = resolve_threads(n_threads);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt)
#endif
  for (long rep = 0; rep < n_reps; ++rep) {
    const Trajectory tr =
        simulate(genome_size, rates, fresh_genotype(a), obs, seed + 0x1000 * rep);
    stats[rep] = {static_cast<double>(tr.births), static_cast<double>(tr.shifts),
                  static_cast<double>(tr.deaths), tr.particle_time};
  }
  (void)nt;
  return finalize_stats(stats, n_reps);
}

TransitionMatrix uniformization_probs(long a, double t, const RateTriple& rates,
                                      int m_cap, double leak_tol) {
  rates.check_valid();
  const long L = a;  // type-1 count never increases from (a, 0)
  const long M = m_cap;
  const long nstate = (L + 1) * (M + 1);
  auto idx = [&](long l, long m) { return static_cast<std::size_t>(l) * (M + 1) + m; };

  const double lam = rates.lambda, nu = rates.nu, mu = rates.mu;
  const double Lambda =
      std::max(1e-300, a * rates.theta() + static_cast<double>(M) * (lam + mu));

  std::vector<double> v(nstate, 0.0), vn(nstate, 0.0), result(nstate, 0.0);
  v[idx(a, 0)] = 1.0;

  // Poisson(Lambda t) weights, lgamma-anchored so large Lambda*t stays finite
  const double lt = Lambda * t;
  auto pois = [&](long k) {
    return std::exp(-lt + k * std::log(std::max(lt, 1e-300)) - std::lgamma(k + 1.0));
  };

  double cum = 0.0;
  long k = 0;
  const long k_max = 1000000;
  while (k < k_max) {
    const double w = pois(k);
    cum += w;
    for (long l = 0; l <= L; ++l)
      for (long m = 0; m <= M; ++m) result[idx(l, m)] += w * v[idx(l, m)];
    if (1.0 - cum < 1e-12 && k > lt) break;

    // one step of P = I + Q/Lambda; transitions past the cap leak out
    std::fill(vn.begin(), vn.end(), 0.0);
    for (long l = 0; l <= L; ++l) {
      for (long m = 0; m <= M; ++m) {
        const double p = v[idx(l, m)];
        if (p == 0.0) continue;
        const double exit = l * rates.theta() + m * (lam + mu);
        vn[idx(l, m)] += p * (1.0 - exit / Lambda);
        if (m + 1 <= M) vn[idx(l, m + 1)] += p * (l + m) * lam / Lambda;
        if (l >= 1) {
          if (m + 1 <= M) vn[idx(l - 1, m + 1)] += p * l * nu / Lambda;
          vn[idx(l - 1, m)] += p * l * mu / Lambda;
        }
        if (m >= 1) vn[idx(l, m - 1)] += p * m * mu / Lambda;
      }
    }
    v.swap(vn);
    ++k;
  }

  double total = 0.0;
  for (double x : result) total += x;
  const double leak = 1.0 - total;
  if (leak > leak_tol)
    throw NumericError("uniformization cap too small: leaked mass " +
                       std::to_string(leak) + " (increase m_cap)");

  TransitionMatrix tm;
  tm.n = static_cast<int>(std::max(L, M) + 1);
  tm.a = a;
  tm.t = t;
  tm.rates = rates;
  tm.tail_mass = std::max(leak, 0.0);
  tm.p.assign(static_cast<std::size_t>(tm.n) * tm.n, 0.0);
  for (long l = 0; l <= L; ++l)
    for (long m = 0; m <= M && m < tm.n; ++m)
      tm.p[static_cast<std::size_t>(l) * tm.n + m] = result[idx(l, m)];
  return tm;
}

namespace {

RateTriple recipe_rates(const PanelRecipe& recipe, const Eigen::VectorXd& z) {
  if (recipe.rates) return *recipe.rates;
  return rates_from_covariates(recipe.beta, z);
}

Eigen::VectorXd draw_covariates(const PanelRecipe& recipe, std::mt19937_64& rng) {
  Eigen::VectorXd z(1 + static_cast<long>(recipe.boxes.size()));
  z[0] = 1.0;
  for (std::size_t i = 0; i < recipe.boxes.size(); ++i)
    z[static_cast<long>(i) + 1] = std::uniform_real_distribution<double>(
        recipe.boxes[i].lo, recipe.boxes[i].hi)(rng);
  return z;
}

void check_recipe(const PanelRecipe& r) {
  if (!r.rates && r.boxes.empty())
    throw ValidationError("panel recipe needs either global rates or covariate boxes");
  if (r.rates && !r.boxes.empty())
    throw ValidationError("panel recipe cannot mix global rates with covariate boxes");
  if (r.min_intervals < 1 || r.max_intervals < r.min_intervals)
    throw ValidationError("bad intervals-per-patient range");
  if (r.init_min < 1 || r.init_max < r.init_min)
    throw ValidationError("bad initial-population range");
  if (!(r.dt > 0)) throw ValidationError("dt must be positive");
}

}  // namespace

PanelDataset simulate_panel(const PanelRecipe& recipe, std::uint64_t seed) {
  check_recipe(recipe);
  PanelDataset data;
  data.covariate_names.push_back("1");
  for (std::size_t i = 0; i < recipe.boxes.size(); ++i)
    data.covariate_names.push_back("z" + std::to_string(i + 1));

  for (int pi = 0; pi < recipe.n_patients; ++pi) {
    std::mt19937_64 rng = make_stream(seed, 0x50000 + pi);
    Patient p;
    p.id = "p" + std::to_string(pi + 1);
    p.z = recipe.rates ? Eigen::VectorXd::Ones(1).eval() : draw_covariates(recipe, rng);
    const RateTriple rates = recipe_rates(recipe, p.z);
    const int n_iv = std::uniform_int_distribution<int>(recipe.min_intervals,
                                                        recipe.max_intervals)(rng);
    for (int j = 0; j < n_iv; ++j) {
      const long a = std::uniform_int_distribution<long>(recipe.init_min,
                                                         recipe.init_max)(rng);
      std::uint64_t sim_seed = seed;
      sim_seed ^= 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(pi + 1);
      sim_seed ^= 0xbf58476d1ce4e5b9ULL * static_cast<std::uint64_t>(j + 1);
      const Trajectory tr = simulate(recipe.genome_size, rates, fresh_genotype(a),
                                     {recipe.dt}, sim_seed);
      const auto [b, c] = reduced_endpoint(a, tr.genotypes.at(0));
      ReducedInterval iv{a, b, c, j * recipe.dt, (j + 1) * recipe.dt};
      p.intervals.push_back(iv);
    }
    data.patients.push_back(std::move(p));
  }
  return data;
}

SimulatedTrajectories simulate_trajectories(const PanelRecipe& recipe, std::uint64_t seed) {
  check_recipe(recipe);
  SimulatedTrajectories out;
  out.data.covariate_names.push_back("1");
  for (std::size_t i = 0; i < recipe.boxes.size(); ++i)
    out.data.covariate_names.push_back("z" + std::to_string(i + 1));

  for (int pi = 0; pi < recipe.n_patients; ++pi) {
    std::mt19937_64 rng = make_stream(seed, 0x60000 + pi);
    Patient p;
    p.id = "p" + std::to_string(pi + 1);
    p.z = recipe.rates ? Eigen::VectorXd::Ones(1).eval() : draw_covariates(recipe, rng);
    const RateTriple rates = recipe_rates(recipe, p.z);
    const int n_obs = std::uniform_int_distribution<int>(recipe.min_intervals + 1,
                                                         recipe.max_intervals + 1)(rng);
    const long a0 =
        std::uniform_int_distribution<long>(recipe.init_min, recipe.init_max)(rng);
    std::vector<double> times(n_obs);
    for (int j = 0; j < n_obs; ++j) times[j] = j * recipe.dt;
    // time 0 is recorded by construction; simulate() records times > 0
    std::vector<double> sim_times(times.begin() + 1, times.end());
    Trajectory tr = simulate(recipe.genome_size, rates, fresh_genotype(a0), sim_times,
                             seed ^ (0xabcdULL * (pi + 1)));
    tr.genotypes.insert(tr.genotypes.begin(), fresh_genotype(a0));

    for (int j = 0; j < n_obs; ++j) {
      p.obs_times.push_back(times[j]);
      std::vector<std::string> labels;
      for (int s : tr.genotypes[j]) labels.push_back("s" + std::to_string(s));
      p.genotypes.emplace_back(std::move(labels));
    }
    for (int j = 0; j + 1 < n_obs; ++j) {
      ReducedInterval iv = reduce_pair(p.genotypes[j], p.genotypes[j + 1], recipe.dt);
      iv.t_start = times[j];
      iv.t_end = times[j + 1];
      p.intervals.push_back(iv);
    }
    out.data.patients.push_back(std::move(p));
    out.logs.push_back(std::move(tr));
  }
  return out;
}

}  // namespace bds
