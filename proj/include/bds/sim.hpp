#ifndef BDS_SIM_HPP
#define BDS_SIM_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bds/dataset.hpp"
#include "bds/model_spec.hpp"
#include "bds/spectral.hpp"
#include "bds/types.hpp"

namespace bds {

enum class EventType { Birth, Shift, Death };
const char* event_name(EventType e);

struct EventRecord {
  double time = 0;
  EventType type = EventType::Birth;
  int site_from = -1;  // -1 when not applicable
  int site_to = -1;
};

struct Trajectory {
  std::vector<std::vector<int>> genotypes;  // sorted site lists at obs times
  std::vector<EventRecord> events;
  long births = 0, shifts = 0, deaths = 0;
  double particle_time = 0;  // integral of copy number over [0, t_end]
};

// Exact event-driven simulation of the genome-level process: exponential
// waits with rate k*theta, event type with probabilities (lambda,nu,mu)/theta,
// uniform site placement over the S-site genome.
Trajectory simulate(long genome_size, const RateTriple& rates,
                    const std::vector<int>& init_sites,
                    const std::vector<double>& obs_times, std::uint64_t seed);

struct McCell {
  double p = 0, lo = 0, hi = 0;
  long count = 0;
};

struct McTransition {
  int n = 0;
  long n_reps = 0;
  std::vector<McCell> cells;  // indexed l*n+m over reduced end states

  const McCell& at(long l, long m) const { return cells[static_cast<std::size_t>(l) * n + m]; }
};

// Empirical reduced-state frequencies with Wilson 95% intervals.
McTransition mc_transition(long a, double t, const RateTriple& rates, long n_reps,
                           std::uint64_t seed, int n_grid, long genome_size = 10000,
                           int n_threads = 0);

struct McStats {
  double births = 0, shifts = 0, deaths = 0, ptime = 0;
  double se_births = 0, se_shifts = 0, se_deaths = 0, se_ptime = 0;
  long n = 0;
  double acceptance = 1.0;
};

// Rejection sampling on the reduced endpoint (b, c).
McStats mc_conditioned_stats(long a, long b, long c, double t, const RateTriple& rates,
                             long n_reps, std::uint64_t seed, long genome_size = 10000,
                             int n_threads = 0);

// Plain Monte Carlo means of (births, shifts, deaths, particle time).
McStats mc_unconditioned_stats(long a, double t, const RateTriple& rates, long n_reps,
                               std::uint64_t seed, long genome_size = 10000,
                               int n_threads = 0);

// exp(Qt) row for start (a,0) on the truncated two-type generator, computed
// by uniformization; an independent oracle for the spectral inversion.
TransitionMatrix uniformization_probs(long a, double t, const RateTriple& rates,
                                      int m_cap, double leak_tol = 1e-9);

// --- panel-data generators -----------------------------------------------

struct CovariateBox {
  double lo = 0, hi = 1;
};

// Shared recipe for simulated panel datasets.  Rates are either one global
// triple or per-patient log-linear in covariates drawn uniformly from boxes
// (an all-ones intercept column is implied in front of the boxes).
struct PanelRecipe {
  int n_patients = 1;
  int min_intervals = 1, max_intervals = 1;  // intervals per patient
  double dt = 1.0;
  long init_min = 1, init_max = 15;
  std::optional<RateTriple> rates;           // global-rate mode
  std::vector<CovariateBox> boxes;           // covariate mode
  RegressionCoefficients beta;               // used with boxes; width 1+boxes
  long genome_size = 10000;
};

// Interval mode: every observation interval restarts from a fresh uniform
// population, matching how the estimator consumes the data.
PanelDataset simulate_panel(const PanelRecipe& recipe, std::uint64_t seed);

// Trajectory mode: one continuous realization per patient observed at
// 0, dt, ..., emitting genotypes (and event logs) suitable for the long-form
// CSV round trip.
struct SimulatedTrajectories {
  PanelDataset data;
  std::vector<Trajectory> logs;  // one per patient
};
SimulatedTrajectories simulate_trajectories(const PanelRecipe& recipe, std::uint64_t seed);

// Wilson score interval for a binomial proportion at 95%.
void wilson_interval(long count, long n, double* lo, double* hi);

}  // namespace bds

#endif
