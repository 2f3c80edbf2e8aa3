#ifndef BDS_SPECTRAL_HPP
#define BDS_SPECTRAL_HPP

#include <array>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "bds/genfun.hpp"
#include "bds/types.hpp"

namespace bds {

struct SpectralOptions {
  int n_grid = 32;          // FFT grid size; must be a power of two >= 8
  OdeOptions ode;
  double alias_tol = 1e-6;  // boundary-band mass that triggers the alias alarm
  bool allow_alias = false;
  double prob_floor = 1e-12;
};

// Smallest admissible grid for data whose largest per-type count is m:
// next power of two at or above 2m+8, never below the default 32.
int choose_grid_size(long max_count);

struct TransitionMatrix {
  int n = 0;
  long a = 0;
  double t = 0;
  RateTriple rates;
  std::vector<double> p;   // p[l*n + m] ~ p_{(a,0),(l,m)}(t)
  double tail_mass = 0;    // mass in the wrap-around boundary band
  double max_imag = 0;     // largest imaginary residue before discarding
  double min_real = 0;     // most negative entry before clamping

  double at(long l, long m) const { return p[static_cast<std::size_t>(l) * n + m]; }
  double sum() const;
};

struct MomentMatrices {
  int n = 0;
  long a = 0;
  double t = 0;
  RateTriple rates;
  std::vector<double> m_plus, m_shift, m_minus, m_star;

  double plus(long l, long m) const { return m_plus[static_cast<std::size_t>(l) * n + m]; }
  double shift(long l, long m) const { return m_shift[static_cast<std::size_t>(l) * n + m]; }
  double minus(long l, long m) const { return m_minus[static_cast<std::size_t>(l) * n + m]; }
  double star(long l, long m) const { return m_star[static_cast<std::size_t>(l) * n + m]; }
};

struct IntervalExpectations {
  double prob = 0;
  double e_birth = 0, e_shift = 0, e_death = 0, e_time = 0;
};

// One ODE solve per (rates, t); every start count a is served from these
// grids via powers of H1.
struct GridBundle {
  GridSpec grid;
  ComplexGrid phi1;
  std::array<ComplexGrid, 4> dh1;  // Birth, Shift, Death, ParticleTime
  bool has_moments = false;
};

GridBundle solve_bundle(double t, const RateTriple& rates, const SpectralOptions& opt,
                        bool with_moments);

TransitionMatrix invert_probabilities(long a, double t, const RateTriple& rates,
                                      const SpectralOptions& opt);
// General (j,k) start, phi1^j * phi2^k; used by oracle tests only.
TransitionMatrix invert_probabilities_general(long j, long k, double t,
                                              const RateTriple& rates,
                                              const SpectralOptions& opt);
MomentMatrices invert_moments(long a, double t, const RateTriple& rates,
                              const SpectralOptions& opt);

struct Inverted {
  TransitionMatrix probs;
  MomentMatrices moments;  // empty when the bundle was probability-only
};

Inverted invert_from_bundle(const GridBundle& bundle, long a, const SpectralOptions& opt);

IntervalExpectations interval_expectations(const ReducedInterval& iv,
                                           const RateTriple& rates,
                                           const SpectralOptions& opt);

// Per-E-step cache.  Bundles are keyed by the exact bits of (rates, dt) and
// filled in a parallel phase; per-a inversions are memoized on first use.
class SpectralCache {
 public:
  SpectralCache(const SpectralOptions& opt, bool with_moments, int n_threads = 0);

  void prepare(const std::vector<std::pair<RateTriple, double>>& keys);
  const Inverted& get(const RateTriple& rates, double dt, long a);
  const GridBundle& bundle(const RateTriple& rates, double dt);

 private:
  struct Key {
    std::uint64_t l, n, m, t;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  static Key make_key(const RateTriple& r, double dt);

  SpectralOptions opt_;
  bool with_moments_;
  int n_threads_;
  std::unordered_map<Key, std::unique_ptr<GridBundle>, KeyHash> bundles_;
  struct KeyA {
    Key k;
    long a;
    bool operator==(const KeyA&) const = default;
  };
  struct KeyAHash {
    std::size_t operator()(const KeyA& k) const;
  };
  std::unordered_map<KeyA, std::unique_ptr<Inverted>, KeyAHash> inverted_;
};

IntervalExpectations interval_expectations_cached(const ReducedInterval& iv,
                                                  const RateTriple& rates,
                                                  SpectralCache& cache,
                                                  const SpectralOptions& opt);

}  // namespace bds

#endif
