#ifndef BDS_TYPES_HPP
#define BDS_TYPES_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace bds {

// Thrown when input data violates the ingest contract (bad CSV, unsorted
// times, dimension mismatches).  The CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown on numeric failure: ODE step underflow, aliasing alarm,
// impossible transitions, singular Hessian blocks.  CLI exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Per-particle instantaneous birth/shift/death rates.
struct RateTriple {
  double lambda = 0.0;
  double nu = 0.0;
  double mu = 0.0;

  double theta() const { return lambda + nu + mu; }

  void check_valid() const {
    if (!(std::isfinite(lambda) && std::isfinite(nu) && std::isfinite(mu)))
      throw NumericError("rate triple has non-finite entries");
    if (lambda < 0 || nu < 0 || mu < 0)
      throw NumericError("rate triple has negative entries");
  }
};

// A genotype is a set of opaque site labels (e.g. RFLP band signatures).
// Only set operations matter downstream, so labels stay strings.
struct Genotype {
  std::vector<std::string> sites;  // sorted, unique

  Genotype() = default;
  explicit Genotype(std::vector<std::string> s) : sites(std::move(s)) {
    std::sort(sites.begin(), sites.end());
    auto dup = std::adjacent_find(sites.begin(), sites.end());
    if (dup != sites.end())
      throw ValidationError("duplicate site identifier '" + *dup + "' in genotype");
  }

  long size() const { return static_cast<long>(sites.size()); }
  bool contains(const std::string& s) const {
    return std::binary_search(sites.begin(), sites.end(), s);
  }
  bool operator==(const Genotype& o) const { return sites == o.sites; }
};

// One observation interval mapped to reduced counts:
// a initially occupied sites, b of them retained, c_new newly occupied.
struct ReducedInterval {
  long a = 0;
  long b = 0;
  long c_new = 0;
  double t_start = 0.0;
  double t_end = 0.0;

  double dt() const { return t_end - t_start; }
  bool no_change() const { return b == a && c_new == 0; }

  void check_valid() const {
    if (!(dt() > 0)) throw ValidationError("interval has non-positive duration");
    if (b < 0 || b > a || c_new < 0)
      throw ValidationError("interval counts violate 0 <= b <= a, c_new >= 0");
  }

  std::string describe() const {
    return "(a=" + std::to_string(a) + ", b=" + std::to_string(b) +
           ", c=" + std::to_string(c_new) + ", dt=" + std::to_string(dt()) + ")";
  }
};

// State-space reduction for one pair of consecutive genotypes:
// a = |g1|, b = |g1 n g2|, c_new = |g2 \ g1|.
ReducedInterval reduce_pair(const Genotype& g1, const Genotype& g2, double dt);

}  // namespace bds

#endif
