#include "bds/types.hpp"

#include <iterator>

namespace bds {

ReducedInterval reduce_pair(const Genotype& g1, const Genotype& g2, double dt) {
  if (!(dt > 0)) throw ValidationError("reduce_pair: dt must be positive");
  std::vector<std::string> retained;
  std::set_intersection(g1.sites.begin(), g1.sites.end(), g2.sites.begin(),
                        g2.sites.end(), std::back_inserter(retained));
  ReducedInterval iv;
  iv.a = g1.size();
  iv.b = static_cast<long>(retained.size());
  iv.c_new = g2.size() - iv.b;
  iv.t_start = 0.0;
  iv.t_end = dt;
  return iv;
}

}  // namespace bds
