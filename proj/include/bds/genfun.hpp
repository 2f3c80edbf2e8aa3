#ifndef BDS_GENFUN_HPP
#define BDS_GENFUN_HPP

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "bds/ode.hpp"
#include "bds/types.hpp"

namespace bds {

using cd = std::complex<double>;

// The five generating-function systems: transition probabilities plus the
// pseudo-generating functions counting births, shifts, deaths, and particle
// time.  Count statistics are differentiated at r=1, particle time at r=0.
enum class GenFunKind { Probability, Birth, Shift, Death, ParticleTime };

const char* kind_name(GenFunKind k);

// Type-2 closed form.  H2 solves the Riccati equation
//   dH2/dt = kappa*H2^2 - b*H2 + c,   H2(0) = s2,
// with kind-dependent constant coefficients.  Evaluation uses the two-root
// representation, which stays stable as kappa -> 0 and lambda -> mu.
struct RiccatiCoef {
  double kappa = 0, b = 0, c = 0;
};
RiccatiCoef riccati_coef(GenFunKind kind, double r, const RateTriple& rates);

// Coefficients of the (linear in H1) type-1 equation
//   dH1/dt = (alpha*H2(t) - sigma)*H1 + gamma*H2(t) + delta,  H1(0) = s1.
struct H1Coef {
  double alpha = 0, gamma = 0, delta = 0, sigma = 0;
};
H1Coef h1_coef(GenFunKind kind, double r, const RateTriple& rates);

// Near-degenerate lambda == mu is nudged off the double root before closed
// forms are evaluated; a regression test pins continuity across the switch.
RateTriple nudge_degenerate(const RateTriple& rates);

class H2Evaluator {
 public:
  H2Evaluator() = default;
  H2Evaluator(GenFunKind kind, double r, const RateTriple& nudged_rates);
  void set_time(double t);
  cd eval(cd s2) const;

 private:
  enum class Branch { Identity, DoubleRoot, General };
  Branch branch_ = Branch::Identity;
  double kappa_ = 0, b_ = 0, c_ = 0;
  cd sq_, q0_, y1_;
  double t_ = 0;
  cd expf_, em1_;  // exp(-sq t) and 1 - exp(-sq t)
};

cd phi2_closed(double t, cd s2, const RateTriple& rates);
cd h2_closed(GenFunKind kind, double r, double t, cd s2, const RateTriple& rates);

// N-th roots of unity; the common evaluation grid on the unit torus.
struct GridSpec {
  int n = 0;
  std::vector<cd> points;  // points[u] = exp(2 pi i u / n)
  static GridSpec make(int n);
};

struct GridMeta {
  GenFunKind kind = GenFunKind::Probability;
  double r = 1.0;
  double t = 0.0;
  RateTriple rates;
};

struct ComplexGrid {
  int n = 0;
  GridMeta meta;
  std::vector<cd> v;  // v[u*n + w]: s1 index u, s2 index w

  cd& at(int u, int w) { return v[static_cast<std::size_t>(u) * n + w]; }
  cd at(int u, int w) const { return v[static_cast<std::size_t>(u) * n + w]; }
};

struct SolveRequest {
  GenFunKind kind = GenFunKind::Probability;
  double r = 1.0;
};

// Solves the type-1 equation over the whole grid for each request, all
// systems advanced with one shared adaptive step controller.  H1 is linear
// in its initial condition, so per s2 column only the fundamental solution
// and one particular solution are integrated; the grid is synthesized
// exactly from those by superposition.
std::vector<ComplexGrid> h1_solve_multi(const std::vector<SolveRequest>& requests,
                                        double t, const GridSpec& grid,
                                        const RateTriple& rates,
                                        const OdeOptions& ode);

ComplexGrid h1_solve(GenFunKind kind, double r, double t, const GridSpec& grid,
                     const RateTriple& rates, const OdeOptions& ode);

// Serial reference: every grid point integrated as its own scalar ODE with
// an independent controller.  Kept for tests and benchmarks.
ComplexGrid h1_solve_reference(GenFunKind kind, double r, double t,
                               const GridSpec& grid, const RateTriple& rates,
                               const OdeOptions& ode);

// Central finite difference in the counting variable at the kind's anchor
// (r=1 for counts, r=0 for particle time), step `h`, both +/- solves sharing
// one step sequence so solver error cancels in the difference.
struct RDerivative {
  ComplexGrid d_h1;
  ComplexGrid d_h2;
};
RDerivative g1_r_derivative(GenFunKind kind, double t, const GridSpec& grid,
                            const RateTriple& rates, const OdeOptions& ode,
                            double h = 1e-5);

}  // namespace bds

#endif
