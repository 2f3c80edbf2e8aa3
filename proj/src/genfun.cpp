#include "bds/genfun.hpp"

#include <cmath>
#include <numbers>

namespace bds {

const char* kind_name(GenFunKind k) {
  switch (k) {
    case GenFunKind::Probability: return "probability";
    case GenFunKind::Birth: return "birth";
    case GenFunKind::Shift: return "shift";
    case GenFunKind::Death: return "death";
    case GenFunKind::ParticleTime: return "particle-time";
  }
  return "?";
}

RiccatiCoef riccati_coef(GenFunKind kind, double r, const RateTriple& rates) {
  const double l = rates.lambda, n = rates.nu, m = rates.mu;
  switch (kind) {
    case GenFunKind::Probability: return {l, l + m, m};
    case GenFunKind::Birth: return {l * r, l + m, m};
    // Shift events of type-2 particles relocate a new site to another new
    // site: the state is unchanged but the event still counts, so the
    // counting variable enters through the linear coefficient.  At r=1 this
    // collapses to the probability equation.
    case GenFunKind::Shift: return {l, l + m + n * (1.0 - r), m};
    case GenFunKind::Death: return {l, l + m, m * r};
    case GenFunKind::ParticleTime: return {l, l + m + r, m};
  }
  return {};
}

H1Coef h1_coef(GenFunKind kind, double r, const RateTriple& rates) {
  const double l = rates.lambda, n = rates.nu, m = rates.mu;
  const double s = l + n + m;
  switch (kind) {
    case GenFunKind::Probability: return {l, n, m, s};
    case GenFunKind::Birth: return {l * r, n, m, s};
    case GenFunKind::Shift: return {l, n * r, m, s};
    case GenFunKind::Death: return {l, n, m * r, s};
    case GenFunKind::ParticleTime: return {l, n, m, s + r};
  }
  return {};
}

RateTriple nudge_degenerate(const RateTriple& rates) {
  RateTriple out = rates;
  if (std::abs(out.lambda - out.mu) < 1e-8 * (out.lambda + out.mu))
    out.mu *= 1.0 + 1e-7;
  return out;
}

namespace {

// exp(w) - 1, accurate for small |w|.
cd cexpm1(cd w) {
  if (std::abs(w) < 1e-4) {
    // w*(1 + w/2*(1 + w/3*(1 + w/4*(1 + w/5))))
    return w * (1.0 + w / 2.0 * (1.0 + w / 3.0 * (1.0 + w / 4.0 * (1.0 + w / 5.0))));
  }
  return std::exp(w) - 1.0;
}

}  // namespace

H2Evaluator::H2Evaluator(GenFunKind kind, double r, const RateTriple& rates) {
  const RiccatiCoef rc = riccati_coef(kind, r, rates);
  kappa_ = rc.kappa;
  b_ = rc.b;
  c_ = rc.c;
  if (kappa_ == 0.0 && b_ == 0.0 && c_ == 0.0) {
    branch_ = Branch::Identity;
    return;
  }
  const double d = b_ * b_ - 4.0 * kappa_ * c_;
  sq_ = d >= 0.0 ? cd(std::sqrt(d), 0.0) : cd(0.0, std::sqrt(-d));
  q0_ = (b_ + sq_) / 2.0;
  y1_ = c_ == 0.0 ? cd(0.0, 0.0) : 2.0 * c_ / (b_ + sq_);
  branch_ = (sq_ == cd(0.0, 0.0)) ? Branch::DoubleRoot : Branch::General;
}

void H2Evaluator::set_time(double t) {
  t_ = t;
  if (branch_ == Branch::General) {
    const cd w = -sq_ * t;
    expf_ = std::exp(w);
    em1_ = -cexpm1(w);  // 1 - exp(-sq t)
  }
}

cd H2Evaluator::eval(cd s2) const {
  switch (branch_) {
    case Branch::Identity:
      return s2;
    case Branch::DoubleRoot: {
      // repeated root y0 = b/(2 kappa); z' = -kappa gives the exact limit
      const cd y0 = q0_ / kappa_;
      return y0 + (s2 - y0) / (1.0 - kappa_ * t_ * (s2 - y0));
    }
    case Branch::General: {
      // H2 = y1 + sq*E*(s2-y1) / [(q0 - kappa*s2)*(1-E) + sq*E]
      const cd den = em1_ * (q0_ - kappa_ * s2) + sq_ * expf_;
      if (den == cd(0.0, 0.0))
        throw NumericError("H2 closed form hit a Riccati blow-up point");
      return y1_ + sq_ * expf_ * (s2 - y1_) / den;
    }
  }
  return s2;
}

cd phi2_closed(double t, cd s2, const RateTriple& rates) {
  return h2_closed(GenFunKind::Probability, 1.0, t, s2, rates);
}

cd h2_closed(GenFunKind kind, double r, double t, cd s2, const RateTriple& rates) {
  H2Evaluator ev(kind, r, nudge_degenerate(rates));
  ev.set_time(t);
  return ev.eval(s2);
}

GridSpec GridSpec::make(int n) {
  GridSpec g;
  g.n = n;
  g.points.resize(n);
  for (int u = 0; u < n; ++u) {
    const double ang = 2.0 * std::numbers::pi * u / n;
    g.points[u] = cd(std::cos(ang), std::sin(ang));
  }
  return g;
}

std::vector<ComplexGrid> h1_solve_multi(const std::vector<SolveRequest>& requests,
                                        double t, const GridSpec& grid,
                                        const RateTriple& rates,
                                        const OdeOptions& ode) {
  const int n = grid.n;
  const RateTriple nr = nudge_degenerate(rates);
  const std::size_t k = requests.size();

  std::vector<ComplexGrid> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    out[i].n = n;
    out[i].meta = {requests[i].kind, requests[i].r, t, rates};
    out[i].v.resize(static_cast<std::size_t>(n) * n);
  }

  if (t == 0.0) {
    // initial condition: the s1 grid, bit for bit
    for (std::size_t i = 0; i < k; ++i)
      for (int u = 0; u < n; ++u)
        for (int w = 0; w < n; ++w) out[i].at(u, w) = grid.points[u];
    return out;
  }

  std::vector<H2Evaluator> h2(k);
  std::vector<H1Coef> hc(k);
  for (std::size_t i = 0; i < k; ++i) {
    h2[i] = H2Evaluator(requests[i].kind, requests[i].r, nr);
    hc[i] = h1_coef(requests[i].kind, requests[i].r, nr);
  }

  // state: per system, per s2 column, fundamental solution A (A(0)=1) and
  // particular solution B (B(0)=0); H1(s1,s2) = A(s2)*s1 + B(s2).
  std::vector<cd> y(k * 2 * n);
  for (std::size_t i = 0; i < k; ++i)
    for (int w = 0; w < n; ++w) y[i * 2 * n + w] = cd(1.0, 0.0);

  auto rhs = [&](double tt, const std::vector<cd>& s, std::vector<cd>& ds) {
    for (std::size_t i = 0; i < k; ++i) {
      h2[i].set_time(tt);
      const cd* a = s.data() + i * 2 * n;
      const cd* b = a + n;
      cd* da = ds.data() + i * 2 * n;
      cd* db = da + n;
      const double alpha = hc[i].alpha, gamma = hc[i].gamma, delta = hc[i].delta,
                   sigma = hc[i].sigma;
      for (int w = 0; w < n; ++w) {
        const cd g = h2[i].eval(grid.points[w]);
        const cd coef = alpha * g - sigma;
        da[w] = coef * a[w];
        db[w] = coef * b[w] + (gamma * g + delta);
      }
    }
  };
  auto label = [&](std::size_t idx) {
    const std::size_t i = idx / (2 * n);
    const int w = static_cast<int>(idx % n);
    return std::string(kind_name(requests[i].kind)) + " system, s2 grid column " +
           std::to_string(w) + "/" + std::to_string(n);
  };
  integrate_dopri5(y, 0.0, t, ode, rhs, label);

  for (std::size_t i = 0; i < k; ++i) {
    const cd* a = y.data() + i * 2 * n;
    const cd* b = a + n;
    for (int u = 0; u < n; ++u)
      for (int w = 0; w < n; ++w) out[i].at(u, w) = a[w] * grid.points[u] + b[w];
  }
  return out;
}

ComplexGrid h1_solve(GenFunKind kind, double r, double t, const GridSpec& grid,
                     const RateTriple& rates, const OdeOptions& ode) {
  return std::move(h1_solve_multi({{kind, r}}, t, grid, rates, ode)[0]);
}

ComplexGrid h1_solve_reference(GenFunKind kind, double r, double t,
                               const GridSpec& grid, const RateTriple& rates,
                               const OdeOptions& ode) {
  const int n = grid.n;
  ComplexGrid out;
  out.n = n;
  out.meta = {kind, r, t, rates};
  out.v.resize(static_cast<std::size_t>(n) * n);
  if (t == 0.0) {
    for (int u = 0; u < n; ++u)
      for (int w = 0; w < n; ++w) out.at(u, w) = grid.points[u];
    return out;
  }
  const RateTriple nr = nudge_degenerate(rates);
  const H1Coef hc = h1_coef(kind, r, nr);
  for (int u = 0; u < n; ++u) {
    for (int w = 0; w < n; ++w) {
      H2Evaluator h2(kind, r, nr);
      std::vector<cd> y{grid.points[u]};
      auto rhs = [&](double tt, const std::vector<cd>& s, std::vector<cd>& ds) {
        h2.set_time(tt);
        const cd g = h2.eval(grid.points[w]);
        ds[0] = (hc.alpha * g - hc.sigma) * s[0] + (hc.gamma * g + hc.delta);
      };
      auto label = [&](std::size_t) {
        return std::string(kind_name(kind)) + " system, grid point (" +
               std::to_string(u) + "," + std::to_string(w) + ")";
      };
      integrate_dopri5(y, 0.0, t, ode, rhs, label);
      out.at(u, w) = y[0];
    }
  }
  return out;
}

RDerivative g1_r_derivative(GenFunKind kind, double t, const GridSpec& grid,
                            const RateTriple& rates, const OdeOptions& ode,
                            double h) {
  if (kind == GenFunKind::Probability)
    throw NumericError("r-derivative requested for the probability kind");
  const double r0 = kind == GenFunKind::ParticleTime ? 0.0 : 1.0;
  const int n = grid.n;

  RDerivative out;
  out.d_h1.n = out.d_h2.n = n;
  out.d_h1.meta = out.d_h2.meta = {kind, r0, t, rates};
  out.d_h1.v.assign(static_cast<std::size_t>(n) * n, cd(0.0, 0.0));
  out.d_h2.v.assign(static_cast<std::size_t>(n) * n, cd(0.0, 0.0));
  if (t == 0.0) return out;  // no events in zero time

  const auto grids =
      h1_solve_multi({{kind, r0 + h}, {kind, r0 - h}}, t, grid, rates, ode);
  const double inv2h = 1.0 / (2.0 * h);
  for (std::size_t i = 0; i < out.d_h1.v.size(); ++i)
    out.d_h1.v[i] = (grids[0].v[i] - grids[1].v[i]) * inv2h;

  const RateTriple nr = nudge_degenerate(rates);
  H2Evaluator plus(kind, r0 + h, nr), minus(kind, r0 - h, nr);
  plus.set_time(t);
  minus.set_time(t);
  for (int w = 0; w < n; ++w) {
    const cd d = (plus.eval(grid.points[w]) - minus.eval(grid.points[w])) * inv2h;
    for (int u = 0; u < n; ++u) out.d_h2.at(u, w) = d;
  }
  return out;
}

}  // namespace bds
