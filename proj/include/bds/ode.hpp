#ifndef BDS_ODE_HPP
#define BDS_ODE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "bds/types.hpp"

namespace bds {

struct OdeOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  long max_steps = 1000000;
};

// Adaptive embedded Runge-Kutta 4(5), Dormand-Prince coefficients, over a
// batch of complex states advanced with one shared step controller.
// RHS signature: void(double t, const std::vector<cd>& y, std::vector<cd>& dy).
// `label(i)` names state i in the step-failure diagnostic.
template <class RHS, class Label>
void integrate_dopri5(std::vector<std::complex<double>>& y, double t0, double t1,
                      const OdeOptions& opt, RHS&& rhs, Label&& label) {
  using cd = std::complex<double>;
  if (!(t1 > t0)) return;
  const std::size_t n = y.size();

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  std::vector<cd> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);

  double t = t0;
  double h = (t1 - t0) * 0.05;
  const double hmin = std::max((t1 - t0) * 1e-14, 1e-300);
  rhs(t, y, k1);

  for (long step = 0; step < opt.max_steps; ++step) {
    if (t + h > t1) h = t1 - t;

    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a21 * k1[i]);
    rhs(t + c2 * h, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * h, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * h, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * h, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                            a65 * k5[i]);
    rhs(t + h, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                            b6 * k6[i]);
    rhs(t + h, ynew, k7);  // FSAL

    double err = 0.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const cd e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                        e6 * k6[i] + e7 * k7[i]);
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double ei = std::abs(e) / sc;
      if (ei > err) { err = ei; worst = i; }
    }

    if (err <= 1.0) {
      t += h;
      y.swap(ynew);
      k1.swap(k7);
      if (t >= t1 * (1.0 - 1e-16) || t1 - t <= hmin) return;
    } else if (h <= hmin) {
      throw NumericError("ODE tolerance not met at minimum step while solving " +
                         label(worst) + " (t=" + std::to_string(t) + ")");
    }
    const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
    h = std::max(h * fac, hmin);
  }
  throw NumericError("ODE step budget exhausted while solving " + label(std::size_t{0}));
}

}  // namespace bds

#endif
