#pragma once

#include "wavearm/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace wavearm::ode {

struct Options {
  double rtol = 1e-8;
  double atol = 1e-10;
  double h_init = 0.0; ///< 0 = span of the interval
  double h_min = 1e-12;
  int max_steps = 1000000;
};

struct StepStats {
  int accepted = 0;
  int rejected = 0;
  double h_last = 0.0; ///< last accepted step, a good h_init for a repeat
};

class IntegrationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Integrates y' = f(t, y) from t0 to t1 in place with the Dormand-Prince
/// 5(4) embedded pair (adaptive step, FSAL). `f(t, y, dydt)` writes the
/// derivative. Throws IntegrationError when the controller drives the step
/// below h_min.
template <typename F>
StepStats integrate(F&& f, double t0, double t1, Vec& y, const Options& opt = {}) {
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
  // b - b* (4th-order embedded weights), for the error estimate
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600;
  static constexpr double e3 = 500.0 / 1113 - 7571.0 / 16695;
  static constexpr double e4 = 125.0 / 192 - 393.0 / 640;
  static constexpr double e5 = -2187.0 / 6784 + 92097.0 / 339200;
  static constexpr double e6 = 11.0 / 84 - 187.0 / 2100;
  static constexpr double e7 = -1.0 / 40;

  const double span = t1 - t0;
  if (span <= 0.0) return {};
  const int dim = static_cast<int>(y.size());
  Vec k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
  Vec ytmp(dim), ynew(dim), err(dim);

  StepStats stats;
  double t = t0;
  double h = opt.h_init > 0.0 ? std::min(opt.h_init, span) : span;
  f(t, y, k1);
  bool k1_fresh = true;

  for (int step = 0; step < opt.max_steps; ++step) {
    if (t1 - t < opt.h_min) { // reached the end, up to rounding residue
      t = t1;
      break;
    }
    if (h < opt.h_min)
      throw IntegrationError("step size " + std::to_string(h) + " below minimum at t=" +
                             std::to_string(t));
    h = std::min(h, t1 - t);
    if (!k1_fresh) {
      f(t, y, k1);
      k1_fresh = true;
    }

    ytmp = y + h * (a21 * k1);
    f(t + h / 5.0, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    f(t + 3.0 * h / 10.0, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + 4.0 * h / 5.0, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + 8.0 * h / 9.0, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(t + h, ytmp, k6);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f(t + h, ynew, k7);

    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double err_norm = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double r = err[i] / sc;
      err_norm += r * r;
    }
    err_norm = std::sqrt(err_norm / dim);
    if (!std::isfinite(err_norm)) err_norm = 1e10;

    if (err_norm <= 1.0) {
      t += h;
      y = ynew;
      k1 = k7; // FSAL
      stats.accepted += 1;
      stats.h_last = h;
      const double grow = err_norm == 0.0 ? 5.0
                                          : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
      h *= grow;
    } else {
      stats.rejected += 1;
      h *= std::clamp(0.9 * std::pow(err_norm, -0.2), 0.1, 0.9);
      k1_fresh = true; // k1 still valid at unchanged (t, y)
    }
  }
  if (t < t1) throw IntegrationError("step budget exhausted before reaching interval end");
  return stats;
}

} // namespace wavearm::ode
