#pragma once

// Dormand-Prince 5(4) with the standard fourth-order continuous extension.
// Only the single-step kernel lives here; step control and event handling are
// done by the callers, which know where the vector field is non-smooth.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace pwsc::ode {

template <std::size_t D>
using Vec = std::array<double, D>;

template <std::size_t D>
struct Step {
  double t0 = 0.0;
  double h = 0.0;
  Vec<D> y0{};
  Vec<D> y1{};
  Vec<D> k1{};  // f(t0, y0)
  Vec<D> k7{};  // f(t0 + h, y1), reused as k1 of the next step
  Vec<D> rc5{};

  // Continuous extension, valid for t in [t0, t0 + h].
  Vec<D> at(double t) const {
    const double th = h == 0.0 ? 0.0 : (t - t0) / h;
    const double th1 = 1.0 - th;
    Vec<D> out{};
    for (std::size_t i = 0; i < D; ++i) {
      const double rc2 = y1[i] - y0[i];
      const double rc3 = h * k1[i] - rc2;
      const double rc4 = rc2 - h * k7[i] - rc3;
      out[i] = y0[i] + th * (rc2 + th1 * (rc3 + th * (rc4 + th1 * rc5[i])));
    }
    return out;
  }
};

// f(y, dydt) for an autonomous system.
template <std::size_t D, class F>
double dopri5_step(const F& f, double t0, const Vec<D>& y0, const Vec<D>& k1, double h,
                   double rtol, double atol, Step<D>& out) {
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                   a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                   d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                   d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

  Vec<D> k2, k3, k4, k5, k6, k7, tmp;
  for (std::size_t i = 0; i < D; ++i) tmp[i] = y0[i] + h * a21 * k1[i];
  f(tmp, k2);
  for (std::size_t i = 0; i < D; ++i) tmp[i] = y0[i] + h * (a31 * k1[i] + a32 * k2[i]);
  f(tmp, k3);
  for (std::size_t i = 0; i < D; ++i)
    tmp[i] = y0[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
  f(tmp, k4);
  for (std::size_t i = 0; i < D; ++i)
    tmp[i] = y0[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
  f(tmp, k5);
  for (std::size_t i = 0; i < D; ++i)
    tmp[i] = y0[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
  f(tmp, k6);
  Vec<D> y1;
  for (std::size_t i = 0; i < D; ++i)
    y1[i] = y0[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
  f(y1, k7);

  double sum = 0.0;
  for (std::size_t i = 0; i < D; ++i) {
    const double err =
        h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    const double scale = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    sum += (err / scale) * (err / scale);
  }

  out.t0 = t0;
  out.h = h;
  out.y0 = y0;
  out.y1 = y1;
  out.k1 = k1;
  out.k7 = k7;
  for (std::size_t i = 0; i < D; ++i) {
    out.rc5[i] =
        h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
  }
  return std::sqrt(sum / static_cast<double>(D));
}

// Multiplier for the next step size given a normalized error estimate.
inline double step_factor(double err) {
  if (err == 0.0) return 5.0;
  return std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
}

}  // namespace pwsc::ode
