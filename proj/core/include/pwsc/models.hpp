#pragma once

// Neuron model catalog for two-dimensional adapting integrate-and-fire
// networks and the closed-form quantities of their mean-field reduction.
//
// All quantities are nondimensional. A neuron obeys
//
//   v' = F(v) - w + I + g s (e_r - v),   w' = a (b v - w),
//
// with v -> v_reset, w -> w + w_jump whenever v reaches v_peak. The mean-field
// phase plane is (s, w); its switching manifold is H(s, w) = 0 where
//
//   H(s, w) = min_v G(v, s, w),  G = F(v) - w + I + g s (e_r - v),
//
// and the minimum is attained at v*(s), the solution of F'(v) = g s.

#include <string_view>

namespace pwsc {

enum class ModelKind { LIF, Izhikevich, AdEx, Quartic };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

struct ModelParams {
  ModelKind kind = ModelKind::Izhikevich;
  double g = 0.0;
  double I = 0.0;
  double tau_s = 1.0;
  double tau_w = 1.0;
  double s_jump = 1.0;
  double w_jump = 1.0;
  double e_r = 1.0;
  double alpha = 0.0;      // Izhikevich only
  double a_quartic = 1.0;  // quartic only
  double tau_m = 1.0;      // LIF only
  double v_peak = 1.0;
  double v_reset = 0.0;
  double a_adapt = 1.0;
  double b_adapt = 0.0;
  // Gain k of the reduced rate k*sqrt(H). Zero selects the model default.
  double rate_k = 0.0;

  // Throws Error(ConfigError) when a field is out of range.
  void validate() const;
};

// Default reduced-rate gain: 1/2 for Izhikevich, 1/pi otherwise.
double default_rate_k(ModelKind kind);
double rate_gain(const ModelParams& p);

double f_of_v(const ModelParams& p, double v);
double f_prime(const ModelParams& p, double v);
double f_second(const ModelParams& p, double v);

// G(v, s, w): the denominator of the firing-rate integral.
double g_of_v(const ModelParams& p, double v, double s, double w);

double v_star(const ModelParams& p, double s);
// dv*/ds; zero for LIF.
double v_star_ds(const ModelParams& p, double s);

// I*(s, w), the (s, w)-dependent rheobase current.
double rheobase_surface(const ModelParams& p, double s, double w);
double rheobase_ds(const ModelParams& p, double s);

double switching_H(const ModelParams& p, double s, double w);

// k * sqrt(H) if H > 0, else 0.
double firing_rate_reduced(const ModelParams& p, double s, double w, double k);
double firing_rate_reduced(const ModelParams& p, double s, double w);

// Exact mean rate [int_{v_reset}^{v_peak} dv / G]^{-1} when H > 0, else 0.
// Closed form for LIF and Izhikevich; quadrature for AdEx and quartic.
double firing_rate_full(const ModelParams& p, double s, double w);

// Always uses the adaptive quadrature path (any model kind).
double firing_rate_quadrature(const ModelParams& p, double s, double w);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo < x && x < hi; }
};

// Range of g*s on which the Izhikevich rate vanishes continuously at the
// manifold: (2 v_reset - alpha, 2 v_peak - alpha).
Interval discontinuity_window(const ModelParams& p);

struct DerivedParams {
  double rate_k = 0.0;
  double lambda_s = 0.0;  // tau_s * k * s_jump
  double lambda_w = 0.0;  // tau_w * k * w_jump
  double eta = 0.0;       // lambda_w / lambda_s
  double gamma = 0.0;     // tau_s / tau_w
  double I_rh = 0.0;
  double v_star_0 = 0.0;
  double v_star_prime_0 = 0.0;
  double g_star = 0.0;    // eta / (e_r - v*(0))
  double g_bar = 0.0;     // w_jump / (s_jump (e_r - v*(0)))
};

// Coefficients of the weak-coupling equilibrium quadratic
// A2(g) s^2 + A1(g) s + A0 = 0 and the curve prefactors M(g), N(g).
struct CoefficientFns {
  double lambda_s = 0.0;
  double s_jump_eff = 0.0;
  double tau_s = 0.0;
  double tau_w = 0.0;
  double eta = 0.0;
  double v_star_0 = 0.0;
  double v_star_prime_0 = 0.0;
  double e_r = 0.0;
  double A0 = 0.0;  // I_rh - I

  double A2(double g) const;
  double A1(double g) const;
  double M(double g) const;
  double N(double g) const;
};

struct Derived {
  DerivedParams params;
  CoefficientFns coeffs;
};

// Throws Error(DomainError) if e_r <= v*(0).
Derived derive(const ModelParams& p);

}  // namespace pwsc
