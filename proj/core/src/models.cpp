#include "pwsc/models.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pwsc/error.hpp"

namespace pwsc {

namespace {

constexpr double kManifoldEps = 1e-14;
constexpr double kQuadTol = 1e-10;
constexpr unsigned kQuadMaxDepth = 18;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ConfigError, what);
}

// Integral of dv / G over [v_reset, v_peak] for H > 0. The substitution
// v = v* + c tan(theta), with c = sqrt(2H / F''(v*)), turns the peak of
// height 1/H and width ~sqrt(H) at the minimum into a nearly flat integrand.
double inverse_rate_quadrature(const ModelParams& p, double s, double w, double H) {
  const double vs = v_star(p, s);
  const double curvature = f_second(p, vs);
  const double c = curvature > 1e-12 ? std::sqrt(2.0 * H / curvature) : std::sqrt(H);

  auto integrand = [&](double theta) {
    const double t = std::tan(theta);
    const double v = vs + c * t;
    return c * (1.0 + t * t) / g_of_v(p, v, s, w);
  };

  const double th_lo = std::atan((p.v_reset - vs) / c);
  const double th_hi = std::atan((p.v_peak - vs) / c);

  double total = 0.0;
  auto piece = [&](double a, double b) {
    if (b <= a) return;
    double err = 0.0;
    double l1 = 0.0;
    const double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, a, b, kQuadMaxDepth, kQuadTol, &err, &l1);
    if (!std::isfinite(val) || err > kQuadTol * std::max(1.0, std::abs(val))) {
      throw Error(ErrorCode::QuadratureFailure,
                  "rate integral did not reach tolerance (error estimate " +
                      std::to_string(err) + ")");
    }
    total += val;
  };
  if (th_lo < 0.0 && 0.0 < th_hi) {
    piece(th_lo, 0.0);
    piece(0.0, th_hi);
  } else {
    piece(th_lo, th_hi);
  }
  return total;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::LIF: return "LIF";
    case ModelKind::Izhikevich: return "Izhikevich";
    case ModelKind::AdEx: return "AdEx";
    case ModelKind::Quartic: return "Quartic";
  }
  return "Unknown";
}

ModelKind model_kind_from_string(std::string_view name) {
  std::string lower(name);
  for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (lower == "lif") return ModelKind::LIF;
  if (lower == "izhikevich") return ModelKind::Izhikevich;
  if (lower == "adex") return ModelKind::AdEx;
  if (lower == "quartic") return ModelKind::Quartic;
  throw Error(ErrorCode::ConfigError, "unknown model kind '" + std::string(name) + "'");
}

void ModelParams::validate() const {
  const double fields[] = {g, I, tau_s, tau_w, s_jump, w_jump, e_r, alpha,
                           a_quartic, tau_m, v_peak, v_reset, a_adapt, b_adapt, rate_k};
  for (double f : fields) require(std::isfinite(f), "parameters must be finite");
  require(g >= 0.0, "g must be >= 0");
  require(tau_s > 0.0, "tau_s must be > 0");
  require(tau_w > 0.0, "tau_w must be > 0");
  require(s_jump > 0.0, "s_jump must be > 0");
  require(w_jump > 0.0, "w_jump must be > 0");
  require(a_adapt > 0.0, "a_adapt must be > 0");
  require(rate_k >= 0.0, "rate_k must be >= 0");
  require(v_reset < v_peak, "v_reset must be < v_peak");
  if (kind == ModelKind::LIF) require(tau_m > 0.0, "tau_m must be > 0");
  require(e_r > v_star(*this, 0.0), "e_r must exceed v*(0)");
}

double default_rate_k(ModelKind kind) {
  return kind == ModelKind::Izhikevich ? 0.5 : 1.0 / std::numbers::pi;
}

double rate_gain(const ModelParams& p) {
  return p.rate_k > 0.0 ? p.rate_k : default_rate_k(p.kind);
}

double f_of_v(const ModelParams& p, double v) {
  switch (p.kind) {
    case ModelKind::LIF: return -v / p.tau_m;
    case ModelKind::Izhikevich: return v * (v - p.alpha);
    case ModelKind::AdEx: return std::exp(v) - v;
    case ModelKind::Quartic: return v * v * v * v - 2.0 * p.a_quartic * v;
  }
  return 0.0;
}

double f_prime(const ModelParams& p, double v) {
  switch (p.kind) {
    case ModelKind::LIF: return -1.0 / p.tau_m;
    case ModelKind::Izhikevich: return 2.0 * v - p.alpha;
    case ModelKind::AdEx: return std::exp(v) - 1.0;
    case ModelKind::Quartic: return 4.0 * v * v * v - 2.0 * p.a_quartic;
  }
  return 0.0;
}

double f_second(const ModelParams& p, double v) {
  switch (p.kind) {
    case ModelKind::LIF: return 0.0;
    case ModelKind::Izhikevich: return 2.0;
    case ModelKind::AdEx: return std::exp(v);
    case ModelKind::Quartic: return 12.0 * v * v;
  }
  return 0.0;
}

double g_of_v(const ModelParams& p, double v, double s, double w) {
  return f_of_v(p, v) - w + p.I + p.g * s * (p.e_r - v);
}

double v_star(const ModelParams& p, double s) {
  const double gs = p.g * s;
  switch (p.kind) {
    case ModelKind::LIF: return p.v_peak;
    case ModelKind::Izhikevich: return 0.5 * (p.alpha + gs);
    case ModelKind::AdEx: return std::log1p(gs);
    case ModelKind::Quartic: return std::cbrt((gs + 2.0 * p.a_quartic) / 4.0);
  }
  return 0.0;
}

double v_star_ds(const ModelParams& p, double s) {
  switch (p.kind) {
    case ModelKind::LIF: return 0.0;
    case ModelKind::Izhikevich: return 0.5 * p.g;
    case ModelKind::AdEx: return p.g / (1.0 + p.g * s);
    case ModelKind::Quartic: {
      const double vs = v_star(p, s);
      return p.g / (12.0 * vs * vs);
    }
  }
  return 0.0;
}

double rheobase_surface(const ModelParams& p, double s, double w) {
  const double vs = v_star(p, s);
  return w - f_of_v(p, vs) - p.g * s * (p.e_r - vs);
}

double rheobase_ds(const ModelParams& p, double s) {
  return -p.g * (p.e_r - v_star(p, s));
}

double switching_H(const ModelParams& p, double s, double w) {
  return p.I - rheobase_surface(p, s, w);
}

double firing_rate_reduced(const ModelParams& p, double s, double w, double k) {
  const double H = switching_H(p, s, w);
  return H > 0.0 ? k * std::sqrt(H) : 0.0;
}

double firing_rate_reduced(const ModelParams& p, double s, double w) {
  return firing_rate_reduced(p, s, w, rate_gain(p));
}

double firing_rate_full(const ModelParams& p, double s, double w) {
  const double H = switching_H(p, s, w);
  if (H <= kManifoldEps) return 0.0;
  switch (p.kind) {
    case ModelKind::LIF: {
      const double leak = 1.0 / p.tau_m + p.g * s;
      return leak / std::log((H + (p.v_peak - p.v_reset) * leak) / H);
    }
    case ModelKind::Izhikevich: {
      const double root = std::sqrt(H);
      const double vs = v_star(p, s);
      return root / (std::atan((p.v_peak - vs) / root) - std::atan((p.v_reset - vs) / root));
    }
    case ModelKind::AdEx:
    case ModelKind::Quartic:
      return 1.0 / inverse_rate_quadrature(p, s, w, H);
  }
  return 0.0;
}

double firing_rate_quadrature(const ModelParams& p, double s, double w) {
  const double H = switching_H(p, s, w);
  if (H <= kManifoldEps) return 0.0;
  return 1.0 / inverse_rate_quadrature(p, s, w, H);
}

Interval discontinuity_window(const ModelParams& p) {
  if (p.kind != ModelKind::Izhikevich) {
    throw Error(ErrorCode::UnsupportedModel,
                "discontinuity window is defined for the Izhikevich model only");
  }
  return {2.0 * p.v_reset - p.alpha, 2.0 * p.v_peak - p.alpha};
}

double CoefficientFns::A2(double g) const {
  return 1.0 / (lambda_s * lambda_s) + 0.5 * v_star_prime_0 * g * g;
}

double CoefficientFns::A1(double g) const { return eta - g * (e_r - v_star_0); }

double CoefficientFns::M(double g) const { return (e_r - v_star_0) / (2.0 * A2(g)); }

double CoefficientFns::N(double g) const {
  const double num = 0.5 * lambda_s * s_jump_eff * (e_r - v_star_0);
  const double den =
      1.0 / tau_s + 1.0 / tau_w + 0.5 * lambda_s * s_jump_eff * g * g * v_star_prime_0;
  return num / den;
}

Derived derive(const ModelParams& p) {
  Derived out;
  DerivedParams& d = out.params;
  d.rate_k = rate_gain(p);
  d.lambda_s = p.tau_s * d.rate_k * p.s_jump;
  d.lambda_w = p.tau_w * d.rate_k * p.w_jump;
  d.eta = d.lambda_w / d.lambda_s;
  d.gamma = p.tau_s / p.tau_w;
  d.v_star_0 = v_star(p, 0.0);
  d.I_rh = -f_of_v(p, d.v_star_0);
  d.v_star_prime_0 = p.kind == ModelKind::LIF ? 0.0 : 1.0 / f_second(p, d.v_star_0);
  const double gap = p.e_r - d.v_star_0;
  if (!(gap > 0.0)) {
    throw Error(ErrorCode::DomainError, "e_r must exceed v*(0) for the mean-field analysis");
  }
  d.g_star = d.eta / gap;
  d.g_bar = p.w_jump / (p.s_jump * gap);

  CoefficientFns& c = out.coeffs;
  c.lambda_s = d.lambda_s;
  c.s_jump_eff = d.rate_k * p.s_jump;
  c.tau_s = p.tau_s;
  c.tau_w = p.tau_w;
  c.eta = d.eta;
  c.v_star_0 = d.v_star_0;
  c.v_star_prime_0 = d.v_star_prime_0;
  c.e_r = p.e_r;
  c.A0 = d.I_rh - p.I;
  return out;
}

}  // namespace pwsc
