#include "pwsc/bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "pwsc/csv.hpp"
#include "pwsc/equilibria.hpp"
#include "pwsc/error.hpp"
#include "pwsc/numeric.hpp"
#include "pwsc/params_io.hpp"

namespace pwsc {

namespace {

ModelParams at_point(const ModelParams& p, double g, double I) {
  ModelParams q = p;
  q.g = g;
  q.I = I;
  return q;
}

ModelParams with_g(const ModelParams& p, double g) { return at_point(p, g, p.I); }

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out;
  if (n == 0) return out;
  if (n == 1) return {a};
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return out;
}

std::optional<MeanFieldState> e_plus(const ModelParams& q) {
  const auto mode = q.kind == ModelKind::Izhikevich ? EquilibriumMode::FullIzhikevich
                                                     : EquilibriumMode::FullNumeric;
  for (const auto& e : nontrivial_equilibria(q, mode)) {
    if (e.branch == Branch::EPlus && e.reality == Reality::Real) return e.point;
  }
  return std::nullopt;
}

double section_phi(double eta, const ode::Vec<2>& y) { return y[1] - eta * y[0]; }

// Time in [t0, t0 + h] where w - eta s crosses zero, by bisection on the
// continuous extension.
double section_time(const FlowIntegrator::Step& st, double eta) {
  double lo = st.t0;
  double hi = st.t0 + st.h;
  for (int i = 0; i < 80 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (section_phi(eta, st.at(mid)) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

[[noreturn]] void no_cycle(const std::string& why) { throw Error(ErrorCode::NoCycleFound, why); }

}  // namespace

double saddle_node_current(const ModelParams& p, double g) {
  const auto d = derive(with_g(p, g));
  if (g < d.params.g_star) {
    throw Error(ErrorCode::DomainError, "saddle-node curve is defined only for g >= g*");
  }
  const double m = d.coeffs.M(g) * (g - d.params.g_star);
  return d.params.I_rh - d.coeffs.A2(g) * m * m;
}

std::vector<CurvePoint> saddle_node_curve(const ModelParams& p, double g_lo, double g_hi,
                                          std::size_t n) {
  const double g_star = derive(p).params.g_star;
  if (g_lo < g_star || g_hi < g_star) {
    throw Error(ErrorCode::DomainError, "saddle-node curve requested below g*");
  }
  std::vector<CurvePoint> out;
  for (double g : linspace(g_lo, g_hi, n)) out.push_back({g, saddle_node_current(p, g), "SN"});
  return out;
}

bool has_hopf_regime(const ModelParams& p) {
  const auto d = derive(p).params;
  return d.g_bar < d.g_star;
}

bool hopf_valid(const ModelParams& p, double g) {
  if (!has_hopf_regime(p)) return false;
  const auto d = derive(with_g(p, g));
  if (g < d.params.g_bar) return false;
  const double s_ah = d.coeffs.N(g) * (g - d.params.g_bar);
  const double s_sn = d.coeffs.M(g) * (g - d.params.g_star);
  // At a BT point s_ah and s_sn coincide up to rounding.
  return s_ah >= s_sn - 1e-12 * std::max(1.0, std::abs(s_sn));
}

double hopf_current(const ModelParams& p, double g) {
  if (!has_hopf_regime(p)) {
    throw Error(ErrorCode::NoHopfRegime, "g* <= g_bar: no Hopf bifurcation");
  }
  if (!hopf_valid(p, g)) {
    throw Error(ErrorCode::DomainError, "no Hopf point on e+ at this g");
  }
  const auto d = derive(with_g(p, g));
  const auto& c = d.coeffs;
  const double x = g - d.params.g_bar;
  const double y = g - d.params.g_star;
  return d.params.I_rh +
         c.A2(g) * (c.N(g) * c.N(g) * x * x - 2.0 * c.M(g) * c.N(g) * x * y);
}

std::vector<CurvePoint> hopf_curve(const ModelParams& p, double g_lo, double g_hi, std::size_t n) {
  if (!has_hopf_regime(p)) {
    throw Error(ErrorCode::NoHopfRegime, "g* <= g_bar: no Hopf bifurcation");
  }
  const double g_star = derive(p).params.g_star;
  std::vector<double> gs = linspace(g_lo, g_hi, n);
  for (double g : bt_points(p)) {
    if (g >= g_lo && g <= g_hi) gs.push_back(g);
  }
  std::sort(gs.begin(), gs.end());
  std::vector<CurvePoint> out;
  for (double g : gs) {
    if (!hopf_valid(p, g)) continue;
    const double I = hopf_current(p, g);
    const bool bt = g >= g_star && std::abs(I - saddle_node_current(p, g)) < 1e-8;
    out.push_back({g, I, bt ? "BT candidate" : "AH"});
  }
  return out;
}

bool is_codim3(const ModelParams& p) { return std::abs(p.tau_w - p.tau_s) < 1e-12; }

std::vector<double> bt_points(const ModelParams& p) {
  const auto d = derive(p);
  const auto& dp = d.params;
  if (is_codim3(p)) return {dp.g_star};
  if (!(dp.g_bar < dp.g_star)) return {};
  const double c = p.e_r - dp.v_star_0;
  const double k = dp.rate_k;
  const double a2 = k * p.s_jump * k * p.w_jump * dp.v_star_prime_0 / c * (p.tau_w - p.tau_s);
  const double a1 = -2.0 / p.tau_w;
  const double a0 = 2.0 * dp.eta / (p.tau_s * c);
  std::vector<double> roots;
  if (a2 == 0.0) {
    roots.push_back(-a0 / a1);
  } else {
    const double disc = a1 * a1 - 4.0 * a2 * a0;
    if (disc >= 0.0) {
      const double r = std::sqrt(disc);
      // Stable form of the two roots.
      const double q = -0.5 * (a1 + std::copysign(r, a1));
      roots.push_back(q / a2);
      if (q != 0.0) roots.push_back(a0 / q);
    }
  }
  const double floor_g = std::max(dp.g_star, dp.g_bar);
  std::vector<double> out;
  for (double g : roots) {
    if (g > floor_g) out.push_back(g);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<double> g_hat(const ModelParams& p) {
  if (!has_hopf_regime(p)) return std::nullopt;
  const auto d = derive(p).params;
  if (d.v_star_prime_0 <= 0.0) return std::nullopt;
  auto excess = [&](double g) { return hopf_current(p, g) - d.I_rh; };
  // I_AH - I_rh > 0 just above g* and < 0 for large g; scan geometrically.
  double a = d.g_star * (1.0 + 1e-9) + 1e-12;
  if (!hopf_valid(p, a) || excess(a) <= 0.0) return std::nullopt;
  double b = a;
  for (int i = 0; i < 200; ++i) {
    b = d.g_star + (b - d.g_star) * 2.0 + 1e-3;
    if (!hopf_valid(p, b)) return std::nullopt;
    if (excess(b) < 0.0) {
      return solve_bracketed(excess, a, b, 1e-14);
    }
    a = b;
  }
  return std::nullopt;
}

LimitCycleSummary track_limit_cycle(const ModelParams& p, double g, double I, bool want_stable,
                                    std::optional<MeanFieldState> init_hint,
                                    const CycleTrackOptions& opts) {
  const ModelParams q = at_point(p, g, I);
  q.validate();
  const auto d = derive(q).params;
  const double eta = d.eta;
  const auto ep = e_plus(q);

  MeanFieldState start;
  if (init_hint) {
    start = *init_hint;
  } else if (want_stable) {
    if (I > d.I_rh) {
      start = {0.0, 0.0};
    } else if (ep) {
      start = {2.0 * ep->s, 2.0 * ep->w};
    } else {
      no_cycle("no exterior starting point below rheobase");
    }
  } else {
    if (!ep) no_cycle("no e+ to start the reversed flow from");
    start = {ep->s * (1.0 + 1e-3), ep->w * (1.0 + 1e-3)};
  }

  IntegrateOptions io = opts.integrate;
  io.reverse_time = !want_stable;
  FlowIntegrator flow(q, MeanFieldSystem::ReducedMF, start, io);

  struct Return {
    double t;
    MeanFieldState x;
  };
  std::vector<Return> returns;
  std::string failure;
  bool converged = false;
  FlowIntegrator::Step last_step;
  const double scale = std::max(1.0, std::hypot(start.s, start.w));

  flow.advance(opts.transient_tau_w * q.tau_w, [&](const FlowIntegrator::Step& st) {
    const auto& y = st.y1;
    if (!std::isfinite(y[0]) || !std::isfinite(y[1]) || y[0] < -1e-9 || y[1] < -1e-9 ||
        std::hypot(y[0], y[1]) > 1e6 * scale) {
      failure = "trajectory left the admissible region";
      return false;
    }
    if (std::hypot(st.k7[0], st.k7[1]) < 1e-14) {
      failure = "trajectory settled on an equilibrium";
      return false;
    }
    if (section_phi(eta, st.y0) > 0.0 && section_phi(eta, y) <= 0.0) {
      const double tc = section_time(st, eta);
      const auto x = st.at(tc);
      returns.push_back({tc, {x[0], x[1]}});
      const std::size_t n = returns.size();
      if (n >= 3) {
        const double T1 = returns[n - 1].t - returns[n - 2].t;
        const double T0 = returns[n - 2].t - returns[n - 3].t;
        const double dist = std::hypot(returns[n - 1].x.s - returns[n - 2].x.s,
                                       returns[n - 1].x.w - returns[n - 2].x.w);
        if (dist < opts.return_tol && std::abs(T1 - T0) < opts.period_rtol * T1) {
          converged = true;
          last_step = st;
          return false;
        }
      }
    }
    return true;
  });
  if (!converged) {
    no_cycle(failure.empty() ? "section returns did not converge within the transient cap"
                             : failure);
  }
  const Return r0 = returns.back();
  if (ep && std::hypot(r0.x.s - ep->s, r0.x.w - ep->w) < std::max(1e-6, 100.0 * opts.return_tol)) {
    no_cycle("returns converged onto e+");
  }

  const double T_est = r0.t - returns[returns.size() - 2].t;
  const double dt_sample = T_est / static_cast<double>(opts.samples_per_period);
  double w_lo = std::numeric_limits<double>::infinity();
  double w_hi = -w_lo;
  double h_min = w_lo;
  FlowIntegrator::Step h_step;
  double h_t = 0.0;
  auto sample = [&](const FlowIntegrator::Step& st, double a, double b) {
    const auto m = static_cast<std::size_t>(std::ceil((b - a) / dt_sample)) + 1;
    for (std::size_t j = 0; j <= m; ++j) {
      const double t = a + (b - a) * static_cast<double>(j) / static_cast<double>(m);
      const auto y = st.at(t);
      w_lo = std::min(w_lo, y[1]);
      w_hi = std::max(w_hi, y[1]);
      const double H = switching_H(q, y[0], y[1]);
      if (H < h_min) {
        h_min = H;
        h_step = st;
        h_t = t;
      }
    }
  };
  sample(last_step, r0.t, last_step.t0 + last_step.h);

  std::optional<Return> r1;
  flow.advance(3.0 * T_est, [&](const FlowIntegrator::Step& st) {
    if (section_phi(eta, st.y0) > 0.0 && section_phi(eta, st.y1) <= 0.0) {
      const double tc = section_time(st, eta);
      sample(st, st.t0, tc);
      const auto x = st.at(tc);
      r1 = Return{tc, {x[0], x[1]}};
      return false;
    }
    sample(st, st.t0, st.t0 + st.h);
    return true;
  });
  if (!r1) no_cycle("cycle lost during the measurement period");

  // Golden-section refinement of the sampled minimum of H.
  {
    double a = std::max(h_step.t0, h_t - dt_sample);
    double b = std::min(h_step.t0 + h_step.h, h_t + dt_sample);
    auto Hat = [&](double t) {
      const auto y = h_step.at(t);
      return switching_H(q, y[0], y[1]);
    };
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int i = 0; i < 100 && b - a > 1e-13 * std::max(1.0, std::abs(h_t)); ++i) {
      const double c = b - gr * (b - a);
      const double e = a + gr * (b - a);
      if (Hat(c) < Hat(e)) {
        b = e;
      } else {
        a = c;
      }
    }
    h_min = std::min(h_min, Hat(0.5 * (a + b)));
  }

  LimitCycleSummary out;
  out.period = r1->t - r0.t;
  out.amplitude_w = w_hi - w_lo;
  out.stable = want_stable;
  out.section_point = r1->x;
  out.h_min = h_min;
  for (const auto& c : flow.crossings()) {
    if (c.time >= r0.t && c.time < r1->t) ++out.crossings_per_period;
  }
  out.nonsmooth = out.crossings_per_period >= 2;
  if (out.amplitude_w < 1e-9) no_cycle("orbit has collapsed onto an equilibrium");
  return out;
}

std::string_view to_string(GrazingKind k) {
  return k == GrazingKind::Persistence ? "Persistence" : "Destruction";
}

CycleTrackOptions grazing_track_options() {
  CycleTrackOptions o;
  o.integrate.tol = 1e-12;
  o.return_tol = 1e-11;
  o.period_rtol = 1e-8;
  return o;
}

GrazingResult grazing_point(const ModelParams& p, double g, double I_lo, double I_hi,
                            bool stable_cycle, const CycleTrackOptions& opts) {
  auto track = [&](double I, std::optional<MeanFieldState> hint) -> std::optional<LimitCycleSummary> {
    try {
      return track_limit_cycle(p, g, I, stable_cycle, hint, opts);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NoCycleFound) return std::nullopt;
      throw;
    }
  };
  auto lo = track(I_lo, std::nullopt);
  auto hi = track(I_hi, std::nullopt);
  if (!lo || !hi) throw Error(ErrorCode::BracketInvalid, "no cycle at one end of the bracket");
  if (std::signbit(lo->h_min) == std::signbit(hi->h_min)) {
    throw Error(ErrorCode::BracketInvalid, "cycle does not change tangency across the bracket");
  }
  double a = I_lo;
  double b = I_hi;
  LimitCycleSummary ca = *lo;
  LimitCycleSummary cb = *hi;
  for (int iter = 0; iter < 80; ++iter) {
    const auto& best = std::abs(ca.h_min) <= std::abs(cb.h_min) ? ca : cb;
    if (std::abs(best.h_min) < 1e-9 || std::abs(b - a) < 1e-15) break;
    const double m = 0.5 * (a + b);
    auto cm = track(m, best.section_point);
    if (!cm) cm = track(m, std::nullopt);
    if (!cm) throw Error(ErrorCode::NonConvergence, "cycle lost inside the grazing bracket");
    if (std::signbit(cm->h_min) == std::signbit(ca.h_min)) {
      a = m;
      ca = *cm;
    } else {
      b = m;
      cb = *cm;
    }
  }
  const bool use_a = std::abs(ca.h_min) <= std::abs(cb.h_min);
  GrazingResult out;
  out.I = use_a ? a : b;
  out.cycle = use_a ? ca : cb;
  out.h_min = out.cycle.h_min;
  out.kind = out.I > derive(p).params.I_rh ? GrazingKind::Persistence : GrazingKind::Destruction;
  return out;
}

Interval snlc_bracket(const ModelParams& p, double g, double I_lo, double I_hi, double resolution,
                      const CycleTrackOptions& opts) {
  auto exists = [&](double I) {
    try {
      track_limit_cycle(p, g, I, true, std::nullopt, opts);
      return true;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NoCycleFound) return false;
      throw;
    }
  };
  if (!exists(I_lo) || exists(I_hi)) {
    throw Error(ErrorCode::BracketInvalid,
                "stable cycle must exist at the lower end and not at the upper end");
  }
  const auto [a, b] = bisect_predicate(exists, I_lo, I_hi, resolution);
  return {a, b};
}

Interval locate_snlc(const ModelParams& p, double g, double resolution,
                     const CycleTrackOptions& opts) {
  const double I_ah = hopf_current(p, g);
  double span = 0.004;
  for (int j = 0; j < 10; ++j, span *= 2.0) {
    try {
      track_limit_cycle(p, g, I_ah + span, true, std::nullopt, opts);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoCycleFound) throw;
      return snlc_bracket(p, g, I_ah + 1e-6, I_ah + span, resolution, opts);
    }
  }
  throw Error(ErrorCode::BracketInvalid, "stable cycle persists far above I_AH");
}

double snlc_point(const ModelParams& p, double g, double I_lo, double I_hi, double resolution,
                  const CycleTrackOptions& opts) {
  const auto br = snlc_bracket(p, g, I_lo, I_hi, resolution, opts);
  return 0.5 * (br.lo + br.hi);
}

double nonsmooth_unstable_end(const ModelParams& p, double g, double I_ah, double I_fold,
                              const CycleTrackOptions& opts) {
  const double width = I_fold - I_ah;
  for (int j = 0; j <= 8; ++j) {
    const double I = j == 0 ? I_fold : I_fold - std::pow(10.0, -j) * width;
    try {
      if (track_limit_cycle(p, g, I, false, std::nullopt, opts).h_min < 0.0) return I;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoCycleFound) throw;
    }
  }
  throw Error(ErrorCode::BracketInvalid,
              "no non-smooth unstable cycle found below the fold; the grazing is not resolved");
}

std::optional<double> homoclinic_return(const ModelParams& p, double g, double s0) {
  const auto d = derive(with_g(p, g)).params;
  const double gamma = d.gamma;
  if (!(gamma < 1.0) || !(s0 > 0.0)) return std::nullopt;
  const double c = p.e_r - d.v_star_0;
  const double k = g * d.v_star_prime_0 / (2.0 * c);
  if (k <= 0.0 || 1.0 - k * s0 <= 0.0) return std::nullopt;
  auto phi = [&](double s) { return (1.0 - k * s0) * std::pow(s / s0, gamma - 1.0) - (1.0 - k * s); };
  const double slope = (1.0 - k * s0) * (gamma - 1.0) / s0 + k;
  if (slope == 0.0) return std::nullopt;
  if (slope > 0.0) {
    // phi > 0 near 0, phi < 0 just left of s0.
    double right = 0.0;
    for (int j = 1; j <= 14; ++j) {
      const double s = s0 * (1.0 - std::pow(10.0, -j));
      if (phi(s) < 0.0) {
        right = s;
        break;
      }
    }
    if (right == 0.0) return std::nullopt;
    double left = right;
    while (phi(left) < 0.0 && left > 1e-300) left *= 0.5;
    if (phi(left) < 0.0) return std::nullopt;
    return solve_bracketed(phi, left, right, 1e-15 * s0);
  }
  // phi > 0 left of s0 and < 0 just right of it; phi(1/k) > 0.
  double left = 0.0;
  for (int j = 1; j <= 14; ++j) {
    const double s = s0 + (1.0 / k - s0) * std::pow(10.0, -j);
    if (phi(s) < 0.0) {
      left = s;
      break;
    }
  }
  if (left == 0.0) return std::nullopt;
  return solve_bracketed(phi, left, 1.0 / k, 1e-15 * s0);
}

MeanFieldState manifold_point_rheobase(const ModelParams& p, double g, double s) {
  const auto d = derive(with_g(p, g)).params;
  const double c = p.e_r - d.v_star_0;
  const double k = g * d.v_star_prime_0 / (2.0 * c);
  return {s, g * s * c * (1.0 - k * s)};
}

TangencySlopes tangency_check(const ModelParams& p) {
  const auto d = derive(p).params;
  return {d.eta, p.g * (p.e_r - d.v_star_0)};
}

std::optional<double> global_codim2_g(const ModelParams& p, const Codim2Options& opts) {
  const auto gh = g_hat(p);
  if (!gh || *gh >= opts.g_max) return std::nullopt;
  const double I_rh = derive(p).params.I_rh;
  auto smooth_cycle = [&](double g) {
    try {
      return track_limit_cycle(p, g, I_rh, false, std::nullopt, opts.track).h_min > 0.0;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NoCycleFound) return false;
      throw;
    }
  };
  // Geometric offsets from g_hat: the smooth cycle at I_rh only lives in a
  // thin band above it for the presets.
  constexpr int n = 16;
  std::optional<double> last_true;
  for (int i = n; i >= 0; --i) {
    const double g = *gh + (opts.g_max - *gh) * std::ldexp(1.0, -i);
    if (smooth_cycle(g)) {
      last_true = g;
    } else if (last_true) {
      const auto [a, b] = bisect_predicate(smooth_cycle, *last_true, g, opts.g_resolution);
      return 0.5 * (a + b);
    }
  }
  return std::nullopt;
}

Codim2Result codim2_points(const ModelParams& p, const Codim2Options& opts) {
  const auto d = derive(p).params;
  Codim2Result out;
  out.points.push_back({"saddle-node BEB", d.g_star, d.I_rh});
  if (d.g_bar < d.g_star) out.points.push_back({"Hopf BEB", d.g_bar, d.I_rh});
  if (is_codim3(p)) {
    out.codim3 = LabeledPoint{"codim-3", d.g_star, d.I_rh};
    return out;
  }
  for (double g : bt_points(p)) out.points.push_back({"BT candidate", g, saddle_node_current(p, g)});
  if (opts.locate_global && has_hopf_regime(p)) {
    if (auto g = global_codim2_g(p, opts)) out.points.push_back({"global", *g, d.I_rh});
  }
  return out;
}

BifurcationDiagram assemble_diagram(const ModelParams& p, const std::vector<double>& g_grid,
                                    const DiagramOptions& opts) {
  BifurcationDiagram out;
  const auto d = derive(p).params;
  auto fail = [&](const std::string& curve, const std::string& msg) {
    out.failures[curve].push_back(msg);
  };

  try {
    const auto cd = codim2_points(p, opts.codim2);
    out.codim2 = cd.points;
    out.codim3 = cd.codim3;
  } catch (const Error& e) {
    fail("codim2", e.what());
  }
  if (g_grid.empty()) return out;

  const auto [gmin_it, gmax_it] = std::minmax_element(g_grid.begin(), g_grid.end());
  const double g_lo = *gmin_it;
  const double g_hi = *gmax_it;
  const std::size_t n = opts.curve_points;

  if (g_hi >= d.g_star) {
    try {
      out.sn_curve = saddle_node_curve(p, std::max(g_lo, d.g_star), g_hi, n);
    } catch (const Error& e) {
      fail("sn", e.what());
    }
  }
  const bool hopf = has_hopf_regime(p);
  if (hopf) {
    try {
      out.hopf_curve = hopf_curve(p, std::max(g_lo, d.g_bar), g_hi, n);
    } catch (const Error& e) {
      fail("hopf", e.what());
    }
  }

  std::optional<double> threshold;
  for (const auto& pt : out.codim2) {
    if (pt.label == "global") threshold = pt.g;
  }
  const auto gh = g_hat(p);
  if (!threshold) threshold = gh;
  auto segment = [&](double a, double b, const char* label) {
    a = std::max(a, g_lo);
    b = std::min(b, g_hi);
    if (b <= a) return;
    out.beb_line.push_back({a, d.I_rh, label});
    out.beb_line.push_back({b, d.I_rh, label});
  };
  if (hopf) {
    segment(g_lo, d.g_bar, "Persistence");
    segment(d.g_bar, d.g_star, "HomoclinicPersistence");
    if (threshold) {
      segment(d.g_star, *threshold, "SNIC_BEB");
      segment(*threshold, g_hi, "NonsmoothSaddleNode");
    } else {
      segment(d.g_star, g_hi, "SNIC_BEB");
    }
  } else {
    segment(g_lo, d.g_star, "Persistence");
    segment(d.g_star, g_hi, "NonsmoothSaddleNode");
  }

  if (hopf && opts.lobe_points > 0) {
    const double a = std::max(g_lo, d.g_bar);
    const double b = std::min(g_hi, gh ? *gh : d.g_star);
    if (b > a) {
      std::vector<double> lobe;
      for (std::size_t i = 0; i < opts.lobe_points; ++i) {
        lobe.push_back(a + (b - a) * (static_cast<double>(i) + 0.5) /
                               static_cast<double>(opts.lobe_points));
      }
      std::vector<std::optional<CurvePoint>> graze(lobe.size()), snlc(lobe.size());
      std::vector<std::string> errors(lobe.size());
      parallel_for(lobe.size(), opts.threads, [&](std::size_t i) {
        const double g = lobe[i];
        try {
          const double I_ah = hopf_current(p, g);
          const auto br = locate_snlc(p, g, 1e-10);
          snlc[i] = CurvePoint{g, 0.5 * (br.lo + br.hi), "SNLC"};
          const double width = br.lo - I_ah;
          const auto gz = grazing_point(p, g, I_ah + 0.05 * width,
                                        nonsmooth_unstable_end(p, g, I_ah, br.lo));
          graze[i] = CurvePoint{g, gz.I, std::string(to_string(gz.kind))};
        } catch (const Error& e) {
          errors[i] = "g = " + format_double(g) + ": " + e.what();
        }
      });
      for (const auto& msg : errors) {
        if (!msg.empty()) fail("lobe", msg);
      }
      for (auto& c : snlc) {
        if (c) out.snlc_curve.push_back(*c);
      }
      for (auto& c : graze) {
        if (c) out.grazing_curve.push_back(*c);
      }
    }
  }
  for (const auto& pt : out.codim2) {
    if (pt.label == "global" && pt.g >= g_lo && pt.g <= g_hi) {
      out.grazing_curve.push_back({pt.g, pt.I, "global"});
    }
  }
  return out;
}

std::map<std::string, std::string> diagram_files(const ModelParams& p,
                                                 const BifurcationDiagram& d) {
  std::map<std::string, std::string> files;
  auto curve = [&](const std::string& name, const std::vector<CurvePoint>& pts) {
    CsvTable t({"g", "I", "label"});
    for (const auto& pt : pts) t.add_row({format_double(pt.g), format_double(pt.I), pt.label});
    files[name] = t.str();
  };
  curve("sn.csv", d.sn_curve);
  curve("hopf.csv", d.hopf_curve);
  curve("grazing.csv", d.grazing_curve);
  curve("snlc.csv", d.snlc_curve);

  nlohmann::ordered_json j;
  j["params"] = nlohmann::ordered_json::parse(params_to_json(p));
  j["codim2"] = nlohmann::ordered_json::array();
  for (const auto& pt : d.codim2) j["codim2"].push_back({{"label", pt.label}, {"g", pt.g}, {"I", pt.I}});
  if (d.codim3) {
    j["codim3"] = {{"label", d.codim3->label}, {"g", d.codim3->g}, {"I", d.codim3->I}};
  } else {
    j["codim3"] = nullptr;
  }
  j["beb_line"] = nlohmann::ordered_json::array();
  for (const auto& pt : d.beb_line) j["beb_line"].push_back({{"g", pt.g}, {"I", pt.I}, {"type", pt.label}});
  j["failures"] = d.failures;
  files["diagram.json"] = j.dump(2) + "\n";
  return files;
}

}  // namespace pwsc
