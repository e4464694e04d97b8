#include "pwsc/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pwsc/error.hpp"

namespace pwsc {

namespace {

int side_of(double H) { return H > 0.0 ? 1 : -1; }

// Well below the relative tolerance, so that exponentially decaying
// coordinates keep their relative accuracy instead of stalling at noise level.
double abs_tol(double tol) { return 1e-4 * tol; }

bool reached(double t, double t_end) {
  return t_end - t <= 1e-12 * std::max(1.0, std::abs(t_end));
}

// Time-ordered sampler shared by the 2-D and 3-D drivers.
class Sampler {
 public:
  explicit Sampler(double interval) : interval_(interval) {}

  template <class Emit, class Dense>
  void on_step(double t0, double t1, const Dense& dense, const Emit& emit) {
    if (interval_ <= 0.0) {
      emit(t1, dense(t1));
      return;
    }
    for (;;) {
      const double ts = interval_ * static_cast<double>(next_);
      if (ts > t1 + 1e-12 * std::max(1.0, t1)) break;
      if (ts >= t0) emit(std::min(ts, t1), dense(std::min(ts, t1)));
      ++next_;
    }
  }

 private:
  double interval_;
  std::size_t next_ = 1;
};

}  // namespace

std::string_view to_string(MeanFieldSystem system) {
  return system == MeanFieldSystem::FullMF ? "FullMF" : "ReducedMF";
}

std::string_view to_string(AttractorKind kind) {
  switch (kind) {
    case AttractorKind::Origin: return "Origin";
    case AttractorKind::Equilibrium: return "Equilibrium";
    case AttractorKind::LimitCycle: return "LimitCycle";
  }
  return "Unknown";
}

double mean_rate(const ModelParams& p, MeanFieldSystem system, double s, double w) {
  return system == MeanFieldSystem::FullMF ? firing_rate_full(p, s, w)
                                           : firing_rate_reduced(p, s, w);
}

MeanFieldState mean_field_rhs(const ModelParams& p, MeanFieldSystem system,
                              const MeanFieldState& x) {
  const double R = mean_rate(p, system, x.s, x.w);
  return {-x.s / p.tau_s + p.s_jump * R, -x.w / p.tau_w + p.w_jump * R};
}

FlowIntegrator::FlowIntegrator(const ModelParams& p, MeanFieldSystem system,
                               const MeanFieldState& init, const IntegrateOptions& opts)
    : p_(p), system_(system), opts_(opts), y_{init.s, init.w}, h_next_(opts.initial_step) {
  if (!(opts_.tol > 0.0)) throw Error(ErrorCode::ConfigError, "tolerance must be > 0");
  field(y_, k1_);
}

void FlowIntegrator::field(const ode::Vec<2>& y, ode::Vec<2>& dy) const {
  const auto d = mean_field_rhs(p_, system_, {y[0], y[1]});
  const double sign = opts_.reverse_time ? -1.0 : 1.0;
  dy[0] = sign * d.s;
  dy[1] = sign * d.w;
}

double FlowIntegrator::h_of(const ode::Vec<2>& y) const { return switching_H(p_, y[0], y[1]); }

double FlowIntegrator::manifold_cap(const ode::Vec<2>& y, const ode::Vec<2>& dy) const {
  const double H = h_of(y);
  const double H_dot = -rheobase_ds(p_, y[0]) * dy[0] - dy[1];
  if (H_dot == 0.0) return std::numeric_limits<double>::infinity();
  return std::max(opts_.manifold_step_floor, 0.5 * std::abs(H) / std::abs(H_dot));
}

void FlowIntegrator::localize(Step& step, int side0) {
  auto f = [this](const ode::Vec<2>& y, ode::Vec<2>& dy) { field(y, dy); };
  double lo = 0.0;
  double hi = step.h;
  const double min_width = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t_));
  for (int iter = 0; iter < 200; ++iter) {
    if (std::abs(h_of(step.y1)) < opts_.event_tol || hi - lo <= min_width) break;
    const double mid = 0.5 * (lo + hi);
    Step trial;
    ode::dopri5_step<2>(f, t_, y_, k1_, mid, opts_.tol, abs_tol(opts_.tol), trial);
    if (side_of(h_of(trial.y1)) == side0) {
      lo = mid;
    } else {
      hi = mid;
      step = trial;
    }
  }
  crossings_.push_back({t_ + step.h, -side0});
}

bool FlowIntegrator::advance(double duration, const StepFn& on_step) {
  auto f = [this](const ode::Vec<2>& y, ode::Vec<2>& dy) { field(y, dy); };
  const double t_end = t_ + duration;
  while (!reached(t_, t_end)) {
    if (steps_ >= opts_.max_steps) {
      throw Error(ErrorCode::NonConvergence, "step budget exhausted at t = " + std::to_string(t_));
    }
    double h = std::min(h_next_, manifold_cap(y_, k1_));
    const bool truncated = h >= t_end - t_;
    if (truncated) h = t_end - t_;

    Step step;
    const double err = ode::dopri5_step<2>(f, t_, y_, k1_, h, opts_.tol, abs_tol(opts_.tol), step);
    if (!(err <= 1.0)) {
      h_next_ = h * (std::isfinite(err) ? ode::step_factor(err) : 0.2);
      if (h_next_ < 1e-14 * std::max(1.0, std::abs(t_))) {
        throw Error(ErrorCode::StepSizeUnderflow, "step size underflow at t = " + std::to_string(t_));
      }
      continue;
    }
    const int side0 = side_of(h_of(y_));
    if (side_of(h_of(step.y1)) != side0) localize(step, side0);
    if (!truncated) h_next_ = h * ode::step_factor(err);

    t_ += step.h;
    y_ = step.y1;
    k1_ = step.k7;
    ++steps_;
    if (on_step && !on_step(step)) return false;
  }
  return true;
}

Trajectory integrate(MeanFieldSystem system, const ModelParams& p, const MeanFieldState& init,
                     double duration, const IntegrateOptions& opts) {
  if (!(init.s >= 0.0 && init.w >= 0.0)) {
    throw Error(ErrorCode::DomainError, "initial state must lie in the closed positive quadrant");
  }
  if (!(duration >= 0.0)) throw Error(ErrorCode::ConfigError, "duration must be >= 0");
  FlowIntegrator flow(p, system, init, opts);
  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(init);
  Sampler sampler(opts.sample_interval);
  flow.advance(duration, [&](const FlowIntegrator::Step& step) {
    sampler.on_step(
        step.t0, step.t0 + step.h, [&](double t) { return step.at(t); },
        [&](double t, const ode::Vec<2>& y) {
          traj.times.push_back(t);
          traj.states.push_back({y[0], y[1]});
        });
    return true;
  });
  if (traj.times.back() < flow.time()) {
    traj.times.push_back(flow.time());
    traj.states.push_back(flow.state());
  }
  traj.crossings = flow.crossings();
  return traj;
}

EmbeddedTrajectory integrate_embedded(const ModelParams& p, const EmbeddedState& init,
                                      double duration, const EmbeddedOptions& opts) {
  if (!(init.epsilon > 0.0)) throw Error(ErrorCode::ConfigError, "epsilon must be > 0");
  if (!(init.R >= 0.0)) throw Error(ErrorCode::DomainError, "R(0) must be >= 0");
  if (!(opts.tol > 0.0)) throw Error(ErrorCode::ConfigError, "tolerance must be > 0");
  using V = ode::Vec<3>;
  const double k2 = rate_gain(p) * rate_gain(p);
  const double eps = init.epsilon;
  auto f = [&](const V& y, V& dy) {
    const double H = switching_H(p, y[0], y[1]);
    dy[0] = -y[0] / p.tau_s + p.s_jump * y[2];
    dy[1] = -y[1] / p.tau_w + p.w_jump * y[2];
    dy[2] = y[2] * (k2 * H - y[2] * y[2]) / eps;
  };
  const bool project = init.R > 0.0;

  EmbeddedTrajectory out;
  auto record = [&](double t, const V& y) {
    out.projected.times.push_back(t);
    out.projected.states.push_back({y[0], y[1]});
    out.R.push_back(y[2]);
  };
  V y{init.s, init.w, init.R};
  V k1;
  f(y, k1);
  record(0.0, y);
  Sampler sampler(opts.sample_interval);
  double t = 0.0;
  double h = std::min(1e-3, eps);
  std::size_t steps = 0;
  while (!reached(t, duration)) {
    if (++steps > opts.max_steps) {
      throw Error(ErrorCode::NonConvergence, "step budget exhausted at t = " + std::to_string(t));
    }
    const bool truncated = h >= duration - t;
    const double hs = truncated ? duration - t : h;
    ode::Step<3> step;
    const double err = ode::dopri5_step<3>(f, t, y, k1, hs, opts.tol, abs_tol(opts.tol), step);
    if (!(err <= 1.0)) {
      h = hs * (std::isfinite(err) ? ode::step_factor(err) : 0.2);
      if (h < 1e-14 * std::max(1.0, t)) {
        throw Error(ErrorCode::StepSizeUnderflow, "step size underflow at t = " + std::to_string(t));
      }
      continue;
    }
    if (!truncated) h = hs * ode::step_factor(err);
    const int side0 = side_of(switching_H(p, y[0], y[1]));
    if (side_of(switching_H(p, step.y1[0], step.y1[1])) != side0) {
      double lo = step.t0;
      double hi = step.t0 + step.h;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        const V ym = step.at(mid);
        if (side_of(switching_H(p, ym[0], ym[1])) == side0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      out.projected.crossings.push_back({hi, -side0});
    }
    sampler.on_step(step.t0, step.t0 + step.h, [&](double tt) { return step.at(tt); }, record);
    t += step.h;
    y = step.y1;
    if (project && y[2] < opts.r_floor) {
      y[2] = opts.r_floor;
      f(y, k1);
    } else {
      k1 = step.k7;
    }
  }
  if (out.projected.times.back() < t) record(t, y);
  return out;
}

double default_classification_duration(const ModelParams& p) { return 100.0 * p.tau_w; }

namespace {

// Crossing time of phi through zero between samples i and i+1, using a cubic
// through the neighbouring samples when available.
double section_time(const std::vector<double>& t, const std::vector<double>& phi, std::size_t i) {
  const std::size_t n = t.size();
  if (i == 0 || i + 2 >= n) {
    return t[i] + (t[i + 1] - t[i]) * phi[i] / (phi[i] - phi[i + 1]);
  }
  const double xs[4] = {t[i - 1], t[i], t[i + 1], t[i + 2]};
  const double ys[4] = {phi[i - 1], phi[i], phi[i + 1], phi[i + 2]};
  auto cubic = [&](double x) {
    double sum = 0.0;
    for (int a = 0; a < 4; ++a) {
      double term = ys[a];
      for (int b = 0; b < 4; ++b) {
        if (a != b) term *= (x - xs[b]) / (xs[a] - xs[b]);
      }
      sum += term;
    }
    return sum;
  };
  double lo = t[i];
  double hi = t[i + 1];
  const int s_lo = std::signbit(phi[i]) ? -1 : 1;
  for (int k = 0; k < 80; ++k) {
    const double mid = 0.5 * (lo + hi);
    const int s_mid = std::signbit(cubic(mid)) ? -1 : 1;
    if (s_mid == s_lo) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Attractor classify_attractor(const ModelParams& p, const Trajectory& traj, double settle_fraction) {
  if (traj.times.size() < 2) throw Error(ErrorCode::Indeterminate, "trajectory too short");
  if (!(settle_fraction >= 0.0 && settle_fraction < 1.0)) {
    throw Error(ErrorCode::ConfigError, "settle_fraction must lie in [0, 1)");
  }
  const double t0 = traj.times.front();
  const double t_start = t0 + settle_fraction * (traj.times.back() - t0);
  std::size_t first = 0;
  while (first < traj.times.size() && traj.times[first] < t_start) ++first;
  if (traj.times.size() - first < 2) throw Error(ErrorCode::Indeterminate, "tail too short");

  double s_min = INFINITY, s_max = -INFINITY, w_min = INFINITY, w_max = -INFINITY;
  double norm_max = 0.0, s_sum = 0.0, w_sum = 0.0;
  for (std::size_t i = first; i < traj.times.size(); ++i) {
    const auto& x = traj.states[i];
    s_min = std::min(s_min, x.s);
    s_max = std::max(s_max, x.s);
    w_min = std::min(w_min, x.w);
    w_max = std::max(w_max, x.w);
    norm_max = std::max(norm_max, std::hypot(x.s, x.w));
    s_sum += x.s;
    w_sum += x.w;
  }
  const double count = static_cast<double>(traj.times.size() - first);
  Attractor out;
  if (norm_max < 1e-10) {
    out.kind = AttractorKind::Origin;
    return out;
  }
  if (std::hypot(s_max - s_min, w_max - w_min) < 1e-8) {
    out.kind = AttractorKind::Equilibrium;
    out.point = {s_sum / count, w_sum / count};
    return out;
  }

  const double eta = derive(p).params.eta;
  std::vector<double> phi(traj.times.size());
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = traj.states[i].w - eta * traj.states[i].s;
  std::vector<double> returns;
  std::vector<std::size_t> return_idx;
  for (std::size_t i = first; i + 1 < phi.size(); ++i) {
    if (phi[i] > 0.0 && phi[i + 1] <= 0.0) {
      returns.push_back(section_time(traj.times, phi, i));
      return_idx.push_back(i);
    }
  }
  if (returns.size() < 3) {
    throw Error(ErrorCode::Indeterminate, "neither settled nor periodic within the tail");
  }
  const std::size_t n = returns.size();
  const double T1 = returns[n - 1] - returns[n - 2];
  const double T0 = returns[n - 2] - returns[n - 3];
  if (std::abs(T1 - T0) > 1e-6 * T1) {
    throw Error(ErrorCode::Indeterminate, "section return times have not converged");
  }

  LimitCycleSummary& c = out.cycle;
  c.period = T1;
  c.stable = true;
  double wmin = INFINITY, wmax = -INFINITY, hmin = INFINITY;
  for (std::size_t i = return_idx[n - 2]; i <= return_idx[n - 1] + 1; ++i) {
    wmin = std::min(wmin, traj.states[i].w);
    wmax = std::max(wmax, traj.states[i].w);
    hmin = std::min(hmin, switching_H(p, traj.states[i].s, traj.states[i].w));
  }
  c.amplitude_w = wmax - wmin;
  c.h_min = hmin;
  for (const auto& x : traj.crossings) {
    if (x.time >= returns[n - 2] && x.time < returns[n - 1]) ++c.crossings_per_period;
  }
  c.nonsmooth = c.crossings_per_period >= 2;
  const std::size_t j = return_idx[n - 1];
  const double frac = (returns[n - 1] - traj.times[j]) / (traj.times[j + 1] - traj.times[j]);
  c.section_point = {traj.states[j].s + frac * (traj.states[j + 1].s - traj.states[j].s),
                     traj.states[j].w + frac * (traj.states[j + 1].w - traj.states[j].w)};
  out.kind = AttractorKind::LimitCycle;
  return out;
}

}  // namespace pwsc
