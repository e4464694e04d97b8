#pragma once

// Mean-field flow in the (s, w) plane:
//
//   s' = -s/tau_s + s_jump R,   w' = -w/tau_w + w_jump R,
//
// with R the exact population rate (FullMF) or k sqrt(H)_+ (ReducedMF). The
// field is continuous but not differentiable on H = 0, so the integrator
// localizes every crossing and never steps over one.

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "pwsc/models.hpp"
#include "pwsc/ode.hpp"

namespace pwsc {

enum class MeanFieldSystem { FullMF, ReducedMF };

std::string_view to_string(MeanFieldSystem system);

struct MeanFieldState {
  double s = 0.0;
  double w = 0.0;
};

struct Crossing {
  double time = 0.0;
  int direction = 0;  // +1 entering H > 0, -1 leaving it
};

// Times are integration time measured from the initial state. In reverse
// mode the orbit of the original flow is traversed backwards.
struct Trajectory {
  std::vector<double> times;
  std::vector<MeanFieldState> states;
  std::vector<Crossing> crossings;
};

struct IntegrateOptions {
  double tol = 1e-10;
  bool reverse_time = false;
  double sample_interval = 0.0;  // 0 records every accepted step
  double event_tol = 1e-12;      // |H| at a localized crossing
  double manifold_step_floor = 1e-3;
  double initial_step = 1e-3;
  std::size_t max_steps = 50'000'000;
};

double mean_rate(const ModelParams& p, MeanFieldSystem system, double s, double w);
MeanFieldState mean_field_rhs(const ModelParams& p, MeanFieldSystem system,
                              const MeanFieldState& x);

// Adaptive integrator that owns its state so that long runs can be advanced
// piecewise (cycle tracking, ramps).
class FlowIntegrator {
 public:
  using Step = ode::Step<2>;
  // Return false to stop after the current step.
  using StepFn = std::function<bool(const Step&)>;

  FlowIntegrator(const ModelParams& p, MeanFieldSystem system, const MeanFieldState& init,
                 const IntegrateOptions& opts = {});

  // Integrates for `duration` units of integration time. Returns false if the
  // callback asked to stop early.
  bool advance(double duration, const StepFn& on_step = {});

  double time() const { return t_; }
  MeanFieldState state() const { return {y_[0], y_[1]}; }
  const std::vector<Crossing>& crossings() const { return crossings_; }
  std::size_t steps_taken() const { return steps_; }

  // Right-hand side in integration time (negated in reverse mode).
  void field(const ode::Vec<2>& y, ode::Vec<2>& dy) const;

 private:
  double h_of(const ode::Vec<2>& y) const;
  double manifold_cap(const ode::Vec<2>& y, const ode::Vec<2>& dy) const;
  void localize(Step& step, int side0);

  ModelParams p_;
  MeanFieldSystem system_;
  IntegrateOptions opts_;
  double t_ = 0.0;
  ode::Vec<2> y_{};
  ode::Vec<2> k1_{};
  double h_next_;
  std::size_t steps_ = 0;
  std::vector<Crossing> crossings_;
};

// Throws Error(DomainError) if init leaves the closed positive quadrant,
// Error(ConfigError) if tol <= 0, and propagates StepSizeUnderflow and
// NonConvergence from the stepper.
Trajectory integrate(MeanFieldSystem system, const ModelParams& p, const MeanFieldState& init,
                     double duration, const IntegrateOptions& opts = {});

// Regularized system with the rate as a fast third variable:
//   eps R' = R (k^2 H - R^2).
struct EmbeddedState {
  double s = 0.0;
  double w = 0.0;
  double R = 0.0;
  double epsilon = 1e-4;
};

struct EmbeddedOptions {
  double tol = 1e-10;
  double sample_interval = 0.0;
  // While R(0) > 0, R is kept at or above this floor so that long quiescent
  // epochs cannot underflow it onto the invariant plane R = 0.
  double r_floor = 1e-8;
  std::size_t max_steps = 200'000'000;
};

struct EmbeddedTrajectory {
  Trajectory projected;
  std::vector<double> R;
};

EmbeddedTrajectory integrate_embedded(const ModelParams& p, const EmbeddedState& init,
                                      double duration, const EmbeddedOptions& opts = {});

struct LimitCycleSummary {
  double amplitude_w = 0.0;  // max w - min w over one period
  double period = 0.0;
  bool stable = true;
  bool nonsmooth = false;  // the orbit crosses H = 0
  MeanFieldState section_point;
  double h_min = 0.0;  // min of H over one period
  std::size_t crossings_per_period = 0;
};

enum class AttractorKind { Origin, Equilibrium, LimitCycle };

std::string_view to_string(AttractorKind kind);

struct Attractor {
  AttractorKind kind = AttractorKind::Origin;
  MeanFieldState point;     // Equilibrium: tail mean
  LimitCycleSummary cycle;  // LimitCycle only
};

// Looks at the part of the trajectory after `settle_fraction` of its duration.
// Origin if the tail stays within 1e-10 of (0, 0), Equilibrium if its
// diameter is below 1e-8, LimitCycle if returns to the section w = eta s
// (crossed with w - eta s decreasing) have periods agreeing to rel. 1e-6.
// Throws Error(Indeterminate) otherwise.
Attractor classify_attractor(const ModelParams& p, const Trajectory& traj,
                             double settle_fraction = 0.5);

// Default run length for attractor classification: 100 tau_w.
double default_classification_duration(const ModelParams& p);

}  // namespace pwsc
