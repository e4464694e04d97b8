#pragma once

// All-to-all network of N adapting integrate-and-fire neurons,
//
//   v_i' = F(v_i) - w_i + I + g s (e_r - v_i),   w_i' = a (b v_i - w_i),
//   s'   = -s / tau_s + (s_jump / N) sum_j delta(t - t_j),
//
// with v_i -> v_reset, w_i -> w_i + w_jump when v_i reaches v_peak.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "pwsc/csv.hpp"
#include "pwsc/models.hpp"

namespace pwsc {

struct NeuronState {
  double v = 0.0;
  double w = 0.0;
};

struct Spike {
  std::size_t neuron = 0;
  double time = 0.0;
};

struct NetworkTrace {
  std::vector<double> times;
  std::vector<double> s;
  std::vector<double> w_mean;
  std::vector<double> current;  // applied I at each sample
  std::vector<Spike> spikes;
  std::size_t N = 0;
  std::vector<NeuronState> final_states;
  double final_s = 0.0;
};

struct NetworkOptions {
  std::size_t N = 1000;
  double duration = 0.0;
  double dt = 0.01;
  std::uint64_t seed = 1;
  double record_interval = 0.1;  // 0 records every step
  // Any |v| beyond this (or a non-finite value) is reported as Error(BlowUp).
  double v_ceiling = 1e12;
  // Explicit initial states; empty means v uniform in [v_reset, v_peak], w = 0.
  std::vector<NeuronState> init;
  double s0 = 0.0;
  // Time-dependent applied current; empty means params.I throughout.
  std::function<double(double)> current;
  bool record_spikes = true;
};

NetworkTrace simulate_network(const ModelParams& p, const NetworkOptions& opts);

// Same neurons with the synaptic variable slaved to s = mean(w) / eta.
NetworkTrace simulate_slow_network(const ModelParams& p, const NetworkOptions& opts);

struct RampResult {
  NetworkTrace ascending;
  NetworkTrace descending;
};

// Linear current sweeps I_start -> I_end and I_end -> I_start. Each sweep is
// preceded by an unrecorded run of settle_time (default 10 tau_w, negative
// selects the default) at its starting current from the random initial
// condition. ramp_rate = 0 degenerates to two runs at fixed I_start lasting
// opts.duration.
RampResult ramp_protocol(const ModelParams& p, double I_start, double I_end, double ramp_rate,
                         const NetworkOptions& opts, bool slow_network = true,
                         double settle_time = -1.0);

struct HysteresisAnalysis {
  std::vector<double> I_centers;
  std::vector<double> rate_up;  // spikes per neuron per unit time
  std::vector<double> rate_down;
  std::vector<double> w_up;  // bin average of the mean adaptation
  std::vector<double> w_down;
  std::optional<Interval> firing_up;  // hull of currents at which spikes occurred
  std::optional<Interval> firing_down;
  // Hull of those pieces of the symmetric difference of the two firing ranges
  // that are wider than the tolerance.
  std::optional<Interval> mismatch;
  // Width of the mismatch, or of the widest discarded piece when there is none.
  double mismatch_width = 0.0;
};

// Identical neurons tend to fire in synchronous volleys that are far apart near
// onset, so binned rates are too ragged to compare bin by bin; the firing
// ranges of the sweeps are compared instead. Bins only feed the rate and w
// profiles.
HysteresisAnalysis analyze_hysteresis(const RampResult& ramp, std::size_t bins,
                                      double mismatch_tol = 5e-3);

enum class Regime { Quiescent, Tonic, Bursting };

std::string_view to_string(Regime r);

// Classifies the last `window` time units; the window before it must agree,
// otherwise Error(Indeterminate).
Regime detect_regime(const NetworkTrace& trace, double window);

CsvTable network_trace_table(const NetworkTrace& trace);
CsvTable spike_table(const NetworkTrace& trace);

}  // namespace pwsc
