#include "pwsc/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "pwsc/error.hpp"

namespace pwsc {

namespace {

void check_options(const NetworkOptions& o) {
  if (o.N < 1) throw Error(ErrorCode::ConfigError, "N must be >= 1");
  if (!(o.dt > 0.0)) throw Error(ErrorCode::ConfigError, "dt must be > 0");
  if (!(o.duration >= 0.0)) throw Error(ErrorCode::ConfigError, "duration must be >= 0");
  if (!(o.record_interval >= 0.0)) {
    throw Error(ErrorCode::ConfigError, "record_interval must be >= 0");
  }
  if (!o.init.empty() && o.init.size() != o.N) {
    throw Error(ErrorCode::ConfigError, "explicit initial state count must equal N");
  }
}

std::vector<NeuronState> initial_states(const ModelParams& p, const NetworkOptions& o) {
  if (!o.init.empty()) return o.init;
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> u(p.v_reset, p.v_peak);
  std::vector<NeuronState> out(o.N);
  for (auto& n : out) n = {u(rng), 0.0};
  return out;
}

NetworkTrace run_network(const ModelParams& p, const NetworkOptions& o, bool slow) {
  p.validate();
  check_options(o);
  const double eta = slow ? derive(p).params.eta : 1.0;
  auto neurons = initial_states(p, o);
  const std::size_t N = o.N;
  const double dt = o.dt;
  const double inv_N = 1.0 / static_cast<double>(N);
  const auto steps = static_cast<std::size_t>(std::llround(o.duration / dt));
  const std::size_t record_every =
      o.record_interval > 0.0 ? std::max<std::size_t>(1, std::llround(o.record_interval / dt)) : 1;
  auto current = [&](double t) { return o.current ? o.current(t) : p.I; };

  NetworkTrace trace;
  trace.N = N;
  auto w_mean = [&] {
    double sum = 0.0;
    for (const auto& n : neurons) sum += n.w;
    return sum * inv_N;
  };
  double s = slow ? w_mean() / eta : o.s0;
  auto record = [&](double t) {
    trace.times.push_back(t);
    trace.s.push_back(s);
    trace.w_mean.push_back(w_mean());
    trace.current.push_back(current(t));
  };
  if (steps > 0) record(0.0);

  std::vector<double> spike_times;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (slow) s = w_mean() / eta;
    const double s_start = s;
    // s between spikes: exact exponential decay (constant for the slow network).
    auto s_at = [&](double tt) {
      return slow ? s_start : s_start * std::exp(-(tt - t) / p.tau_s);
    };
    auto dv = [&](double v, double w, double tt) {
      return f_of_v(p, v) - w + current(tt) + p.g * s_at(tt) * (p.e_r - v);
    };
    auto dw = [&](double v, double w) { return p.a_adapt * (p.b_adapt * v - w); };

    spike_times.clear();
    for (std::size_t i = 0; i < N; ++i) {
      double v = neurons[i].v;
      double w = neurons[i].w;
      double ta = t;
      double h = dt;
      for (int guard = 0;; ++guard) {
        if (guard > 10000) {
          throw Error(ErrorCode::BlowUp, "neuron " + std::to_string(i) + " spikes without bound");
        }
        const double k1v = dv(v, w, ta);
        const double k1w = dw(v, w);
        const double vp = v + h * k1v;
        const double wp = w + h * k1w;
        double vn, wn;
        if (vp >= p.v_peak) {
          vn = vp;
          wn = wp;
        } else {
          vn = v + 0.5 * h * (k1v + dv(vp, wp, ta + h));
          wn = w + 0.5 * h * (k1w + dw(vp, wp));
        }
        if (!std::isfinite(vn) || !std::isfinite(wn) || std::abs(vn) > o.v_ceiling) {
          throw Error(ErrorCode::BlowUp, "state of neuron " + std::to_string(i) +
                                             " diverged at t = " + std::to_string(ta));
        }
        if (vn < p.v_peak) {
          v = vn;
          w = wn;
          break;
        }
        const double theta = std::clamp((p.v_peak - v) / (vn - v), 0.0, 1.0);
        const double ts = ta + theta * h;
        spike_times.push_back(ts);
        if (o.record_spikes) trace.spikes.push_back({i, ts});
        w = w + theta * (wn - w) + p.w_jump;
        v = p.v_reset;
        h *= 1.0 - theta;
        ta = ts;
        if (h <= 1e-15 * dt) break;
      }
      neurons[i] = {v, w};
    }
    if (!slow) {
      const double t1 = t + dt;
      s = s_start * std::exp(-dt / p.tau_s);
      for (double ts : spike_times) s += p.s_jump * inv_N * std::exp(-(t1 - ts) / p.tau_s);
    } else {
      s = w_mean() / eta;
    }
    if ((k + 1) % record_every == 0 || k + 1 == steps) record(static_cast<double>(k + 1) * dt);
  }
  trace.final_states = std::move(neurons);
  trace.final_s = s;
  return trace;
}

}  // namespace

NetworkTrace simulate_network(const ModelParams& p, const NetworkOptions& opts) {
  return run_network(p, opts, false);
}

NetworkTrace simulate_slow_network(const ModelParams& p, const NetworkOptions& opts) {
  return run_network(p, opts, true);
}

RampResult ramp_protocol(const ModelParams& p, double I_start, double I_end, double ramp_rate,
                         const NetworkOptions& opts, bool slow_network, double settle_time) {
  if (!(ramp_rate >= 0.0)) throw Error(ErrorCode::ConfigError, "ramp_rate must be >= 0");
  if (settle_time < 0.0) settle_time = 10.0 * p.tau_w;
  auto run = slow_network ? simulate_slow_network : simulate_network;
  auto settled = [&](double I0) {
    NetworkOptions pre = opts;
    pre.duration = settle_time;
    pre.current = [I0](double) { return I0; };
    pre.record_spikes = false;
    pre.record_interval = settle_time > 0.0 ? settle_time : opts.record_interval;
    NetworkOptions out = opts;
    if (settle_time > 0.0) {
      auto tr = run(p, pre);
      out.init = std::move(tr.final_states);
      out.s0 = tr.final_s;
    }
    return out;
  };
  NetworkOptions up = settled(I_start);
  NetworkOptions down = settled(ramp_rate == 0.0 ? I_start : I_end);
  if (ramp_rate == 0.0) {
    up.current = [I_start](double) { return I_start; };
    down.current = up.current;
  } else {
    const double T = std::abs(I_end - I_start) / ramp_rate;
    up.duration = T;
    down.duration = T;
    up.current = [=](double t) { return I_start + (I_end - I_start) * std::min(t / T, 1.0); };
    down.current = [=](double t) { return I_end + (I_start - I_end) * std::min(t / T, 1.0); };
  }
  return {run(p, up), run(p, down)};
}

namespace {

double interp(const std::vector<double>& x, const std::vector<double>& y, double at) {
  auto it = std::upper_bound(x.begin(), x.end(), at);
  if (it == x.begin()) return y.front();
  if (it == x.end()) return y.back();
  const std::size_t j = static_cast<std::size_t>(it - x.begin());
  const double f = (at - x[j - 1]) / (x[j] - x[j - 1]);
  return y[j - 1] + f * (y[j] - y[j - 1]);
}

void bin_rates(const NetworkTrace& tr, double lo, double width, std::size_t bins,
               std::vector<double>& rate, std::vector<double>& w_avg) {
  std::vector<double> time(bins, 0.0), count(bins, 0.0), w_int(bins, 0.0);
  auto bin_of = [&](double I) {
    const double b = std::floor((I - lo) / width);
    return static_cast<std::size_t>(std::clamp(b, 0.0, static_cast<double>(bins - 1)));
  };
  for (std::size_t i = 0; i + 1 < tr.times.size(); ++i) {
    const double I_mid = 0.5 * (tr.current[i] + tr.current[i + 1]);
    const double span = tr.times[i + 1] - tr.times[i];
    time[bin_of(I_mid)] += span;
    w_int[bin_of(I_mid)] += 0.5 * (tr.w_mean[i] + tr.w_mean[i + 1]) * span;
  }
  for (const auto& sp : tr.spikes) count[bin_of(interp(tr.times, tr.current, sp.time))] += 1.0;
  rate.assign(bins, 0.0);
  w_avg.assign(bins, 0.0);
  for (std::size_t b = 0; b < bins; ++b) {
    if (time[b] > 0.0) {
      rate[b] = count[b] / (time[b] * static_cast<double>(tr.N));
      w_avg[b] = w_int[b] / time[b];
    }
  }
}

}  // namespace

HysteresisAnalysis analyze_hysteresis(const RampResult& ramp, std::size_t bins,
                                      double mismatch_tol) {
  if (bins == 0) throw Error(ErrorCode::ConfigError, "bins must be >= 1");
  if (!(mismatch_tol >= 0.0)) throw Error(ErrorCode::ConfigError, "mismatch_tol must be >= 0");
  HysteresisAnalysis out;
  const auto& up = ramp.ascending;
  const auto& down = ramp.descending;
  if (up.current.empty() || down.current.empty()) return out;
  const auto [lo_u, hi_u] = std::minmax_element(up.current.begin(), up.current.end());
  const auto [lo_d, hi_d] = std::minmax_element(down.current.begin(), down.current.end());
  const double lo = std::min(*lo_u, *lo_d);
  const double hi = std::max(*hi_u, *hi_d);
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  bin_rates(up, lo, width, bins, out.rate_up, out.w_up);
  bin_rates(down, lo, width, bins, out.rate_down, out.w_down);
  out.I_centers.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out.I_centers[b] = lo + (static_cast<double>(b) + 0.5) * width;
  }

  auto firing_range = [](const NetworkTrace& tr) -> std::optional<Interval> {
    std::optional<Interval> r;
    for (const auto& sp : tr.spikes) {
      const double I = interp(tr.times, tr.current, sp.time);
      if (!r) {
        r = Interval{I, I};
      } else {
        r->lo = std::min(r->lo, I);
        r->hi = std::max(r->hi, I);
      }
    }
    return r;
  };
  out.firing_up = firing_range(up);
  out.firing_down = firing_range(down);

  // Pieces of the symmetric difference no wider than the tolerance are edge
  // effects of finite ramp speed and sampling.
  std::vector<Interval> pieces;
  const auto& fu = out.firing_up;
  const auto& fd = out.firing_down;
  if (fu && fd) {
    pieces.push_back({std::min(fu->lo, fd->lo), std::max(fu->lo, fd->lo)});
    pieces.push_back({std::min(fu->hi, fd->hi), std::max(fu->hi, fd->hi)});
  } else if (fu || fd) {
    pieces.push_back(fu ? *fu : *fd);
  }
  for (const auto& piece : pieces) {
    const double w = piece.hi - piece.lo;
    if (w <= mismatch_tol) {
      if (!out.mismatch) out.mismatch_width = std::max(out.mismatch_width, w);
      continue;
    }
    if (!out.mismatch) {
      out.mismatch = piece;
    } else {
      out.mismatch->lo = std::min(out.mismatch->lo, piece.lo);
      out.mismatch->hi = std::max(out.mismatch->hi, piece.hi);
    }
    out.mismatch_width = out.mismatch->hi - out.mismatch->lo;
  }
  return out;
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::Quiescent: return "Quiescent";
    case Regime::Tonic: return "Tonic";
    case Regime::Bursting: return "Bursting";
  }
  return "?";
}

namespace {

Regime classify_window(const NetworkTrace& tr, double a, double b) {
  constexpr std::size_t nbins = 200;
  const double width = (b - a) / static_cast<double>(nbins);
  std::vector<double> counts(nbins, 0.0);
  std::size_t total = 0;
  for (const auto& sp : tr.spikes) {
    if (sp.time < a || sp.time >= b) continue;
    const auto k = std::min(nbins - 1, static_cast<std::size_t>((sp.time - a) / width));
    counts[k] += 1.0;
    ++total;
  }
  if (total == 0) return Regime::Quiescent;
  const double peak = *std::max_element(counts.begin(), counts.end());
  std::size_t low = 0;
  std::size_t high_to_low = 0;
  for (std::size_t k = 0; k < nbins; ++k) {
    const bool is_low = counts[k] < 0.05 * peak;
    if (is_low) ++low;
    if (k > 0 && is_low && counts[k - 1] >= 0.05 * peak) ++high_to_low;
  }
  const bool alternates = low >= nbins / 10 && high_to_low >= 2;
  return alternates ? Regime::Bursting : Regime::Tonic;
}

}  // namespace

Regime detect_regime(const NetworkTrace& trace, double window) {
  if (!(window > 0.0)) throw Error(ErrorCode::ConfigError, "window must be > 0");
  if (trace.times.empty() || trace.times.back() - trace.times.front() < 2.0 * window) {
    throw Error(ErrorCode::Indeterminate, "trace shorter than two windows");
  }
  const double T = trace.times.back();
  const Regime last = classify_window(trace, T - window, T);
  const Regime prev = classify_window(trace, T - 2.0 * window, T - window);
  if (last != prev) {
    throw Error(ErrorCode::Indeterminate, "regime has not settled (" +
                                              std::string(to_string(prev)) + " then " +
                                              std::string(to_string(last)) + ")");
  }
  return last;
}

CsvTable network_trace_table(const NetworkTrace& trace) {
  CsvTable t({"time", "s", "w_mean"});
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    t.add_row({format_double(trace.times[i]), format_double(trace.s[i]),
               format_double(trace.w_mean[i])});
  }
  return t;
}

CsvTable spike_table(const NetworkTrace& trace) {
  CsvTable t({"neuron_id", "t_spike"});
  for (const auto& sp : trace.spikes) {
    t.add_row({std::to_string(sp.neuron), format_double(sp.time)});
  }
  return t;
}

}  // namespace pwsc
