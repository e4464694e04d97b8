#include "commands.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "pwsc/bifurcation.hpp"
#include "pwsc/csv.hpp"
#include "pwsc/equilibria.hpp"
#include "pwsc/error.hpp"
#include "pwsc/meanfield.hpp"
#include "pwsc/models.hpp"
#include "pwsc/netsim.hpp"
#include "pwsc/numeric.hpp"
#include "pwsc/params_io.hpp"

namespace pwsc::cli {

namespace {

namespace fs = std::filesystem;

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct Global {
  std::string model = "izhikevich";
  std::string out = ".";
  std::uint64_t seed = 1;
  unsigned threads = 0;
  double tol = 1e-10;
  bool tol_given = false;
  std::vector<std::string> overrides;
  double g = kUnset;
  double I = kUnset;
};

// Everything a command produces; nothing touches the disk until the command
// has returned.
struct Output {
  std::map<std::string, std::string> files;
  std::ostringstream summary;
  std::ostringstream warnings;
};

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorCode::ConfigError, msg);
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

ModelParams load_model(const Global& gl) {
  ModelParams p;
  const fs::path path(gl.model);
  if (fs::exists(path)) {
    p = load_params(path);
  } else if (!path.has_extension() && fs::exists(preset_path(gl.model))) {
    p = load_preset(gl.model);
  } else {
    config_error("model file '" + gl.model + "' does not exist and is not a bundled preset");
  }
  for (const auto& kv : gl.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) config_error("--set expects key=value, got '" + kv + "'");
    set_param(p, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!std::isnan(gl.g)) p.g = gl.g;
  if (!std::isnan(gl.I)) p.I = gl.I;
  p.validate();
  derive(p);
  return p;
}

void require(bool ok, const std::string& msg) {
  if (!ok) config_error(msg);
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n == 1) return {a};
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

CsvTable trajectory_table(const Trajectory& tr, const std::vector<double>* R = nullptr) {
  std::vector<std::string> header = {"time", "s", "w"};
  if (R) header.push_back("R");
  CsvTable t(header);
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    std::vector<std::string> row = {format_double(tr.times[i]), format_double(tr.states[i].s),
                                    format_double(tr.states[i].w)};
    if (R) row.push_back(format_double((*R)[i]));
    t.add_row(std::move(row));
  }
  return t;
}

CsvTable crossings_table(const Trajectory& tr) {
  CsvTable t({"time", "direction"});
  for (const auto& c : tr.crossings) t.add_row({format_double(c.time), std::to_string(c.direction)});
  return t;
}

CsvTable ramp_table(const NetworkTrace& tr) {
  CsvTable t({"time", "I", "s", "w_mean"});
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    t.add_row({format_double(tr.times[i]), format_double(tr.current[i]), format_double(tr.s[i]),
               format_double(tr.w_mean[i])});
  }
  return t;
}

CsvTable curve_table(const std::vector<CurvePoint>& pts) {
  CsvTable t({"g", "I", "label"});
  for (const auto& pt : pts) t.add_row({format_double(pt.g), format_double(pt.I), pt.label});
  return t;
}

std::string describe(const Attractor& a) {
  std::string s = "attractor=" + std::string(to_string(a.kind));
  if (a.kind == AttractorKind::Equilibrium) {
    s += " s=" + num(a.point.s) + " w=" + num(a.point.w);
  } else if (a.kind == AttractorKind::LimitCycle) {
    s += " period=" + num(a.cycle.period) + " amplitude_w=" + num(a.cycle.amplitude_w);
  }
  return s;
}

std::optional<Attractor> try_classify(const ModelParams& p, const Trajectory& tr) {
  try {
    return classify_attractor(p, tr);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Indeterminate) return std::nullopt;
    throw;
  }
}

std::string limit_cycle_header() {
  return "g,I,stable,amplitude_w,period,h_min,nonsmooth,section_s,section_w,crossings_per_period";
}

std::vector<std::string> limit_cycle_row(double g, double I, const LimitCycleSummary& c) {
  return {format_double(g),           format_double(I),
          c.stable ? "1" : "0",       format_double(c.amplitude_w),
          format_double(c.period),    format_double(c.h_min),
          c.nonsmooth ? "1" : "0",    format_double(c.section_point.s),
          format_double(c.section_point.w), std::to_string(c.crossings_per_period)};
}

CsvTable limit_cycle_table() {
  std::vector<std::string> header;
  std::stringstream ss(limit_cycle_header());
  for (std::string cell; std::getline(ss, cell, ',');) header.push_back(cell);
  return CsvTable(header);
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  std::size_t N = 1000;
  double duration = 3000.0;
  double dt = 0.01;
  double record = 0.1;
  double window = 0.0;
  double mf_duration = -1.0;
  bool slow = false;
};

void simulate(const ModelParams& p, const Global& gl, const SimulateOpts& o, Output& out) {
  require(o.N >= 1, "--N must be >= 1");
  require(o.duration >= 0.0, "--duration must be >= 0");
  require(o.dt > 0.0, "--dt must be > 0");
  require(o.record > 0.0, "--record-interval must be > 0");
  require(o.window >= 0.0, "--window must be >= 0");

  NetworkOptions no;
  no.N = o.N;
  no.duration = o.duration;
  no.dt = o.dt;
  no.seed = gl.seed;
  no.record_interval = o.record;
  const auto trace = o.slow ? simulate_slow_network(p, no) : simulate_network(p, no);
  out.files["network.csv"] = network_trace_table(trace).str();
  out.files["spikes.csv"] = spike_table(trace).str();

  std::string regime = "Indeterminate";
  if (o.duration > 0.0) {
    try {
      regime = std::string(to_string(detect_regime(trace, o.window > 0.0 ? o.window : o.duration / 4.0)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Indeterminate) throw;
    }
  }
  std::string line = "regime=" + regime;

  double mf_duration = o.mf_duration;
  if (mf_duration < 0.0) {
    mf_duration = o.duration == 0.0 ? 0.0
                                    : std::max(o.duration, default_classification_duration(p));
  }
  IntegrateOptions io;
  io.tol = gl.tol;
  io.sample_interval = o.record;
  for (auto [sys, name] : {std::pair{MeanFieldSystem::FullMF, "full"},
                           std::pair{MeanFieldSystem::ReducedMF, "reduced"}}) {
    const auto tr = integrate(sys, p, {0.0, 0.0}, mf_duration, io);
    out.files[std::string("meanfield_") + name + ".csv"] = trajectory_table(tr).str();
    std::string kind = "Indeterminate";
    if (mf_duration > 0.0) {
      if (auto a = try_classify(p, tr)) kind = std::string(to_string(a->kind));
    }
    line += std::string(" meanfield_") + name + "=" + kind;
  }
  out.summary << line << "\n";
  out.files["summary.txt"] = line + "\n";
}

// --------------------------------------------------------------- meanfield

struct MeanfieldOpts {
  std::string system = "reduced";
  double s0 = 0.0;
  double w0 = 0.0;
  double duration = -1.0;
  bool reverse = false;
  double sample = 0.1;
  double epsilon = 1e-4;
  double R0 = -1.0;
};

void meanfield(const ModelParams& p, const Global& gl, const MeanfieldOpts& o, Output& out) {
  require(o.system == "reduced" || o.system == "full" || o.system == "embedded",
          "--system must be reduced, full or embedded");
  require(o.s0 >= 0.0 && o.w0 >= 0.0, "initial state must lie in the closed positive quadrant");
  require(o.sample >= 0.0, "--sample must be >= 0");
  require(o.epsilon > 0.0, "--epsilon must be > 0");
  require(!(o.system == "embedded" && o.reverse), "--reverse is not available for the embedded system");
  const double duration = o.duration < 0.0 ? default_classification_duration(p) : o.duration;

  Trajectory tr;
  if (o.system == "embedded") {
    EmbeddedState init{o.s0, o.w0, o.R0, o.epsilon};
    if (o.R0 < 0.0) init.R = std::max(firing_rate_reduced(p, o.s0, o.w0), 1e-8);
    EmbeddedOptions eo;
    eo.tol = gl.tol;
    eo.sample_interval = o.sample;
    const auto et = integrate_embedded(p, init, duration, eo);
    tr = et.projected;
    out.files["meanfield.csv"] = trajectory_table(tr, &et.R).str();
  } else {
    IntegrateOptions io;
    io.tol = gl.tol;
    io.sample_interval = o.sample;
    io.reverse_time = o.reverse;
    const auto sys = o.system == "full" ? MeanFieldSystem::FullMF : MeanFieldSystem::ReducedMF;
    tr = integrate(sys, p, {o.s0, o.w0}, duration, io);
    out.files["meanfield.csv"] = trajectory_table(tr).str();
  }
  out.files["crossings.csv"] = crossings_table(tr).str();
  std::string line = "crossings=" + std::to_string(tr.crossings.size());
  if (o.reverse) {
    line += " attractor=n/a";
  } else if (auto a = try_classify(p, tr)) {
    line += " " + describe(*a);
  } else {
    line += " attractor=Indeterminate";
  }
  out.summary << line << "\n";
}

// -------------------------------------------------------------- equilibria

struct Range {
  double lo = kUnset;
  double hi = kUnset;
  std::size_t steps = 1;

  std::vector<double> values(double fallback, const std::string& name) const {
    const double a = std::isnan(lo) ? fallback : lo;
    const double b = std::isnan(hi) ? a : hi;
    require(steps >= 1, "--" + name + "-steps must be >= 1");
    require(b >= a, "--" + name + " range is empty (max < min)");
    return linspace(a, b, steps);
  }
};

struct EquilibriaOpts {
  std::string mode = "weak";
  Range g;
  Range I;
};

void equilibria(const ModelParams& p, const Global&, const EquilibriaOpts& o, Output& out) {
  EquilibriumMode mode = EquilibriumMode::WeakCoupling;
  if (o.mode == "full") {
    mode = EquilibriumMode::FullIzhikevich;
    if (p.kind != ModelKind::Izhikevich) config_error("--mode full needs the Izhikevich model");
  } else if (o.mode == "numeric") {
    mode = EquilibriumMode::FullNumeric;
  } else {
    require(o.mode == "weak", "--mode must be weak, full or numeric");
  }
  const auto gs = o.g.values(p.g, "g");
  const auto Is = o.I.values(p.I, "I");
  for (double g : gs) {
    ModelParams q = p;
    q.g = g;
    q.validate();
  }

  auto table = equilibria_table();
  std::size_t real = 0;
  for (double g : gs) {
    for (double I : Is) {
      ModelParams q = p;
      q.g = g;
      q.I = I;
      std::vector<Equilibrium> eqs = {trivial_equilibrium(q)};
      for (auto& e : nontrivial_equilibria(q, mode)) eqs.push_back(e);
      for (const auto& e : eqs) real += e.reality == Reality::Real ? 1 : 0;
      append_equilibria(table, q, eqs);
    }
  }
  out.files["equilibria.csv"] = table.str();
  out.summary << "grid_points=" << gs.size() * Is.size() << " rows=" << table.rows()
              << " real=" << real << "\n";
}

// ------------------------------------------------------------------ curves

struct CurvesOpts {
  double g_min = 0.0;
  double g_max = 4.0;
  std::size_t points = 200;
};

void curves(const ModelParams& p, const Global&, const CurvesOpts& o, Output& out) {
  require(o.g_max > o.g_min, "--g-max must exceed --g-min");
  require(o.g_min >= 0.0, "--g-min must be >= 0");
  require(o.points >= 2, "--points must be >= 2");
  const auto d = derive(p).params;
  std::vector<CurvePoint> sn, hopf;
  if (o.g_max >= d.g_star) sn = saddle_node_curve(p, std::max(o.g_min, d.g_star), o.g_max, o.points);
  if (has_hopf_regime(p) && o.g_max > d.g_bar) {
    hopf = hopf_curve(p, std::max(o.g_min, d.g_bar), o.g_max, o.points);
  }
  CsvTable bt({"g", "I"});
  for (double g : bt_points(p)) {
    if (g >= o.g_min && g <= o.g_max) {
      bt.add_row({format_double(g), format_double(saddle_node_current(p, g))});
    }
  }
  out.files["sn.csv"] = curve_table(sn).str();
  out.files["hopf.csv"] = curve_table(hopf).str();
  out.files["bt.csv"] = bt.str();
  out.summary << "I_rh=" << num(d.I_rh) << " g_star=" << num(d.g_star) << " g_bar=" << num(d.g_bar);
  if (auto gh = has_hopf_regime(p) ? g_hat(p) : std::nullopt) out.summary << " g_hat=" << num(*gh);
  out.summary << " bt_points=" << bt.rows() << " codim3=" << (is_codim3(p) ? 1 : 0) << "\n";
}

// ----------------------------------------------------------------- diagram

struct DiagramCliOpts {
  double g_min = 0.0;
  double g_max = 4.0;
  std::size_t points = 200;
  std::size_t lobe_points = 6;
  bool no_global = false;
};

void diagram(const ModelParams& p, const Global& gl, const DiagramCliOpts& o, Output& out) {
  require(o.g_max > o.g_min, "--g-max must exceed --g-min");
  require(o.g_min >= 0.0, "--g-min must be >= 0");
  require(o.points >= 2, "--points must be >= 2");
  DiagramOptions opts;
  opts.curve_points = o.points;
  opts.lobe_points = o.lobe_points;
  opts.threads = gl.threads;
  opts.codim2.locate_global = !o.no_global;
  opts.codim2.g_max = o.g_max;
  if (gl.tol_given) opts.codim2.track.integrate.tol = gl.tol;
  const auto d = assemble_diagram(p, linspace(o.g_min, o.g_max, o.points), opts);
  out.files = diagram_files(p, d);
  out.summary << "sn=" << d.sn_curve.size() << " hopf=" << d.hopf_curve.size()
              << " grazing=" << d.grazing_curve.size() << " snlc=" << d.snlc_curve.size()
              << " codim2=" << d.codim2.size() << " codim3=" << (d.codim3 ? 1 : 0) << "\n";
  for (const auto& pt : d.codim2) {
    out.summary << "codim2 " << pt.label << " g=" << num(pt.g) << " I=" << num(pt.I) << "\n";
  }
  if (d.codim3) out.summary << "codim3 g=" << num(d.codim3->g) << " I=" << num(d.codim3->I) << "\n";
  for (const auto& [curve, msgs] : d.failures) {
    for (const auto& m : msgs) out.warnings << "warning: " << curve << ": " << m << "\n";
  }
}

// ---------------------------------------------------------------- ramps

struct RampOpts {
  std::size_t N = 100;
  double I_start = 0.0;
  double I_end = 0.2;
  double ramp_tau_w = 50.0;
  double ramp_rate = kUnset;
  double duration = kUnset;  // fixed-current runs (ramp rate 0)
  double dt = 0.01;
  double record = 1.0;
  double settle_tau_w = 10.0;
  std::size_t bins = 200;
  double mismatch_tol = 5e-3;
  bool fast = false;
};

void check_ramp(const RampOpts& o) {
  require(o.N >= 1, "--N must be >= 1");
  require(o.I_end != o.I_start, "--I-start and --I-end must differ");
  require(o.ramp_tau_w > 0.0, "--ramp-tau-w must be > 0");
  require(std::isnan(o.ramp_rate) || o.ramp_rate >= 0.0, "--ramp-rate must be >= 0");
  require(std::isnan(o.duration) || o.duration >= 0.0, "--duration must be >= 0");
  require(o.dt > 0.0, "--dt must be > 0");
  require(o.record > 0.0, "--record-interval must be > 0");
  require(o.settle_tau_w >= 0.0, "--settle-tau-w must be >= 0");
  require(o.bins >= 1, "--bins must be >= 1");
  require(o.mismatch_tol >= 0.0, "--mismatch-tol must be >= 0");
}

struct RampRun {
  RampResult ramp;
  HysteresisAnalysis analysis;
};

RampRun run_ramp(const ModelParams& p, const Global& gl, const RampOpts& o, std::ostream& warn) {
  const double span = std::abs(o.I_end - o.I_start);
  const double rate = std::isnan(o.ramp_rate) ? span / (o.ramp_tau_w * p.tau_w) : o.ramp_rate;
  if (rate > 0.0 && span / rate < 50.0 * p.tau_w) {
    warn << "warning: ramp lasts " << num(span / rate / p.tau_w)
         << " tau_w; at least 50 tau_w is recommended\n";
  }
  NetworkOptions no;
  no.N = o.N;
  no.dt = o.dt;
  no.seed = gl.seed;
  no.record_interval = o.record;
  if (rate == 0.0) no.duration = std::isnan(o.duration) ? 50.0 * p.tau_w : o.duration;
  RampRun r;
  r.ramp = ramp_protocol(p, o.I_start, o.I_end, rate, no, !o.fast, o.settle_tau_w * p.tau_w);
  r.analysis = analyze_hysteresis(r.ramp, o.bins, o.mismatch_tol);
  return r;
}

std::string mismatch_text(const HysteresisAnalysis& h) {
  if (!h.mismatch) return "mismatch=none width=" + num(h.mismatch_width);
  return "mismatch=[" + num(h.mismatch->lo) + "," + num(h.mismatch->hi) +
         "] width=" + num(h.mismatch_width);
}

void append_bins(CsvTable& t, const std::vector<std::string>& prefix, const HysteresisAnalysis& h) {
  for (std::size_t b = 0; b < h.I_centers.size(); ++b) {
    auto row = prefix;
    for (double x : {h.I_centers[b], h.rate_up[b], h.rate_down[b], h.w_up[b], h.w_down[b]}) {
      row.push_back(format_double(x));
    }
    t.add_row(std::move(row));
  }
}

void hysteresis(const ModelParams& p, const Global& gl, const RampOpts& o, Output& out) {
  check_ramp(o);
  const auto r = run_ramp(p, gl, o, out.warnings);
  CsvTable bins({"I", "rate_up", "rate_down", "w_up", "w_down"});
  append_bins(bins, {}, r.analysis);
  out.files["hysteresis.csv"] = bins.str();
  out.files["ascending.csv"] = ramp_table(r.ramp.ascending).str();
  out.files["descending.csv"] = ramp_table(r.ramp.descending).str();
  out.summary << "g=" << num(p.g) << " " << mismatch_text(r.analysis) << "\n";
}

// ---------------------------------------------------------------- beb-scan

struct BebScanOpts {
  std::vector<double> g;
  double I_min = kUnset;
  double I_max = kUnset;
  std::size_t I_points = 101;
  std::vector<double> cycle_offsets = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
  bool hysteresis = false;
  RampOpts ramp;
};

void beb_scan(const ModelParams& p, const Global& gl, const BebScanOpts& o, Output& out) {
  const auto d = derive(p).params;
  std::vector<double> gs = o.g;
  if (gs.empty()) gs = {0.02, 1.0, d.g_star + 0.2, d.g_star + 2.0};
  for (double g : gs) require(g >= 0.0, "--g values must be >= 0");
  const double I_min = std::isnan(o.I_min) ? d.I_rh - 0.05 : o.I_min;
  const double I_max = std::isnan(o.I_max) ? d.I_rh + 0.05 : o.I_max;
  require(I_max > I_min, "--I-max must exceed --I-min");
  require(o.I_points >= 2, "--I-points must be >= 2");
  for (double off : o.cycle_offsets) require(off > 0.0, "--cycle-offsets must be > 0");
  if (o.hysteresis) check_ramp(o.ramp);

  // Only the SNIC / non-smooth fold split needs the threshold.
  std::optional<double> threshold;
  std::string threshold_source = "none";
  const bool need_threshold =
      has_hopf_regime(p) && std::any_of(gs.begin(), gs.end(), [&](double g) { return g >= d.g_star; });
  if (need_threshold) {
    Codim2Options co;
    if (gl.tol_given) co.track.integrate.tol = gl.tol;
    co.g_max = std::max(co.g_max, *std::max_element(gs.begin(), gs.end()));
    threshold = global_codim2_g(p, co);
    threshold_source = "global";
    if (!threshold) {
      threshold = g_hat(p);
      threshold_source = "g_hat";
      out.warnings << "warning: global codim-2 point not found; using g_hat as the SNIC threshold\n";
    }
  }

  CsvTable types({"g", "type"});
  for (double g : gs) {
    types.add_row({format_double(g), std::string(to_string(beb_classify(p, g, threshold)))});
  }

  auto branches = equilibria_table();
  for (double g : gs) {
    for (double I : linspace(I_min, I_max, o.I_points)) {
      ModelParams q = p;
      q.g = g;
      q.I = I;
      std::vector<Equilibrium> eqs = {trivial_equilibrium(q)};
      for (auto& e : nontrivial_equilibria(q, EquilibriumMode::WeakCoupling)) eqs.push_back(e);
      append_equilibria(branches, q, eqs);
    }
  }

  struct Job {
    double g, offset;
  };
  std::vector<Job> jobs;
  for (double g : gs) {
    for (double off : o.cycle_offsets) jobs.push_back({g, off});
  }
  std::vector<std::vector<std::string>> rows(jobs.size());
  parallel_for(jobs.size(), gl.threads, [&](std::size_t i) {
    const double I = d.I_rh + jobs[i].offset;
    std::vector<std::string> row = {format_double(jobs[i].g), format_double(I),
                                    format_double(jobs[i].offset)};
    try {
      CycleTrackOptions opts;
      if (gl.tol_given) opts.integrate.tol = gl.tol;
      const auto c = track_limit_cycle(p, jobs[i].g, I, true, std::nullopt, opts);
      for (double x : {c.amplitude_w, c.period, c.h_min}) row.push_back(format_double(x));
      row.push_back("ok");
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoCycleFound) throw;
      row.insert(row.end(), {"", "", "", "NoCycleFound"});
    }
    rows[i] = std::move(row);
  });
  CsvTable cycles({"g", "I", "offset", "amplitude_w", "period", "h_min", "status"});
  for (auto& row : rows) cycles.add_row(std::move(row));

  out.files["beb.csv"] = types.str();
  out.files["branches.csv"] = branches.str();
  out.files["cycles.csv"] = cycles.str();
  if (threshold) {
    out.summary << "threshold=" << num(*threshold) << " source=" << threshold_source << "\n";
  }
  for (std::size_t i = 0; i < gs.size(); ++i) {
    out.summary << "g=" << num(gs[i]) << " type=" << to_string(beb_classify(p, gs[i], threshold))
                << "\n";
  }

  if (o.hysteresis) {
    std::vector<RampRun> runs(gs.size());
    parallel_for(gs.size(), gl.threads, [&](std::size_t i) {
      ModelParams q = p;
      q.g = gs[i];
      std::ostringstream ignored;
      runs[i] = run_ramp(q, gl, o.ramp, ignored);
    });
    CsvTable bins({"g", "I", "rate_up", "rate_down", "w_up", "w_down"});
    CsvTable summary({"g", "mismatch_lo", "mismatch_hi", "width"});
    for (std::size_t i = 0; i < gs.size(); ++i) {
      const auto& h = runs[i].analysis;
      append_bins(bins, {format_double(gs[i])}, h);
      summary.add_row({format_double(gs[i]), h.mismatch ? format_double(h.mismatch->lo) : "",
                       h.mismatch ? format_double(h.mismatch->hi) : "",
                       format_double(h.mismatch_width)});
      out.summary << "hysteresis g=" << num(gs[i]) << " " << mismatch_text(h) << "\n";
    }
    out.files["hysteresis.csv"] = bins.str();
    out.files["hysteresis_summary.csv"] = summary.str();
  }
}

// ------------------------------------------------------------- limit-cycle

struct LimitCycleOpts {
  bool unstable = false;
  double s0 = kUnset;
  double w0 = kUnset;
  double transient_tau_w = 500.0;
  double return_tol = 1e-8;
  std::size_t orbit_samples = 1000;
};

void limit_cycle(const ModelParams& p, const Global& gl, const LimitCycleOpts& o, Output& out) {
  require(std::isnan(o.s0) == std::isnan(o.w0), "--s0 and --w0 must be given together");
  require(std::isnan(o.s0) || (o.s0 >= 0.0 && o.w0 >= 0.0), "hint must lie in the positive quadrant");
  require(o.transient_tau_w > 0.0, "--transient-tau-w must be > 0");
  require(o.return_tol > 0.0, "--return-tol must be > 0");
  require(o.orbit_samples >= 2, "--orbit-samples must be >= 2");
  CycleTrackOptions opts;
  opts.integrate.tol = gl.tol;
  opts.transient_tau_w = o.transient_tau_w;
  opts.return_tol = o.return_tol;
  std::optional<MeanFieldState> hint;
  if (!std::isnan(o.s0)) hint = MeanFieldState{o.s0, o.w0};
  const auto c = track_limit_cycle(p, p.g, p.I, !o.unstable, hint, opts);

  auto table = limit_cycle_table();
  table.add_row(limit_cycle_row(p.g, p.I, c));
  out.files["limit_cycle.csv"] = table.str();

  IntegrateOptions io;
  io.tol = gl.tol;
  io.reverse_time = o.unstable;
  io.sample_interval = c.period / static_cast<double>(o.orbit_samples);
  const auto orbit = integrate(MeanFieldSystem::ReducedMF, p, c.section_point, c.period, io);
  out.files["orbit.csv"] = trajectory_table(orbit).str();
  out.summary << (c.stable ? "stable" : "unstable") << " period=" << num(c.period)
              << " amplitude_w=" << num(c.amplitude_w) << " h_min=" << num(c.h_min)
              << " nonsmooth=" << (c.nonsmooth ? 1 : 0) << "\n";
}

// ----------------------------------------------------------------- grazing

struct GrazingOpts {
  double I_lo = kUnset;
  double I_hi = kUnset;
  bool stable = false;
};

void grazing(const ModelParams& p, const Global& gl, const GrazingOpts& o, Output& out) {
  require(std::isnan(o.I_lo) == std::isnan(o.I_hi), "--I-lo and --I-hi must be given together");
  require(std::isnan(o.I_lo) || o.I_hi > o.I_lo, "--I-hi must exceed --I-lo");
  const auto d = derive(p).params;
  auto track = grazing_track_options();
  if (gl.tol_given) track.integrate.tol = gl.tol;

  const double I_ah = hopf_current(p, p.g);
  double lo = o.I_lo;
  double hi = o.I_hi;
  std::optional<Interval> fold;
  if (std::isnan(lo)) {
    fold = locate_snlc(p, p.g, 1e-10);
    hi = o.stable ? fold->lo : nonsmooth_unstable_end(p, p.g, I_ah, fold->lo, track);
    lo = I_ah + 0.05 * (fold->lo - I_ah);
  }
  const auto gz = grazing_point(p, p.g, lo, hi, o.stable, track);
  CsvTable t({"g", "I_rh", "I_AH", "I_graze", "h_min", "kind", "I_snlc"});
  t.add_row({format_double(p.g), format_double(d.I_rh), format_double(I_ah), format_double(gz.I),
             format_double(gz.h_min), std::string(to_string(gz.kind)),
             fold ? format_double(0.5 * (fold->lo + fold->hi)) : ""});
  out.files["grazing.csv"] = t.str();
  out.summary << "I_rh=" << num(d.I_rh) << " I_AH=" << num(I_ah) << " I_graze=" << num(gz.I);
  if (fold) out.summary << " I_snlc=" << num(0.5 * (fold->lo + fold->hi));
  out.summary << " h_min=" << num(gz.h_min) << " kind=" << to_string(gz.kind) << "\n";
}

void write_outputs(const fs::path& dir, const std::map<std::string, std::string>& files) {
  for (const auto& [name, text] : files) write_text_file(dir / name, text);
}

}  // namespace

CliResult run(const std::vector<std::string>& args) {
  CliResult result;
  std::ostringstream out, err;

  CLI::App app{"Mean-field and network experiments for adapting integrate-and-fire populations",
               "pwsc"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Global gl;
  app.add_option("--model", gl.model, "Parameter file (.toml/.json) or preset name")
      ->capture_default_str();
  app.add_option("--out", gl.out, "Output directory")->capture_default_str();
  app.add_option("--seed", gl.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", gl.threads, "Worker threads (0 = hardware)")->capture_default_str();
  auto* tol_opt = app.add_option("--tol", gl.tol, "Integrator tolerance")->capture_default_str();
  app.add_option("--set", gl.overrides, "Parameter override key=value (repeatable)");
  app.add_option("--g", gl.g, "Coupling strength override");
  app.add_option("--I", gl.I, "Applied current override");

  std::function<void(const ModelParams&, Output&)> action;

  SimulateOpts so;
  auto* sim = app.add_subcommand("simulate", "Network run with mean-field comparison");
  sim->add_option("--N", so.N)->capture_default_str();
  sim->add_option("--duration", so.duration)->capture_default_str();
  sim->add_option("--dt", so.dt)->capture_default_str();
  sim->add_option("--record-interval", so.record)->capture_default_str();
  sim->add_option("--window", so.window, "Regime window (0 = duration/4)")->capture_default_str();
  sim->add_option("--mf-duration", so.mf_duration, "Mean-field run length (<0 = automatic)");
  sim->add_flag("--slow", so.slow, "Slave s to mean(w)/eta");
  sim->callback([&] { action = [&](const ModelParams& p, Output& o) { simulate(p, gl, so, o); }; });

  MeanfieldOpts mo;
  auto* mf = app.add_subcommand("meanfield", "Integrate a mean-field system");
  mf->add_option("--system", mo.system, "reduced, full or embedded")->capture_default_str();
  mf->add_option("--s0", mo.s0)->capture_default_str();
  mf->add_option("--w0", mo.w0)->capture_default_str();
  mf->add_option("--duration", mo.duration, "Run length (<0 = 100 tau_w)");
  mf->add_flag("--reverse", mo.reverse, "Integrate in reversed time");
  mf->add_option("--sample", mo.sample, "Sample interval (0 = every step)")->capture_default_str();
  mf->add_option("--epsilon", mo.epsilon, "Embedded system time-scale ratio")->capture_default_str();
  mf->add_option("--R0", mo.R0, "Embedded initial rate (<0 = reduced rate)");
  mf->callback([&] { action = [&](const ModelParams& p, Output& o) { meanfield(p, gl, mo, o); }; });

  EquilibriaOpts eo;
  auto* eq = app.add_subcommand("equilibria", "Equilibria over a (g, I) grid");
  eq->add_option("--mode", eo.mode, "weak, full or numeric")->capture_default_str();
  eq->add_option("--g-min", eo.g.lo);
  eq->add_option("--g-max", eo.g.hi);
  eq->add_option("--g-steps", eo.g.steps)->capture_default_str();
  eq->add_option("--I-min", eo.I.lo);
  eq->add_option("--I-max", eo.I.hi);
  eq->add_option("--I-steps", eo.I.steps)->capture_default_str();
  eq->callback([&] { action = [&](const ModelParams& p, Output& o) { equilibria(p, gl, eo, o); }; });

  CurvesOpts co;
  auto* cu = app.add_subcommand("curves", "Saddle-node and Hopf curves");
  cu->add_option("--g-min", co.g_min)->capture_default_str();
  cu->add_option("--g-max", co.g_max)->capture_default_str();
  cu->add_option("--points", co.points)->capture_default_str();
  cu->callback([&] { action = [&](const ModelParams& p, Output& o) { curves(p, gl, co, o); }; });

  DiagramCliOpts dopt;
  auto* di = app.add_subcommand("diagram", "Two-parameter bifurcation diagram");
  di->add_option("--g-min", dopt.g_min)->capture_default_str();
  di->add_option("--g-max", dopt.g_max)->capture_default_str();
  di->add_option("--points", dopt.points)->capture_default_str();
  di->add_option("--lobe-points", dopt.lobe_points)->capture_default_str();
  di->add_flag("--no-global", dopt.no_global, "Skip the global codim-2 search");
  di->callback([&] { action = [&](const ModelParams& p, Output& o) { diagram(p, gl, dopt, o); }; });

  auto add_ramp = [](CLI::App* sc, RampOpts& r) {
    sc->add_option("--N", r.N)->capture_default_str();
    sc->add_option("--I-start", r.I_start)->capture_default_str();
    sc->add_option("--I-end", r.I_end)->capture_default_str();
    sc->add_option("--ramp-tau-w", r.ramp_tau_w, "Sweep duration in units of tau_w")
        ->capture_default_str();
    sc->add_option("--ramp-rate", r.ramp_rate, "Current change per unit time (overrides)");
    sc->add_option("--duration", r.duration, "Run length when --ramp-rate is 0");
    sc->add_option("--dt", r.dt)->capture_default_str();
    sc->add_option("--record-interval", r.record)->capture_default_str();
    sc->add_option("--settle-tau-w", r.settle_tau_w)->capture_default_str();
    sc->add_option("--bins", r.bins)->capture_default_str();
    sc->add_option("--mismatch-tol", r.mismatch_tol)->capture_default_str();
    sc->add_flag("--fast", r.fast, "Use the network with synaptic dynamics");
  };

  BebScanOpts bo;
  auto* be = app.add_subcommand("beb-scan", "Boundary-equilibrium types and branches near I_rh");
  be->add_option("--gs", bo.g, "Coupling values (default: one per BEB type)")->delimiter(',');
  be->add_option("--I-min", bo.I_min);
  be->add_option("--I-max", bo.I_max);
  be->add_option("--I-points", bo.I_points)->capture_default_str();
  be->add_option("--cycle-offsets", bo.cycle_offsets, "I - I_rh values for cycle tracking")
      ->delimiter(',');
  be->add_flag("--hysteresis", bo.hysteresis, "Also run slow-network current ramps");
  add_ramp(be, bo.ramp);
  be->callback([&] { action = [&](const ModelParams& p, Output& o) { beb_scan(p, gl, bo, o); }; });

  LimitCycleOpts lo;
  auto* lc = app.add_subcommand("limit-cycle", "Track a limit cycle of the reduced system");
  lc->add_flag("--unstable", lo.unstable, "Track the unstable cycle (reversed time)");
  lc->add_option("--s0", lo.s0, "Initial hint s");
  lc->add_option("--w0", lo.w0, "Initial hint w");
  lc->add_option("--transient-tau-w", lo.transient_tau_w)->capture_default_str();
  lc->add_option("--return-tol", lo.return_tol)->capture_default_str();
  lc->add_option("--orbit-samples", lo.orbit_samples)->capture_default_str();
  lc->callback([&] { action = [&](const ModelParams& p, Output& o) { limit_cycle(p, gl, lo, o); }; });

  GrazingOpts go;
  auto* gr = app.add_subcommand("grazing", "Grazing of the Hopf cycle with the manifold");
  gr->add_option("--I-lo", go.I_lo);
  gr->add_option("--I-hi", go.I_hi);
  gr->add_flag("--stable", go.stable, "Track the stable cycle instead");
  gr->callback([&] { action = [&](const ModelParams& p, Output& o) { grazing(p, gl, go, o); }; });

  RampOpts ro;
  auto* hy = app.add_subcommand("hysteresis", "Ascending and descending current ramps");
  add_ramp(hy, ro);
  hy->callback([&] { action = [&](const ModelParams& p, Output& o) { hysteresis(p, gl, ro, o); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    result.exit_code = code == 0 ? kOk : kConfigError;
    result.out = out.str();
    result.err = err.str();
    return result;
  }
  gl.tol_given = tol_opt->count() > 0;

  try {
    if (!(gl.tol > 0.0)) config_error("--tol must be > 0");
    set_default_threads(gl.threads);
    const ModelParams p = load_model(gl);
    Output o;
    action(p, o);
    write_outputs(gl.out, o.files);
    out << o.summary.str();
    err << o.warnings.str();
    result.exit_code = kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    result.exit_code = e.code() == ErrorCode::ConfigError ? kConfigError : kNumericFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    result.exit_code = kNumericFailure;
  }
  result.out = out.str();
  result.err = err.str();
  return result;
}

}  // namespace pwsc::cli
