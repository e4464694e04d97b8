#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pwsc/meanfield.hpp"
#include "pwsc/models.hpp"

namespace pwsc {

struct CurvePoint {
  double g = 0.0;
  double I = 0.0;
  std::string label;
};

// I_SN(g) = I_rh - A2 M^2 (g - g*)^2; Error(DomainError) for g < g*.
double saddle_node_current(const ModelParams& p, double g);
std::vector<CurvePoint> saddle_node_curve(const ModelParams& p, double g_lo, double g_hi,
                                          std::size_t n);

// True iff g_bar < g*, the only case with a Hopf curve.
bool has_hopf_regime(const ModelParams& p);

// I_AH(g) = I_rh + A2 [N^2 (g - g_bar)^2 - 2 M N (g - g_bar)(g - g*)].
// Error(NoHopfRegime) without a Hopf regime, Error(DomainError) for g < g_bar
// or where the trace vanishes on e- rather than e+.
double hopf_current(const ModelParams& p, double g);
bool hopf_valid(const ModelParams& p, double g);

// Samples of the Hopf curve on [g_lo, g_hi] (points outside its domain are
// skipped). Points with |I_AH - I_SN| < 1e-8 are labelled "BT candidate".
std::vector<CurvePoint> hopf_curve(const ModelParams& p, double g_lo, double g_hi, std::size_t n);

// Real roots g > max(g*, g_bar) of the Bogdanov-Takens quadratic. With
// tau_w = tau_s the single degenerate root g* = g_bar is returned.
std::vector<double> bt_points(const ModelParams& p);
bool is_codim3(const ModelParams& p);

// Second intersection (g > g*) of the Hopf curve with I = I_rh.
std::optional<double> g_hat(const ModelParams& p);

struct CycleTrackOptions {
  IntegrateOptions integrate{};
  double return_tol = 1e-8;
  double period_rtol = 1e-6;
  double transient_tau_w = 500.0;  // give up after this many tau_w
  std::size_t samples_per_period = 10000;
};

// Follows the reduced flow (reversed for unstable cycles) until returns to the
// section w = eta s converge, then measures one full period. The default hint
// is the origin for stable cycles (e+ doubled when I <= I_rh) and
// e+ (1 + 1e-3) for unstable ones. Throws Error(NoCycleFound).
LimitCycleSummary track_limit_cycle(const ModelParams& p, double g, double I, bool want_stable,
                                    std::optional<MeanFieldState> init_hint = std::nullopt,
                                    const CycleTrackOptions& opts = {});

enum class GrazingKind { Persistence, Destruction };
std::string_view to_string(GrazingKind k);

struct GrazingResult {
  double I = 0.0;
  GrazingKind kind = GrazingKind::Persistence;
  double h_min = 0.0;
  LimitCycleSummary cycle;
};

CycleTrackOptions grazing_track_options();

// Bisects on the sign of min-over-period H of the tracked cycle (unstable by
// default) until |H_min| < 1e-9. Error(BracketInvalid) if the ends do not
// straddle a tangency.
GrazingResult grazing_point(const ModelParams& p, double g, double I_lo, double I_hi,
                            bool stable_cycle = false,
                            const CycleTrackOptions& opts = grazing_track_options());

// Upper end of existence of the stable cycle, to resolution `resolution`.
// Error(BracketInvalid) unless the cycle exists at I_lo and not at I_hi.
double snlc_point(const ModelParams& p, double g, double I_lo, double I_hi,
                  double resolution = 1e-6, const CycleTrackOptions& opts = {});
// The final bisection bracket: the cycle exists at lo and not at hi.
Interval snlc_bracket(const ModelParams& p, double g, double I_lo, double I_hi,
                      double resolution = 1e-6, const CycleTrackOptions& opts = {});

// snlc bracket for g in the Hopf lobe, with the upper end found by doubling
// an offset above I_AH (starting at 0.004).
Interval locate_snlc(const ModelParams& p, double g, double resolution = 1e-6,
                     const CycleTrackOptions& opts = {});

// Probes I_fold and then I_fold - 10^-j (I_fold - I_ah), j = 1..8, for a
// tracked unstable cycle with H_min < 0, giving the upper end of a grazing
// bracket. Error(BracketInvalid) if none is found.
double nonsmooth_unstable_end(const ModelParams& p, double g, double I_ah, double I_fold,
                              const CycleTrackOptions& opts = grazing_track_options());

// Nontrivial solution s != s0 of (1 - k s0)(s/s0)^(gamma-1) = 1 - k s with
// k = g v*'(0) / (2 (e_r - v*(0))), or nothing (always nothing if gamma > 1).
std::optional<double> homoclinic_return(const ModelParams& p, double g, double s0);

// Manifold point at I = I_rh and abscissa s, in the weak-coupling form.
MeanFieldState manifold_point_rheobase(const ModelParams& p, double g, double s);

struct TangencySlopes {
  double slope_equilibria = 0.0;  // eta
  double slope_manifold = 0.0;    // g (e_r - v*(0))
};
TangencySlopes tangency_check(const ModelParams& p);

struct LabeledPoint {
  std::string label;
  double g = 0.0;
  double I = 0.0;
};

struct Codim2Options {
  bool locate_global = true;
  double g_max = 4.0;
  double g_resolution = 1e-4;
  CycleTrackOptions track = grazing_track_options();
};

// Global codim-2 point: the g > g_hat at which the unstable cycle at
// I = I_rh touches the manifold.
std::optional<double> global_codim2_g(const ModelParams& p, const Codim2Options& opts = {});

struct Codim2Result {
  std::vector<LabeledPoint> points;
  std::optional<LabeledPoint> codim3;
};

Codim2Result codim2_points(const ModelParams& p, const Codim2Options& opts = {});

struct DiagramOptions {
  std::size_t curve_points = 200;
  std::size_t lobe_points = 6;  // g samples for grazing and snlc curves
  Codim2Options codim2{};
  unsigned threads = 0;
};

struct BifurcationDiagram {
  std::vector<CurvePoint> sn_curve;
  std::vector<CurvePoint> hopf_curve;
  std::vector<CurvePoint> grazing_curve;
  std::vector<CurvePoint> snlc_curve;
  std::vector<CurvePoint> beb_line;  // segment endpoints on I = I_rh, labelled by type
  std::vector<LabeledPoint> codim2;
  std::optional<LabeledPoint> codim3;
  std::map<std::string, std::vector<std::string>> failures;  // curve -> messages
};

// g_grid gives the sampled range; an empty grid yields empty curves but the
// codim-2/3 points are still computed.
BifurcationDiagram assemble_diagram(const ModelParams& p, const std::vector<double>& g_grid,
                                    const DiagramOptions& opts = {});

// File name -> contents: sn.csv, hopf.csv, grazing.csv, snlc.csv and
// diagram.json (codim-2/3 points, BEB segments, per-curve failures).
std::map<std::string, std::string> diagram_files(const ModelParams& p,
                                                 const BifurcationDiagram& d);

}  // namespace pwsc
