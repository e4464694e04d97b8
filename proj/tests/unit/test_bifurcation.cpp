#include <gtest/gtest.h>

#include <cmath>
#include <optional>

#include "pwsc/bifurcation.hpp"
#include "pwsc/equilibria.hpp"
#include "pwsc/error.hpp"
#include "pwsc/ode.hpp"
#include "pwsc/params_io.hpp"

using namespace pwsc;

namespace {

ModelParams izh() { return load_preset("izhikevich"); }

ModelParams at(double g, double I) {
  auto p = izh();
  p.g = g;
  p.I = I;
  return p;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::NonConvergence;
}

// Follows the quiescent flow s' = -s/tau_s, w' = -w/tau_w from a manifold
// point (reversed if `reverse`) with DOPRI5 and returns s at the next sign
// change of H, located on the dense output.
// The return map is posed on the quadratic approximation w = g c s (1 - k s)
// of the switching manifold at rheobase, so the oracle uses the same surface.
std::optional<double> quiescent_recrossing(const ModelParams& q, double c, double k,
                                           MeanFieldState x0, bool reverse) {
  const double sign = reverse ? -1.0 : 1.0;
  auto f = [&](const ode::Vec<2>& y, ode::Vec<2>& dy) {
    dy[0] = -sign * y[0] / q.tau_s;
    dy[1] = -sign * y[1] / q.tau_w;
  };
  auto H = [&](const ode::Vec<2>& y) { return q.g * c * y[0] * (1.0 - k * y[0]) - y[1]; };
  ode::Vec<2> y{x0.s, x0.w}, k1;
  f(y, k1);
  double t = 0.0, h = 1e-3;
  int side = 0;
  ode::Step<2> st;
  for (int n = 0; n < 1000000 && t < 1e5; ++n) {
    const double err = ode::dopri5_step<2>(f, t, y, k1, h, 1e-13, 1e-15, st);
    if (err > 1.0) {
      h *= ode::step_factor(err);
      continue;
    }
    const double H1 = H(st.y1);
    if (side != 0 && side * H1 < 0.0) {
      double a = st.t0, b = st.t0 + st.h;
      for (int i = 0; i < 200 && b - a > 1e-15 * b; ++i) {
        const double m = 0.5 * (a + b);
        (side * H(st.at(m)) < 0.0 ? b : a) = m;
      }
      return st.at(0.5 * (a + b))[0];
    }
    if (side == 0 && std::abs(H1) > 1e-13) side = H1 > 0.0 ? 1 : -1;
    t += st.h;
    y = st.y1;
    k1 = st.k7;
    h *= ode::step_factor(err);
  }
  return std::nullopt;
}

}  // namespace

TEST(Bifurcation, SaddleNodeCurve) {
  auto p = izh();
  const auto d = derive(p).params;
  EXPECT_NEAR(saddle_node_current(p, d.g_star), d.I_rh, 1e-15);
  for (const auto& pt : saddle_node_curve(p, d.g_star, 6.0, 200)) {
    if (pt.g > d.g_star) EXPECT_LT(pt.I, d.I_rh) << pt.g;
    EXPECT_LE(pt.I, d.I_rh + 1e-12);
  }
  EXPECT_EQ(code_of([&] { saddle_node_current(p, 1.0); }), ErrorCode::DomainError);
  EXPECT_EQ(code_of([&] { saddle_node_curve(p, 0.0, 3.0, 10); }), ErrorCode::DomainError);
}

TEST(Bifurcation, EquilibriaCoalesceAcrossSaddleNode) {
  auto p = izh();
  const double g = derive(p).params.g_star + 1.0;
  const double I_sn = saddle_node_current(p, g);
  EXPECT_EQ(nontrivial_equilibria(at(g, I_sn + 1e-4), EquilibriumMode::FullNumeric).size(), 2u);
  EXPECT_EQ(nontrivial_equilibria(at(g, I_sn - 1e-4), EquilibriumMode::FullNumeric).size(), 0u);
  auto near = nontrivial_equilibria(at(g, I_sn + 1e-12), EquilibriumMode::WeakCoupling);
  ASSERT_FALSE(near.empty());
  EXPECT_NEAR(near.front().point.s, near.back().point.s, 1e-4);
}

TEST(Bifurcation, HopfCurve) {
  auto p = izh();
  const auto d = derive(p).params;
  EXPECT_TRUE(has_hopf_regime(p));
  EXPECT_NEAR(hopf_current(p, d.g_bar), d.I_rh, 1e-15);
  for (int i = 1; i < 50; ++i) {
    const double g = d.g_bar + (d.g_star - d.g_bar) * i / 50.0;
    EXPECT_GT(hopf_current(p, g), d.I_rh);
  }
  EXPECT_EQ(code_of([&] { hopf_current(p, 0.5 * d.g_bar); }), ErrorCode::DomainError);
  auto q = p;
  q.tau_w = 1.0;
  EXPECT_FALSE(has_hopf_regime(q));
  EXPECT_EQ(code_of([&] { hopf_current(q, 1.0); }), ErrorCode::NoHopfRegime);
  EXPECT_EQ(code_of([&] { hopf_curve(q, 0.0, 4.0, 10); }), ErrorCode::NoHopfRegime);
}

TEST(Bifurcation, CurvesAreEigenvalueConsistent) {
  auto p = izh();
  const auto d = derive(p).params;
  const double gh = *g_hat(p);
  for (int i = 1; i <= 20; ++i) {
    const double g = d.g_bar + (gh + 0.5 - d.g_bar) * i / 21.0;
    auto eqs = nontrivial_equilibria(at(g, hopf_current(p, g)), EquilibriumMode::WeakCoupling);
    ASSERT_FALSE(eqs.empty());
    EXPECT_LT(std::abs(eqs.front().trace), 1e-8) << g;
    EXPECT_GT(eqs.front().det, 0.0) << g;
  }
  for (int i = 1; i <= 20; ++i) {
    const double g = d.g_star + 4.0 * i / 20.0;
    // The double root at the fold, s = M (g - g*).
    const auto dg = derive(at(g, 0.0));
    const double s = dg.coeffs.M(g) * (g - d.g_star);
    auto J = jacobian(at(g, saddle_node_current(p, g)), {s, d.eta * s});
    EXPECT_LT(std::abs(J[0][0] * J[1][1] - J[0][1] * J[1][0]), 1e-8) << g;
  }
}

TEST(Bifurcation, PointsOnCurvesShrinkToZeroAtTheirBebs) {
  auto p = izh();
  const auto d = derive(p);
  double prev_sn = INFINITY, prev_ah = INFINITY;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-6}) {
    const double g1 = d.params.g_star + eps;
    const double s_sn = d.coeffs.M(g1) * (g1 - d.params.g_star);
    auto sn = nontrivial_equilibria(at(g1, saddle_node_current(p, g1) + 1e-15),
                                    EquilibriumMode::WeakCoupling);
    ASSERT_FALSE(sn.empty());
    EXPECT_NEAR(sn.front().point.s, s_sn, 1e-6);
    EXPECT_LT(s_sn, prev_sn);
    prev_sn = s_sn;

    const double g2 = d.params.g_bar + eps * d.params.g_bar;
    const double s_ah = d.coeffs.N(g2) * (g2 - d.params.g_bar);
    auto ah = nontrivial_equilibria(at(g2, hopf_current(p, g2)), EquilibriumMode::WeakCoupling);
    ASSERT_FALSE(ah.empty());
    EXPECT_NEAR(ah.front().point.s, s_ah, 1e-10);
    EXPECT_LT(s_ah, prev_ah);
    prev_ah = s_ah;
  }
  EXPECT_LT(prev_sn, 1e-5);
  EXPECT_LT(prev_ah, 1e-7);
}

TEST(Bifurcation, BogdanovTakensPoints) {
  auto p = izh();
  EXPECT_TRUE(bt_points(p).empty());

  auto q = p;
  q.tau_w = q.tau_s;
  const auto dq = derive(q).params;
  auto bt = bt_points(q);
  ASSERT_EQ(bt.size(), 1u);
  EXPECT_NEAR(bt[0], dq.g_star, 1e-15);
  EXPECT_NEAR(dq.g_star, dq.g_bar, 1e-12);
  EXPECT_TRUE(is_codim3(q));

  auto r = p;
  r.tau_w = 10.0;
  auto two = bt_points(r);
  ASSERT_EQ(two.size(), 2u);
  for (double g : two) {
    EXPECT_NEAR(hopf_current(r, g), saddle_node_current(r, g), 1e-8);
  }
  int labelled = 0;
  for (const auto& pt : hopf_curve(r, 0.0, 12.0, 20)) labelled += pt.label == "BT candidate";
  EXPECT_GE(labelled, 2);

  auto s = p;
  s.tau_w = 1.0;
  EXPECT_TRUE(bt_points(s).empty());
}

TEST(Bifurcation, GHat) {
  auto p = izh();
  const auto d = derive(p).params;
  auto gh = g_hat(p);
  ASSERT_TRUE(gh.has_value());
  EXPECT_GT(*gh, d.g_star);
  EXPECT_LT(std::abs(hopf_current(p, *gh) - d.I_rh), 1e-10);
  EXPECT_NEAR(*gh, 3.373374, 1e-6);
  auto q = p;
  q.tau_w = 1.0;
  EXPECT_FALSE(g_hat(q).has_value());
}

TEST(Bifurcation, TangencySlopes) {
  auto p = at(1.0, 0.0);
  auto t = tangency_check(p);
  EXPECT_NEAR(t.slope_equilibria, 1.18125, 1e-12);
  EXPECT_NEAR(t.slope_manifold, 0.69, 1e-12);
  p.g = 0.0;
  EXPECT_EQ(tangency_check(p).slope_manifold, 0.0);
  p.g = derive(p).params.g_star;
  t = tangency_check(p);
  EXPECT_NEAR(t.slope_equilibria, t.slope_manifold, 1e-14);
}

TEST(Bifurcation, Codim2Points) {
  auto p = izh();
  Codim2Options o;
  o.locate_global = false;
  auto c = codim2_points(p, o);
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_EQ(c.points[0].label, "saddle-node BEB");
  EXPECT_NEAR(c.points[0].g, 1.71196, 1e-5);
  EXPECT_NEAR(c.points[0].I, 0.0961, 1e-15);
  EXPECT_EQ(c.points[1].label, "Hopf BEB");
  EXPECT_NEAR(c.points[1].g, 0.034239, 1e-6);
  EXPECT_FALSE(c.codim3.has_value());

  auto q = p;
  q.tau_w = q.tau_s;
  auto c3 = codim2_points(q, o);
  ASSERT_TRUE(c3.codim3.has_value());
  EXPECT_NEAR(c3.codim3->g, derive(q).params.g_star, 1e-15);
}

TEST(Bifurcation, HomoclinicReturnAbsentWhenSynapseIsSlower) {
  auto p = izh();
  p.tau_s = 200.0;
  EXPECT_FALSE(homoclinic_return(p, 1.0, 0.05).has_value());
}

// For small g s0 the second intersection lies beyond s0, not below it; see
// the analysis of (1 - k s0)(s/s0)^(gamma-1) = 1 - k s near s0.
TEST(Bifurcation, HomoclinicReturnMatchesQuiescentIntegration) {
  auto p = izh();
  const auto d = derive(p).params;
  const double c = p.e_r - d.v_star_0;
  struct Case {
    double g, s0;
    bool beyond;
  };
  const double g = 1.0;
  const double k = g * d.v_star_prime_0 / (2.0 * c);
  for (Case cs : {Case{g, 0.01, true}, Case{g, 0.05, true}, Case{0.5, 0.1, true},
                  Case{g, 0.99 / k, false}, Case{g, 0.995 / k, false}}) {
    auto r = homoclinic_return(p, cs.g, cs.s0);
    ASSERT_TRUE(r.has_value()) << cs.g << " " << cs.s0;
    EXPECT_EQ(*r > cs.s0, cs.beyond) << cs.s0;
    auto q = at(cs.g, d.I_rh);
    auto x0 = manifold_point_rheobase(p, cs.g, cs.s0);
    const double kg = cs.g * d.v_star_prime_0 / (2.0 * c);
    if (cs.s0 < 0.1) {
      EXPECT_LT(std::abs(switching_H(q, x0.s, x0.w)), 10.0 * std::pow(cs.g * cs.s0, 3)) << cs.s0;
    }
    auto s_hit = quiescent_recrossing(q, c, kg, x0, cs.beyond);
    ASSERT_TRUE(s_hit.has_value()) << cs.s0;
    EXPECT_NEAR(*s_hit, *r, 1e-6 * *r) << cs.s0;
  }
}

TEST(Bifurcation, NoCycleFarBelowRheobase) {
  EXPECT_EQ(code_of([] { track_limit_cycle(izh(), 1.2308, 0.0, true); }), ErrorCode::NoCycleFound);
}

TEST(Bifurcation, StableCycleIsRobustToHintAndTolerance) {
  auto p = izh();
  auto base = track_limit_cycle(p, 1.2308, 0.1893, true);
  EXPECT_TRUE(base.nonsmooth);
  EXPECT_GE(base.crossings_per_period, 2u);
  EXPECT_LT(base.h_min, 0.0);

  auto hinted = track_limit_cycle(p, 1.2308, 0.1893, true, MeanFieldState{0.3, 0.05});
  EXPECT_NEAR(hinted.amplitude_w, base.amplitude_w, 1e-4 * base.amplitude_w);
  EXPECT_NEAR(hinted.period, base.period, 1e-4 * base.period);

  CycleTrackOptions fine;
  fine.integrate.tol = 5e-11;
  auto tight = track_limit_cycle(p, 1.2308, 0.1893, true, std::nullopt, fine);
  EXPECT_NEAR(tight.amplitude_w, base.amplitude_w, 1e-4 * base.amplitude_w);
  EXPECT_NEAR(tight.period, base.period, 1e-4 * base.period);
}

TEST(Bifurcation, UnstableHopfCycleIsSmoothJustPastHopf) {
  auto p = izh();
  const double g = 1.2308;
  const double I = hopf_current(p, g) + 2e-3;
  auto c = track_limit_cycle(p, g, I, false);
  EXPECT_FALSE(c.stable);
  EXPECT_FALSE(c.nonsmooth);
  EXPECT_GT(c.h_min, 0.0);
  EXPECT_GT(c.amplitude_w, 0.0);
}

TEST(Bifurcation, LobeOrderingAtOneCoupling) {
  auto p = izh();
  const double g = 1.2308;
  const double I_rh = derive(p).params.I_rh;
  const double I_ah = hopf_current(p, g);
  const auto br = locate_snlc(p, g, 1e-8);
  const double I_hi = nonsmooth_unstable_end(p, g, I_ah, br.lo);
  auto gr = grazing_point(p, g, I_ah + 0.05 * (br.lo - I_ah), I_hi);
  EXPECT_LT(I_rh, I_ah);
  EXPECT_LT(I_ah, gr.I);
  EXPECT_LT(gr.I, br.lo);
  EXPECT_LT(std::abs(gr.h_min), 1e-9);
  EXPECT_EQ(gr.kind, GrazingKind::Persistence);
  // Below the snlc both cycles exist; above it neither.
  EXPECT_NO_THROW(track_limit_cycle(p, g, br.lo, true));
  EXPECT_EQ(code_of([&] { track_limit_cycle(p, g, br.hi + 1e-6, true); }), ErrorCode::NoCycleFound);
  EXPECT_EQ(code_of([&] { track_limit_cycle(p, g, br.hi + 1e-6, false); }), ErrorCode::NoCycleFound);
}

TEST(Bifurcation, DiagramWithEmptyGridStillHasCodimPoints) {
  DiagramOptions o;
  o.codim2.locate_global = false;
  auto d = assemble_diagram(izh(), {}, o);
  EXPECT_TRUE(d.sn_curve.empty());
  EXPECT_TRUE(d.hopf_curve.empty());
  EXPECT_TRUE(d.grazing_curve.empty());
  EXPECT_TRUE(d.snlc_curve.empty());
  EXPECT_EQ(d.codim2.size(), 2u);
}

TEST(Bifurcation, DiagramWithoutHopfRegime) {
  auto p = izh();
  p.tau_w = 1.0;
  DiagramOptions o;
  o.codim2.locate_global = false;
  o.curve_points = 40;
  std::vector<double> grid;
  for (int i = 0; i <= 40; ++i) grid.push_back(4.0 * i / 40.0);
  auto d = assemble_diagram(p, grid, o);
  EXPECT_TRUE(d.hopf_curve.empty());
  EXPECT_TRUE(d.grazing_curve.empty());
  EXPECT_FALSE(d.sn_curve.empty());
  auto files = diagram_files(p, d);
  EXPECT_TRUE(files.count("diagram.json"));
  EXPECT_TRUE(files.count("sn.csv"));
}
