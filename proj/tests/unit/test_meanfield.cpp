#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "pwsc/equilibria.hpp"
#include "pwsc/error.hpp"
#include "pwsc/meanfield.hpp"
#include "pwsc/params_io.hpp"

using namespace pwsc;

namespace {

ModelParams izh(double g, double I) {
  auto p = load_preset("izhikevich");
  p.g = g;
  p.I = I;
  return p;
}

void check_quadrant(const Trajectory& tr) {
  for (const auto& x : tr.states) {
    ASSERT_GE(x.s, 0.0);
    ASSERT_GE(x.w, 0.0);
  }
}

}  // namespace

TEST(Meanfield, QuiescentClosedForm) {
  auto p = izh(1.2308, 0.05);
  const double gamma = p.tau_s / p.tau_w;
  for (MeanFieldSystem sys : {MeanFieldSystem::ReducedMF, MeanFieldSystem::FullMF}) {
    for (auto x0 : {MeanFieldState{0.3, 0.2}, MeanFieldState{1.0, 0.6}, MeanFieldState{0.01, 1.0}}) {
      ASSERT_LT(switching_H(p, x0.s, x0.w), 0.0);
      auto tr = integrate(sys, p, x0, 60.0);
      check_quadrant(tr);
      EXPECT_TRUE(tr.crossings.empty());
      // s carries an absolute error of order 1e-4 tol, so the comparison is
      // made while s is well above that floor.
      for (const auto& x : tr.states) {
        if (x.s < 1e-6 * x0.s) break;
        const double w = x0.w * std::pow(x.s / x0.s, gamma);
        ASSERT_NEAR(x.w, w, 1e-8 * w);
      }
    }
  }
}

TEST(Meanfield, EquilibriumIsStationary) {
  auto p = izh(1.2308, 0.4260);
  auto e = nontrivial_equilibria(p, EquilibriumMode::WeakCoupling).front().point;
  auto tr = integrate(MeanFieldSystem::ReducedMF, p, e, 500.0);
  for (const auto& x : tr.states) {
    EXPECT_NEAR(x.s, e.s, 1e-9);
    EXPECT_NEAR(x.w, e.w, 1e-9);
  }
}

TEST(Meanfield, AttractorsForNetworkRegimes) {
  auto tonic = izh(1.2308, 0.4260);
  auto burst = izh(1.2308, 0.1893);
  auto e = nontrivial_equilibria(tonic, EquilibriumMode::WeakCoupling).front().point;
  for (MeanFieldSystem sys : {MeanFieldSystem::ReducedMF, MeanFieldSystem::FullMF}) {
    auto ta = integrate(sys, tonic, {0.0, 0.0}, default_classification_duration(tonic));
    check_quadrant(ta);
    auto a = classify_attractor(tonic, ta);
    EXPECT_EQ(a.kind, AttractorKind::Equilibrium) << to_string(sys);
    if (sys == MeanFieldSystem::ReducedMF) {
      EXPECT_NEAR(a.point.s, e.s, 1e-6);
      EXPECT_NEAR(a.point.w, e.w, 1e-6);
    }
    auto tb = integrate(sys, burst, {0.0, 0.0}, default_classification_duration(burst));
    check_quadrant(tb);
    auto b = classify_attractor(burst, tb);
    ASSERT_EQ(b.kind, AttractorKind::LimitCycle) << to_string(sys);
    EXPECT_TRUE(b.cycle.nonsmooth);
    EXPECT_GT(b.cycle.amplitude_w, 0.0);
  }
  auto quiet = izh(1.2308, 0.0);
  auto tq = integrate(MeanFieldSystem::ReducedMF, quiet, {0.5, 0.5}, default_classification_duration(quiet));
  EXPECT_EQ(classify_attractor(quiet, tq).kind, AttractorKind::Origin);
}

TEST(Meanfield, CrossingsSeparateSignsOfH) {
  auto p = izh(1.2308, 0.1893);
  IntegrateOptions o;
  auto tr = integrate(MeanFieldSystem::ReducedMF, p, {0.0, 0.0}, 2000.0, o);
  ASSERT_GE(tr.crossings.size(), 4u);
  for (std::size_t c = 0; c + 1 < tr.crossings.size(); ++c) {
    EXPECT_EQ(tr.crossings[c].direction, -tr.crossings[c + 1].direction);
  }
  // Between consecutive crossings H keeps the sign announced by the crossing.
  std::size_t next = 0;
  int sign = switching_H(p, 0.0, 0.0) > 0.0 ? 1 : -1;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    while (next < tr.crossings.size() && tr.crossings[next].time <= tr.times[i]) {
      sign = tr.crossings[next].direction;
      ++next;
    }
    const double H = switching_H(p, tr.states[i].s, tr.states[i].w);
    if (std::abs(H) > 1e-11) {
      ASSERT_EQ(H > 0.0 ? 1 : -1, sign) << "t=" << tr.times[i];
    }
  }
}

TEST(Meanfield, CrossingsAreLocalizedOnTheManifold) {
  auto p = izh(1.2308, 0.1893);
  auto tr = integrate(MeanFieldSystem::ReducedMF, p, {0.0, 0.0}, 1500.0);
  std::size_t matched = 0;
  for (const auto& c : tr.crossings) {
    auto it = std::lower_bound(tr.times.begin(), tr.times.end(), c.time);
    if (it == tr.times.end() || *it != c.time) continue;
    const auto& x = tr.states[static_cast<std::size_t>(it - tr.times.begin())];
    EXPECT_LT(std::abs(switching_H(p, x.s, x.w)), 1e-12);
    ++matched;
  }
  EXPECT_EQ(matched, tr.crossings.size());
}

TEST(Meanfield, FieldIsContinuousAcrossManifold) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> us(0.0, 1.0), ug(0.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = izh(ug(rng), 1.0);
    const double s = us(rng);
    const double w_on = switching_H(p, s, 0.0);  // H(s, w) = H(s, 0) - w
    if (w_on <= 1e-3) continue;
    double prev = INFINITY;
    for (double d : {1e-4, 1e-6, 1e-8}) {
      for (MeanFieldSystem sys : {MeanFieldSystem::ReducedMF, MeanFieldSystem::FullMF}) {
        auto up = mean_field_rhs(p, sys, {s, w_on - d});
        auto dn = mean_field_rhs(p, sys, {s, w_on + d});
        const double jump = std::hypot(up.s - dn.s, up.w - dn.w);
        if (sys == MeanFieldSystem::ReducedMF) {
          EXPECT_LT(jump, 2.0 * p.s_jump * std::sqrt(d) + 1e-12);
          EXPECT_LT(jump, prev);
          prev = jump;
        }
      }
    }
  }
}

TEST(Meanfield, QuadrantIsPositivelyInvariant) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 2.0), ug(0.0, 3.0), ui(0.0, 0.6);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = izh(ug(rng), ui(rng));
    for (MeanFieldSystem sys : {MeanFieldSystem::ReducedMF, MeanFieldSystem::FullMF}) {
      EXPECT_GE(mean_field_rhs(p, sys, {0.0, u(rng)}).s, 0.0);
      EXPECT_GE(mean_field_rhs(p, sys, {u(rng), 0.0}).w, 0.0);
    }
  }
}

TEST(Meanfield, TighteningToleranceConverges) {
  for (double I : {0.4260, 0.1893}) {
    auto p = izh(1.2308, I);
    for (double tol : {1e-8, 1e-9}) {
      IntegrateOptions a, b;
      a.tol = tol;
      b.tol = tol / 10.0;
      a.sample_interval = b.sample_interval = 1.0;
      auto ta = integrate(MeanFieldSystem::ReducedMF, p, {0.0, 0.0}, 400.0, a);
      auto tb = integrate(MeanFieldSystem::ReducedMF, p, {0.0, 0.0}, 400.0, b);
      ASSERT_EQ(ta.times.size(), tb.times.size());
      double sup = 0.0;
      for (std::size_t i = 0; i < ta.times.size(); ++i) {
        ASSERT_EQ(ta.times[i], tb.times[i]);
        sup = std::max({sup, std::abs(ta.states[i].s - tb.states[i].s),
                        std::abs(ta.states[i].w - tb.states[i].w)});
      }
      EXPECT_LT(sup, 10.0 * tol) << "I=" << I << " tol=" << tol;
    }
  }
}

TEST(Meanfield, ReverseTimeRetracesOrbit) {
  auto p = izh(1.2308, 0.1893);
  auto fwd = integrate(MeanFieldSystem::ReducedMF, p, {0.2, 0.1}, 50.0);
  IntegrateOptions r;
  r.reverse_time = true;
  auto back = integrate(MeanFieldSystem::ReducedMF, p, fwd.states.back(), 50.0, r);
  EXPECT_NEAR(back.states.back().s, 0.2, 1e-7);
  EXPECT_NEAR(back.states.back().w, 0.1, 1e-7);
}

TEST(Meanfield, Errors) {
  auto p = izh(1.0, 0.2);
  try {
    integrate(MeanFieldSystem::ReducedMF, p, {-0.1, 0.0}, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DomainError);
  }
  IntegrateOptions o;
  o.tol = 0.0;
  EXPECT_THROW(integrate(MeanFieldSystem::ReducedMF, p, {0.1, 0.0}, 1.0, o), Error);
}

TEST(Meanfield, EmbeddedInvariantPlane) {
  auto p = izh(1.2308, 0.05);
  EmbeddedState x0{0.3, 0.2, 0.0, 1e-3};
  auto tr = integrate_embedded(p, x0, 100.0);
  for (double R : tr.R) EXPECT_EQ(R, 0.0);
  const double gamma = p.tau_s / p.tau_w;
  for (const auto& x : tr.projected.states) {
    if (x.s < 1e-6 * 0.3) break;
    EXPECT_NEAR(x.w, 0.2 * std::pow(x.s / 0.3, gamma), 1e-8);
  }
}

TEST(Meanfield, EmbeddedRateRelaxesToReducedRate) {
  auto p = izh(1.2308, 0.4260);
  const double k = rate_gain(p);
  const double H0 = switching_H(p, 0.1, 0.1);
  ASSERT_GT(H0, 0.0);
  EmbeddedState x0{0.1, 0.1, 0.9 * k * std::sqrt(H0), 1e-4};
  auto tr = integrate_embedded(p, x0, 20.0);
  const auto& x = tr.projected.states.back();
  EXPECT_NEAR(tr.R.back(), firing_rate_reduced(p, x.s, x.w), 1e-3);
}
