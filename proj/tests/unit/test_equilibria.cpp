#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pwsc/bifurcation.hpp"
#include "pwsc/equilibria.hpp"
#include "pwsc/error.hpp"
#include "pwsc/params_io.hpp"

using namespace pwsc;

namespace {

ModelParams izh(double g, double I) {
  auto p = load_preset("izhikevich");
  p.g = g;
  p.I = I;
  return p;
}

// Random Izhikevich-type parameters with a firing region near the origin.
ModelParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto p = load_preset("izhikevich");
  p.tau_s = 0.5 + 10.0 * u(rng);
  p.tau_w = 0.5 + 200.0 * u(rng);
  p.s_jump = 0.1 + 2.0 * u(rng);
  p.w_jump = 0.001 + 0.1 * u(rng);
  p.alpha = 0.2 + 0.8 * u(rng);
  p.e_r = p.alpha / 2.0 + 0.1 + u(rng);
  p.g = 4.0 * u(rng);
  const double I_rh = p.alpha * p.alpha / 4.0;
  p.I = I_rh - 0.2 + 0.6 * u(rng);
  return p;
}

double fd_entry(const ModelParams& p, MeanFieldState x, int row, int col) {
  const double h = 1e-6 * std::max(1e-3, col == 0 ? x.s : x.w);
  auto xp = x, xm = x;
  (col == 0 ? xp.s : xp.w) += h;
  (col == 0 ? xm.s : xm.w) -= h;
  auto fp = mean_field_rhs(p, MeanFieldSystem::ReducedMF, xp);
  auto fm = mean_field_rhs(p, MeanFieldSystem::ReducedMF, xm);
  return ((row == 0 ? fp.s : fp.w) - (row == 0 ? fm.s : fm.w)) / (2.0 * h);
}

}  // namespace

TEST(Equilibria, TrivialEquilibrium) {
  auto p = izh(1.0, 0.0961 - 0.01);
  auto e = trivial_equilibrium(p);
  EXPECT_EQ(e.reality, Reality::Real);
  EXPECT_EQ(e.kind, StabilityKind::StableNode);
  p.I = 0.0961;
  EXPECT_EQ(trivial_equilibrium(p).reality, Reality::Boundary);
  p.I = 0.0961 + 0.01;
  EXPECT_EQ(trivial_equilibrium(p).reality, Reality::Virtual);
}

TEST(Equilibria, ReducedCoordinateExamples) {
  auto d = derive(izh(0.0, 0.0));
  const double g = d.params.g_star;
  // beta = 0, I_tilde = 1.
  auto p = izh(g, d.params.I_rh + d.coeffs.A2(g));
  auto rc = reduced_coordinates(p);
  EXPECT_NEAR(rc.beta, 0.0, 1e-15);
  EXPECT_NEAR(rc.I_tilde, 1.0, 1e-14);
  auto eqs = nontrivial_equilibria(p, EquilibriumMode::WeakCoupling);
  ASSERT_EQ(eqs.size(), 1u);
  EXPECT_NEAR(eqs[0].point.s, 1.0, 1e-14);
  EXPECT_EQ(eqs[0].branch, Branch::EPlus);

  // beta^2 + I_tilde < 0.
  const double g2 = g + 1.0;
  auto q = izh(g2, saddle_node_current(izh(0, 0), g2) - 1e-3);
  EXPECT_TRUE(nontrivial_equilibria(q, EquilibriumMode::WeakCoupling).empty());
  EXPECT_TRUE(nontrivial_equilibria(q, EquilibriumMode::FullIzhikevich).empty());
  EXPECT_TRUE(nontrivial_equilibria(q, EquilibriumMode::FullNumeric).empty());
}

TEST(Equilibria, ClosedFormsAgreeAndMatchRootSolve) {
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) {
      auto p = izh(4.0 * i / 49.0, -0.1 + 0.7 * j / 49.0);
      auto weak = nontrivial_equilibria(p, EquilibriumMode::WeakCoupling);
      auto full = nontrivial_equilibria(p, EquilibriumMode::FullIzhikevich);
      auto num = nontrivial_equilibria(p, EquilibriumMode::FullNumeric);
      ASSERT_EQ(weak.size(), full.size()) << "g=" << p.g << " I=" << p.I;
      ASSERT_EQ(weak.size(), num.size()) << "g=" << p.g << " I=" << p.I;
      for (std::size_t k = 0; k < weak.size(); ++k) {
        EXPECT_NEAR(weak[k].point.s, full[k].point.s, 1e-12);
        EXPECT_NEAR(full[k].point.s, num[k].point.s, 1e-10);
        EXPECT_EQ(weak[k].branch, num[k].branch);
      }
    }
  }
}

TEST(Equilibria, NontrivialEquilibriaSatisfyDefiningRelations) {
  std::mt19937_64 rng(29);
  int seen = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto p = random_params(rng);
    const auto d = derive(p).params;
    for (auto mode : {EquilibriumMode::WeakCoupling, EquilibriumMode::FullNumeric}) {
      for (const auto& e : nontrivial_equilibria(p, mode)) {
        EXPECT_GE(e.point.s, 0.0);
        EXPECT_LT(std::abs(e.point.w - d.eta * e.point.s), 1e-12);
        const double H = switching_H(p, e.point.s, e.point.w);
        EXPECT_LT(std::abs(e.point.s - d.lambda_s * std::sqrt(std::max(H, 0.0))), 1e-10);
        ++seen;
      }
    }
  }
  EXPECT_GT(seen, 500);
}

TEST(Equilibria, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  while (checked < 100) {
    auto p = izh(3.0 * u(rng), 0.6 * u(rng));
    const MeanFieldState x{u(rng), 0.5 * u(rng)};
    if (switching_H(p, x.s, x.w) < 1e-3) continue;
    auto J = jacobian(p, x);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        const double fd = fd_entry(p, x, r, c);
        EXPECT_NEAR(J[r][c], fd, 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
    ++checked;
  }
}

TEST(Equilibria, JacobianRejectsQuiescentPoints) {
  auto p = izh(1.0, 0.05);
  try {
    jacobian(p, {0.1, 0.1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OnOrBelowManifold);
  }
}

TEST(Equilibria, DeterminantSigns) {
  std::mt19937_64 rng(37);
  int plus = 0, minus = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto p = random_params(rng);
    for (const auto& e : nontrivial_equilibria(p, EquilibriumMode::WeakCoupling)) {
      if (e.reality != Reality::Real) continue;
      if (e.branch == Branch::EPlus) {
        EXPECT_GE(e.det, -1e-12);
        ++plus;
      } else {
        EXPECT_LE(e.det, 1e-12);
        EXPECT_EQ(e.kind, StabilityKind::Saddle);
        ++minus;
      }
    }
  }
  EXPECT_GT(plus, 100);
  EXPECT_GT(minus, 10);
}

TEST(Equilibria, StabilityExamples) {
  const auto d = derive(izh(0, 0)).params;
  auto p = izh(0.5 * d.g_bar, d.I_rh + 0.05);
  auto e = nontrivial_equilibria(p, EquilibriumMode::WeakCoupling).front();
  EXPECT_LT(e.trace, 0.0);
  EXPECT_TRUE(e.kind == StabilityKind::StableNode || e.kind == StabilityKind::StableFocus);

  const double g = 1.0;
  auto q = izh(g, 0.5 * (d.I_rh + hopf_current(izh(0, 0), g)));
  auto eq = nontrivial_equilibria(q, EquilibriumMode::WeakCoupling).front();
  EXPECT_GT(eq.trace, 0.0);
  EXPECT_TRUE(eq.kind == StabilityKind::UnstableNode || eq.kind == StabilityKind::UnstableFocus);

  // Wedge between I_SN and I_rh beyond g*: e+ and the saddle e-.
  const double g2 = d.g_star + 1.0;
  auto r = izh(g2, 0.5 * (saddle_node_current(q, g2) + d.I_rh));
  auto both = nontrivial_equilibria(r, EquilibriumMode::WeakCoupling);
  ASSERT_EQ(both.size(), 2u);
  EXPECT_EQ(both[1].branch, Branch::EMinus);
  EXPECT_EQ(both[1].kind, StabilityKind::Saddle);
  EXPECT_LT(both[1].det, 0.0);
}

TEST(Equilibria, ExistenceRegions) {
  const auto d = derive(izh(0, 0)).params;
  for (int i = 0; i <= 60; ++i) {
    for (int j = 0; j <= 60; ++j) {
      const double g = 4.0 * i / 60.0 + 1e-3;
      const double I = -0.3 + 0.6 * j / 60.0 + 1e-4;
      auto p = izh(g, I);
      auto eqs = nontrivial_equilibria(p, EquilibriumMode::WeakCoupling);
      bool has_plus = false, has_minus = false;
      for (const auto& e : eqs) {
        if (e.reality != Reality::Real) continue;
        (e.branch == Branch::EPlus ? has_plus : has_minus) = true;
      }
      const bool wedge = g > d.g_star && I >= saddle_node_current(p, g) && I < d.I_rh;
      EXPECT_EQ(has_plus, I > d.I_rh || wedge) << "g=" << g << " I=" << I;
      EXPECT_EQ(has_minus, wedge) << "g=" << g << " I=" << I;
    }
  }
}

TEST(Equilibria, BebClassification) {
  auto p = izh(0, 0);
  const auto d = derive(p).params;
  const double threshold = *g_hat(p);
  EXPECT_EQ(beb_classify(p, 0.02, threshold), BebType::Persistence);
  EXPECT_EQ(beb_classify(p, 1.0, threshold), BebType::HomoclinicPersistence);
  EXPECT_EQ(beb_classify(p, d.g_star + 0.2, threshold), BebType::SNIC_BEB);
  EXPECT_EQ(beb_classify(p, 10.0, threshold), BebType::NonsmoothSaddleNode);
  EXPECT_EQ(beb_classify(p, 1.0), BebType::HomoclinicPersistence);
  try {
    beb_classify(p, d.g_star + 0.2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ThresholdUnavailable);
  }

  // g* < g_bar when tau_w < tau_s.
  auto q = p;
  q.tau_w = 1.0;
  const auto dq = derive(q).params;
  ASSERT_LT(dq.g_star, dq.g_bar);
  EXPECT_EQ(beb_classify(q, 0.5 * dq.g_star), BebType::Persistence);
  EXPECT_EQ(beb_classify(q, 2.0 * dq.g_star), BebType::NonsmoothSaddleNode);
}

TEST(Equilibria, FullIzhikevichNeedsIzhikevich) {
  auto p = load_preset("quartic");
  try {
    nontrivial_equilibria(p, EquilibriumMode::FullIzhikevich);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedModel);
  }
  EXPECT_NO_THROW(nontrivial_equilibria(p, EquilibriumMode::FullNumeric));
}
