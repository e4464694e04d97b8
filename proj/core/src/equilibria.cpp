#include "pwsc/equilibria.hpp"

#include <algorithm>
#include <cmath>

#include "pwsc/error.hpp"
#include "pwsc/numeric.hpp"

namespace pwsc {

namespace {

constexpr double kHyperbolicTol = 1e-10;
constexpr double kBoundaryTol = 1e-12;

Equilibrium make_nontrivial(double s, double eta) {
  Equilibrium e;
  e.point = {s, eta * s};
  e.reality = std::abs(s) < 1e-15 ? Reality::Boundary : Reality::Real;
  if (e.reality == Reality::Boundary) e.point = {0.0, 0.0};
  return e;
}

void label_branches(std::vector<Equilibrium>& eqs) {
  std::sort(eqs.begin(), eqs.end(),
            [](const Equilibrium& a, const Equilibrium& b) { return a.point.s > b.point.s; });
  for (std::size_t i = 0; i < eqs.size(); ++i) {
    eqs[i].branch = i == 0 ? Branch::EPlus : Branch::EMinus;
  }
}

std::vector<double> quadratic_roots(double beta, double disc) {
  if (disc < 0.0) return {};
  const double root = std::sqrt(disc);
  return {beta + root, beta - root};
}

std::vector<double> numeric_roots(const ModelParams& p, double lambda_s, double eta) {
  auto psi = [&](double s) { return s * s / (lambda_s * lambda_s) - switching_H(p, s, eta * s); };
  double s_max = lambda_s * std::sqrt(p.I + std::abs(derive(p).params.I_rh) + 1.0);
  for (int i = 0; i < 60 && psi(s_max) <= 0.0; ++i) s_max *= 2.0;
  if (psi(s_max) <= 0.0) throw Error(ErrorCode::RootFindingFailure, "no upper bracket for s");

  // Scan nodes plus interior extrema, so that two nearby roots sharing a cell
  // are still separated.
  constexpr std::size_t n = 4000;
  std::vector<double> xs(n + 1), fs(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    xs[i] = s_max * static_cast<double>(i) / static_cast<double>(n);
    fs[i] = psi(xs[i]);
  }
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i <= n; ++i) {
    pts.emplace_back(xs[i], fs[i]);
    if (i == 0 || i == n) continue;
    if ((fs[i] - fs[i - 1]) * (fs[i + 1] - fs[i]) < 0.0) {
      const bool is_min = fs[i] < fs[i - 1];
      double a = xs[i - 1], b = xs[i + 1];
      const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
      for (int k = 0; k < 100 && b - a > 1e-15 * s_max; ++k) {
        const double c = b - gr * (b - a);
        const double d = a + gr * (b - a);
        const bool left = is_min ? psi(c) < psi(d) : psi(c) > psi(d);
        if (left) {
          b = d;
        } else {
          a = c;
        }
      }
      const double xe = 0.5 * (a + b);
      pts.emplace_back(xe, psi(xe));
    }
  }
  std::sort(pts.begin(), pts.end());

  std::vector<double> roots;
  if (pts.front().second == 0.0) roots.push_back(0.0);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto [x0, f0] = pts[i];
    const auto [x1, f1] = pts[i + 1];
    if (f1 == 0.0) {
      roots.push_back(x1);
    } else if (f0 != 0.0 && std::signbit(f0) != std::signbit(f1)) {
      roots.push_back(solve_bracketed(psi, x0, x1, 1e-15));
    }
  }
  return roots;
}

}  // namespace

std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::E0: return "e0";
    case Branch::EPlus: return "e+";
    case Branch::EMinus: return "e-";
  }
  return "?";
}

std::string_view to_string(Reality r) {
  switch (r) {
    case Reality::Real: return "Real";
    case Reality::Virtual: return "Virtual";
    case Reality::Boundary: return "Boundary";
  }
  return "?";
}

std::string_view to_string(StabilityKind k) {
  switch (k) {
    case StabilityKind::StableNode: return "StableNode";
    case StabilityKind::StableFocus: return "StableFocus";
    case StabilityKind::UnstableNode: return "UnstableNode";
    case StabilityKind::UnstableFocus: return "UnstableFocus";
    case StabilityKind::Saddle: return "Saddle";
    case StabilityKind::NonHyperbolic: return "NonHyperbolic";
  }
  return "?";
}

std::string_view to_string(BebType t) {
  switch (t) {
    case BebType::Persistence: return "Persistence";
    case BebType::HomoclinicPersistence: return "HomoclinicPersistence";
    case BebType::SNIC_BEB: return "SNIC_BEB";
    case BebType::NonsmoothSaddleNode: return "NonsmoothSaddleNode";
  }
  return "?";
}

Equilibrium trivial_equilibrium(const ModelParams& p) {
  const double I_rh = derive(p).params.I_rh;
  Equilibrium e;
  e.branch = Branch::E0;
  e.point = {0.0, 0.0};
  // Inside the quiescent region the linearization is diag(-1/tau_s, -1/tau_w).
  e.trace = -1.0 / p.tau_s - 1.0 / p.tau_w;
  e.det = 1.0 / (p.tau_s * p.tau_w);
  if (std::abs(p.I - I_rh) <= kBoundaryTol) {
    e.reality = Reality::Boundary;
    e.kind = StabilityKind::NonHyperbolic;
  } else if (p.I < I_rh) {
    e.reality = Reality::Real;
    e.kind = StabilityKind::StableNode;
  } else {
    e.reality = Reality::Virtual;
    e.kind = StabilityKind::StableNode;
  }
  return e;
}

ReducedCoordinates reduced_coordinates(const ModelParams& p) {
  const auto d = derive(p);
  return {d.coeffs.M(p.g) * (p.g - d.params.g_star), (p.I - d.params.I_rh) / d.coeffs.A2(p.g)};
}

std::vector<Equilibrium> nontrivial_equilibria(const ModelParams& p, EquilibriumMode mode) {
  const auto d = derive(p);
  const double eta = d.params.eta;
  std::vector<double> roots;
  switch (mode) {
    case EquilibriumMode::WeakCoupling: {
      const auto rc = reduced_coordinates(p);
      roots = quadratic_roots(rc.beta, rc.beta * rc.beta + rc.I_tilde);
      break;
    }
    case EquilibriumMode::FullIzhikevich: {
      if (p.kind != ModelKind::Izhikevich) {
        throw Error(ErrorCode::UnsupportedModel, "FullIzhikevich mode needs the Izhikevich model");
      }
      const double ls = d.params.lambda_s;
      const double a = 1.0 / (ls * ls) + 0.25 * p.g * p.g;
      const double b = p.g * (p.e_r - 0.5 * p.alpha) - eta;
      const double c = p.I - 0.25 * p.alpha * p.alpha;
      const double disc = b * b + 4.0 * a * c;
      if (disc >= 0.0) {
        const double root = std::sqrt(disc);
        roots = {(b + root) / (2.0 * a), (b - root) / (2.0 * a)};
      }
      break;
    }
    case EquilibriumMode::FullNumeric:
      roots = numeric_roots(p, d.params.lambda_s, eta);
      break;
  }
  std::vector<Equilibrium> out;
  for (double s : roots) {
    if (s >= 0.0 || std::abs(s) < 1e-15) out.push_back(make_nontrivial(std::max(s, 0.0), eta));
  }
  label_branches(out);
  for (auto& e : out) e = classify(p, e);
  return out;
}

Matrix2 jacobian(const ModelParams& p, const MeanFieldState& at) {
  const double H = switching_H(p, at.s, at.w);
  if (!(H > 0.0)) {
    throw Error(ErrorCode::OnOrBelowManifold, "Jacobian requested where H <= 0");
  }
  const double k = rate_gain(p);
  const double half = k / (2.0 * std::sqrt(H));
  const double dH_ds = -rheobase_ds(p, at.s);
  Matrix2 J;
  J[0][0] = -1.0 / p.tau_s + p.s_jump * half * dH_ds;
  J[0][1] = -p.s_jump * half;
  J[1][0] = p.w_jump * half * dH_ds;
  J[1][1] = -1.0 / p.tau_w - p.w_jump * half;
  return J;
}

Equilibrium classify(const ModelParams& p, Equilibrium eq) {
  if (eq.reality != Reality::Real) return eq;
  if (eq.branch == Branch::E0) return trivial_equilibrium(p);
  const Matrix2 J = jacobian(p, eq.point);
  const double tr = J[0][0] + J[1][1];
  const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
  eq.trace = tr;
  eq.det = det;
  if (std::abs(det) < kHyperbolicTol || std::abs(tr) < kHyperbolicTol) {
    eq.kind = det < -kHyperbolicTol ? StabilityKind::Saddle : StabilityKind::NonHyperbolic;
  } else if (det < 0.0) {
    eq.kind = StabilityKind::Saddle;
  } else {
    const bool node = tr * tr - 4.0 * det >= 0.0;
    if (tr < 0.0) {
      eq.kind = node ? StabilityKind::StableNode : StabilityKind::StableFocus;
    } else {
      eq.kind = node ? StabilityKind::UnstableNode : StabilityKind::UnstableFocus;
    }
  }
  return eq;
}

BebType beb_classify(const ModelParams& p, double g, std::optional<double> snic_threshold) {
  const auto d = derive(p).params;
  if (d.g_bar < d.g_star) {
    if (g < d.g_bar) return BebType::Persistence;
    if (g < d.g_star) return BebType::HomoclinicPersistence;
    if (!snic_threshold) {
      throw Error(ErrorCode::ThresholdUnavailable,
                  "SNIC boundary beyond g* has not been computed");
    }
    return g < *snic_threshold ? BebType::SNIC_BEB : BebType::NonsmoothSaddleNode;
  }
  return g < d.g_star ? BebType::Persistence : BebType::NonsmoothSaddleNode;
}

CsvTable equilibria_table() {
  return CsvTable({"g", "I", "branch", "s", "w", "reality", "kind", "tr", "det"});
}

void append_equilibria(CsvTable& table, const ModelParams& p,
                       const std::vector<Equilibrium>& eqs) {
  for (const auto& e : eqs) {
    table.add_row({format_double(p.g), format_double(p.I), std::string(to_string(e.branch)),
                   format_double(e.point.s), format_double(e.point.w),
                   std::string(to_string(e.reality)), std::string(to_string(e.kind)),
                   format_double(e.trace), format_double(e.det)});
  }
}

}  // namespace pwsc
