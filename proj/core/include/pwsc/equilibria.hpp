#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "pwsc/csv.hpp"
#include "pwsc/meanfield.hpp"
#include "pwsc/models.hpp"

namespace pwsc {

enum class Branch { E0, EPlus, EMinus };
enum class Reality { Real, Virtual, Boundary };
enum class StabilityKind {
  StableNode,
  StableFocus,
  UnstableNode,
  UnstableFocus,
  Saddle,
  NonHyperbolic,
};

std::string_view to_string(Branch b);
std::string_view to_string(Reality r);
std::string_view to_string(StabilityKind k);

struct Equilibrium {
  MeanFieldState point;
  Branch branch = Branch::E0;
  Reality reality = Reality::Real;
  StabilityKind kind = StabilityKind::NonHyperbolic;
  double trace = 0.0;
  double det = 0.0;
};

struct ReducedCoordinates {
  double beta = 0.0;     // M(g) (g - g*)
  double I_tilde = 0.0;  // (I - I_rh) / A2(g)
};

enum class EquilibriumMode { WeakCoupling, FullIzhikevich, FullNumeric };

Equilibrium trivial_equilibrium(const ModelParams& p);

ReducedCoordinates reduced_coordinates(const ModelParams& p);

// Nontrivial equilibria (w = eta s) of the reduced system with s >= 0, sorted
// by decreasing s. FullIzhikevich throws Error(UnsupportedModel) for other
// kinds; FullNumeric throws Error(RootFindingFailure) if a bracket fails.
std::vector<Equilibrium> nontrivial_equilibria(const ModelParams& p, EquilibriumMode mode);

using Matrix2 = std::array<std::array<double, 2>, 2>;

// Jacobian of the reduced system; throws Error(OnOrBelowManifold) if H <= 0.
Matrix2 jacobian(const ModelParams& p, const MeanFieldState& at);

// Fills kind, trace and det. Non-real equilibria are returned unchanged.
Equilibrium classify(const ModelParams& p, Equilibrium eq);

enum class BebType { Persistence, HomoclinicPersistence, SNIC_BEB, NonsmoothSaddleNode };

std::string_view to_string(BebType t);

// Boundary-equilibrium bifurcation type at I = I_rh for coupling g. The
// SNIC/plain boundary beyond g* needs `snic_threshold`; throws
// Error(ThresholdUnavailable) if it is needed and absent.
BebType beb_classify(const ModelParams& p, double g,
                     std::optional<double> snic_threshold = std::nullopt);

CsvTable equilibria_table();
void append_equilibria(CsvTable& table, const ModelParams& p,
                       const std::vector<Equilibrium>& eqs);

}  // namespace pwsc
