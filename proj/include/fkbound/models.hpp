#pragma once

// Named physical scenarios: each binds couplings, dimensions and the way the
// per-action bounds combine into one log bound, plus the matching MC action.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fkbound/bounds.hpp"
#include "fkbound/mc.hpp"

namespace fkbound::models {

using schedule::CouplingFunction;

enum class ModelKind { Hydrogen, InverseSquare, Polaron, Bipolaron, NelsonQ };

std::string_view to_string(ModelKind k);
ModelKind model_kind_from_string(std::string_view s);

/// Only the fields relevant to `kind` are read: α for Hydrogen, Polaron,
/// Bipolaron; (α, θ, d) for InverseSquare; (γ, τ, θ) for NelsonQ.
struct ModelParams {
  ModelKind kind = ModelKind::Hydrogen;
  double alpha = 1.0;
  double theta = 1.0;
  int d = 3;
  double gamma = 1.0;
  double tau = 1.0;
};

/// log E[e^{action}] <= Σ exponent · theorem_bound(theorem, f).
struct BoundComponent {
  std::string label;
  bounds::Theorem theorem = bounds::Theorem::Single;
  CouplingFunction f;
  double exponent = 1.0;
};

struct ModelSpec {
  ModelParams params;
  std::string name;
  double theta = 1.0;
  int d = 3;
  std::vector<BoundComponent> components;

  /// MC action on [0, T].
  mc::ActionSpec action(double T) const;
};

/// Throws DomainError outside the validity ranges.
ModelSpec build(const ModelParams& p);

struct ModelBound {
  double log_bound = 0.0;
  std::vector<bounds::BoundReport> reports;  // one per component
};

ModelBound log_bound(const ModelSpec& m, double T);

struct NelsonConstant {
  double c1 = 0.0;  // coefficient of γ^{2/(2-θ)}
  double c2 = 0.0;  // coefficient of γ
  double c = 0.0;   // max(c1, c2): slope <= c·(1 + γ^{2/(2-θ)})
};

NelsonConstant nelson_constant(double theta, double tau, int d = 3);

struct ModelSlope {
  double slope = 0.0;
  bool analytic = true;
  /// Coefficient of √T in the large-T expansion (zero if absent).
  double sqrt_coefficient = 0.0;
  std::vector<bounds::SlopeResult> components;
  std::optional<NelsonConstant> nelson;
};

ModelSlope bound_slope(const ModelSpec& m);

/// Minus the bound slope (InverseSquare uses the closed form).
double energy_lower_bound(const ModelSpec& m);

/// E[action] over [0, T] with two-path cross terms dropped, a lower bound on
/// log E[e^{action}] by Jensen since those terms are nonnegative.
double jensen_lower_bound(const ModelSpec& m, double T);

/// lim_{T→∞} jensen_lower_bound(T)/T.
double jensen_slope(const ModelSpec& m);

struct VerifyRow {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  double margin = 0.0;  // rhs + tolerance - lhs
  bool pass = false;
};

struct VerifyReport {
  double T = 0.0;
  mc::Ladder ladder;  // rungs N/2, N
  double log_bound = 0.0;
  double jensen = 0.0;
  double tolerance = 0.0;  // 3·stderr_log + ladder allowance
  bool heavy_tail_override = false;
  std::vector<VerifyRow> rows;
  bool pass = false;

  const mc::McEstimate& mc() const { return ladder.rungs.back(); }
};

/// slope·T above this makes exp(action) too heavy-tailed for plain MC.
inline constexpr double kHeavyTailGuard = 3.0;

/// Runs bound, Jensen and MC and checks jensen <= log_mean <= log_bound,
/// each up to 3·stderr_log plus the discretization allowance. Throws
/// ValidationError when slope·T exceeds the guard unless `override_guard`.
VerifyReport verify(const ModelSpec& m, double T, std::size_t M, std::size_t N, std::uint64_t seed,
                    unsigned threads = 0, bool override_guard = false);

}  // namespace fkbound::models
