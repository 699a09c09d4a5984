#pragma once

// Closed-form log-domain upper bounds on E[exp(action)] for single,
// self-interacting and two-path 1/|x|^θ actions, their coefficients, and the
// linear-in-T slopes that yield ground-state energy lower bounds.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fkbound/schedule.hpp"

namespace fkbound::bounds {

using schedule::CouplingFunction;

struct BoundParams {
  double theta = 1.0;
  int d = 3;
  double T = 0.0;

  /// Throws DomainError unless 0 < θ < 2, d >= 2, T >= 0.
  void validate() const;
};

struct CoefficientSet {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double D = 0.0;
};

CoefficientSet coefficients(double theta, int d);

/// K = Γ((d-θ)/2) / (2^{θ/2} Γ(d/2)), so that E|X_t|^{-θ} = K t^{-θ/2}.
double moment_constant(double theta, int d);

enum class Theorem { Single = 1, SelfDouble = 2, CrossDouble = 3 };
enum class Branch { ThetaGeq1, ThetaLeq1 };

std::string_view to_string(Theorem t);
std::string_view to_string(Branch b);
Theorem theorem_from_int(int n);

struct BoundTerm {
  std::string label;
  double coefficient = 0.0;
  double norm_value = 0.0;
  double exponent = 1.0;
  double contribution = 0.0;  // coefficient · norm_value^exponent
};

struct BoundReport {
  double log_bound = 0.0;
  std::vector<BoundTerm> terms;
  /// Raw norms and time integrals that feed the terms, by label.
  std::vector<std::pair<std::string, double>> norms;
  BoundParams params;
  Theorem theorem = Theorem::Single;
  Branch branch = Branch::ThetaGeq1;
  bool zero_coupling = false;
  /// At θ = 1 the other branch is evaluated too; its value lands here.
  std::optional<double> alternate_branch_log_bound;
};

/// Bound for the given theorem. `branch` forces one formula (only legal at
/// θ = 1 or on its own side); by default θ > 1 uses ThetaGeq1, θ < 1 uses
/// ThetaLeq1, and θ = 1 evaluates both and throws VerificationFailure if
/// they disagree beyond 1e-10 relative.
BoundReport theorem_bound(Theorem which, const CouplingFunction& f, const BoundParams& params,
                          std::optional<Branch> branch = std::nullopt);

BoundReport theorem1_bound(const CouplingFunction& f, const BoundParams& params);
BoundReport theorem2_bound(const CouplingFunction& f, const BoundParams& params);
BoundReport theorem3_bound(const CouplingFunction& f, const BoundParams& params);

struct SlopeResult {
  double slope = 0.0;
  bool analytic = true;
  /// log_bound(T) ≈ slope·T + subleading_coefficient·T^{subleading_power}
  /// (zero coefficient when the correction is bounded).
  double subleading_coefficient = 0.0;
  double subleading_power = 0.0;
};

/// Richardson ladder tolerance for slopes without a closed form.
inline constexpr double kSlopeTolerance = 1e-6;

/// lim_{T→∞} log_bound(T)/T. Closed form for Constant/ExpDecay/Indicator;
/// otherwise the difference quotient (log_bound(2T) - log_bound(T))/T over
/// a doubling ladder. Throws NoLinearSlope when the limit does not exist.
SlopeResult asymptotic_slope(Theorem which, const CouplingFunction& f, double theta, int d);

/// Doubling-ladder estimate alone (exposed so the closed forms can be
/// cross-checked against it).
double richardson_slope(Theorem which, const CouplingFunction& f, double theta, int d, double start_T = 1.0,
                        double tol = kSlopeTolerance);

double critical_coupling(int d);

/// Lower bound on the ground-state energy of -Δ/2 - α/|x|^θ, 1 <= θ < 2, d >= 3.
double inverse_square_energy(double alpha, double theta, int d);

}  // namespace fkbound::bounds
