#pragma once

// Heat-kernel analytics for the 1/|x|^θ actions.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fkbound/bounds.hpp"
#include "fkbound/schedule.hpp"

namespace fkbound::kernels {

using bounds::BoundParams;
using schedule::CouplingFunction;

/// (2πt)^{-d/2} exp(-r²/2t)
double heat_kernel(double t, double r, int d);
double heat_kernel(double t, std::span<const double> z);

/// Right side of 1/r^θ = (2π)^{d/2}/(2^{θ/2}Γ(θ/2)) ∫₀^∞ s^{(d-θ-2)/2} p_s(r) ds,
/// integrated numerically in u = 1/(2s).
double subordination_integral(double theta, double r, int d);

/// |r^{-θ} - subordination_integral| / r^{-θ}; QuadratureFailure if the
/// quadrature cannot reach 1e-8.
double subordination_check(double theta, double r, int d);

/// h(t) = amplitude · e^{-rate·t} · 1_{[0, length]}(t)
struct ConvolutionWeight {
  double amplitude = 1.0;
  double rate = 0.0;
  double length = numerics::kInf;

  static ConvolutionWeight one() { return {}; }
  static ConvolutionWeight indicator(double length, double amplitude = 1.0) { return {amplitude, 0.0, length}; }
  static ConvolutionWeight exp_decay(double rate, double amplitude = 1.0) {
    return {amplitude, rate, numerics::kInf};
  }

  double sup_norm() const { return std::abs(amplitude); }
  double operator()(double t) const;
  std::string describe() const;
};

struct ConvolutionCoefficient {
  double theta = 0.0;
  int d = 0;
  double r = 0.0;
  ConvolutionWeight weight;
  double value = 0.0;
  double bound = 0.0;  // 2‖h‖_∞ / (θ(d-θ))
};

/// a(θ, r, h) from its (t, s) double-integral representation.
ConvolutionCoefficient convolution_coefficient(double theta, double r, const ConvolutionWeight& h, int d);

struct ConvolutionSuite {
  std::vector<ConvolutionCoefficient> samples;
  std::size_t violations = 0;  // samples with |a| >= bound
  double max_ratio = 0.0;      // max |a| / bound
};

/// `count` random (θ, d, r, h) tuples: d in 2..6, θ in (0, min(2, d)),
/// r log-uniform in [0.05, 20], h an exponential or a cutoff weight.
ConvolutionSuite convolution_suite(std::size_t count, std::uint64_t seed);

struct SubordinationRow {
  double theta = 0.0;
  int d = 0;
  double r = 0.0;
  double residual = 0.0;
  bool pass = false;
};

/// θ ∈ {0.5, 1, 1.5} × d ∈ {3, 4, 5} × r ∈ {0.5, 1, 2}.
std::vector<SubordinationRow> subordination_grid();

enum class ActionKind { Single, SelfDouble, CrossDouble };
std::string_view to_string(ActionKind k);
ActionKind action_kind_from_string(std::string_view s);

struct ExpectationFormula {
  ActionKind kind = ActionKind::Single;
  double K = 0.0;
  double value = 0.0;
  /// True when `value` is an upper bound on E[action] rather than its value.
  bool inequality = false;
  std::string note;
};

/// Sharp Hardy–Littlewood–Sobolev constant for the diagonal exponent
/// p = q = 2d/(2d-θ).
double hls_sharp_constant(int d, double theta);

/// E[action] at start point(s) separated by `offset` (Single: |x|;
/// CrossDouble: |x-y|). Single is exact at offset 0 and an upper bound
/// otherwise; CrossDouble returns the HLS upper bound, using
/// `hls_constant` if given.
ExpectationFormula expected_action(ActionKind kind, const CouplingFunction& f, const BoundParams& params,
                                   double offset = 0.0, std::optional<double> hls_constant = std::nullopt);

/// 2f(u) / ((d-θ) r^{θ-1}) for non-increasing f and 1 <= θ < 2.
double stochastic_derivative_bound(const CouplingFunction& f, double theta, int d, double u, double radius);

/// θ·|a(θ, r, h_u)|·r^{1-θ} with h_u(t) = f(t+u)·1_{[0, T-u]}: the size of the
/// conditioned derivative of the single action given |X_u + x| = r.
double conditioned_derivative(const CouplingFunction& f, double theta, int d, double u, double T, double radius);

}  // namespace fkbound::kernels
