#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace fkbound::numerics {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Fixed quadrature tolerances. Overridable through the run config so that
/// audited bound values are reproducible to the reported digits.
struct Tolerances {
  double inner_abs = 1e-10;  // single-norm quadrature
  double outer_rel = 1e-8;   // iterated (outer) integrals
};

Tolerances default_tolerances();
void set_default_tolerances(const Tolerances& tol);

/// ln Γ(x) for x > 0 (thread-safe, unlike std::lgamma which touches signgam).
double log_gamma(double x);

/// Lower incomplete gamma γ(a, x) = ∫₀ˣ u^{a-1} e^{-u} du, a > 0.
double lower_incomplete_gamma(double a, double x);

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

using Integrand = std::function<double(double)>;

/// ∫_a^b g. Double-exponential rule; tolerates integrable endpoint
/// singularities. Throws QuadratureFailure when the error target is unmet.
QuadResult integrate(const Integrand& g, double a, double b, double rel_tol = 1e-10);

/// Adaptive Gauss–Kronrod on a smooth integrand over [a, b].
QuadResult integrate_smooth(const Integrand& g, double a, double b, double rel_tol = 1e-10);

/// ∫_a^∞ g via exp-sinh.
QuadResult integrate_to_infinity(const Integrand& g, double a, double rel_tol = 1e-10);

/// ∫_a^b g split at the given interior breakpoints; the first piece (which
/// may carry an endpoint singularity at a) uses the double-exponential rule.
QuadResult integrate_piecewise(const Integrand& g, double a, double b,
                               std::span<const double> breakpoints, double rel_tol);

/// Breakpoints a·2^k inside (a, b) starting at `scale`; used to resolve an
/// O(scale) feature on a long interval.
std::vector<double> dyadic_breakpoints(double scale, double b);

/// Numerically stable ln Σ exp(x_i); returns -∞ for an empty range.
double log_sum_exp(std::span<const double> xs);

/// Pairwise (tree) summation in index order. Deterministic for a fixed input.
double pairwise_sum(std::span<const double> xs);

}  // namespace fkbound::numerics
