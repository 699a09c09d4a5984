#pragma once

// Radial minimizer of the Pekar-type functional
//   E[ψ] = ½∫|∇ψ|² - g ∫∫ ψ(x)² ψ(y)² / |x-y|^θ dx dy,   ‖ψ‖₂ = 1,
// whose minimum -E gives a lower bound on the growth rate of E[e^{action}]
// for positive-definite self-interactions with ‖f‖₁ = g.

#include <cstddef>
#include <optional>
#include <vector>

#include "fkbound/models.hpp"

namespace fkbound::pekar {

struct PekarProblem {
  double theta = 1.0;
  double coupling = 1.0;  // g
  int d = 3;
  /// Box radius; by default a fixed multiple of the optimal Gaussian width.
  std::optional<double> r_max;
  std::size_t nodes = 800;
  std::size_t max_iters = 20000;
  double tolerance = 1e-8;  // projected-gradient norm

  void validate() const;
};

struct PekarSolution {
  double energy = 0.0;
  double kinetic = 0.0;    // ½∫|∇ψ|²
  double potential = 0.0;  // ∫∫ψ²ψ²/|x-y|^θ, so energy = kinetic - g·potential
  std::vector<double> r;
  std::vector<double> psi;
  std::size_t iterations = 0;
  double residual = 0.0;
  /// d/dλ E[λ^{d/2}ψ(λ·)] at λ = 1, i.e. 2K - θgP, relative to |energy|.
  double virial = 0.0;
  double norm_error = 0.0;  // max over iterates of |‖ψ‖₂ - 1|
  double r_max = 0.0;
  std::size_t nodes = 0;
  double tail_mass = 0.0;  // mass beyond 0.9·r_max
  bool monotone = true;
};

/// Length 1/√a of the best Gaussian trial e^{-a|x|²}.
double gaussian_length(double theta, double g, int d);

/// Gaussian trial energy, min_a (d a/2 - g κ a^{θ/2}) with κ = Γ((d-θ)/2)/Γ(d/2).
double gaussian_energy(double theta, double g, int d);

/// Radial average of |x-y|^{-θ} over the spheres |x| = r, |y| = s.
double radial_kernel(double r, double s, double theta, int d);

/// Throws NoConvergence after max_iters, GridTooSmall when the mass beyond
/// 0.9·r_max exceeds 1e-6. `threads` only affects kernel assembly.
PekarSolution solve(const PekarProblem& p, unsigned threads = 0);

struct ScalingRow {
  double lambda = 1.0;
  double energy = 0.0;
  double ratio = 0.0;     // energy(λg)/energy(g)
  double expected = 0.0;  // λ^{2/(2-θ)}
  double rel_error = 0.0;
  bool pass = false;
};

struct ScalingReport {
  PekarSolution base;
  std::vector<ScalingRow> rows;
  double tolerance = 0.02;
  bool pass = false;
};

ScalingReport scaling_check(const PekarProblem& p, const std::vector<double>& lambdas = {2.0, 4.0},
                            double tolerance = 0.02, unsigned threads = 0);

/// Coupling g = ‖f‖₁ of the polaron self-interaction f(t) = αe^{-t}/√2.
double polaron_coupling(double alpha);

struct Sandwich {
  double coupling = 0.0;
  double pekar_slope = 0.0;     // -E_{f,θ}
  double jensen_slope = 0.0;
  double theorem2_slope = 0.0;
  bool pekar_below_bound = false;
  bool jensen_below_bound = false;
  bool pekar_above_jensen = false;
  std::optional<PekarSolution> solution;  // empty at zero coupling
};

/// Requires a single self-interaction with an exponentially decaying kernel
/// (NotPositiveDefinite otherwise). Throws VerificationFailure when either
/// lower slope exceeds the self-interaction bound slope.
Sandwich lower_bound_sandwich(const models::ModelSpec& m, const PekarProblem& tuning = {}, unsigned threads = 0);

}  // namespace fkbound::pekar
