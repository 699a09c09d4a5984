#pragma once

// Exactly solvable reference: E[exp(-(ω²/2)∫₀ᵀ X_t² dt)] = (cosh ωT)^{-1/2} for
// one-dimensional Brownian motion, reconstructed from the stochastic
// derivative ρ_s = r(s, T)·X_s of the action.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fkbound/mc.hpp"

namespace fkbound::oscillator {

struct OscillatorConfig {
  double omega = 1.0;
  double T = 1.0;
  std::size_t grid = 256;  // initial step count; refined until the residual target is met

  void validate() const;
};

struct RiccatiSolution {
  std::vector<double> s;  // ascending nodes, s.front() = 0, s.back() = T
  std::vector<double> r;  // r(s_i, T)
  /// max_i |-ω²(T - s_i) - r_i + ∫_{s_i}^T r² dt|
  double residual = 0.0;
  std::size_t steps = 0;
};

inline constexpr double kRiccatiResidualTarget = 1e-8;

/// r' = ω² - r², r(T) = 0, integrated backward with classical RK4; the step
/// count doubles until the integral-equation residual is <= 1e-8.
RiccatiSolution solve_riccati(const OscillatorConfig& cfg);

double riccati_closed_form(double omega, double T, double s);

struct LogExpectation {
  double closed_form = 0.0;     // -½ ln cosh ωT
  double reconstruction = 0.0;  // -ω²T²/4 + ½ ∫₀ᵀ r(s,T)² s ds
  double residual = 0.0;
  double riccati_residual = 0.0;
  double tanh_error = 0.0;  // max_i |r_i - ω tanh(ω(s_i - T))|
};

/// Throws VerificationFailure when the two routes differ by more than 1e-7.
LogExpectation log_expectation(const OscillatorConfig& cfg);

struct McCrosscheck {
  mc::Ladder ladder;
  double exact = 0.0;
  double difference = 0.0;  // finest log_mean - exact
  double tolerance = 0.0;   // 3·stderr + allowance
  bool pass = false;
};

/// MC estimate of the same expectation (d = 1, midpoint rule) on the ladder
/// N/4, N/2, N. Requires ωT <= 4.
McCrosscheck mc_crosscheck(const OscillatorConfig& cfg, std::size_t M, std::size_t N, std::uint64_t seed,
                           unsigned threads = 0);

}  // namespace fkbound::oscillator
