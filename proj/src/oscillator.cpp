#include "fkbound/oscillator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include <fmt/format.h>

#include "fkbound/errors.hpp"

namespace fkbound::oscillator {

namespace {

constexpr std::size_t kMaxSteps = std::size_t{1} << 22;
constexpr double kReconstructionTarget = 1e-9;

// Per-step Simpson rule on the cubic Hermite interpolant of r (values and
// slopes r' = ω² - r² at both ends), applied to g(s, r(s)).
template <class G>
double hermite_simpson(double s0, double s1, double r0, double r1, double w2, G g) {
  const double h = s1 - s0;
  const double d0 = w2 - r0 * r0;
  const double d1 = w2 - r1 * r1;
  const double rm = 0.5 * (r0 + r1) + h * (d0 - d1) / 8.0;
  return h / 6.0 * (g(s0, r0) + 4.0 * g(0.5 * (s0 + s1), rm) + g(s1, r1));
}

RiccatiSolution integrate(double omega, double T, std::size_t steps) {
  const double w2 = omega * omega;
  const double h = T / static_cast<double>(steps);
  const auto rhs = [w2](double r) { return w2 - r * r; };
  RiccatiSolution sol;
  sol.steps = steps;
  sol.s.resize(steps + 1);
  sol.r.resize(steps + 1);
  sol.s[steps] = T;
  sol.r[steps] = 0.0;
  for (std::size_t i = steps; i-- > 0;) {
    const double r = sol.r[i + 1];
    const double k1 = rhs(r);
    const double k2 = rhs(r - 0.5 * h * k1);
    const double k3 = rhs(r - 0.5 * h * k2);
    const double k4 = rhs(r - h * k3);
    sol.r[i] = r - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    sol.s[i] = static_cast<double>(i) * h;
  }

  double tail = 0.0;  // ∫_{s_i}^T r²
  double worst = std::abs(sol.r[steps]);
  const auto sq = [](double, double r) { return r * r; };
  for (std::size_t i = steps; i-- > 0;) {
    tail += hermite_simpson(sol.s[i], sol.s[i + 1], sol.r[i], sol.r[i + 1], w2, sq);
    worst = std::max(worst, std::abs(-w2 * (T - sol.s[i]) - sol.r[i] + tail));
  }
  sol.residual = worst;
  return sol;
}

}  // namespace

void OscillatorConfig::validate() const {
  if (!(omega >= 0.0) || !std::isfinite(omega)) throw DomainError(fmt::format("omega must be >= 0, got {}", omega));
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError(fmt::format("T must be > 0, got {}", T));
  if (grid < 2) throw DomainError("oscillator grid needs at least 2 steps");
}

double riccati_closed_form(double omega, double T, double s) { return omega * std::tanh(omega * (s - T)); }

RiccatiSolution solve_riccati(const OscillatorConfig& cfg) {
  cfg.validate();
  for (std::size_t steps = cfg.grid; steps <= kMaxSteps; steps *= 2) {
    RiccatiSolution sol = integrate(cfg.omega, cfg.T, steps);
    if (sol.residual <= kRiccatiResidualTarget) return sol;
  }
  throw StepSizeFailure(fmt::format("Riccati residual above {} at {} steps (omega={}, T={})", kRiccatiResidualTarget,
                                    kMaxSteps, cfg.omega, cfg.T));
}

LogExpectation log_expectation(const OscillatorConfig& cfg) {
  cfg.validate();
  const double w = cfg.omega;
  const double T = cfg.T;
  LogExpectation out;
  // ln cosh x = x + log1p(e^{-2x}) - ln 2, stable for large x.
  const double x = w * T;
  out.closed_form = -0.5 * (x + std::log1p(std::exp(-2.0 * x)) - std::numbers::ln2);

  // -ω²T²/4 + ½∫r²s = ½∫(r² - ω²)s, without the cancellation at large ωT.
  const auto reconstruct = [w](const RiccatiSolution& sol) {
    double weighted = 0.0;
    const auto g = [w](double s, double r) { return (r - w) * (r + w) * s; };
    for (std::size_t i = 0; i + 1 < sol.s.size(); ++i) {
      weighted += hermite_simpson(sol.s[i], sol.s[i + 1], sol.r[i], sol.r[i + 1], w * w, g);
    }
    return 0.5 * weighted;
  };
  // The s weight amplifies step error near s = T, so refine further until
  // the reconstruction itself settles.
  RiccatiSolution sol = solve_riccati(cfg);
  out.reconstruction = reconstruct(sol);
  while (sol.steps < kMaxSteps) {
    RiccatiSolution finer = integrate(w, T, 2 * sol.steps);
    const double next = reconstruct(finer);
    const double change = std::abs(next - out.reconstruction);
    sol = std::move(finer);
    out.reconstruction = next;
    if (change <= kReconstructionTarget) break;
  }
  out.residual = std::abs(out.reconstruction - out.closed_form);
  out.riccati_residual = sol.residual;
  for (std::size_t i = 0; i < sol.s.size(); ++i) {
    out.tanh_error = std::max(out.tanh_error, std::abs(sol.r[i] - riccati_closed_form(w, T, sol.s[i])));
  }
  if (out.residual > 1e-7) {
    throw VerificationFailure(fmt::format("oscillator reconstruction {} differs from -ln cosh/2 = {} by {:.3e}",
                                          out.reconstruction, out.closed_form, out.residual));
  }
  return out;
}

McCrosscheck mc_crosscheck(const OscillatorConfig& cfg, std::size_t M, std::size_t N, std::uint64_t seed,
                           unsigned threads) {
  cfg.validate();
  if (cfg.omega * cfg.T > 4.0) throw DomainError("MC cross-check needs omega*T <= 4");
  if (N < 64 || N % 4 != 0) throw ValidationError("MC cross-check needs N >= 64 divisible by 4");
  const auto spec = mc::ActionSpec::quadratic(-0.5 * cfg.omega * cfg.omega, 1, cfg.T);
  McCrosscheck out;
  out.ladder = mc::ladder(spec, M, {N / 4, N / 2, N}, seed, threads);
  const double x = cfg.omega * cfg.T;
  out.exact = -0.5 * (x + std::log1p(std::exp(-2.0 * x)) - std::numbers::ln2);
  const auto& fine = out.ladder.rungs.back();
  out.difference = fine.log_mean - out.exact;
  out.tolerance = 3.0 * fine.stderr_log + out.ladder.allowance;
  out.pass = std::abs(out.difference) <= out.tolerance;
  return out;
}

}  // namespace fkbound::oscillator
