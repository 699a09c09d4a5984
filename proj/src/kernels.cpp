#include "fkbound/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <fmt/format.h>

#include "fkbound/errors.hpp"

namespace fkbound::kernels {

namespace {

using numerics::kInf;
using numerics::kPi;
using numerics::log_gamma;

constexpr double kQuadTol = 1e-11;

void check_theta(double theta, int d) {
  if (!(theta > 0.0 && theta < 2.0)) throw DomainError(fmt::format("theta must lie in (0, 2), got {}", theta));
  if (d < 1 || !(theta < d)) throw DomainError(fmt::format("need theta < d, got theta = {}, d = {}", theta, d));
}

// Sum of tanh-sinh integrals over consecutive pieces of [a, b]; every piece
// may carry an endpoint singularity.
double integrate_pieces(const numerics::Integrand& g, double a, double b, std::vector<double> cuts, double tol) {
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  double lo = a;
  for (double c : cuts) {
    if (c > lo && c < b) {
      total += numerics::integrate(g, lo, c, tol).value;
      lo = c;
    }
  }
  return total + numerics::integrate(g, lo, b, tol).value;
}

}  // namespace

double heat_kernel(double t, double r, int d) {
  if (!(t > 0.0)) throw DomainError(fmt::format("heat kernel needs t > 0, got {}", t));
  return std::exp(-0.5 * d * std::log(2.0 * kPi * t) - r * r / (2.0 * t));
}

double heat_kernel(double t, std::span<const double> z) {
  double r2 = 0.0;
  for (double x : z) r2 += x * x;
  return heat_kernel(t, std::sqrt(r2), static_cast<int>(z.size()));
}

double subordination_integral(double theta, double r, int d) {
  check_theta(theta, d);
  if (!(r > 0.0)) throw DomainError("subordination needs r > 0");
  const double log_pref = 0.5 * d * std::log(2.0 * kPi) - 0.5 * theta * std::numbers::ln2 - log_gamma(theta / 2.0);
  const double beta = (d - theta - 2.0) / 2.0;
  // s = 1/(2u), ds = du / (2u²)
  const numerics::Integrand g = [&](double u) {
    if (u <= 0.0) return 0.0;
    const double s = 1.0 / (2.0 * u);
    const double pk = heat_kernel(s, r, d);
    if (pk == 0.0) return 0.0;
    return std::exp(log_pref + beta * std::log(s) + std::log(pk) - std::numbers::ln2 - 2.0 * std::log(u));
  };
  return numerics::integrate(g, 0.0, 1.0, 1e-12).value + numerics::integrate_to_infinity(g, 1.0, 1e-12).value;
}

double subordination_check(double theta, double r, int d) {
  const double lhs = std::pow(r, -theta);
  const double residual = std::abs(lhs - subordination_integral(theta, r, d)) / lhs;
  if (!(residual <= 1e-8)) {
    throw QuadratureFailure(fmt::format("subordination residual {:.3e} above 1e-8 (theta={}, r={}, d={})", residual,
                                        theta, r, d));
  }
  return residual;
}

double ConvolutionWeight::operator()(double t) const {
  if (t < 0.0 || t > length) return 0.0;
  return amplitude * std::exp(-rate * t);
}

std::string ConvolutionWeight::describe() const {
  if (rate == 0.0 && std::isinf(length)) return fmt::format("one(amplitude={})", amplitude);
  if (rate == 0.0) return fmt::format("indicator(length={}, amplitude={})", length, amplitude);
  if (std::isinf(length)) return fmt::format("exp_decay(rate={}, amplitude={})", rate, amplitude);
  return fmt::format("exp_decay(rate={}, amplitude={}, length={})", rate, amplitude, length);
}

ConvolutionCoefficient convolution_coefficient(double theta, double r, const ConvolutionWeight& h, int d) {
  check_theta(theta, d);
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("convolution coefficient needs finite r > 0");
  if (!(h.rate >= 0.0) || !(h.length > 0.0) || !std::isfinite(h.amplitude))
    throw DomainError("convolution weight needs rate >= 0, length > 0 and finite amplitude");

  ConvolutionCoefficient out{theta, d, r, h, 0.0, 2.0 * h.sup_norm() / (theta * (d - theta))};
  if (h.amplitude == 0.0) return out;

  // With w = t + s and v = t:
  //   a = pref ∫₀^∞ (2π)^{d/2} p_w(1)/w ∫₀^w h(v r²) (w - v)^β dv dw,  β = (d-θ-2)/2.
  const double beta = (d - theta - 2.0) / 2.0;
  const double ell = h.length / (r * r);
  const double kappa = h.rate * r * r;
  const double log_norm = 0.5 * d * std::log(2.0 * kPi);

  const auto inner = [&](double w) {
    const double m = std::min(w, ell);
    if (kappa == 0.0) {
      if (m >= w) return h.amplitude * std::pow(w, beta + 1.0) / (beta + 1.0);
      return h.amplitude * std::pow(w, beta + 1.0) * -std::expm1((beta + 1.0) * std::log1p(-ell / w)) / (beta + 1.0);
    }
    // y = κv; the weight e^{-y} is below 1e-26 past y = 60
    const double top = std::min(kappa * m, 60.0);
    const double kw = kappa * w;
    if (m >= w && kw <= 120.0) {
      // near the (w - v)^β endpoint: integrate in z = κ(w - v) so its distance stays exact
      const double zlo = std::max(0.0, kw - 60.0);
      double val = 0.0;
      if (zlo == 0.0) {
        // e^{z-κw} = e^{-κw}(1 + expm1 z); the constant part is exact, the rest is bounded
        const numerics::Integrand g = [&](double z) { return std::exp(-kw) * std::expm1(z) * std::pow(z, beta); };
        val = numerics::integrate(g, 0.0, kw, kQuadTol).value + std::exp(-kw) * std::pow(kw, beta + 1.0) / (beta + 1.0);
      } else {
        const numerics::Integrand g = [&](double z) { return std::exp(z - kw) * std::pow(z, beta); };
        val = numerics::integrate(g, zlo, kw, kQuadTol).value;
      }
      return h.amplitude * val * std::pow(kappa, -beta - 1.0);
    }
    const numerics::Integrand g = [&](double y) { return std::exp(-y) * std::pow(w - y / kappa, beta); };
    return h.amplitude * numerics::integrate(g, 0.0, top, kQuadTol).value / kappa;
  };
  const numerics::Integrand outer = [&](double w) {
    if (w <= 0.0) return 0.0;
    const double pk = heat_kernel(w, 1.0, d);
    if (pk == 0.0) return 0.0;
    return std::exp(log_norm + std::log(pk) - std::log(w)) * inner(w);
  };

  const double split = std::isfinite(ell) ? ell : (kappa > 0.0 ? std::max(1.0 / kappa, 1.0) : 1.0);
  const double integral =
      numerics::integrate(outer, 0.0, split, 1e-10).value + numerics::integrate_to_infinity(outer, split, 1e-10).value;

  const double pref = 1.0 / std::exp(0.5 * theta * std::numbers::ln2 + log_gamma(theta / 2.0) + std::log(theta));
  out.value = pref * integral;
  return out;
}

ConvolutionSuite convolution_suite(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(gen); };
  ConvolutionSuite suite;
  suite.samples.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const int d = 2 + static_cast<int>(gen() % 5);
    const double theta = between(0.05, std::min(2.0, static_cast<double>(d)) - 0.05);
    const double r = std::pow(10.0, between(std::log10(0.05), std::log10(20.0)));
    const double amp = between(0.1, 3.0);
    const ConvolutionWeight h = gen() % 2 == 0
                                    ? ConvolutionWeight::exp_decay(std::pow(10.0, between(-3.0, 3.0)) / (r * r), amp)
                                    : ConvolutionWeight::indicator(r * r * std::pow(10.0, between(-3.0, 6.0)), amp);
    ConvolutionCoefficient c;
    try {
      c = convolution_coefficient(theta, r, h, d);
    } catch (const QuadratureFailure& e) {
      throw QuadratureFailure(
          fmt::format("{} (sample {}: theta={}, d={}, r={}, h={})", e.what(), k, theta, d, r, h.describe()));
    }
    const double ratio = std::abs(c.value) / c.bound;
    suite.max_ratio = std::max(suite.max_ratio, ratio);
    if (!(ratio < 1.0)) ++suite.violations;
    suite.samples.push_back(std::move(c));
  }
  return suite;
}

std::vector<SubordinationRow> subordination_grid() {
  std::vector<SubordinationRow> rows;
  for (double theta : {0.5, 1.0, 1.5}) {
    for (int d : {3, 4, 5}) {
      for (double r : {0.5, 1.0, 2.0}) {
        const double lhs = std::pow(r, -theta);
        const double residual = std::abs(lhs - subordination_integral(theta, r, d)) / lhs;
        rows.push_back({theta, d, r, residual, residual <= 1e-8});
      }
    }
  }
  return rows;
}

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Single: return "single";
    case ActionKind::SelfDouble: return "self_double";
    case ActionKind::CrossDouble: return "cross_double";
  }
  return "?";
}

ActionKind action_kind_from_string(std::string_view s) {
  if (s == "single") return ActionKind::Single;
  if (s == "self_double") return ActionKind::SelfDouble;
  if (s == "cross_double") return ActionKind::CrossDouble;
  throw ValidationError(fmt::format("unknown action kind '{}'", s));
}

double hls_sharp_constant(int d, double theta) {
  check_theta(theta, d);
  const double dd = d;
  return std::exp(0.5 * theta * std::log(kPi) + log_gamma(dd / 2.0 - theta / 2.0) - log_gamma(dd - theta / 2.0) +
                  (theta / dd - 1.0) * (log_gamma(dd / 2.0) - log_gamma(dd)));
}

ExpectationFormula expected_action(ActionKind kind, const CouplingFunction& f, const BoundParams& params,
                                   double offset, std::optional<double> hls_constant) {
  params.validate();
  if (!(offset >= 0.0)) throw DomainError("offset must be >= 0");
  const double theta = params.theta;
  const double T = params.T;
  ExpectationFormula out;
  out.kind = kind;
  out.K = bounds::moment_constant(theta, params.d);

  switch (kind) {
    case ActionKind::Single:
      out.inequality = offset != 0.0;
      out.note = out.inequality ? "upper bound (rearrangement); exact at offset 0" : "exact";
      out.value = T == 0.0 ? 0.0 : out.K * schedule::norm(f, 1.0, T, schedule::Weight::inv_pow(theta / 2.0)).value;
      return out;
    case ActionKind::SelfDouble:
      out.note = "exact";
      out.value = out.K * schedule::iterated_norm(f, T, 1.0, schedule::Weight::inv_pow(theta / 2.0), 1.0);
      return out;
    case ActionKind::CrossDouble: {
      out.inequality = true;
      const double c = hls_constant.value_or(hls_sharp_constant(params.d, theta));
      if (!(c > 0.0)) throw DomainError("HLS constant must be positive");
      out.note = fmt::format("Hardy-Littlewood-Sobolev upper bound, C_HLS = {}", c);
      if (T == 0.0 || f.is_zero()) return out;
      const double p = 2.0 * params.d / (2.0 * params.d - theta);
      const double pref = c * std::pow(p, -params.d / p) * std::pow(2.0 * kPi, -theta / 2.0);
      const auto bps = f.breakpoints(T);
      const numerics::Integrand outer = [&](double t) {
        if (t <= 0.0) return 0.0;
        const numerics::Integrand g = [&](double s) {
          const double v = f(t - s);
          return v == 0.0 ? 0.0 : v * std::pow(s, -theta / 4.0);
        };
        std::vector<double> cuts;
        for (double b : bps) cuts.push_back(t - b);
        return std::pow(t, -theta / 4.0) * integrate_pieces(g, 0.0, t, std::move(cuts), 1e-10);
      };
      std::vector<double> cuts = bps;
      const auto dy = numerics::dyadic_breakpoints(f.time_scale(), T);
      cuts.insert(cuts.end(), dy.begin(), dy.end());
      out.value = pref * integrate_pieces(outer, 0.0, T, std::move(cuts), 1e-9);
      return out;
    }
  }
  return out;
}

double stochastic_derivative_bound(const CouplingFunction& f, double theta, int d, double u, double radius) {
  if (!(theta >= 1.0 && theta < 2.0))
    throw DomainError(fmt::format("stochastic derivative bound needs 1 <= theta < 2, got {}", theta));
  check_theta(theta, d);
  if (!f.is_nonincreasing()) throw DomainError("stochastic derivative bound needs a non-increasing coupling");
  if (!(radius > 0.0)) throw DomainError("radius must be > 0");
  if (!(u >= 0.0)) throw DomainError("time u must be >= 0");
  return 2.0 * f(u) / ((d - theta) * std::pow(radius, theta - 1.0));
}

double conditioned_derivative(const CouplingFunction& f, double theta, int d, double u, double T, double radius) {
  if (!(u >= 0.0 && u < T)) throw DomainError("need 0 <= u < T");
  ConvolutionWeight h;
  h.length = T - u;
  const auto& form = f.form();
  if (const auto* c = std::get_if<schedule::Constant>(&form)) {
    h.amplitude = c->level;
  } else if (const auto* e = std::get_if<schedule::ExpDecay>(&form)) {
    h.amplitude = e->amplitude * std::exp(-e->rate * u);
    h.rate = e->rate;
  } else if (const auto* i = std::get_if<schedule::Indicator>(&form)) {
    if (u > i->cutoff) return 0.0;
    h.amplitude = i->height;
    h.length = std::min(T, i->cutoff) - u;
    if (h.length <= 0.0) return 0.0;
  } else {
    throw DomainError(fmt::format("conditioned derivative not available for {} coupling", f.kind()));
  }
  const auto a = convolution_coefficient(theta, radius, h, d);
  return theta * std::abs(a.value) * std::pow(radius, 1.0 - theta);
}

}  // namespace fkbound::kernels
