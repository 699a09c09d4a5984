#include "fkbound/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "fkbound/errors.hpp"
#include "fkbound/kernels.hpp"

namespace fkbound::models {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

// ∫₀^∞ f(u) u^{-w} du for the coupling forms that have it in closed form.
double weighted_tail_integral(const CouplingFunction& f, double w) {
  using namespace schedule;
  if (f.is_zero()) return 0.0;
  if (const auto* e = std::get_if<ExpDecay>(&f.form())) {
    return e->amplitude * std::pow(e->rate, w - 1.0) * std::tgamma(1.0 - w);
  }
  if (const auto* i = std::get_if<Indicator>(&f.form())) {
    return i->height * std::pow(i->cutoff, 1.0 - w) / (1.0 - w);
  }
  throw NoLinearSlope(fmt::format("no linear Jensen slope for a {} coupling", f.kind()));
}

}  // namespace

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Hydrogen: return "hydrogen";
    case ModelKind::InverseSquare: return "inverse_square";
    case ModelKind::Polaron: return "polaron";
    case ModelKind::Bipolaron: return "bipolaron";
    case ModelKind::NelsonQ: return "nelson";
  }
  return "unknown";
}

ModelKind model_kind_from_string(std::string_view s) {
  for (auto k : {ModelKind::Hydrogen, ModelKind::InverseSquare, ModelKind::Polaron, ModelKind::Bipolaron,
                 ModelKind::NelsonQ}) {
    if (s == to_string(k)) return k;
  }
  if (s == "inverse-square") return ModelKind::InverseSquare;
  if (s == "nelsonq" || s == "nelson_q") return ModelKind::NelsonQ;
  throw ValidationError(fmt::format("unknown model '{}'", s));
}

ModelSpec build(const ModelParams& p) {
  ModelSpec m;
  m.params = p;
  m.name = std::string(to_string(p.kind));
  const double g = p.alpha / std::numbers::sqrt2;
  switch (p.kind) {
    case ModelKind::Hydrogen:
      require(finite_nonneg(p.alpha), "hydrogen needs alpha >= 0");
      m.theta = 1.0;
      m.d = 3;
      m.components.push_back({"coulomb", bounds::Theorem::Single, CouplingFunction::constant(p.alpha), 1.0});
      break;
    case ModelKind::InverseSquare:
      require(finite_nonneg(p.alpha), "inverse_square needs alpha >= 0");
      require(p.theta >= 1.0 && p.theta < 2.0, fmt::format("inverse_square needs 1 <= theta < 2, got {}", p.theta));
      require(p.d >= 3, fmt::format("inverse_square needs d >= 3, got {}", p.d));
      m.theta = p.theta;
      m.d = p.d;
      m.components.push_back({"potential", bounds::Theorem::Single, CouplingFunction::constant(p.alpha), 1.0});
      break;
    case ModelKind::Polaron:
      require(finite_nonneg(p.alpha), "polaron needs alpha >= 0");
      m.theta = 1.0;
      m.d = 3;
      m.components.push_back({"self", bounds::Theorem::SelfDouble, CouplingFunction::exp_decay(g, 1.0), 1.0});
      break;
    case ModelKind::Bipolaron:
      require(finite_nonneg(p.alpha), "bipolaron needs alpha >= 0");
      m.theta = 1.0;
      m.d = 3;
      // Cauchy–Schwarz: E[e^{2gC + gS_X + gS_Y}] <= E[e^{4gC}]^{1/2} · E[e^{2gS}].
      m.components.push_back(
          {"cross", bounds::Theorem::CrossDouble, CouplingFunction::exp_decay(4.0 * g, 1.0), 0.5});
      m.components.push_back({"self", bounds::Theorem::SelfDouble, CouplingFunction::exp_decay(2.0 * g, 1.0), 1.0});
      break;
    case ModelKind::NelsonQ:
      require(finite_nonneg(p.gamma), "nelson needs gamma >= 0");
      require(std::isfinite(p.tau) && p.tau > 0.0, "nelson needs tau > 0");
      require(p.theta > 1.0 && p.theta < 2.0, fmt::format("nelson needs 1 < theta < 2, got {}", p.theta));
      m.theta = p.theta;
      m.d = 3;
      m.components.push_back(
          {"self", bounds::Theorem::SelfDouble, CouplingFunction::indicator(p.gamma, p.tau), 1.0});
      break;
  }
  return m;
}

mc::ActionSpec ModelSpec::action(double T) const {
  const double g = params.alpha / std::numbers::sqrt2;
  switch (params.kind) {
    case ModelKind::Hydrogen:
    case ModelKind::InverseSquare:
      return mc::ActionSpec::single(CouplingFunction::constant(params.alpha), theta, d, T);
    case ModelKind::Polaron:
      return mc::ActionSpec::self_double(CouplingFunction::exp_decay(g, 1.0), theta, d, T);
    case ModelKind::Bipolaron: {
      const auto f = CouplingFunction::exp_decay(g, 1.0);
      mc::ActionSpec s;
      s.theta = theta;
      s.d = d;
      s.T = T;
      s.terms.push_back({mc::TermKind::CrossDouble, f, 2.0, 0, 1, 0.0});
      s.terms.push_back({mc::TermKind::SelfDouble, f, 1.0, 0, 1, 0.0});
      s.terms.push_back({mc::TermKind::SelfDouble, f, 1.0, 1, 0, 0.0});
      return s;
    }
    case ModelKind::NelsonQ:
      return mc::ActionSpec::self_double(CouplingFunction::indicator(params.gamma, params.tau), theta, d, T);
  }
  throw DomainError("unknown model");
}

ModelBound log_bound(const ModelSpec& m, double T) {
  ModelBound out;
  const bounds::BoundParams bp{m.theta, m.d, T};
  for (const auto& c : m.components) {
    out.reports.push_back(bounds::theorem_bound(c.theorem, c.f, bp));
    out.log_bound += c.exponent * out.reports.back().log_bound;
  }
  return out;
}

NelsonConstant nelson_constant(double theta, double tau, int d) {
  const auto k = bounds::coefficients(theta, d);
  NelsonConstant c;
  c.c1 = k.A * std::pow(tau, 2.0 / (2.0 - theta));
  c.c2 = k.B * std::pow(tau, 1.0 - theta / 2.0) / (1.0 - theta / 2.0);
  c.c = std::max(c.c1, c.c2);
  return c;
}

ModelSlope bound_slope(const ModelSpec& m) {
  ModelSlope out;
  for (const auto& c : m.components) {
    const auto s = bounds::asymptotic_slope(c.theorem, c.f, m.theta, m.d);
    out.slope += c.exponent * s.slope;
    out.analytic = out.analytic && s.analytic;
    if (s.subleading_coefficient != 0.0 && std::abs(s.subleading_power - 0.5) < 1e-15) {
      out.sqrt_coefficient += c.exponent * s.subleading_coefficient;
    }
    out.components.push_back(s);
  }
  if (m.params.kind == ModelKind::NelsonQ) out.nelson = nelson_constant(m.theta, m.params.tau, m.d);
  return out;
}

double energy_lower_bound(const ModelSpec& m) {
  if (m.params.kind == ModelKind::InverseSquare) return bounds::inverse_square_energy(m.params.alpha, m.theta, m.d);
  return -bound_slope(m).slope;
}

double jensen_lower_bound(const ModelSpec& m, double T) {
  const auto spec = m.action(T);
  const bounds::BoundParams bp{m.theta, m.d, T};
  double total = 0.0;
  for (const auto& t : spec.terms) {
    if (t.kind == mc::TermKind::Single) {
      total += t.weight * kernels::expected_action(kernels::ActionKind::Single, t.f, bp, t.offset).value;
    } else if (t.kind == mc::TermKind::SelfDouble) {
      total += t.weight * kernels::expected_action(kernels::ActionKind::SelfDouble, t.f, bp).value;
    }
  }
  return total;
}

double jensen_slope(const ModelSpec& m) {
  const auto spec = m.action(1.0);
  const double K = bounds::moment_constant(m.theta, m.d);
  double total = 0.0;
  for (const auto& t : spec.terms) {
    if (t.kind == mc::TermKind::SelfDouble) total += t.weight * K * weighted_tail_integral(t.f, m.theta / 2.0);
  }
  return total;
}

VerifyReport verify(const ModelSpec& m, double T, std::size_t M, std::size_t N, std::uint64_t seed,
                    unsigned threads, bool override_guard) {
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError(fmt::format("T must be > 0, got {}", T));
  if (N < 32 || N % 2 != 0) throw ValidationError("verify needs an even step count N >= 32");
  const double slope = bound_slope(m).slope;
  VerifyReport r;
  r.T = T;
  if (slope * T > kHeavyTailGuard) {
    if (!override_guard) {
      throw ValidationError(fmt::format("slope*T = {:.3g} exceeds the heavy-tail guard {}; shorten T or override",
                                        slope * T, kHeavyTailGuard));
    }
    r.heavy_tail_override = true;
  }
  r.log_bound = log_bound(m, T).log_bound;
  r.jensen = jensen_lower_bound(m, T);
  r.ladder = mc::ladder(m.action(T), M, {N / 2, N}, seed, threads);
  const auto& est = r.mc();
  r.tolerance = 3.0 * est.stderr_log + r.ladder.allowance;

  const auto row = [&](std::string name, double lhs, double rhs, double tol) {
    VerifyRow v{std::move(name), lhs, rhs, tol, rhs + tol - lhs, false};
    v.pass = v.margin >= 0.0;
    r.rows.push_back(std::move(v));
  };
  row("jensen <= mc", r.jensen, est.log_mean, r.tolerance);
  row("mc <= bound", est.log_mean, r.log_bound, r.tolerance);
  row("jensen <= bound", r.jensen, r.log_bound, 0.0);
  r.pass = std::all_of(r.rows.begin(), r.rows.end(), [](const VerifyRow& v) { return v.pass; });
  return r;
}

}  // namespace fkbound::models
