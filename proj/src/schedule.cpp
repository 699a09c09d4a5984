#include "fkbound/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "fkbound/errors.hpp"

namespace fkbound::schedule {

namespace {

using numerics::kInf;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_nonneg(double x, const char* what) {
  if (!std::isfinite(x) || x < 0.0) throw DomainError(fmt::format("{} must be finite and >= 0, got {}", what, x));
}

void require_pos(double x, const char* what) {
  if (!std::isfinite(x) || x <= 0.0) throw DomainError(fmt::format("{} must be finite and > 0, got {}", what, x));
}

// ∫_lo^hi t^{-b} dt, +∞ when divergent at lo = 0.
double power_segment(double lo, double hi, double b) {
  if (!(hi > lo)) return 0.0;
  if (b == 0.0) return hi - lo;
  if (b == 1.0) return lo == 0.0 ? kInf : std::log(hi / lo);
  if (b > 1.0 && lo == 0.0) return kInf;
  return (std::pow(hi, 1.0 - b) - std::pow(lo, 1.0 - b)) / (1.0 - b);
}

// ∫₀ˢ f(t)^p t^{-b} dt for every closed form; tabulated data uses prefix
// sums so that repeated evaluation (outer integrals) stays O(log n).
class PowerIntegral {
 public:
  PowerIntegral(const CouplingFunction& f, double p, double b) : f_(f), p_(p), b_(b) {
    if (const auto* tab = std::get_if<Tabulated>(&f.form())) {
      prefix_.assign(tab->times.size(), 0.0);
      for (std::size_t i = 0; i + 1 < tab->times.size(); ++i) {
        prefix_[i + 1] = prefix_[i] + piece(tab->values[i], tab->times[i], tab->times[i + 1]);
      }
    }
  }

  double operator()(double s) const {
    if (s <= 0.0) return 0.0;
    return std::visit(
        overloaded{
            [&](const Constant& c) { return piece(c.level, 0.0, s); },
            [&](const ExpDecay& e) {
              if (e.amplitude == 0.0) return 0.0;
              const double lambda = p_ * e.rate;
              const double ap = std::pow(e.amplitude, p_);
              if (b_ == 0.0) return ap * -std::expm1(-lambda * s) / lambda;
              if (b_ >= 1.0) return kInf;
              return ap * std::pow(lambda, b_ - 1.0) * numerics::lower_incomplete_gamma(1.0 - b_, lambda * s);
            },
            [&](const Indicator& ind) { return piece(ind.height, 0.0, std::min(s, ind.cutoff)); },
            [&](const PowerLaw& pl) {
              if (pl.amplitude == 0.0) return 0.0;
              const double e = p_ * pl.exponent - b_;
              if (e <= -1.0) return kInf;
              return std::pow(pl.amplitude, p_) * std::pow(s, e + 1.0) / (e + 1.0);
            },
            [&](const Tabulated& tab) {
              const auto& t = tab.times;
              if (s >= t.back()) return prefix_.back();
              const auto it = std::upper_bound(t.begin(), t.end(), s);
              const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
              return prefix_[i] + piece(tab.values[i], t[i], s);
            },
        },
        f_.form());
  }

 private:
  double piece(double level, double lo, double hi) const {
    if (level == 0.0 || !(hi > lo)) return 0.0;
    return std::pow(level, p_) * power_segment(lo, hi, b_);
  }

  const CouplingFunction& f_;
  double p_;
  double b_;
  std::vector<double> prefix_;
};

double sup_on(const CouplingFunction& f, double upper) {
  if (upper <= 0.0) return 0.0;
  return std::visit(overloaded{
                        [](const Constant& c) { return c.level; },
                        [](const ExpDecay& e) { return e.amplitude; },
                        [](const Indicator& i) { return i.height; },
                        [&](const PowerLaw& pl) {
                          if (pl.amplitude == 0.0) return 0.0;
                          if (pl.exponent < 0.0) return kInf;
                          return pl.amplitude * std::pow(upper, pl.exponent);
                        },
                        [&](const Tabulated& tab) {
                          double m = 0.0;
                          for (std::size_t i = 0; i < tab.times.size(); ++i) {
                            if (tab.times[i] < upper || (tab.times[i] == upper && i + 1 == tab.times.size()))
                              m = std::max(m, tab.values[i]);
                          }
                          return m;
                        },
                    },
                    f.form());
}

}  // namespace

CouplingFunction CouplingFunction::constant(double level) {
  require_nonneg(level, "constant level");
  return CouplingFunction(Constant{level});
}

CouplingFunction CouplingFunction::exp_decay(double amplitude, double rate) {
  require_nonneg(amplitude, "exp_decay amplitude");
  require_pos(rate, "exp_decay rate");
  return CouplingFunction(ExpDecay{amplitude, rate});
}

CouplingFunction CouplingFunction::indicator(double height, double cutoff) {
  require_nonneg(height, "indicator height");
  require_pos(cutoff, "indicator cutoff");
  return CouplingFunction(Indicator{height, cutoff});
}

CouplingFunction CouplingFunction::power_law(double amplitude, double exponent) {
  require_nonneg(amplitude, "power_law amplitude");
  if (!std::isfinite(exponent)) throw DomainError("power_law exponent must be finite");
  return CouplingFunction(PowerLaw{amplitude, exponent});
}

CouplingFunction CouplingFunction::tabulated(std::vector<double> times, std::vector<double> values) {
  if (times.size() < 2) throw DomainError("tabulated coupling needs at least two grid points");
  if (times.size() != values.size())
    throw DomainError(fmt::format("tabulated grid has {} times but {} values", times.size(), values.size()));
  if (times.front() != 0.0) throw DomainError("tabulated grid must start at t = 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1]) || !std::isfinite(times[i]))
      throw DomainError("tabulated grid must be strictly increasing and finite");
  }
  for (double v : values) require_nonneg(v, "tabulated value");
  return CouplingFunction(Tabulated{std::move(times), std::move(values)});
}

std::string_view CouplingFunction::kind() const {
  return std::visit(overloaded{
                        [](const Constant&) { return std::string_view("constant"); },
                        [](const ExpDecay&) { return std::string_view("exp_decay"); },
                        [](const Indicator&) { return std::string_view("indicator"); },
                        [](const PowerLaw&) { return std::string_view("power_law"); },
                        [](const Tabulated&) { return std::string_view("tabulated"); },
                    },
                    form_);
}

double CouplingFunction::operator()(double t) const {
  return std::visit(overloaded{
                        [](const Constant& c) { return c.level; },
                        [&](const ExpDecay& e) { return e.amplitude * std::exp(-e.rate * t); },
                        [&](const Indicator& i) { return t <= i.cutoff ? i.height : 0.0; },
                        [&](const PowerLaw& pl) {
                          if (pl.amplitude == 0.0) return 0.0;
                          if (t == 0.0) return pl.exponent < 0.0 ? kInf : (pl.exponent == 0.0 ? pl.amplitude : 0.0);
                          return pl.amplitude * std::pow(t, pl.exponent);
                        },
                        [&](const Tabulated& tab) {
                          const auto& ts = tab.times;
                          if (t < 0.0 || t > ts.back())
                            throw DomainError(fmt::format("t = {} outside tabulated grid [0, {}]", t, ts.back()));
                          const auto it = std::upper_bound(ts.begin(), ts.end(), t);
                          return tab.values[static_cast<std::size_t>(it - ts.begin()) - 1];
                        },
                    },
                    form_);
}

bool CouplingFunction::is_zero() const {
  return std::visit(overloaded{
                        [](const Constant& c) { return c.level == 0.0; },
                        [](const ExpDecay& e) { return e.amplitude == 0.0; },
                        [](const Indicator& i) { return i.height == 0.0; },
                        [](const PowerLaw& pl) { return pl.amplitude == 0.0; },
                        [](const Tabulated& tab) {
                          return std::all_of(tab.values.begin(), tab.values.end(), [](double v) { return v == 0.0; });
                        },
                    },
                    form_);
}

bool CouplingFunction::is_nonincreasing() const {
  return std::visit(overloaded{
                        [](const Constant&) { return true; },
                        [](const ExpDecay&) { return true; },
                        [](const Indicator&) { return true; },
                        [](const PowerLaw& pl) { return pl.amplitude == 0.0 || pl.exponent <= 0.0; },
                        [](const Tabulated& tab) {
                          return std::is_sorted(tab.values.rbegin(), tab.values.rend());
                        },
                    },
                    form_);
}

CouplingFunction CouplingFunction::scaled(double alpha) const {
  require_nonneg(alpha, "scale factor");
  return std::visit(overloaded{
                        [&](const Constant& c) { return constant(alpha * c.level); },
                        [&](const ExpDecay& e) { return exp_decay(alpha * e.amplitude, e.rate); },
                        [&](const Indicator& i) { return indicator(alpha * i.height, i.cutoff); },
                        [&](const PowerLaw& pl) { return power_law(alpha * pl.amplitude, pl.exponent); },
                        [&](const Tabulated& tab) {
                          std::vector<double> v(tab.values);
                          for (double& x : v) x *= alpha;
                          return tabulated(tab.times, std::move(v));
                        },
                    },
                    form_);
}

double CouplingFunction::sup_norm(double horizon) const { return sup_on(*this, horizon); }

std::optional<double> CouplingFunction::tabulated_horizon() const {
  if (const auto* tab = std::get_if<Tabulated>(&form_)) return tab->times.back();
  return std::nullopt;
}

double CouplingFunction::time_scale() const {
  return std::visit(overloaded{
                        [](const ExpDecay& e) { return 1.0 / e.rate; },
                        [](const Indicator& i) { return i.cutoff; },
                        [](const auto&) { return 1.0; },
                    },
                    form_);
}

std::vector<double> CouplingFunction::breakpoints(double horizon) const {
  std::vector<double> out;
  if (const auto* ind = std::get_if<Indicator>(&form_)) {
    if (ind->cutoff < horizon) out.push_back(ind->cutoff);
  } else if (const auto* tab = std::get_if<Tabulated>(&form_)) {
    for (std::size_t i = 1; i + 1 < tab->times.size(); ++i) {
      if (tab->times[i] < horizon) out.push_back(tab->times[i]);
    }
  }
  return out;
}

Envelope envelope(const CouplingFunction& f, double horizon) {
  require_pos(horizon, "horizon T");
  if (const auto th = f.tabulated_horizon(); th && std::abs(*th - horizon) > 1e-12 * horizon) {
    throw DomainError(fmt::format("tabulated grid ends at {} but the horizon is {}", *th, horizon));
  }
  CouplingFunction rep = std::visit(
      overloaded{
          [&](const PowerLaw& pl) {
            if (pl.amplitude > 0.0 && pl.exponent > 0.0)
              return CouplingFunction::constant(pl.amplitude * std::pow(horizon, pl.exponent));
            return f;
          },
          [&](const Tabulated& tab) {
            std::vector<double> running(tab.values.size());
            double m = 0.0;
            for (std::size_t i = tab.values.size(); i-- > 0;) {
              m = std::max(m, tab.values[i]);
              running[i] = m;
            }
            return CouplingFunction::tabulated(tab.times, std::move(running));
          },
          [&](const auto&) { return f; },
      },
      f.form());
  return Envelope{f, horizon, std::move(rep)};
}

NormValue norm(const CouplingFunction& f, double p, double upper, Weight weight) {
  if (!(p >= 1.0)) throw DomainError(fmt::format("norm order p must be >= 1, got {}", p));
  require_nonneg(upper, "norm upper limit");
  if (weight.exponent < 0.0 || !(weight.exponent < 1.0))
    throw DomainError(fmt::format("weight exponent must lie in [0, 1), got {}", weight.exponent));
  if (const auto th = f.tabulated_horizon(); th && upper > *th * (1.0 + 1e-12))
    throw DomainError(fmt::format("norm upper limit {} beyond tabulated grid end {}", upper, *th));

  if (std::isinf(p)) {
    if (!weight.is_none()) throw DomainError("weighted sup norm is not supported");
    const double m = sup_on(f, upper);
    if (std::isinf(m)) throw NonIntegrable(fmt::format("{} coupling is unbounded on [0, {}]", f.kind(), upper));
    return {p, upper, m};
  }

  const double integral = PowerIntegral(f, p, p * weight.exponent)(upper);
  if (!std::isfinite(integral)) {
    throw NonIntegrable(fmt::format("|f·t^-{}|^{} is not integrable at t = 0 for {} coupling", weight.exponent, p,
                                    f.kind()));
  }
  return {p, upper, p == 1.0 ? integral : std::pow(integral, 1.0 / p)};
}

double quadrature_norm(const CouplingFunction& f, double p, double upper, Weight weight,
                       std::optional<double> abs_tol) {
  if (!(p >= 1.0) || std::isinf(p)) throw DomainError("quadrature_norm needs finite p >= 1");
  if (upper <= 0.0) return 0.0;
  const double b = p * weight.exponent;
  if (!(b < 1.0)) throw NonIntegrable("weighted integrand t^{-pw} with pw >= 1 is not integrable");
  const double tol = abs_tol.value_or(numerics::default_tolerances().inner_abs);

  // u = t^{1-b}: ∫₀ˢ g(t) t^{-b} dt = (1-b)^{-1} ∫₀^{s^{1-b}} g(u^{1/(1-b)}) du.
  const double k = 1.0 - b;
  const auto to_u = [k](double t) { return std::pow(t, k); };
  const numerics::Integrand g = [&](double u) {
    const double t = std::pow(u, 1.0 / k);
    const double v = f(std::min(t, upper));
    return v == 0.0 ? 0.0 : std::pow(v, p) / k;
  };

  std::vector<double> knots;
  for (double t : f.breakpoints(upper)) knots.push_back(to_u(t));
  for (double t : numerics::dyadic_breakpoints(f.time_scale(), upper)) knots.push_back(to_u(t));
  std::sort(knots.begin(), knots.end());

  const double integral = numerics::integrate_piecewise(g, 0.0, to_u(upper), knots, tol).value;
  return p == 1.0 ? integral : std::pow(integral, 1.0 / p);
}

double iterated_norm(const CouplingFunction& f, double horizon, double inner_p, Weight inner_weight,
                     double outer_power, std::optional<double> rel_tol) {
  require_nonneg(horizon, "horizon T");
  if (!(outer_power >= 1.0)) throw DomainError(fmt::format("outer power must be >= 1, got {}", outer_power));
  if (!(inner_p >= 1.0) || std::isinf(inner_p)) throw DomainError("inner norm order must be finite and >= 1");
  if (horizon == 0.0 || f.is_zero()) return 0.0;

  // Validates the domain and flags divergence once, at the widest limit.
  (void)norm(f, inner_p, horizon, inner_weight);

  const PowerIntegral cumulative(f, inner_p, inner_p * inner_weight.exponent);
  const double exponent = outer_power / inner_p;
  const numerics::Integrand g = [&](double t) {
    const double c = cumulative(t);
    return c <= 0.0 ? 0.0 : std::pow(c, exponent);
  };

  std::vector<double> knots = f.breakpoints(horizon);
  const auto dyadic = numerics::dyadic_breakpoints(f.time_scale(), horizon);
  knots.insert(knots.end(), dyadic.begin(), dyadic.end());
  std::sort(knots.begin(), knots.end());

  const double tol = rel_tol.value_or(numerics::default_tolerances().outer_rel);
  return numerics::integrate_piecewise(g, 0.0, horizon, knots, tol * 1e-2).value;
}

}  // namespace fkbound::schedule
