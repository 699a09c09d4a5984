#include "fkbound/bounds.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fkbound/errors.hpp"

namespace fkbound::bounds {

namespace {

using numerics::log_gamma;
using schedule::Weight;

constexpr double kLn2 = std::numbers::ln2;

void check_theta_d(double theta, int d) {
  if (!(theta > 0.0 && theta < 2.0)) throw DomainError(fmt::format("theta must lie in (0, 2), got {}", theta));
  if (d < 2) throw DomainError(fmt::format("dimension must be >= 2, got {}", d));
}

Branch default_branch(double theta) { return theta >= 1.0 ? Branch::ThetaGeq1 : Branch::ThetaLeq1; }

void check_branch(Branch b, double theta) {
  if (b == Branch::ThetaGeq1 && theta < 1.0) throw DomainError("theta >= 1 formula requested for theta < 1");
  if (b == Branch::ThetaLeq1 && theta > 1.0) throw DomainError("theta <= 1 formula requested for theta > 1");
}

BoundReport empty_report(Theorem which, const BoundParams& p, Branch b, bool zero) {
  BoundReport r;
  r.params = p;
  r.theorem = which;
  r.branch = b;
  r.zero_coupling = zero;
  return r;
}

void add_term(BoundReport& r, std::string label, double coefficient, double norm_value, double exponent = 1.0) {
  const double contribution = exponent == 1.0 ? coefficient * norm_value : coefficient * std::pow(norm_value, exponent);
  r.terms.push_back({std::move(label), coefficient, norm_value, exponent, contribution});
}

void finish(BoundReport& r) {
  double total = 0.0;
  for (const auto& t : r.terms) total += t.contribution;
  r.log_bound = total;
}

// Shared θ <= 1 combination C·I1^{(2-2θ)/(2-θ)}·I2^{θ/(2-θ)} + D·(I1/I2)^{(1-θ)/(2-θ)}·I3.
void add_mixed_terms(BoundReport& r, const CoefficientSet& co, double theta, double i1, double i2, double i3) {
  const double e = 2.0 - theta;
  add_term(r, "C_theta*I1^((2-2theta)/(2-theta))*I2^(theta/(2-theta))", co.C,
           std::pow(i1, (2.0 - 2.0 * theta) / e) * std::pow(i2, theta / e));
  add_term(r, "D_theta*(I1/I2)^((1-theta)/(2-theta))*I3", co.D, std::pow(i1 / i2, (1.0 - theta) / e) * i3);
}

BoundReport single(const CouplingFunction& f, const BoundParams& p, Branch b) {
  if (p.T == 0.0) return empty_report(Theorem::Single, p, b, f.is_zero());
  const auto fs = schedule::envelope(f, p.T).representation;
  if (fs.is_zero()) return empty_report(Theorem::Single, p, b, true);

  const auto co = coefficients(p.theta, p.d);
  BoundReport r = empty_report(Theorem::Single, p, b, false);
  if (b == Branch::ThetaGeq1) {
    const double q = 2.0 / (2.0 - p.theta);
    const double n1 = std::pow(schedule::norm(fs, q, p.T).value, q);
    const double n2 = schedule::norm(fs, 1.0, p.T, Weight::inv_pow(p.theta / 2.0)).value;
    r.norms = {{"||f_*^(2/(2-theta))||_1", n1}, {"||f_*/t^(theta/2)||_1", n2}};
    add_term(r, "A_theta*||f_*^(2/(2-theta))||_1", co.A, n1);
    add_term(r, "B_theta*||f_*/t^(theta/2)||_1", co.B, n2);
  } else {
    const double n1 = schedule::norm(fs, 1.0, p.T).value;
    const double n2 = std::pow(schedule::norm(fs, 2.0, p.T).value, 2.0);
    const double n3 = schedule::norm(fs, 1.0, p.T, Weight::inv_sqrt()).value;
    r.norms = {{"I1=||f_*||_1", n1}, {"I2=||f_*^2||_1", n2}, {"I3=||f_*/t^(1/2)||_1", n3}};
    if (n2 == 0.0) {
      r.zero_coupling = true;
      return r;
    }
    add_mixed_terms(r, co, p.theta, n1, n2, n3);
  }
  finish(r);
  return r;
}

BoundReport self_double(const CouplingFunction& f, const BoundParams& p, Branch b) {
  if (p.T == 0.0) return empty_report(Theorem::SelfDouble, p, b, f.is_zero());
  const auto fs = schedule::envelope(f, p.T).representation;
  if (fs.is_zero()) return empty_report(Theorem::SelfDouble, p, b, true);

  const auto co = coefficients(p.theta, p.d);
  BoundReport r = empty_report(Theorem::SelfDouble, p, b, false);
  if (b == Branch::ThetaGeq1) {
    const double n1 = schedule::iterated_norm(fs, p.T, 1.0, Weight::none(), 2.0 / (2.0 - p.theta));
    const double n2 = schedule::iterated_norm(fs, p.T, 1.0, Weight::inv_pow(p.theta / 2.0), 1.0);
    r.norms = {{"int ||f_*||_{1,t}^(2/(2-theta)) dt", n1}, {"int ||f_*/s^(theta/2)||_{1,t} dt", n2}};
    add_term(r, "A_theta*int ||f_*||_{1,t}^(2/(2-theta)) dt", co.A, n1);
    add_term(r, "B_theta*int ||f_*/s^(theta/2)||_{1,t} dt", co.B, n2);
  } else {
    const double i1 = schedule::iterated_norm(fs, p.T, 1.0, Weight::none(), 1.0);
    const double i2 = schedule::iterated_norm(fs, p.T, 1.0, Weight::none(), 2.0);
    const double i3 = schedule::iterated_norm(fs, p.T, 1.0, Weight::inv_sqrt(), 1.0);
    r.norms = {{"I1=int ||f_*||_{1,t} dt", i1},
               {"I2=int ||f_*||_{1,t}^2 dt", i2},
               {"I3=int ||f_*/s^(1/2)||_{1,t} dt", i3}};
    if (i2 == 0.0) {
      r.zero_coupling = true;
      return r;
    }
    add_mixed_terms(r, co, p.theta, i1, i2, i3);
  }
  finish(r);
  return r;
}

BoundReport cross_double(const CouplingFunction& f, const BoundParams& p, Branch b) {
  if (p.T == 0.0 || f.is_zero()) return empty_report(Theorem::CrossDouble, p, b, f.is_zero());
  const double l1 = schedule::norm(f, 1.0, p.T).value;
  if (l1 == 0.0) return empty_report(Theorem::CrossDouble, p, b, true);

  const double th = p.theta;
  const double e = 2.0 - th;
  const auto co = coefficients(th, p.d);
  BoundReport r = empty_report(Theorem::CrossDouble, p, b, false);
  r.norms = {{"||f||_1", l1}};
  if (b == Branch::ThetaGeq1) {
    add_term(r, "2^(-theta/(2-theta))*A_theta*||f||_1^(2/(2-theta))*T", std::pow(2.0, -th / e) * co.A * p.T, l1,
             2.0 / e);
    add_term(r, "2^(-theta/2)*(1-theta/2)^(-1)*B_theta*||f||_1*T^(1-theta/2)",
             std::pow(2.0, -th / 2.0) / (1.0 - th / 2.0) * co.B * std::pow(p.T, 1.0 - th / 2.0), l1);
  } else {
    add_term(r, "2^(-theta/(2-theta))*C_theta*||f||_1^(2/(2-theta))*T", std::pow(2.0, -th / e) * co.C * p.T, l1,
             2.0 / e);
    add_term(r, "2^((4-3theta)/(2(2-theta)))*D_theta*||f||_1^(1/(2-theta))*T^(1/2)",
             std::pow(2.0, (4.0 - 3.0 * th) / (2.0 * e)) * co.D * std::sqrt(p.T), l1, 1.0 / e);
  }
  finish(r);
  return r;
}

BoundReport dispatch(Theorem which, const CouplingFunction& f, const BoundParams& p, Branch b) {
  switch (which) {
    case Theorem::Single: return single(f, p, b);
    case Theorem::SelfDouble: return self_double(f, p, b);
    case Theorem::CrossDouble: return cross_double(f, p, b);
  }
  throw DomainError("unknown theorem");
}

// ∫₀^∞ f and ∫₀^∞ f(s) s^{-w} ds for the integrable closed forms.
double total_mass(const CouplingFunction::Form& form) {
  if (const auto* e = std::get_if<schedule::ExpDecay>(&form)) return e->amplitude / e->rate;
  if (const auto* i = std::get_if<schedule::Indicator>(&form)) return i->height * i->cutoff;
  return numerics::kInf;
}

double total_weighted_mass(const CouplingFunction::Form& form, double w) {
  if (const auto* e = std::get_if<schedule::ExpDecay>(&form))
    return e->amplitude * std::pow(e->rate, w - 1.0) * std::exp(log_gamma(1.0 - w));
  if (const auto* i = std::get_if<schedule::Indicator>(&form))
    return i->height * std::pow(i->cutoff, 1.0 - w) / (1.0 - w);
  return numerics::kInf;
}

}  // namespace

void BoundParams::validate() const {
  check_theta_d(theta, d);
  if (!(T >= 0.0) || !std::isfinite(T)) throw DomainError(fmt::format("T must be finite and >= 0, got {}", T));
}

CoefficientSet coefficients(double theta, int d) {
  check_theta_d(theta, d);
  const double th = theta;
  const double e = 2.0 - th;
  const double dd = static_cast<double>(d);
  const double common = (3.0 * th - 2.0) / e * kLn2 + th / e * std::log(th) + std::log(e);
  CoefficientSet c;
  c.A = std::exp(common - 2.0 * th / e * std::log(dd - th));
  c.B = std::exp(std::log(th) + log_gamma((dd - th) / 2.0) - th / 2.0 * kLn2 - log_gamma(dd / 2.0));
  c.C = std::exp(common - 2.0 * th / e * std::log(dd - 1.0));
  c.D = std::exp(std::log(th) / e + log_gamma((dd - 1.0) / 2.0) + (2.0 - 2.0 * th) / e * std::log(dd - 1.0) -
                 (6.0 - 5.0 * th) / (4.0 - 2.0 * th) * kLn2 - log_gamma(dd / 2.0));
  return c;
}

double moment_constant(double theta, int d) {
  if (!(theta > 0.0) || d < 1 || !(theta < d)) throw DomainError("moment constant needs 0 < theta < d");
  const double dd = static_cast<double>(d);
  return std::exp(log_gamma((dd - theta) / 2.0) - theta / 2.0 * kLn2 - log_gamma(dd / 2.0));
}

std::string_view to_string(Theorem t) {
  switch (t) {
    case Theorem::Single: return "single";
    case Theorem::SelfDouble: return "self_double";
    case Theorem::CrossDouble: return "cross_double";
  }
  return "?";
}

std::string_view to_string(Branch b) { return b == Branch::ThetaGeq1 ? "theta_geq_1" : "theta_leq_1"; }

Theorem theorem_from_int(int n) {
  if (n < 1 || n > 3) throw DomainError(fmt::format("theorem must be 1, 2 or 3, got {}", n));
  return static_cast<Theorem>(n);
}

BoundReport theorem_bound(Theorem which, const CouplingFunction& f, const BoundParams& params,
                          std::optional<Branch> branch) {
  params.validate();
  if (branch) {
    check_branch(*branch, params.theta);
    return dispatch(which, f, params, *branch);
  }
  BoundReport r = dispatch(which, f, params, default_branch(params.theta));
  if (params.theta == 1.0) {
    const BoundReport other = dispatch(which, f, params, Branch::ThetaLeq1);
    const double scale = std::max(std::abs(r.log_bound), std::abs(other.log_bound));
    if (std::abs(r.log_bound - other.log_bound) > 1e-10 * scale) {
      throw VerificationFailure(fmt::format("theta = 1 branches disagree: {} vs {}", r.log_bound, other.log_bound));
    }
    r.alternate_branch_log_bound = other.log_bound;
  }
  return r;
}

BoundReport theorem1_bound(const CouplingFunction& f, const BoundParams& params) {
  return theorem_bound(Theorem::Single, f, params);
}
BoundReport theorem2_bound(const CouplingFunction& f, const BoundParams& params) {
  return theorem_bound(Theorem::SelfDouble, f, params);
}
BoundReport theorem3_bound(const CouplingFunction& f, const BoundParams& params) {
  return theorem_bound(Theorem::CrossDouble, f, params);
}

double richardson_slope(Theorem which, const CouplingFunction& f, double theta, int d, double start_T, double tol) {
  check_theta_d(theta, d);
  if (f.tabulated_horizon()) throw NoLinearSlope("tabulated coupling cannot be extended beyond its grid");
  const auto lb = [&](double T) { return theorem_bound(which, f, BoundParams{theta, d, T}).log_bound; };
  double T = start_T;
  double lo = lb(T);
  double prev = numerics::kInf;
  for (int k = 0; k < 60; ++k) {
    const double hi = lb(2.0 * T);
    const double q = (hi - lo) / T;
    if (!std::isfinite(q)) break;
    if (std::abs(q - prev) <= tol * std::max(1.0, std::abs(q))) return q;
    prev = q;
    lo = hi;
    T *= 2.0;
  }
  throw NoLinearSlope(fmt::format("log_bound(T)/T does not settle for {} coupling", f.kind()));
}

SlopeResult asymptotic_slope(Theorem which, const CouplingFunction& f, double theta, int d) {
  check_theta_d(theta, d);
  if (f.is_zero()) return {};
  const auto& form = f.form();
  if (std::holds_alternative<schedule::Tabulated>(form))
    throw NoLinearSlope("tabulated coupling cannot be extended beyond its grid");
  if (std::holds_alternative<schedule::PowerLaw>(form)) {
    SlopeResult r;
    r.slope = richardson_slope(which, f, theta, d);
    r.analytic = false;
    return r;
  }

  const auto co = coefficients(theta, d);
  const double e = 2.0 - theta;
  const bool geq = theta >= 1.0;
  SlopeResult r;

  if (const auto* c = std::get_if<schedule::Constant>(&form)) {
    if (which != Theorem::Single) throw NoLinearSlope("constant coupling makes the double-action bound superlinear");
    const double a = c->level;
    if (geq) {
      r.slope = co.A * std::pow(a, 2.0 / e);
      r.subleading_coefficient = co.B * a / (1.0 - theta / 2.0);
      r.subleading_power = 1.0 - theta / 2.0;
    } else {
      r.slope = co.C * std::pow(a, 2.0 / e);
      r.subleading_coefficient = 2.0 * co.D * std::pow(a, 1.0 / e);
      r.subleading_power = 0.5;
    }
    return r;
  }

  // ExpDecay or Indicator: integrable on [0, ∞).
  const double l1 = total_mass(form);
  switch (which) {
    case Theorem::Single:
      return r;
    case Theorem::SelfDouble:
      if (geq) {
        r.slope = co.A * std::pow(l1, 2.0 / e) + co.B * total_weighted_mass(form, theta / 2.0);
      } else {
        r.slope = co.C * std::pow(l1, 2.0 / e) + co.D * std::pow(l1, -(1.0 - theta) / e) * total_weighted_mass(form, 0.5);
      }
      return r;
    case Theorem::CrossDouble:
      if (geq) {
        r.slope = std::pow(2.0, -theta / e) * co.A * std::pow(l1, 2.0 / e);
        r.subleading_coefficient = std::pow(2.0, -theta / 2.0) / (1.0 - theta / 2.0) * co.B * l1;
        r.subleading_power = 1.0 - theta / 2.0;
      } else {
        r.slope = std::pow(2.0, -theta / e) * co.C * std::pow(l1, 2.0 / e);
        r.subleading_coefficient = std::pow(2.0, (4.0 - 3.0 * theta) / (2.0 * e)) * co.D * std::pow(l1, 1.0 / e);
        r.subleading_power = 0.5;
      }
      return r;
  }
  return r;
}

double critical_coupling(int d) {
  if (d < 3) throw DomainError(fmt::format("critical coupling needs d >= 3, got {}", d));
  return (d - 2.0) * (d - 2.0) / 8.0;
}

double inverse_square_energy(double alpha, double theta, int d) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be finite and >= 0");
  if (!(theta >= 1.0 && theta < 2.0)) throw DomainError(fmt::format("theta must lie in [1, 2), got {}", theta));
  if (d < 3) throw DomainError(fmt::format("dimension must be >= 3, got {}", d));
  if (alpha == 0.0) return 0.0;
  // log domain: A and α^{2/(2-θ)} separately over/underflow as θ → 2
  const double q = 2.0 - theta;
  const double log_mag = ((3.0 * theta - 2.0) * std::log(2.0) + theta * std::log(theta) -
                          2.0 * theta * std::log(d - theta) + 2.0 * std::log(alpha)) / q + std::log(q);
  return -std::exp(log_mag);
}

}  // namespace fkbound::bounds
