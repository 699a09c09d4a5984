#include "fkbound/numerics.hpp"

#include <algorithm>
#include <mutex>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "fkbound/errors.hpp"

namespace fkbound::numerics {

namespace {

std::mutex g_tol_mutex;
Tolerances g_tolerances;

boost::math::quadrature::tanh_sinh<double>& tanh_sinh_rule() {
  thread_local boost::math::quadrature::tanh_sinh<double> rule(15);
  return rule;
}

boost::math::quadrature::exp_sinh<double>& exp_sinh_rule() {
  thread_local boost::math::quadrature::exp_sinh<double> rule(12);
  return rule;
}

void check_converged(const char* rule, double a, double b, double error, double l1, double tol) {
  if (!std::isfinite(error) || error > tol * std::max(l1, 1e-300) * 10.0) {
    throw QuadratureFailure(fmt::format("{} on [{}, {}]: error {:.3e} exceeds tolerance {:.1e} (L1 {:.3e})",
                                        rule, a, b, error, tol, l1));
  }
}

}  // namespace

Tolerances default_tolerances() {
  std::lock_guard lock(g_tol_mutex);
  return g_tolerances;
}

void set_default_tolerances(const Tolerances& tol) {
  std::lock_guard lock(g_tol_mutex);
  g_tolerances = tol;
}

double log_gamma(double x) { return boost::math::lgamma(x); }

double lower_incomplete_gamma(double a, double x) {
  if (x <= 0.0) return 0.0;
  return boost::math::tgamma_lower(a, x);
}

QuadResult integrate(const Integrand& g, double a, double b, double rel_tol) {
  if (!(b > a)) return {};
  double error = 0.0;
  double l1 = 0.0;
  const double value = tanh_sinh_rule().integrate([&g](double x) { return g(x); }, a, b, rel_tol, &error, &l1);
  // the rule scales L1 to [a, b] but leaves the error estimate in [-1, 1] units
  error *= 0.5 * (b - a);
  check_converged("tanh-sinh", a, b, error, l1, rel_tol);
  return {value, error};
}

QuadResult integrate_smooth(const Integrand& g, double a, double b, double rel_tol) {
  if (!(b > a)) return {};
  double error = 0.0;
  double l1 = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 21>::integrate(g, a, b, 20, rel_tol, &error, &l1);
  check_converged("gauss-kronrod", a, b, error, l1, rel_tol);
  return {value, error};
}

QuadResult integrate_to_infinity(const Integrand& g, double a, double rel_tol) {
  double error = 0.0;
  double l1 = 0.0;
  const double value = exp_sinh_rule().integrate([&g](double x) { return g(x); }, a, kInf, rel_tol, &error, &l1);
  check_converged("exp-sinh", a, kInf, error, l1, rel_tol);
  return {value, error};
}

QuadResult integrate_piecewise(const Integrand& g, double a, double b,
                               std::span<const double> breakpoints, double rel_tol) {
  std::vector<double> knots{a};
  for (double x : breakpoints) {
    if (x > knots.back() && x < b) knots.push_back(x);
  }
  knots.push_back(b);

  QuadResult total;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const QuadResult piece = (i == 0) ? integrate(g, knots[0], knots[1], rel_tol)
                                      : integrate_smooth(g, knots[i], knots[i + 1], rel_tol);
    total.value += piece.value;
    total.error += piece.error;
  }
  return total;
}

std::vector<double> dyadic_breakpoints(double scale, double b) {
  std::vector<double> out;
  if (!(scale > 0.0)) return out;
  for (double x = scale; x < b && out.size() < 200; x *= 2.0) out.push_back(x);
  return out;
}

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return -kInf;
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  std::vector<double> shifted(xs.size());
  std::transform(xs.begin(), xs.end(), shifted.begin(), [m](double x) { return std::exp(x - m); });
  return m + std::log(pairwise_sum(shifted));
}

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

}  // namespace fkbound::numerics
