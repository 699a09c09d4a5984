#pragma once

// Independent reference computations for the test suites. Deliberately
// naive: fixed-grid rules, series and brute force, no shared code with the
// library.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

/// Composite Simpson with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / static_cast<double>(n);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) s += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// ∫₀^b g(t) t^{-w} dt for smooth g via t = u^{1/(1-w)}, which removes the
/// endpoint singularity.
inline double weighted_simpson(const std::function<double(double)>& g, double w, double b, std::size_t n = 20000) {
  const double e = 1.0 / (1.0 - w);
  const double ub = std::pow(b, 1.0 - w);
  return simpson([&](double u) { return u == 0.0 ? e * g(0.0) : e * g(std::pow(u, e)); }, 0.0, ub, n);
}

/// Right-to-left running maximum.
inline std::vector<double> running_max(std::vector<double> v) {
  for (std::size_t i = v.size(); i-- > 1;) v[i - 1] = std::max(v[i - 1], v[i]);
  return v;
}

/// γ(a, x) by its power series x^a e^{-x} Σ x^k / (a(a+1)...(a+k)).
inline double lower_gamma_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int k = 1; k < 2000; ++k) {
    term *= x / (a + k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return std::exp(a * std::log(x) - x) * sum;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// E|Z|^{-θ} for Z ~ N(0, I_d), from the chi distribution.
inline double inverse_moment(double theta, int d) {
  return std::pow(2.0, -theta / 2.0) * std::tgamma((d - theta) / 2.0) / std::tgamma(d / 2.0);
}

}  // namespace oracle
