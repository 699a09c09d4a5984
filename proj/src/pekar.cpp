#include "fkbound/pekar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include <fmt/format.h>

#include "fkbound/errors.hpp"
#include "fkbound/mc.hpp"
#include "fkbound/numerics.hpp"

namespace fkbound::pekar {

namespace {

constexpr double kBoxWidths = 7.0;
constexpr std::size_t kCellBand = 4;

double sphere_area(int d) {
  return 2.0 * std::exp(0.5 * d * std::log(std::numbers::pi) - numerics::log_gamma(0.5 * d));
}

// (|x+1|^{q+2} - 2|x|^{q+2} + |x-1|^{q+2}) / ((q+1)(q+2)), i.e. the integral
// of |a-b|^q over two unit cells whose centres are x apart.
double cell_power(double x, double q) {
  x = std::abs(x);
  if (x < 32.0) {
    const double p = q + 2.0;
    return (std::pow(x + 1.0, p) - 2.0 * std::pow(x, p) + std::pow(std::abs(x - 1.0), p)) / ((q + 1.0) * p);
  }
  const double ix2 = 1.0 / (x * x);
  return std::pow(x, q) *
         (1.0 + q * (q - 1.0) / 12.0 * ix2 * (1.0 + (q - 2.0) * (q - 3.0) / 30.0 * ix2));
}

// d = 3 with r_i = (i+1)h: exact cell integrals of (r+s)^q - |r-s|^q,
// divided by 2q·r_i·r_j.
std::vector<double> assemble_d3(std::size_t n, double h, double theta) {
  const double q = 2.0 - theta;
  const double hq = std::pow(h, q - 2.0);
  std::vector<double> minus(n), plus(2 * n + 2);
  for (std::size_t k = 0; k < n; ++k) minus[k] = cell_power(static_cast<double>(k), q);
  for (std::size_t m = 0; m < plus.size(); ++m) plus[m] = cell_power(static_cast<double>(m), q);
  std::vector<double> W(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k = i > j ? i - j : j - i;
      W[i * n + j] = hq * (plus[i + j + 2] - minus[k]) / (2.0 * q * static_cast<double>((i + 1) * (j + 1)));
    }
  }
  return W;
}

// Dense symmetric kernel matrix W_ij ≈ radial_kernel(r_i, r_j). Other
// dimensions use cell averages in a band around the diagonal, where the
// kernel has a cusp (or integrable singularity) at r = r', and point values
// beyond it.
std::vector<double> assemble(const std::vector<double>& r, double h, double theta, int d, unsigned threads) {
  const std::size_t n = r.size();
  if (d == 3) return assemble_d3(n, h, theta);
  std::vector<double> W(n * n);
  const auto row = [&](std::size_t i) {
    const double ri = r[i];
    const auto g = [&](double delta) { return radial_kernel(ri, ri + delta, theta, d); };
    const double left = numerics::integrate(g, -0.5 * h, 0.0, 1e-10).value;
    const double right = numerics::integrate(g, 0.0, 0.5 * h, 1e-10).value;
    W[i * n + i] = (left + right) / h;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j - i <= kCellBand) {
        const double off = static_cast<double>(j - i) * h;
        W[i * n + j] = numerics::integrate(g, off - 0.5 * h, off + 0.5 * h, 1e-10).value / h;
      } else {
        W[i * n + j] = radial_kernel(ri, r[j], theta, d);
      }
    }
  };
  if (threads == 0) threads = mc::default_threads();
  threads = static_cast<unsigned>(std::clamp<std::size_t>(threads, 1, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) row(i);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += threads) row(i);
      });
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) W[i * n + j] = W[j * n + i];
  return W;
}

struct Discretization {
  std::size_t n = 0;
  double h = 0.0;
  double g = 0.0;
  double centrifugal = 0.0;  // (d-1)(d-3)/8
  std::vector<double> r;
  // d != 3: r_{i+½}^{d-1} and r_i^{-(d-1)/2}; empty for d = 3.
  std::vector<double> flux, scale;
  std::vector<double> W;

  double dot(const std::vector<double>& a, const std::vector<double>& b) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return h * s;
  }

  void normalize(std::vector<double>& u) const {
    const double s = std::sqrt(dot(u, u));
    for (auto& x : u) x /= s;
  }

  // V_i = h Σ_j W_ij u_j²
  void potential_field(const std::vector<double>& u, std::vector<double>& V) const {
    std::vector<double> rho(n);
    for (std::size_t j = 0; j < n; ++j) rho[j] = u[j] * u[j];
    V.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* w = &W[i * n];
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += w[j] * rho[j];
      V[i] = h * s;
    }
  }

  double kinetic(const std::vector<double>& u) const {
    if (!flux.empty()) {
      // ½ Σ r_{i+½}^{d-1} (ψ_{i+1} - ψ_i)² / h with ψ = u·r^{-(d-1)/2}, ψ_n = 0.
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double next = i + 1 < n ? u[i + 1] * scale[i + 1] : 0.0;
        const double d = next - u[i] * scale[i];
        s += flux[i] * d * d;
      }
      return 0.5 * s / h;
    }
    double s = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += (u[i] - prev) * (u[i] - prev);
      prev = u[i];
    }
    s += prev * prev;
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += u[i] * u[i] / (r[i] * r[i]);
    return 0.5 * s / h + h * centrifugal * c;
  }

  double interaction(const std::vector<double>& u, const std::vector<double>& V) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += u[i] * u[i] * V[i];
    return h * s;
  }

  // L² gradient of the energy.
  void gradient(const std::vector<double>& u, const std::vector<double>& V, std::vector<double>& G) const {
    G.resize(n);
    const double ih2 = 1.0 / (h * h);
    if (!flux.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        const double psi = u[i] * scale[i];
        const double next = i + 1 < n ? u[i + 1] * scale[i + 1] : 0.0;
        double k = flux[i] * (psi - next);
        if (i > 0) k += flux[i - 1] * (psi - u[i - 1] * scale[i - 1]);
        G[i] = scale[i] * k * ih2 - 4.0 * g * V[i] * u[i];
      }
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double left = i > 0 ? u[i - 1] : 0.0;
      const double right = i + 1 < n ? u[i + 1] : 0.0;
      G[i] = (2.0 * u[i] - left - right) * ih2 + 2.0 * centrifugal * u[i] / (r[i] * r[i]) - 4.0 * g * V[i] * u[i];
    }
  }

  // Solves (-D² + σ) x = b by the Thomas algorithm.
  void precondition(const std::vector<double>& b, double sigma, std::vector<double>& x) const {
    const double off = -1.0 / (h * h);
    const double diag = 2.0 / (h * h) + sigma;
    std::vector<double> c(n);
    x.resize(n);
    c[0] = off / diag;
    x[0] = b[0] / diag;
    for (std::size_t i = 1; i < n; ++i) {
      const double m = diag - off * c[i - 1];
      c[i] = off / m;
      x[i] = (b[i] - off * x[i - 1]) / m;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
  }
};

}  // namespace

void PekarProblem::validate() const {
  if (d < 1) throw DomainError(fmt::format("dimension must be >= 1, got {}", d));
  if (!(theta > 0.0) || !(theta < std::min(2.0, static_cast<double>(d))))
    throw DomainError(fmt::format("Pekar solver needs 0 < theta < min(2, d), got theta={} d={}", theta, d));
  if (!(coupling >= 0.0) || !std::isfinite(coupling))
    throw DomainError(fmt::format("coupling must be >= 0, got {}", coupling));
  if (nodes < 16) throw DomainError("Pekar grid needs at least 16 nodes");
  if (r_max && !(*r_max > 0.0 && std::isfinite(*r_max))) throw DomainError("r_max must be > 0");
  if (!(tolerance > 0.0)) throw DomainError("tolerance must be > 0");
}

double radial_kernel(double r, double s, double theta, int d) {
  if (d == 3) {
    const double q = 2.0 - theta;
    return (std::pow(r + s, q) - std::pow(std::abs(r - s), q)) / (2.0 * q * r * s);
  }
  if (d == 1) return 0.5 * (std::pow(std::abs(r - s), -theta) + std::pow(r + s, -theta));
  // c_d ∫₀^π ((r-s)² + 4rs sin²(φ/2))^{-θ/2} sin^{d-2}φ dφ
  const double cd = std::exp(numerics::log_gamma(0.5 * d) - numerics::log_gamma(0.5 * (d - 1))) /
                    std::sqrt(std::numbers::pi);
  const double diff2 = (r - s) * (r - s);
  const double prod = 4.0 * r * s;
  const auto g = [&](double phi) {
    const double sh = std::sin(0.5 * phi);
    if (diff2 == 0.0) {
      // r = s: combine the powers of sin(φ/2) so nothing overflows near φ = 0.
      return std::pow(prod, -0.5 * theta) * std::pow(sh, d - 2 - theta) * std::pow(2.0 * std::cos(0.5 * phi), d - 2);
    }
    return std::pow(diff2 + prod * sh * sh, -0.5 * theta) * std::pow(std::sin(phi), d - 2);
  };
  // The integrand peaks within φ ~ |r-s|/√(rs) of zero.
  const double split = std::min(0.5 * std::numbers::pi, 4.0 * std::sqrt(diff2 / (r * s)));
  if (split == 0.0) return cd * numerics::integrate(g, 0.0, std::numbers::pi, 1e-10).value;
  return cd * (numerics::integrate(g, 0.0, split, 1e-10).value +
               numerics::integrate(g, split, std::numbers::pi, 1e-10).value);
}

double gaussian_length(double theta, double g, int d) {
  const double kappa = std::exp(numerics::log_gamma(0.5 * (d - theta)) - numerics::log_gamma(0.5 * d));
  const double a = std::pow(g * kappa * theta / d, 2.0 / (2.0 - theta));
  return 1.0 / std::sqrt(a);
}

double gaussian_energy(double theta, double g, int d) {
  if (g == 0.0) return 0.0;
  const double kappa = std::exp(numerics::log_gamma(0.5 * (d - theta)) - numerics::log_gamma(0.5 * d));
  const double a = std::pow(gaussian_length(theta, g, d), -2.0);
  return 0.5 * d * a - g * kappa * std::pow(a, 0.5 * theta);
}

PekarSolution solve(const PekarProblem& p, unsigned threads) {
  p.validate();
  PekarSolution sol;
  sol.nodes = p.nodes;
  if (p.coupling == 0.0) {
    // Infimum 0 is approached by spreading ψ out; nothing to discretize.
    sol.r_max = p.r_max.value_or(0.0);
    return sol;
  }

  const double ell = gaussian_length(p.theta, p.coupling, p.d);
  const double r_max = p.r_max.value_or(kBoxWidths * ell);
  Discretization D;
  D.n = p.nodes;
  D.h = r_max / static_cast<double>(p.nodes + 1);
  D.g = p.coupling;
  D.centrifugal = (p.d - 1.0) * (p.d - 3.0) / 8.0;
  D.r.resize(D.n);
  for (std::size_t i = 0; i < D.n; ++i) D.r[i] = static_cast<double>(i + 1) * D.h;
  if (p.d != 3) {
    D.flux.resize(D.n);
    D.scale.resize(D.n);
    for (std::size_t i = 0; i < D.n; ++i) {
      D.flux[i] = std::pow((static_cast<double>(i) + 1.5) * D.h, p.d - 1.0);
      D.scale[i] = std::pow(D.r[i], -0.5 * (p.d - 1.0));
    }
  }
  D.W = assemble(D.r, D.h, p.theta, p.d, threads);

  const double half = 0.5 * (p.d - 1.0);
  std::vector<double> u(D.n);
  for (std::size_t i = 0; i < D.n; ++i) {
    const double x = D.r[i] / ell;
    u[i] = std::pow(D.r[i], half) * std::exp(-x * x);
  }
  D.normalize(u);

  std::vector<double> V, G, z, y, dir, trial, Vt;
  // ‖G - ⟨G,u⟩u‖; leaves the gradient of `v` in G.
  const auto projected_residual = [&](const std::vector<double>& v, const std::vector<double>& Vv) {
    D.gradient(v, Vv, G);
    const double mu = D.dot(G, v);
    double s = 0.0;
    for (std::size_t i = 0; i < D.n; ++i) s += (G[i] - mu * v[i]) * (G[i] - mu * v[i]);
    return std::sqrt(D.h * s);
  };
  D.potential_field(u, V);
  double E = D.kinetic(u) - D.g * D.interaction(u, V);
  const double sigma = 1.0 / (ell * ell);
  double step = 1.0;
  double norm_error = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  for (;; ++it) {
    residual = projected_residual(u, V);
    if (residual <= p.tolerance) break;
    if (it >= p.max_iters) {
      throw NoConvergence(fmt::format("Pekar descent stopped at residual {:.3e} after {} iterations", residual, it));
    }

    // Preconditioned direction projected on the tangent space at u.
    D.precondition(G, sigma, z);
    D.precondition(u, sigma, y);
    const double k = D.dot(u, z) / D.dot(u, y);
    dir.resize(D.n);
    for (std::size_t i = 0; i < D.n; ++i) dir[i] = z[i] - k * y[i];
    const double slope = D.dot(G, dir);

    step = std::min(1.0, 2.0 * step);
    // Below this energy change the comparison is round-off; the step is then
    // judged by the projected gradient instead.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(E);
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt, step *= 0.5) {
      trial.resize(D.n);
      for (std::size_t i = 0; i < D.n; ++i) trial[i] = u[i] - step * dir[i];
      D.normalize(trial);
      D.potential_field(trial, Vt);
      const double Et = D.kinetic(trial) - D.g * D.interaction(trial, Vt);
      bool ok = Et <= E - 1e-4 * step * slope;
      if (!ok && std::abs(Et - E) <= noise) ok = projected_residual(trial, Vt) < residual;
      if (ok) {
        u.swap(trial);
        V.swap(Vt);
        E = Et;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw NoConvergence(fmt::format("Pekar line search failed at residual {:.3e} after {} iterations", residual, it));
    }
    norm_error = std::max(norm_error, std::abs(std::sqrt(D.dot(u, u)) - 1.0));
  }

  for (auto& x : u) x = std::abs(x);
  sol.iterations = it;
  sol.residual = residual;
  sol.kinetic = D.kinetic(u);
  sol.potential = D.interaction(u, V);
  sol.energy = sol.kinetic - D.g * sol.potential;
  sol.virial = std::abs(2.0 * sol.kinetic - p.theta * D.g * sol.potential) / std::abs(sol.energy);
  sol.norm_error = norm_error;
  sol.r_max = r_max;
  sol.r = D.r;
  sol.psi.resize(D.n);
  const double area = std::sqrt(sphere_area(p.d));
  double tail = 0.0;
  for (std::size_t i = 0; i < D.n; ++i) {
    sol.psi[i] = u[i] / (std::pow(D.r[i], half) * area);
    if (D.r[i] > 0.9 * r_max) tail += D.h * u[i] * u[i];
    if (i > 0 && sol.psi[i] > sol.psi[i - 1] * (1.0 + 1e-9)) sol.monotone = false;
  }
  sol.tail_mass = tail;
  if (tail > 1e-6) {
    throw GridTooSmall(fmt::format("mass {:.3e} beyond 0.9*r_max = {}; enlarge r_max", tail, 0.9 * r_max));
  }
  return sol;
}

ScalingReport scaling_check(const PekarProblem& p, const std::vector<double>& lambdas, double tolerance,
                            unsigned threads) {
  if (!(p.coupling > 0.0)) throw DomainError("scaling check needs coupling > 0");
  ScalingReport rep;
  rep.tolerance = tolerance;
  rep.base = solve(p, threads);
  rep.pass = true;
  for (double lambda : lambdas) {
    if (!(lambda > 0.0)) throw DomainError("scaling factors must be > 0");
    PekarProblem q = p;
    q.coupling = lambda * p.coupling;
    if (p.r_max) q.r_max = *p.r_max * std::pow(lambda, -1.0 / (2.0 - p.theta));
    ScalingRow row;
    row.lambda = lambda;
    row.energy = solve(q, threads).energy;
    row.ratio = row.energy / rep.base.energy;
    row.expected = std::pow(lambda, 2.0 / (2.0 - p.theta));
    row.rel_error = std::abs(row.ratio / row.expected - 1.0);
    row.pass = row.rel_error <= tolerance;
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

double polaron_coupling(double alpha) { return alpha / std::numbers::sqrt2; }

Sandwich lower_bound_sandwich(const models::ModelSpec& m, const PekarProblem& tuning, unsigned threads) {
  const auto action = m.action(1.0);
  if (action.terms.size() != 1 || action.terms.front().kind != mc::TermKind::SelfDouble) {
    throw DomainError(fmt::format("model '{}' is not a single self-interaction", m.name));
  }
  const auto& f = action.terms.front().f;
  const auto* e = std::get_if<schedule::ExpDecay>(&f.form());
  if (e == nullptr) {
    throw NotPositiveDefinite(
        fmt::format("a {} kernel is not positive definite on its symmetric extension", f.kind()));
  }
  Sandwich s;
  s.coupling = e->amplitude / e->rate;
  s.jensen_slope = models::jensen_slope(m);
  s.theorem2_slope = models::bound_slope(m).slope;
  if (s.coupling > 0.0) {
    PekarProblem p = tuning;
    p.theta = m.theta;
    p.d = m.d;
    p.coupling = s.coupling;
    s.solution = solve(p, threads);
    s.pekar_slope = -s.solution->energy;
  }
  const double slack = 1e-12 * std::max(1.0, s.theorem2_slope);
  s.pekar_below_bound = s.pekar_slope <= s.theorem2_slope + slack;
  s.jensen_below_bound = s.jensen_slope <= s.theorem2_slope + slack;
  s.pekar_above_jensen = s.pekar_slope > s.jensen_slope;
  if (!s.pekar_below_bound || !s.jensen_below_bound) {
    throw VerificationFailure(fmt::format("lower slopes (Pekar {}, Jensen {}) exceed the upper slope {}",
                                          s.pekar_slope, s.jensen_slope, s.theorem2_slope));
  }
  return s;
}

}  // namespace fkbound::pekar
