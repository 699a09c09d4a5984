#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fkbound/errors.hpp"
#include "fkbound/models.hpp"
#include "fkbound/pekar.hpp"
#include "oracles.hpp"

using namespace fkbound;
using namespace fkbound::pekar;

namespace {

constexpr double kPi = std::numbers::pi;

// Known minimum of ½∫|∇ψ|² - ∫∫ψ²ψ²/|x-y| in three dimensions.
constexpr double kPekarUnitEnergy = -0.2170263;

// Spherical average of |x-y|^{-θ} with |x| = r, |y| = s in d dimensions.
double kernel_oracle(double r, double s, double theta, int d) {
  const auto g = [&](double phi) {
    return std::pow(r * r + s * s - 2 * r * s * std::cos(phi), -theta / 2) * std::pow(std::sin(phi), d - 2);
  };
  const auto w = [&](double phi) { return std::pow(std::sin(phi), d - 2); };
  return oracle::simpson(g, 0.0, kPi, 200000) / oracle::simpson(w, 0.0, kPi, 200000);
}

}  // namespace

TEST_CASE("radial kernel against the spherical average") {
  for (int d : {3, 4, 5}) {
    for (double th : {0.5, 1.0, 1.5}) {
      for (auto [r, s] : {std::pair{0.4, 1.3}, std::pair{2.0, 0.7}, std::pair{1.0, 1.6}}) {
        CHECK(radial_kernel(r, s, th, d) == doctest::Approx(kernel_oracle(r, s, th, d)).epsilon(1e-7));
      }
    }
  }
  // Newton: outside the shell the average is 1/max(r, s).
  CHECK(radial_kernel(0.5, 2.0, 1.0, 3) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("Gaussian trial energy") {
  // Gaussian width a: kinetic 3a/2, interaction 2√a/√π at θ = 1, d = 3.
  for (double g : {0.5, 1.0, 3.0}) {
    CHECK(gaussian_energy(1.0, g, 3) == doctest::Approx(-2 * g * g / (3 * kPi)).epsilon(1e-13));
    CHECK(gaussian_length(1.0, g, 3) == doctest::Approx(3 * std::sqrt(kPi) / (2 * g)).epsilon(1e-13));
  }
  CHECK(gaussian_energy(1.0, 0.0, 3) == 0.0);
}

TEST_CASE("Coulomb minimizer energy") {
  const auto sol = solve({1.0, 1.0, 3});
  CHECK(sol.energy == doctest::Approx(kPekarUnitEnergy).epsilon(1e-3));
  CHECK(sol.energy < gaussian_energy(1.0, 1.0, 3));
  CHECK(sol.residual <= 1e-8);
  CHECK(sol.norm_error <= 1e-10);
  CHECK(sol.virial <= 1e-4);
  CHECK(sol.monotone);
  for (double p : sol.psi) CHECK(p >= 0.0);
  CHECK(sol.energy == doctest::Approx(sol.kinetic - sol.potential).epsilon(1e-14));
  // Profile normalization by radial Simpson-free sum: 4π∫ψ² r² dr.
  double mass = 0.0;
  const double h = sol.r[1] - sol.r[0];
  for (std::size_t i = 0; i < sol.r.size(); ++i) mass += 4 * kPi * sol.psi[i] * sol.psi[i] * sol.r[i] * sol.r[i] * h;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("polaron normalization reproduces the strong-coupling constant") {
  for (double alpha : {1.0, 7.0}) {
    const double e = solve({1.0, polaron_coupling(alpha), 3}).energy;
    CHECK(e / (alpha * alpha) == doctest::Approx(-0.109).epsilon(0.10));
    CHECK(e / (alpha * alpha) == doctest::Approx(kPekarUnitEnergy / 2).epsilon(1e-3));
  }
}

TEST_CASE("coupling scaling law") {
  for (double th : {0.5, 1.0, 1.5}) {
    PekarProblem p;
    p.theta = th;
    p.coupling = 0.8;
    const auto rep = scaling_check(p, {2.0, 4.0});
    CHECK(rep.pass);
    for (const auto& row : rep.rows) {
      CHECK(row.expected == doctest::Approx(std::pow(row.lambda, 2 / (2 - th))));
      CHECK(row.rel_error <= 0.02);
    }
    CHECK(rep.base.virial <= 1e-4);
  }
}

TEST_CASE("other dimensions") {
  PekarProblem p;
  p.theta = 1.2;
  p.d = 4;
  p.nodes = 400;
  const auto sol = solve(p);
  CHECK(sol.energy < gaussian_energy(1.2, 1.0, 4));
  CHECK(sol.virial <= 1e-4);
  CHECK(sol.monotone);

  // The two-dimensional kernel has a cusp at r = r'; resolve it finely.
  p.d = 2;
  p.theta = 0.8;
  p.nodes = 800;
  const double coarse = solve(p).energy;
  p.nodes = 1600;
  const auto sol2 = solve(p);
  CHECK(sol2.energy < gaussian_energy(0.8, 1.0, 2));
  CHECK(sol2.virial <= 1e-4);
  CHECK(std::abs(sol2.energy / coarse - 1.0) <= 5e-3);
}

TEST_CASE("grid convergence") {
  PekarProblem p;
  const double coarse = solve(p).energy;
  p.nodes = 1600;
  const double fine = solve(p).energy;
  CHECK(std::abs(fine / coarse - 1.0) <= 5e-3);
}

TEST_CASE("weak coupling limit") {
  CHECK(solve({1.0, 0.0, 3}).energy == 0.0);
  double prev = -1.0;
  for (double g : {1.0, 0.1, 0.01}) {
    const double e = solve({1.0, g, 3}).energy;
    CHECK(e < 0.0);
    CHECK(e > prev);
    prev = e;
  }
  CHECK(prev > -1e-4);
}

TEST_CASE("failures are reported") {
  PekarProblem p;
  p.r_max = 0.5 * gaussian_length(1.0, 1.0, 3);
  CHECK_THROWS_AS(solve(p), GridTooSmall);
  PekarProblem q;
  q.max_iters = 1;
  CHECK_THROWS_AS(solve(q), NoConvergence);
  CHECK_THROWS_AS(solve({2.0, 1.0, 3}), DomainError);
  CHECK_THROWS_AS(solve({1.0, 1.0, 1}), DomainError);
  CHECK_THROWS_AS(solve({1.0, -1.0, 3}), DomainError);
}

TEST_CASE("lower bound sandwich") {
  using models::ModelKind;
  models::ModelParams mp;
  mp.kind = ModelKind::Polaron;

  // Pekar exceeds Jensen only once 0.1085α² > α, i.e. α above about 9.2.
  mp.alpha = 5.0;
  const auto mid = lower_bound_sandwich(models::build(mp));
  CHECK(mid.jensen_slope == doctest::Approx(5.0));
  CHECK(mid.theorem2_slope == doctest::Approx(5.0 + 6.25));
  CHECK(mid.pekar_slope == doctest::Approx(-kPekarUnitEnergy / 2 * 25).epsilon(2e-3));
  CHECK(mid.pekar_below_bound);
  CHECK(mid.jensen_below_bound);
  CHECK_FALSE(mid.pekar_above_jensen);

  mp.alpha = 12.0;
  const auto strong = lower_bound_sandwich(models::build(mp));
  CHECK(strong.pekar_above_jensen);
  CHECK(strong.pekar_slope < strong.theorem2_slope);

  mp.alpha = 0.01;
  const auto weak = lower_bound_sandwich(models::build(mp));
  CHECK(weak.jensen_slope == doctest::Approx(0.01));
  CHECK(weak.theorem2_slope / weak.jensen_slope == doctest::Approx(1.0).epsilon(3e-3));

  mp.alpha = 0.0;
  const auto zero = lower_bound_sandwich(models::build(mp));
  CHECK(zero.pekar_slope == 0.0);
  CHECK(zero.jensen_slope == 0.0);
  CHECK(zero.theorem2_slope == 0.0);
  CHECK_FALSE(zero.solution.has_value());

  models::ModelParams nelson;
  nelson.kind = ModelKind::NelsonQ;
  nelson.theta = 1.5;
  CHECK_THROWS_AS(lower_bound_sandwich(models::build(nelson)), NotPositiveDefinite);
  models::ModelParams hyd;
  CHECK_THROWS_AS(lower_bound_sandwich(models::build(hyd)), DomainError);
}
