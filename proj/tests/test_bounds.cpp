#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fkbound/bounds.hpp"
#include "fkbound/errors.hpp"
#include "oracles.hpp"

using namespace fkbound;
using namespace fkbound::bounds;
using schedule::CouplingFunction;

namespace {

// Coefficients typed straight from their closed forms with std::tgamma.
struct Coef {
  double A, B, C, D;
};

Coef coef_oracle(double th, int d) {
  const double q = 2.0 - th;
  const double A = std::pow(2.0, (3 * th - 2) / q) * std::pow(th, th / q) * q / std::pow(d - th, 2 * th / q);
  const double B = th * std::tgamma((d - th) / 2.0) / (std::pow(2.0, th / 2.0) * std::tgamma(d / 2.0));
  const double C = std::pow(2.0, (3 * th - 2) / q) * std::pow(th, th / q) * q / std::pow(d - 1.0, 2 * th / q);
  const double D = std::pow(th, 1.0 / q) * std::tgamma((d - 1) / 2.0) * std::pow(d - 1.0, (2 - 2 * th) / q) /
                   (std::pow(2.0, (6 - 5 * th) / (4 - 2 * th)) * std::tgamma(d / 2.0));
  return {A, B, C, D};
}

double sum_terms(const BoundReport& r) {
  double s = 0.0;
  for (const auto& t : r.terms) s += t.contribution;
  return s;
}

const std::vector<CouplingFunction>& families() {
  static const std::vector<CouplingFunction> fs{CouplingFunction::constant(0.7), CouplingFunction::exp_decay(1.2, 0.8),
                                                CouplingFunction::indicator(0.9, 1.3)};
  return fs;
}

}  // namespace

TEST_CASE("coefficients match their closed forms") {
  for (int d = 2; d <= 6; ++d) {
    for (double th : {0.1, 0.5, 1.0, 1.3, 1.9}) {
      const auto c = coefficients(th, d);
      const auto o = coef_oracle(th, d);
      CHECK(c.A == doctest::Approx(o.A).epsilon(1e-13));
      CHECK(c.B == doctest::Approx(o.B).epsilon(1e-13));
      CHECK(c.C == doctest::Approx(o.C).epsilon(1e-13));
      CHECK(c.D == doctest::Approx(o.D).epsilon(1e-13));
      CHECK(moment_constant(th, d) == doctest::Approx(oracle::inverse_moment(th, d)).epsilon(1e-13));
    }
  }
  const auto c = coefficients(1.0, 3);
  CHECK(c.A == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(c.C == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(c.B == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-15));
  CHECK(c.D == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-15));
}

TEST_CASE("coefficients near the super-Coulomb limit stay finite") {
  for (double th : {1.98, 1.99}) {
    const auto c = coefficients(th, 3);
    CHECK(std::isfinite(c.A));
    CHECK(c.A > 0.0);
    CHECK(c.A == doctest::Approx(coef_oracle(th, 3).A).epsilon(1e-10));
  }
}

TEST_CASE("parameter validation") {
  const auto f = CouplingFunction::constant(1.0);
  CHECK_THROWS_AS(coefficients(0.0, 3), DomainError);
  CHECK_THROWS_AS(coefficients(2.0, 3), DomainError);
  CHECK_THROWS_AS(coefficients(1.0, 1), DomainError);
  CHECK_THROWS_AS(theorem1_bound(f, {1.0, 3, -1.0}), DomainError);
  CHECK_THROWS_AS(inverse_square_energy(0.1, 0.5, 3), DomainError);
  CHECK_THROWS_AS(inverse_square_energy(0.1, 1.0, 2), DomainError);
}

TEST_CASE("hydrogen bound") {
  const double s2p = std::sqrt(2.0 / std::numbers::pi);
  for (double alpha : {0.3, 1.0, 2.5}) {
    for (double T : {0.5, 1.0, 7.0}) {
      const auto r = theorem1_bound(CouplingFunction::constant(alpha), {1.0, 3, T});
      CHECK(r.log_bound == doctest::Approx(alpha * alpha * T / 2 + 2 * s2p * alpha * std::sqrt(T)).epsilon(1e-12));
    }
  }
  CHECK(theorem1_bound(CouplingFunction::constant(1.0), {1.0, 3, 1.0}).log_bound ==
        doctest::Approx(2.0957691216).epsilon(1e-10));
}

TEST_CASE("zero coupling gives a bound of one") {
  for (auto th : {Theorem::Single, Theorem::SelfDouble, Theorem::CrossDouble}) {
    for (double theta : {0.5, 1.0, 1.5}) {
      const auto r = theorem_bound(th, CouplingFunction::zero(), {theta, 3, 2.0});
      CHECK(r.log_bound == 0.0);
      CHECK(r.zero_coupling);
    }
  }
  CHECK(theorem1_bound(CouplingFunction::tabulated({0.0, 1.0, 2.0}, {0, 0, 0}), {0.7, 3, 2.0}).log_bound == 0.0);
}

TEST_CASE("sub-Coulomb single-path bound, term by term") {
  const auto o = coef_oracle(0.5, 3);
  // f = 1 on [0,1]: ‖f‖₁ = ‖f²‖₁ = 1, ‖f t^{-1/2}‖₁ = 2.
  const auto r = theorem1_bound(CouplingFunction::constant(1.0), {0.5, 3, 1.0});
  CHECK(r.log_bound == doctest::Approx(o.C + 2.0 * o.D).epsilon(1e-12));
  CHECK(r.branch == Branch::ThetaLeq1);

  // Exponential decay, every norm from the Simpson oracle.
  const double a = 1.4, T = 2.0, th = 0.6;
  const auto c = coef_oracle(th, 3);
  const auto f = [&](double t) { return a * std::exp(-t); };
  const double n1 = oracle::simpson(f, 0, T);
  const double n2 = oracle::simpson([&](double t) { return f(t) * f(t); }, 0, T);
  const double nw = oracle::weighted_simpson(f, 0.5, T, 40000);
  const double q = 2.0 - th;
  const double ref = c.C * std::pow(n1, (2 - 2 * th) / q) * std::pow(n2, th / q) +
                     c.D * std::pow(n1 / n2, (1 - th) / q) * nw;
  const auto rr = theorem1_bound(CouplingFunction::exp_decay(a, 1.0), {th, 3, T});
  CHECK(rr.log_bound == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("super-Coulomb single-path bound against the Simpson oracle") {
  const double a = 0.8, T = 3.0, th = 1.5;
  const auto c = coef_oracle(th, 4);
  const auto f = [&](double t) { return a * std::exp(-0.5 * t); };
  const double ref = c.A * oracle::simpson([&](double t) { return std::pow(f(t), 2 / (2 - th)); }, 0, T) +
                     c.B * oracle::weighted_simpson(f, th / 2, T, 40000);
  const auto r = theorem1_bound(CouplingFunction::exp_decay(a, 0.5), {th, 4, T});
  CHECK(r.log_bound == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("envelope enters the single-path bound") {
  // f increasing on [0,T]: the bound must use f_* = f(T), not f.
  const double T = 2.0;
  const auto f = CouplingFunction::power_law(1.0, 1.0);
  const auto r = theorem1_bound(f, {1.0, 3, T});
  const auto flat = theorem1_bound(CouplingFunction::constant(T), {1.0, 3, T});
  CHECK(r.log_bound == doctest::Approx(flat.log_bound).epsilon(1e-12));
}

TEST_CASE("self-interaction bound for a constant coupling has a closed form") {
  // ‖c‖_{1,t} = ct and ‖c s^{-w}‖_{1,t} = c t^{1-w}/(1-w).
  const double cst = 0.9, T = 2.5;
  for (double th : {1.0, 1.4}) {
    const auto o = coef_oracle(th, 3);
    const double q = 2 / (2 - th), w = th / 2;
    const double ref = o.A * std::pow(cst, q) * std::pow(T, q + 1) / (q + 1) +
                       o.B * cst * std::pow(T, 2 - w) / ((1 - w) * (2 - w));
    CHECK(theorem2_bound(CouplingFunction::constant(cst), {th, 3, T}).log_bound ==
          doctest::Approx(ref).epsilon(1e-8));
  }
  const double th = 0.5;
  const auto o = coef_oracle(th, 3);
  const double I1 = cst * T * T / 2, I2 = cst * cst * T * T * T / 3;
  const double Iw = cst * 2.0 * std::pow(T, 1.5) / 1.5;
  const double ref = o.C * std::pow(I1, (2 - 2 * th) / (2 - th)) * std::pow(I2, th / (2 - th)) +
                     o.D * std::pow(I1 / I2, (1 - th) / (2 - th)) * Iw;
  CHECK(theorem2_bound(CouplingFunction::constant(cst), {th, 3, T}).log_bound == doctest::Approx(ref).epsilon(1e-8));
}

TEST_CASE("two-path bound examples") {
  CHECK(theorem3_bound(CouplingFunction::constant(1.0), {1.0, 3, 1.0}).log_bound ==
        doctest::Approx(0.25 + 2.0 / std::sqrt(std::numbers::pi)).epsilon(1e-12));

  const double alpha = 0.7, T = 1e6;
  const double a = 4 * alpha / std::numbers::sqrt2;
  const double n = a * (1 - std::exp(-T));
  const double ref = 0.5 * 0.5 * n * n * T + std::pow(2.0, -0.5) * 2 * std::sqrt(2 / std::numbers::pi) * n * std::sqrt(T);
  const auto r = theorem3_bound(CouplingFunction::exp_decay(a, 1.0), {1.0, 3, T});
  CHECK(r.log_bound == doctest::Approx(ref).epsilon(1e-12));
  CHECK(0.5 * r.log_bound / T == doctest::Approx(alpha * alpha).epsilon(5e-3));

  const double th = 0.5;
  const auto o = coef_oracle(th, 3);
  const double nn = 1.3 * 2.0;
  const double ref2 = std::pow(2.0, -th / (2 - th)) * o.C * std::pow(nn, 2 / (2 - th)) * 2.0 +
                      std::pow(2.0, (4 - 3 * th) / (2 * (2 - th))) * o.D * std::pow(nn, 1 / (2 - th)) * std::sqrt(2.0);
  CHECK(theorem3_bound(CouplingFunction::constant(1.3), {th, 3, 2.0}).log_bound == doctest::Approx(ref2).epsilon(1e-12));
}

TEST_CASE("branch continuity at the Coulomb exponent") {
  for (int d = 2; d <= 6; ++d) {
    for (const auto& f : families()) {
      for (auto th : {Theorem::Single, Theorem::SelfDouble, Theorem::CrossDouble}) {
        const BoundParams p{1.0, d, 2.0};
        const double hi = theorem_bound(th, f, p, Branch::ThetaGeq1).log_bound;
        const double lo = theorem_bound(th, f, p, Branch::ThetaLeq1).log_bound;
        CHECK(hi == doctest::Approx(lo).epsilon(1e-10));
        const auto both = theorem_bound(th, f, p);
        REQUIRE(both.alternate_branch_log_bound.has_value());
        CHECK(*both.alternate_branch_log_bound == doctest::Approx(both.log_bound).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("forcing the wrong branch off the Coulomb exponent is rejected") {
  const auto f = CouplingFunction::constant(1.0);
  CHECK_THROWS_AS(theorem_bound(Theorem::Single, f, {1.5, 3, 1.0}, Branch::ThetaLeq1), DomainError);
  CHECK_THROWS_AS(theorem_bound(Theorem::Single, f, {0.5, 3, 1.0}, Branch::ThetaGeq1), DomainError);
}

TEST_CASE("reports are consistent: terms sum to the bound, bound nonnegative") {
  for (double th : {0.3, 1.0, 1.7}) {
    for (const auto& f : families()) {
      for (auto which : {Theorem::Single, Theorem::SelfDouble, Theorem::CrossDouble}) {
        const auto r = theorem_bound(which, f, {th, 3, 1.5});
        CHECK(r.log_bound >= 0.0);
        CHECK(r.log_bound == doctest::Approx(sum_terms(r)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("monotone in horizon and coupling strength") {
  for (double th : {0.4, 1.0, 1.6}) {
    for (const auto& f : families()) {
      for (auto which : {Theorem::Single, Theorem::SelfDouble, Theorem::CrossDouble}) {
        double prev = -1.0;
        for (double T : {0.1, 0.5, 1.0, 2.0, 5.0}) {
          const double v = theorem_bound(which, f, {th, 3, T}).log_bound;
          CHECK(v >= prev);
          prev = v;
        }
        prev = -1.0;
        for (double s : {0.5, 1.0, 2.0}) {
          const double v = theorem_bound(which, f.scaled(s), {th, 3, 2.0}).log_bound;
          CHECK(v >= prev);
          prev = v;
        }
      }
    }
  }
}

TEST_CASE("coupling exponents of the single-path terms") {
  for (double th : {1.0, 1.25, 1.8}) {
    const auto r1 = theorem1_bound(CouplingFunction::constant(0.6), {th, 3, 1.7});
    const auto r2 = theorem1_bound(CouplingFunction::constant(1.2), {th, 3, 1.7});
    REQUIRE(r1.terms.size() == 2);
    CHECK(r2.terms[0].contribution / r1.terms[0].contribution == doctest::Approx(std::pow(2.0, 2 / (2 - th))).epsilon(1e-12));
    CHECK(r2.terms[1].contribution / r1.terms[1].contribution == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("asymptotic slopes") {
  for (double alpha : {0.2, 1.0, 3.0}) {
    const auto h = asymptotic_slope(Theorem::Single, CouplingFunction::constant(alpha), 1.0, 3);
    CHECK(h.analytic);
    CHECK(h.slope == doctest::Approx(alpha * alpha / 2).epsilon(1e-14));

    const auto p = asymptotic_slope(Theorem::SelfDouble, CouplingFunction::exp_decay(alpha / std::numbers::sqrt2, 1.0), 1.0, 3);
    CHECK(p.slope == doctest::Approx(alpha + alpha * alpha / 4).epsilon(1e-13));
    CHECK(p.subleading_coefficient == 0.0);

    const auto b = asymptotic_slope(Theorem::CrossDouble, CouplingFunction::exp_decay(4 * alpha / std::numbers::sqrt2, 1.0), 1.0, 3);
    CHECK(0.5 * b.slope == doctest::Approx(alpha * alpha).epsilon(1e-13));
    CHECK(0.5 * b.subleading_coefficient == doctest::Approx(2 * std::sqrt(2 / std::numbers::pi) * alpha).epsilon(1e-13));
  }
}

TEST_CASE("closed-form slopes agree with the doubling ladder") {
  const auto f = CouplingFunction::exp_decay(0.9, 1.5);
  for (double th : {0.5, 1.0, 1.5}) {
    for (auto which : {Theorem::Single, Theorem::SelfDouble}) {
      const double exact = asymptotic_slope(which, f, th, 3).slope;
      CHECK(richardson_slope(which, f, th, 3) == doctest::Approx(exact).epsilon(1e-4));
    }
  }
}

TEST_CASE("nelson coupling gives a log-linear self-interaction bound") {
  const auto f = CouplingFunction::indicator(1.0, 1.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double T : {10.0, 100.0, 1000.0, 10000.0}) {
    const double gap = std::abs(theorem2_bound(f, {1.5, 3, 2 * T}).log_bound / (2 * T) -
                                theorem2_bound(f, {1.5, 3, T}).log_bound / T);
    CHECK(gap < prev / 4);
    prev = gap;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("diverging slope is reported") {
  CHECK_THROWS_AS(richardson_slope(Theorem::Single, CouplingFunction::power_law(1.0, 0.5), 1.0, 3), NoLinearSlope);
}

TEST_CASE("inverse-square energy") {
  CHECK(critical_coupling(3) == doctest::Approx(0.125));
  CHECK(critical_coupling(5) == doctest::Approx(9.0 / 8.0));
  const auto oracle_energy = [](double alpha, double th, int d) {
    return -std::pow(2.0, 2 * (th - 1) / (2 - th)) * (2 - th) * std::pow(th, th / (2 - th)) *
           std::pow(2.0, th / (2 - th)) * std::pow(d - th, -2 * th / (2 - th)) * std::pow(alpha, 2 / (2 - th));
  };
  for (double th : {1.0, 1.5, 1.9}) {
    CHECK(inverse_square_energy(0.3, th, 4) == doctest::Approx(oracle_energy(0.3, th, 4)).epsilon(1e-12));
  }
  CHECK(inverse_square_energy(1.0, 1.0, 3) == doctest::Approx(-0.5).epsilon(1e-14));

  double prev = -std::numeric_limits<double>::infinity();
  for (double th : {1.5, 1.9, 1.99, 1.999}) {
    const double e = inverse_square_energy(0.1, th, 3);
    CHECK(e <= 0.0);
    CHECK(e > prev);
    prev = e;
  }
  CHECK(std::abs(prev) < 1e-100);

  prev = 0.0;
  for (double th : {1.5, 1.9, 1.99, 1.999}) {
    const double e = std::abs(inverse_square_energy(0.2, th, 3));
    CHECK(e > prev);
    prev = e;
  }
  CHECK(prev > 1e100);
}
