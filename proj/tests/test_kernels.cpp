#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fkbound/errors.hpp"
#include "fkbound/kernels.hpp"
#include "oracles.hpp"

using namespace fkbound;
using namespace fkbound::kernels;
using schedule::CouplingFunction;

namespace {

constexpr double kPi = std::numbers::pi;

// For θ = 1, d = 3 the radial factor has a closed form via E|x + X_t|^{-1} =
// erf(r/√(2t))/r. With u = r/√(2t):
//   a(1, r, h) = ∫₀^∞ h(r²/(2u²)) (erf u - 2u e^{-u²}/√π) / u³ du.
double coulomb_coefficient(const std::function<double(double)>& h, double r) {
  const auto g = [&](double u) {
    if (u < 1e-3) return 4.0 / (3.0 * std::sqrt(kPi)) * h(u == 0.0 ? 1e300 : r * r / (2 * u * u));
    return h(r * r / (2 * u * u)) * (std::erf(u) - 2 * u * std::exp(-u * u) / std::sqrt(kPi)) / (u * u * u);
  };
  const double U = 20.0;
  const double head = oracle::simpson(g, 0.0, U, 200000);
  // u = 1/v on the tail; erf(1/v) = 1 to double precision for v < 1/20.
  const auto tail = [&](double v) { return v == 0.0 ? 0.0 : h(r * r * v * v / 2) * v; };
  return head + oracle::simpson(tail, 0.0, 1.0 / U, 2000);
}

double lieb_hls_constant(int d, double lambda) {
  return std::pow(kPi, lambda / 2) * std::tgamma(d / 2.0 - lambda / 2) / std::tgamma(d - lambda / 2) *
         std::pow(std::tgamma(d / 2.0) / std::tgamma(static_cast<double>(d)), -1.0 + lambda / d);
}

}  // namespace

TEST_CASE("heat kernel values and scaling") {
  CHECK(heat_kernel(1.0, 0.0, 3) == doctest::Approx(std::pow(2 * kPi, -1.5)).epsilon(1e-15));
  CHECK(heat_kernel(2.0, 1.0, 2) == doctest::Approx(std::exp(-0.25) / (4 * kPi)).epsilon(1e-15));
  for (int d = 2; d <= 5; ++d) {
    for (double lam : {0.3, 4.0}) {
      CHECK(heat_kernel(lam * 1.7, std::sqrt(lam) * 0.8, d) ==
            doctest::Approx(std::pow(lam, -d / 2.0) * heat_kernel(1.7, 0.8, d)).epsilon(1e-13));
    }
  }
  const std::vector<double> z{0.3, -0.4, 1.2};
  CHECK(heat_kernel(0.9, z) == doctest::Approx(heat_kernel(0.9, 1.3, 3)).epsilon(1e-14));
  // Unit mass in d = 2 by radial Simpson.
  CHECK(oracle::simpson([](double r) { return 2 * kPi * r * heat_kernel(0.5, r, 2); }, 0.0, 12.0) ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("subordination identity") {
  CHECK(subordination_check(1.0, 1.0, 3) < 1e-8);
  CHECK(subordination_check(0.5, 2.0, 2) < 1e-8);
  for (double r : {0.1, 1.0, 10.0}) CHECK(subordination_check(1.3, r, 4) < 1e-8);
  CHECK(subordination_integral(1.0, 2.0, 3) == doctest::Approx(0.5).epsilon(1e-9));
  const auto grid = subordination_grid();
  CHECK(grid.size() == 27);
  for (const auto& row : grid) {
    CHECK(row.pass);
    CHECK(row.residual <= 1e-8);
  }
}

TEST_CASE("convolution coefficient with constant weight attains the bound") {
  for (int d = 2; d <= 5; ++d) {
    for (double th : {0.4, 1.0, 1.6}) {
      if (th >= d) continue;
      const double exact = 2.0 / (th * (d - th));
      for (double r : {0.2, 1.0, 5.0}) {
        const auto c = convolution_coefficient(th, r, ConvolutionWeight::one(), d);
        CHECK(c.bound == doctest::Approx(exact).epsilon(1e-15));
        CHECK(c.value == doctest::Approx(exact).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("Coulomb coefficient against the erf oracle") {
  CHECK(coulomb_coefficient([](double) { return 1.0; }, 1.0) == doctest::Approx(1.0).epsilon(1e-9));
  for (double r : {0.3, 1.0, 3.0}) {
    for (double rate : {0.1, 1.0, 10.0}) {
      const double ref = coulomb_coefficient([&](double t) { return std::exp(-rate * t); }, r);
      const auto c = convolution_coefficient(1.0, r, ConvolutionWeight::exp_decay(rate), 3);
      CHECK(c.value == doctest::Approx(ref).epsilon(1e-7));
      CHECK(std::abs(c.value) < c.bound);
    }
    for (double L : {0.2, 2.0}) {
      // By parts, with F(u) = erf u - 2u e^{-u²}/√π and F' = 2u² erf'(u):
      //   ∫_b^∞ F/u³ du = F(b)/(2b²) + erfc(b).
      const double b = r / std::sqrt(2 * L);
      const double F = std::erf(b) - 2 * b * std::exp(-b * b) / std::sqrt(kPi);
      const double ref = F / (2 * b * b) + std::erfc(b);
      CHECK(convolution_coefficient(1.0, r, ConvolutionWeight::indicator(L), 3).value ==
            doctest::Approx(ref).epsilon(1e-9));
    }
  }
}

TEST_CASE("cutoff weight converges monotonically to the constant weight") {
  const double th = 1.2, r = 1.5;
  const int d = 3;
  const double one = convolution_coefficient(th, r, ConvolutionWeight::one(), d).value;
  double prev_gap = std::numeric_limits<double>::infinity();
  for (double L : {1.0, 10.0, 100.0}) {
    const double v = convolution_coefficient(th, r, ConvolutionWeight::indicator(L), d).value;
    const double gap = one - v;
    CHECK(gap > 0.0);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 0.05 * one);
}

TEST_CASE("random convolution suite respects the bound") {
  const auto suite = convolution_suite(200, 17);
  CHECK(suite.samples.size() == 200);
  CHECK(suite.violations == 0);
  CHECK(suite.max_ratio < 1.0);
  for (const auto& s : suite.samples) {
    CHECK(s.theta > 0.0);
    CHECK(s.theta < std::min(2.0, static_cast<double>(s.d)));
    CHECK(s.bound == doctest::Approx(2 * s.weight.sup_norm() / (s.theta * (s.d - s.theta))));
  }
  const auto again = convolution_suite(200, 17);
  for (std::size_t i = 0; i < 200; ++i) CHECK(again.samples[i].value == suite.samples[i].value);
}

TEST_CASE("single-path expectation") {
  for (double alpha : {0.5, 1.0, 2.0}) {
    const auto e = expected_action(ActionKind::Single, CouplingFunction::constant(alpha), {1.0, 3, 1.0});
    CHECK(e.value == doctest::Approx(2 * std::sqrt(2 / kPi) * alpha).epsilon(1e-12));
    CHECK_FALSE(e.inequality);
    CHECK(e.K == doctest::Approx(std::sqrt(2 / kPi)).epsilon(1e-12));
  }
  const auto off = expected_action(ActionKind::Single, CouplingFunction::constant(1.0), {1.0, 3, 1.0}, 0.5);
  CHECK(off.inequality);
  // Exact E|x + X_t|^{-1} = erf(r/√(2t))/r; the reported value must dominate it.
  const double exact = oracle::simpson([](double t) { return t == 0 ? 2.0 : std::erf(0.5 / std::sqrt(2 * t)) / 0.5; },
                                       0.0, 1.0, 20000);
  CHECK(off.value >= exact);

  const auto f = CouplingFunction::exp_decay(1.1, 0.6);
  const double th = 1.4;
  const int d = 4;
  const double K = oracle::inverse_moment(th, d);
  const double ref = K * oracle::weighted_simpson([&](double t) { return f(t); }, th / 2, 2.5, 40000);
  CHECK(expected_action(ActionKind::Single, f, {th, d, 2.5}).value == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("self-interaction expectation") {
  // K ∫₀ᵀ ∫₀ᵗ f(s) s^{-θ/2} ds dt = K ∫₀ᵀ (T - s) f(s) s^{-θ/2} ds
  const double a = 0.8 / std::numbers::sqrt2, T = 3.0;
  const auto f = CouplingFunction::exp_decay(a, 1.0);
  const double ref = std::sqrt(2 / kPi) *
                     oracle::weighted_simpson([&](double s) { return (T - s) * f(s); }, 0.5, T, 40000);
  CHECK(expected_action(ActionKind::SelfDouble, f, {1.0, 3, T}).value == doctest::Approx(ref).epsilon(1e-8));

  // polaron: slope α
  const double alpha = 0.8;
  const double v1 = expected_action(ActionKind::SelfDouble, f, {1.0, 3, 200.0}).value;
  const double v2 = expected_action(ActionKind::SelfDouble, f, {1.0, 3, 400.0}).value;
  CHECK((v2 - v1) / 200.0 == doctest::Approx(alpha).epsilon(1e-8));
}

TEST_CASE("zero coupling has zero expectation") {
  for (auto k : {ActionKind::Single, ActionKind::SelfDouble, ActionKind::CrossDouble}) {
    CHECK(expected_action(k, CouplingFunction::zero(), {1.0, 3, 2.0}).value == 0.0);
  }
}

TEST_CASE("cross-path expectation is an HLS upper bound") {
  for (int d : {3, 4}) {
    for (double th : {0.5, 1.0, 1.5}) {
      CHECK(hls_sharp_constant(d, th) == doctest::Approx(lieb_hls_constant(d, th)).epsilon(1e-12));
    }
  }
  const auto f = CouplingFunction::exp_decay(1.0, 1.0);
  const auto e = expected_action(ActionKind::CrossDouble, f, {1.0, 3, 2.0});
  CHECK(e.inequality);
  CHECK(e.value > 0.0);
  const auto e2 = expected_action(ActionKind::CrossDouble, f, {1.0, 3, 2.0}, 0.0, 2 * hls_sharp_constant(3, 1.0));
  CHECK(e2.value == doctest::Approx(2 * e.value).epsilon(1e-12));
}

TEST_CASE("stochastic derivative bound") {
  const auto one = CouplingFunction::constant(1.0);
  CHECK(stochastic_derivative_bound(one, 1.5, 3, 0.3, 4.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  for (double rad : {0.1, 1.0, 10.0}) {
    CHECK(stochastic_derivative_bound(CouplingFunction::constant(0.7), 1.0, 4, 0.0, rad) ==
          doctest::Approx(2 * 0.7 / 3).epsilon(1e-15));
  }
  CHECK(stochastic_derivative_bound(one, 1.5, 3, 0.0, 1e8) < 1e-3);
  CHECK_THROWS_AS(stochastic_derivative_bound(one, 0.5, 3, 0.0, 1.0), DomainError);

  const auto f = CouplingFunction::exp_decay(1.2, 0.7);
  for (double th : {1.0, 1.5}) {
    for (double rad : {0.3, 1.0, 3.0}) {
      for (double u : {0.0, 0.5, 1.5}) {
        CHECK(conditioned_derivative(f, th, 3, u, 2.0, rad) <= stochastic_derivative_bound(f, th, 3, u, rad));
      }
    }
  }
}
