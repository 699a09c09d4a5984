#pragma once

// Coupling functions f(t) on [0, T], their non-increasing envelope
// f_*(t) = esssup_{t<=s<=T} f(s), and the L^p-on-[0, s] norms (optionally
// weighted by t^{-w}) that the bound formulas consume.

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fkbound/numerics.hpp"

namespace fkbound::schedule {

struct Constant {
  double level = 0.0;
};

/// amplitude · e^{-rate·t}
struct ExpDecay {
  double amplitude = 0.0;
  double rate = 1.0;
};

/// height · χ_{[0, cutoff]}
struct Indicator {
  double height = 0.0;
  double cutoff = 1.0;
};

/// amplitude · t^{exponent}
struct PowerLaw {
  double amplitude = 0.0;
  double exponent = 0.0;
};

/// Step-left samples: values[i] holds on [times[i], times[i+1]); the last
/// value holds at the single point times.back().
struct Tabulated {
  std::vector<double> times;
  std::vector<double> values;
};

class CouplingFunction {
 public:
  using Form = std::variant<Constant, ExpDecay, Indicator, PowerLaw, Tabulated>;

  CouplingFunction() : form_(Constant{0.0}) {}

  static CouplingFunction constant(double level);
  static CouplingFunction exp_decay(double amplitude, double rate);
  static CouplingFunction indicator(double height, double cutoff);
  static CouplingFunction power_law(double amplitude, double exponent);
  static CouplingFunction tabulated(std::vector<double> times, std::vector<double> values);
  static CouplingFunction zero() { return constant(0.0); }

  const Form& form() const { return form_; }
  std::string_view kind() const;

  double operator()(double t) const;

  /// Exact zero test on the representation (amplitude or all samples zero).
  bool is_zero() const;
  bool is_nonincreasing() const;

  /// α·f for α >= 0.
  CouplingFunction scaled(double alpha) const;

  /// ‖f‖_{∞, [0, T]}; may be +∞ for a decreasing power law.
  double sup_norm(double horizon) const;

  /// End of the tabulated grid, if any.
  std::optional<double> tabulated_horizon() const;

  /// Natural time scale used to place quadrature breakpoints.
  double time_scale() const;

  /// Points inside (0, T) where f is discontinuous.
  std::vector<double> breakpoints(double horizon) const;

 private:
  explicit CouplingFunction(Form form) : form_(std::move(form)) {}
  Form form_;
};

struct Envelope {
  CouplingFunction source;
  double horizon = 0.0;
  CouplingFunction representation;

  double operator()(double t) const { return representation(t); }
};

/// f_*(t) = sup_{t<=s<=T} f(s). Analytic for the closed families; a
/// right-to-left running maximum for tabulated data (pointwise, so a value at
/// an isolated grid point is not discarded as a null set).
Envelope envelope(const CouplingFunction& f, double horizon);

/// Weight t^{-exponent}; exponent 0 means unweighted.
struct Weight {
  double exponent = 0.0;

  static Weight none() { return {0.0}; }
  static Weight inv_sqrt() { return {0.5}; }
  static Weight inv_pow(double e) { return {e}; }
  bool is_none() const { return exponent == 0.0; }
};

struct NormValue {
  double p = 1.0;
  double upper = 0.0;
  double value = 0.0;
};

/// (∫₀ˢ |f(t) t^{-w}|^p dt)^{1/p}. Closed-form antiderivatives for every
/// family (step-wise exact for tabulated data). p = ∞ is supported unweighted.
/// Throws NonIntegrable when the integrand diverges at t = 0.
NormValue norm(const CouplingFunction& f, double p, double upper, Weight weight = Weight::none());

/// Same quantity by adaptive quadrature, with the substitution u = t^{1-pw}
/// removing a weighted endpoint singularity. An independent route used for
/// cross-checks; `abs_tol` defaults to the inner tolerance.
double quadrature_norm(const CouplingFunction& f, double p, double upper, Weight weight = Weight::none(),
                       std::optional<double> abs_tol = std::nullopt);

/// ∫₀ᵀ ‖f·w‖_{p, t}^{outer_power} dt evaluated on f as given (callers pass
/// the envelope when the formula calls for f_*).
double iterated_norm(const CouplingFunction& f, double horizon, double inner_p, Weight inner_weight,
                     double outer_power, std::optional<double> rel_tol = std::nullopt);

}  // namespace fkbound::schedule
