#include "fkbound/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "fkbound/errors.hpp"

namespace fkbound::io {

namespace {

using schedule::CouplingFunction;

double get_number(const json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(fmt::format("missing field '{}'", key));
  const auto& v = j.at(key);
  if (!v.is_number()) throw ValidationError(fmt::format("field '{}' must be a number", key));
  return v.get<double>();
}

double get_number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? get_number(j, key) : fallback;
}

std::string csv_cell(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    return quoted + "\"";
  }
  if (v.is_null()) return "";
  return v.dump();
}

void flatten(const json& v, const std::string& path, std::ostream& out) {
  if (v.is_object()) {
    for (const auto& [k, x] : v.items()) flatten(x, path + "/" + k, out);
  } else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) flatten(v[i], path + "/" + std::to_string(i), out);
  } else {
    out << csv_cell(json(path.empty() ? "/" : path)) << ',' << csv_cell(v) << '\n';
  }
}

}  // namespace

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json to_json(const CouplingFunction& f) {
  using namespace schedule;
  return std::visit(
      [](const auto& form) -> json {
        using T = std::decay_t<decltype(form)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return {{"kind", "constant"}, {"level", form.level}};
        } else if constexpr (std::is_same_v<T, ExpDecay>) {
          return {{"kind", "exp_decay"}, {"amplitude", form.amplitude}, {"rate", form.rate}};
        } else if constexpr (std::is_same_v<T, Indicator>) {
          return {{"kind", "indicator"}, {"height", form.height}, {"cutoff", form.cutoff}};
        } else if constexpr (std::is_same_v<T, PowerLaw>) {
          return {{"kind", "power_law"}, {"amplitude", form.amplitude}, {"exponent", form.exponent}};
        } else {
          return {{"kind", "tabulated"}, {"times", form.times}, {"values", form.values}};
        }
      },
      f.form());
}

CouplingFunction coupling_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ValidationError("coupling must be an object with a string 'kind'");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") return CouplingFunction::constant(get_number(j, "level"));
  if (kind == "exp_decay") return CouplingFunction::exp_decay(get_number(j, "amplitude"), get_number_or(j, "rate", 1.0));
  if (kind == "indicator") return CouplingFunction::indicator(get_number(j, "height"), get_number(j, "cutoff"));
  if (kind == "power_law") return CouplingFunction::power_law(get_number(j, "amplitude"), get_number(j, "exponent"));
  if (kind == "tabulated") {
    if (j.contains("csv")) return read_tabulated_csv_file(j.at("csv").get<std::string>());
    if (!j.contains("times") || !j.contains("values")) throw ValidationError("tabulated coupling needs times/values");
    return CouplingFunction::tabulated(j.at("times").get<std::vector<double>>(),
                                       j.at("values").get<std::vector<double>>());
  }
  throw ValidationError(fmt::format("unknown coupling kind '{}'", kind));
}

CouplingFunction read_tabulated_csv(std::istream& in) {
  std::vector<double> times, values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ValidationError(fmt::format("CSV line {}: expected t,value", lineno));
    try {
      const double t = std::stod(line.substr(0, comma));
      const double v = std::stod(line.substr(comma + 1));
      times.push_back(t);
      values.push_back(v);
    } catch (const std::logic_error&) {
      if (times.empty() && lineno == 1) continue;  // header
      throw ValidationError(fmt::format("CSV line {}: not a number pair", lineno));
    }
  }
  return CouplingFunction::tabulated(std::move(times), std::move(values));
}

CouplingFunction read_tabulated_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open '{}'", path));
  return read_tabulated_csv(in);
}

json to_json(const bounds::BoundReport& r) {
  json terms = json::array();
  for (const auto& t : r.terms) {
    terms.push_back({{"label", t.label},
                     {"coefficient", number(t.coefficient)},
                     {"norm", number(t.norm_value)},
                     {"exponent", t.exponent},
                     {"contribution", number(t.contribution)}});
  }
  json norms = json::object();
  for (const auto& [k, v] : r.norms) norms[k] = number(v);
  json out{{"theorem", static_cast<int>(r.theorem)},
           {"theorem_name", std::string(bounds::to_string(r.theorem))},
           {"theta", r.params.theta},
           {"d", r.params.d},
           {"T", r.params.T},
           {"branch", std::string(bounds::to_string(r.branch))},
           {"log_bound", number(r.log_bound)},
           {"zero_coupling", r.zero_coupling},
           {"terms", terms},
           {"norms", norms}};
  if (r.alternate_branch_log_bound) out["alternate_branch_log_bound"] = number(*r.alternate_branch_log_bound);
  return out;
}

json to_json(const bounds::SlopeResult& s) {
  return {{"slope", number(s.slope)},
          {"analytic", s.analytic},
          {"subleading_coefficient", number(s.subleading_coefficient)},
          {"subleading_power", s.subleading_power}};
}

json to_json(const bounds::CoefficientSet& c) { return {{"A", c.A}, {"B", c.B}, {"C", c.C}, {"D", c.D}}; }

namespace {

std::string_view term_kind_name(mc::TermKind k) {
  switch (k) {
    case mc::TermKind::Single: return "single";
    case mc::TermKind::SelfDouble: return "self_double";
    case mc::TermKind::CrossDouble: return "cross_double";
    case mc::TermKind::Quadratic: return "quadratic";
  }
  return "unknown";
}

mc::TermKind term_kind_from_name(const std::string& s) {
  for (auto k : {mc::TermKind::Single, mc::TermKind::SelfDouble, mc::TermKind::CrossDouble, mc::TermKind::Quadratic})
    if (s == term_kind_name(k)) return k;
  throw ValidationError(fmt::format("unknown action term kind '{}'", s));
}

}  // namespace

json to_json(const mc::ActionSpec& s) {
  json terms = json::array();
  for (const auto& t : s.terms) {
    terms.push_back({{"kind", std::string(term_kind_name(t.kind))},
                     {"coupling", to_json(t.f)},
                     {"weight", t.weight},
                     {"role_a", t.role_a},
                     {"role_b", t.role_b},
                     {"offset", t.offset}});
  }
  return {{"theta", s.theta}, {"d", s.d}, {"T", s.T}, {"epsilon", s.epsilon}, {"terms", terms}};
}

mc::ActionSpec action_spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("terms") || !j.at("terms").is_array())
    throw ValidationError("action spec needs a 'terms' array");
  mc::ActionSpec s;
  s.theta = get_number(j, "theta");
  s.d = static_cast<int>(get_number(j, "d"));
  s.T = get_number(j, "T");
  s.epsilon = get_number_or(j, "epsilon", 0.0);
  for (const auto& t : j.at("terms")) {
    mc::ActionTerm term;
    term.kind = term_kind_from_name(t.at("kind").get<std::string>());
    term.f = coupling_from_json(t.at("coupling"));
    term.weight = get_number_or(t, "weight", 1.0);
    term.role_a = static_cast<int>(get_number_or(t, "role_a", 0));
    term.role_b = static_cast<int>(get_number_or(t, "role_b", 1));
    term.offset = get_number_or(t, "offset", 0.0);
    s.terms.push_back(std::move(term));
  }
  s.validate();
  return s;
}

json to_json(const mc::McEstimate& e) {
  return {{"log_mean", number(e.log_mean)},
          {"stderr_log", number(e.stderr_log)},
          {"action_mean", number(e.action_mean)},
          {"action_stderr", number(e.action_stderr)},
          {"action_variance", number(e.action_variance)},
          {"action_variance_stderr", number(e.action_variance_stderr)},
          {"M", e.M},
          {"N", e.N},
          {"seed", e.seed},
          {"infinite_paths", e.infinite_paths},
          {"biased_low", e.biased_low}};
}

json to_json(const mc::Ladder& l) {
  json rungs = json::array();
  for (const auto& r : l.rungs) rungs.push_back(to_json(r));
  return {{"order", l.order},
          {"allowance", number(l.allowance)},
          {"extrapolated_log_mean", number(l.extrapolated_log_mean)},
          {"extrapolated_action_mean", number(l.extrapolated_action_mean)},
          {"rungs", rungs}};
}

json to_json(const mc::MaximalityRow& r) {
  return {{"radius", r.radius},
          {"log_mean_origin", number(r.at_origin.log_mean)},
          {"log_mean_radius", number(r.at_radius.log_mean)},
          {"combined_stderr", number(r.combined_stderr)},
          {"pass", r.pass}};
}

json to_json(const mc::MartingaleReport& r) {
  return {{"lambda", r.lambda},
          {"T", r.T},
          {"cap", r.cap},
          {"affine", to_json(r.affine)},
          {"affine_exact", r.affine_exact},
          {"affine_pass", r.affine_pass},
          {"truncated", to_json(r.truncated)},
          {"truncated_bound", r.truncated_bound},
          {"truncated_exact", r.truncated_exact},
          {"truncated_pass", r.truncated_pass}};
}

json to_json(const models::ModelParams& p) {
  json j{{"name", std::string(models::to_string(p.kind))}};
  switch (p.kind) {
    case models::ModelKind::Hydrogen:
    case models::ModelKind::Polaron:
    case models::ModelKind::Bipolaron:
      j["alpha"] = p.alpha;
      break;
    case models::ModelKind::InverseSquare:
      j["alpha"] = p.alpha;
      j["theta"] = p.theta;
      j["d"] = p.d;
      break;
    case models::ModelKind::NelsonQ:
      j["gamma"] = p.gamma;
      j["tau"] = p.tau;
      j["theta"] = p.theta;
      break;
  }
  return j;
}

models::ModelParams model_params_from_json(const json& j) {
  if (!j.is_object() || !j.contains("name")) throw ValidationError("model needs a 'name'");
  models::ModelParams p;
  p.kind = models::model_kind_from_string(j.at("name").get<std::string>());
  p.alpha = get_number_or(j, "alpha", p.alpha);
  p.gamma = get_number_or(j, "gamma", p.gamma);
  p.tau = get_number_or(j, "tau", p.tau);
  p.theta = get_number_or(j, "theta", p.kind == models::ModelKind::NelsonQ ? 1.5 : p.theta);
  p.d = static_cast<int>(get_number_or(j, "d", p.d));
  return p;
}

json to_json(const models::ModelSlope& s) {
  json comps = json::array();
  for (const auto& c : s.components) comps.push_back(to_json(c));
  json j{{"slope", number(s.slope)},
         {"analytic", s.analytic},
         {"sqrt_coefficient", number(s.sqrt_coefficient)},
         {"components", comps}};
  if (s.nelson) j["nelson_constant"] = {{"c1", s.nelson->c1}, {"c2", s.nelson->c2}, {"c", s.nelson->c}};
  return j;
}

json to_json(const models::VerifyReport& r) {
  json rows = json::array();
  for (const auto& v : r.rows) {
    rows.push_back({{"check", v.name},
                    {"lhs", number(v.lhs)},
                    {"rhs", number(v.rhs)},
                    {"tolerance", number(v.tolerance)},
                    {"margin", number(v.margin)},
                    {"verdict", v.pass ? "PASS" : "FAIL"}});
  }
  return {{"T", r.T},
          {"log_bound", number(r.log_bound)},
          {"jensen", number(r.jensen)},
          {"mc", to_json(r.mc())},
          {"ladder", to_json(r.ladder)},
          {"tolerance", number(r.tolerance)},
          {"heavy_tail_override", r.heavy_tail_override},
          {"rows", rows},
          {"pass", r.pass}};
}

json to_json(const oscillator::LogExpectation& r) {
  return {{"closed_form", r.closed_form},
          {"reconstruction", r.reconstruction},
          {"reconstruction_residual", r.residual},
          {"riccati_residual", r.riccati_residual},
          {"tanh_max_error", r.tanh_error}};
}

json to_json(const oscillator::McCrosscheck& r) {
  return {{"exact", r.exact},
          {"log_mean", number(r.ladder.rungs.back().log_mean)},
          {"difference", number(r.difference)},
          {"tolerance", number(r.tolerance)},
          {"pass", r.pass},
          {"ladder", to_json(r.ladder)}};
}

json to_json(const pekar::PekarSolution& s, bool with_profile) {
  json j{{"energy", s.energy},
         {"kinetic", s.kinetic},
         {"potential", s.potential},
         {"iterations", s.iterations},
         {"residual", s.residual},
         {"virial", s.virial},
         {"norm_error", s.norm_error},
         {"r_max", s.r_max},
         {"nodes", s.nodes},
         {"tail_mass", s.tail_mass},
         {"monotone", s.monotone}};
  if (with_profile) {
    j["r"] = s.r;
    j["psi"] = s.psi;
  }
  return j;
}

json to_json(const pekar::ScalingReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"lambda", row.lambda},
                    {"energy", row.energy},
                    {"ratio", row.ratio},
                    {"expected", row.expected},
                    {"rel_error", row.rel_error},
                    {"pass", row.pass}});
  }
  return {{"base_energy", r.base.energy}, {"tolerance", r.tolerance}, {"rows", rows}, {"pass", r.pass}};
}

json to_json(const pekar::Sandwich& s) {
  json j{{"coupling", s.coupling},
         {"pekar_slope", s.pekar_slope},
         {"jensen_slope", s.jensen_slope},
         {"theorem2_slope", s.theorem2_slope},
         {"pekar_below_bound", s.pekar_below_bound},
         {"jensen_below_bound", s.jensen_below_bound},
         {"pekar_above_jensen", s.pekar_above_jensen}};
  if (s.solution) j["solution"] = to_json(*s.solution, false);
  return j;
}

json to_json(const kernels::ConvolutionCoefficient& c) {
  return {{"theta", c.theta},
          {"d", c.d},
          {"r", c.r},
          {"weight", c.weight.describe()},
          {"value", number(c.value)},
          {"bound", number(c.bound)},
          {"ratio", number(std::abs(c.value) / c.bound)}};
}

json to_json(const kernels::SubordinationRow& r) {
  return {{"theta", r.theta}, {"d", r.d}, {"r", r.r}, {"residual", number(r.residual)}, {"pass", r.pass}};
}

json to_json(const kernels::ExpectationFormula& e) {
  return {{"kind", std::string(kernels::to_string(e.kind))},
          {"K", e.K},
          {"value", number(e.value)},
          {"inequality", e.inequality},
          {"note", e.note}};
}

void write_csv_table(const json& rows, std::ostream& out) {
  if (!rows.is_array() || rows.empty()) return;
  std::vector<std::string> keys;
  for (const auto& [k, v] : rows.front().items()) keys.push_back(k);
  for (std::size_t i = 0; i < keys.size(); ++i) out << (i ? "," : "") << csv_cell(json(keys[i]));
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < keys.size(); ++i) {
      out << (i ? "," : "");
      if (row.contains(keys[i])) out << csv_cell(row.at(keys[i]));
    }
    out << '\n';
  }
}

void write_csv_flat(const json& value, std::ostream& out) {
  out << "path,value\n";
  flatten(value, "", out);
}

void write_pretty(const json& value, std::ostream& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const auto scalar = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  if (value.is_object()) {
    for (const auto& [k, v] : value.items()) {
      if (v.is_structured() && !v.empty()) {
        out << pad << k << ":\n";
        write_pretty(v, out, indent + 1);
      } else {
        out << pad << k << ": " << scalar(v) << '\n';
      }
    }
  } else if (value.is_array()) {
    const bool flat = std::all_of(value.begin(), value.end(), [](const json& v) { return v.is_primitive(); });
    if (flat) {
      out << pad << value.dump() << '\n';
      return;
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      out << pad << "- [" << i << "]\n";
      write_pretty(value[i], out, indent + 1);
    }
  } else {
    out << pad << scalar(value) << '\n';
  }
}

}  // namespace fkbound::io
