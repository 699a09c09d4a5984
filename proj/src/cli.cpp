#include "fkbound/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fkbound/errors.hpp"
#include "fkbound/numerics.hpp"

namespace fkbound::cli {

using io::json;

namespace {

const std::vector<std::string> kCommands = {"bound", "simulate", "model", "oscillator", "pekar", "kernels", "sweep"};

json tolerance_defaults() {
  const numerics::Tolerances t;
  return {{"inner_abs", t.inner_abs}, {"outer_rel", t.outer_rel}};
}

json defaults_for(const std::string& command) {
  if (command == "bound") {
    return {{"theorem", 1},          {"theta", 1.0},     {"d", 3},
            {"T", 1.0},              {"coupling", {{"kind", "constant"}, {"level", 1.0}}},
            {"branch", nullptr},     {"slope", false}};
  }
  if (command == "simulate") {
    return {{"model", nullptr}, {"action", nullptr}, {"T", 1.0},       {"paths", 10000}, {"steps", 512},
            {"seed", 1},        {"offset", 0.0},     {"epsilon", 0.0}, {"ladder", false}};
  }
  if (command == "model") return {{"model", {{"name", "hydrogen"}, {"alpha", 1.0}}}, {"T", 1.0}, {"verify", nullptr}};
  if (command == "oscillator") return {{"omega", 1.0}, {"T", 1.0}, {"grid", 256}, {"mc", nullptr}};
  if (command == "pekar") {
    return {{"theta", 1.0},      {"coupling", 1.0},          {"d", 3},          {"r_max", nullptr},
            {"nodes", 800},      {"scaling", false},         {"lambdas", {2.0, 4.0}},
            {"profile", false},  {"model", nullptr}};
  }
  if (command == "kernels") {
    return {{"check", "subordination"}, {"count", 200}, {"seed", 1}, {"paths", 4000}, {"steps", 128},
            {"hls_constant", nullptr}};
  }
  if (command == "sweep") {
    return {{"model", {{"name", "hydrogen"}, {"alpha", 1.0}}},
            {"param", "alpha"},
            {"values", json::array()},
            {"T", 1.0},
            {"mc", nullptr}};
  }
  throw ValidationError(fmt::format("unknown command '{}'", command));
}

void fill(json& target, const json& defaults) {
  for (const auto& [k, v] : defaults.items()) {
    if (!target.contains(k)) target[k] = v;
  }
}

template <class T>
T get(const json& c, const char* key) {
  try {
    return c.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("config field '{}': {}", key, e.what()));
  }
}

std::size_t get_count(const json& c, const char* key) {
  const double v = get<double>(c, key);
  if (!(v >= 0.0) || v != std::floor(v)) throw ValidationError(fmt::format("'{}' must be a nonnegative integer", key));
  return static_cast<std::size_t>(v);
}

std::uint64_t get_seed(const json& c, const char* key) {
  const auto& v = c.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ValidationError(fmt::format("'{}' must be a nonnegative integer", key));
}

bounds::Theorem theorem_for(mc::TermKind k) {
  switch (k) {
    case mc::TermKind::Single: return bounds::Theorem::Single;
    case mc::TermKind::SelfDouble: return bounds::Theorem::SelfDouble;
    case mc::TermKind::CrossDouble: return bounds::Theorem::CrossDouble;
    case mc::TermKind::Quadratic: break;
  }
  throw ValidationError("quadratic actions have no matching bound");
}

json model_summary(const models::ModelSpec& m) {
  json comps = json::array();
  for (const auto& c : m.components) {
    comps.push_back({{"label", c.label},
                     {"theorem", static_cast<int>(c.theorem)},
                     {"exponent", c.exponent},
                     {"coupling", io::to_json(c.f)}});
  }
  return comps;
}

// ---------------------------------------------------------------- commands

Outcome run_bound(const json& c) {
  const auto f = io::coupling_from_json(c.at("coupling"));
  const bounds::BoundParams bp{get<double>(c, "theta"), get<int>(c, "d"), get<double>(c, "T")};
  const auto theorem = bounds::theorem_from_int(get<int>(c, "theorem"));
  std::optional<bounds::Branch> branch;
  if (!c.at("branch").is_null()) {
    const auto b = get<std::string>(c, "branch");
    if (b == std::string(bounds::to_string(bounds::Branch::ThetaGeq1)) || b == "geq1") {
      branch = bounds::Branch::ThetaGeq1;
    } else if (b == std::string(bounds::to_string(bounds::Branch::ThetaLeq1)) || b == "leq1") {
      branch = bounds::Branch::ThetaLeq1;
    } else {
      throw ValidationError(fmt::format("unknown branch '{}'", b));
    }
  }
  const auto report = bounds::theorem_bound(theorem, f, bp, branch);
  Outcome o;
  o.result = io::to_json(report);
  o.result["coefficients"] = io::to_json(bounds::coefficients(bp.theta, bp.d));
  if (get<bool>(c, "slope")) {
    o.result["asymptotic_slope"] = io::to_json(bounds::asymptotic_slope(theorem, f, bp.theta, bp.d));
  }
  o.table = o.result["terms"];
  return o;
}

Outcome run_simulate(const json& c) {
  const double T = get<double>(c, "T");
  const auto M = get_count(c, "paths");
  const auto N = get_count(c, "steps");
  const auto seed = get_seed(c, "seed");
  const double offset = get<double>(c, "offset");
  const double epsilon = get<double>(c, "epsilon");

  mc::ActionSpec spec;
  json bound = nullptr;
  if (!c.at("model").is_null()) {
    const auto m = models::build(io::model_params_from_json(c.at("model")));
    spec = m.action(T);
    const auto mb = models::log_bound(m, T);
    bound = {{"log_bound", io::number(mb.log_bound)}, {"components", json::array()}};
    for (const auto& r : mb.reports) bound["components"].push_back(io::to_json(r));
  } else if (!c.at("action").is_null()) {
    json a = c.at("action");
    a["T"] = T;
    spec = io::action_spec_from_json(a);
    if (spec.terms.size() == 1 && spec.terms.front().kind != mc::TermKind::Quadratic) {
      const auto& t = spec.terms.front();
      if (t.weight >= 0.0) {
        const auto r = bounds::theorem_bound(theorem_for(t.kind), t.f.scaled(t.weight),
                                             bounds::BoundParams{spec.theta, spec.d, T});
        bound = io::to_json(r);
      }
    }
  } else {
    throw ValidationError("simulate needs --model or an action spec (--spec)");
  }
  for (auto& t : spec.terms) {
    if (offset != 0.0) {
      if (t.kind != mc::TermKind::Single && t.kind != mc::TermKind::CrossDouble)
        throw ValidationError("--offset applies to single and cross actions only");
      t.offset = offset;
    }
  }
  spec.epsilon = epsilon;

  Outcome o;
  json est;
  if (get<bool>(c, "ladder")) {
    if (N % 2 != 0) throw ValidationError("--ladder needs an even step count");
    const auto l = mc::ladder(spec, M, {N / 2, N}, seed);
    est = io::to_json(l.rungs.back());
    o.result["ladder"] = io::to_json(l);
  } else {
    est = io::to_json(mc::estimate(spec, M, N, seed));
  }
  o.result["estimate"] = est;
  o.result["bound"] = bound;
  o.result["action"] = io::to_json(spec);
  json row = est;
  row["log_bound"] = bound.is_null() ? json(nullptr) : bound["log_bound"];
  o.table = json::array({row});
  return o;
}

Outcome run_model(const json& c) {
  const auto params = io::model_params_from_json(c.at("model"));
  const auto m = models::build(params);
  const double T = get<double>(c, "T");
  Outcome o;
  o.result["model"] = io::to_json(params);
  o.result["components"] = model_summary(m);
  const auto mb = models::log_bound(m, T);
  o.result["T"] = T;
  o.result["log_bound"] = io::number(mb.log_bound);
  o.result["reports"] = json::array();
  for (const auto& r : mb.reports) o.result["reports"].push_back(io::to_json(r));
  o.result["slope"] = io::to_json(models::bound_slope(m));
  o.result["energy_lower_bound"] = io::number(models::energy_lower_bound(m));
  o.result["jensen_lower_bound"] = io::number(models::jensen_lower_bound(m, T));
  o.result["jensen_slope"] = io::number(models::jensen_slope(m));
  if (params.kind == models::ModelKind::Bipolaron) {
    const double a = params.alpha;
    o.result["note"] = fmt::format(
        "bound energy -(2a+2a^2) = {:.6g}; the literature upper bound on the energy is about -0.87a^2 = {:.6g}",
        -(2.0 * a + 2.0 * a * a), -0.87 * a * a);
  }
  if (!c.at("verify").is_null()) {
    const auto& v = c.at("verify");
    const auto rep = models::verify(m, T, get_count(v, "paths"), get_count(v, "steps"), get_seed(v, "seed"), 0,
                                    get<bool>(v, "allow_heavy_tail"));
    o.result["verify"] = io::to_json(rep);
    o.table = o.result["verify"]["rows"];
    o.verified = rep.pass;
    if (!rep.pass) o.failure = "model sandwich check failed";
  }
  return o;
}

Outcome run_oscillator(const json& c) {
  oscillator::OscillatorConfig cfg{get<double>(c, "omega"), get<double>(c, "T"), get_count(c, "grid")};
  Outcome o;
  o.result = io::to_json(oscillator::log_expectation(cfg));
  if (!c.at("mc").is_null()) {
    const auto& m = c.at("mc");
    const auto x = oscillator::mc_crosscheck(cfg, get_count(m, "paths"), get_count(m, "steps"), get_seed(m, "seed"));
    o.result["mc"] = io::to_json(x);
    o.verified = x.pass;
    if (!x.pass) o.failure = "MC estimate disagrees with the closed form";
  }
  return o;
}

Outcome run_pekar(const json& c) {
  pekar::PekarProblem p;
  p.theta = get<double>(c, "theta");
  p.coupling = get<double>(c, "coupling");
  p.d = get<int>(c, "d");
  p.nodes = get_count(c, "nodes");
  if (!c.at("r_max").is_null()) p.r_max = get<double>(c, "r_max");
  Outcome o;
  if (!c.at("model").is_null()) {
    const auto m = models::build(io::model_params_from_json(c.at("model")));
    o.result["sandwich"] = io::to_json(pekar::lower_bound_sandwich(m, p));
    return o;
  }
  const auto sol = pekar::solve(p);
  o.result = io::to_json(sol, get<bool>(c, "profile"));
  o.result["gaussian_energy"] = pekar::gaussian_energy(p.theta, p.coupling, p.d);
  if (get<bool>(c, "scaling")) {
    const auto rep = pekar::scaling_check(p, get<std::vector<double>>(c, "lambdas"));
    o.result["scaling"] = io::to_json(rep);
    o.table = o.result["scaling"]["rows"];
    o.verified = rep.pass;
    if (!rep.pass) o.failure = "energy does not follow the coupling scaling law";
  }
  return o;
}

Outcome run_kernels(const json& c) {
  const auto check = get<std::string>(c, "check");
  Outcome o;
  json rows = json::array();
  bool pass = true;
  if (check == "subordination") {
    for (const auto& r : kernels::subordination_grid()) {
      rows.push_back(io::to_json(r));
      pass = pass && r.pass;
    }
  } else if (check == "convolution") {
    const auto suite = kernels::convolution_suite(get_count(c, "count"), get_seed(c, "seed"));
    for (const auto& s : suite.samples) {
      auto row = io::to_json(s);
      row["pass"] = std::abs(s.value) < s.bound;
      rows.push_back(row);
    }
    o.result["violations"] = suite.violations;
    o.result["max_ratio"] = suite.max_ratio;
    pass = suite.violations == 0;
  } else if (check == "expectation") {
    const auto M = get_count(c, "paths");
    const auto N = get_count(c, "steps");
    const auto seed = get_seed(c, "seed");
    std::optional<double> hls;
    if (!c.at("hls_constant").is_null()) hls = get<double>(c, "hls_constant");
    const double T = 1.0;
    for (double theta : {0.5, 1.0, 1.5}) {
      const auto f = theta == 1.0 ? schedule::CouplingFunction::exp_decay(1.0, 1.0)
                                  : schedule::CouplingFunction::constant(1.0);
      for (auto kind : {kernels::ActionKind::Single, kernels::ActionKind::SelfDouble,
                        kernels::ActionKind::CrossDouble}) {
        const bounds::BoundParams bp{theta, 3, T};
        const auto formula = kernels::expected_action(kind, f, bp, 0.0, hls);
        mc::ActionSpec spec = kind == kernels::ActionKind::Single       ? mc::ActionSpec::single(f, theta, 3, T)
                              : kind == kernels::ActionKind::SelfDouble ? mc::ActionSpec::self_double(f, theta, 3, T)
                                                                        : mc::ActionSpec::cross_double(f, theta, 3, T);
        const auto l = mc::ladder(spec, M, {N / 2, N}, seed);
        const auto& fine = l.rungs.back();
        const double q = l.order;
        const double allowance = std::abs(fine.action_mean - l.rungs.front().action_mean) / (std::pow(2.0, q) - 1.0);
        const double tol = 3.0 * fine.action_stderr + allowance;
        const double diff = fine.action_mean - formula.value;
        const bool ok = formula.inequality ? diff <= tol : std::abs(diff) <= tol;
        rows.push_back({{"kind", std::string(kernels::to_string(kind))},
                        {"theta", theta},
                        {"formula", formula.value},
                        {"inequality", formula.inequality},
                        {"mc_mean", fine.action_mean},
                        {"tolerance", tol},
                        {"residual", diff},
                        {"pass", ok}});
        pass = pass && ok;
      }
    }
  } else {
    throw ValidationError(fmt::format("unknown kernels check '{}'", check));
  }
  o.result["check"] = check;
  o.result["rows"] = rows;
  o.result["pass"] = pass;
  o.table = rows;
  o.verified = pass;
  if (!pass) o.failure = fmt::format("kernels check '{}' failed", check);
  return o;
}

Outcome run_sweep(const json& c) {
  const auto values = get<std::vector<double>>(c, "values");
  if (values.empty()) throw ValidationError("sweep needs a nonempty grid of values");
  const auto param = get<std::string>(c, "param");
  const json base = c.at("model");
  const bool with_mc = !c.at("mc").is_null();
  json rows = json::array();
  for (double v : values) {
    json mj = base;
    double T = get<double>(c, "T");
    if (param == "T") {
      T = v;
    } else if (param == "alpha" || param == "theta" || param == "gamma" || param == "tau") {
      mj[param] = v;
    } else if (param == "d") {
      mj["d"] = static_cast<int>(v);
    } else {
      throw ValidationError(fmt::format("cannot sweep '{}' (use theta, alpha, gamma, tau, T or d)", param));
    }
    const auto m = models::build(io::model_params_from_json(mj));
    const auto slope = models::bound_slope(m);
    json row{{param, v},
             {"T", T},
             {"log_bound", io::number(models::log_bound(m, T).log_bound)},
             {"slope", io::number(slope.slope)},
             {"sqrt_coefficient", io::number(slope.sqrt_coefficient)},
             {"energy_lower_bound", io::number(models::energy_lower_bound(m))},
             {"jensen", io::number(models::jensen_lower_bound(m, T))}};
    if (with_mc) {
      const auto& mcfg = c.at("mc");
      const auto e = mc::estimate(m.action(T), get_count(mcfg, "paths"), get_count(mcfg, "steps"),
                                  get_seed(mcfg, "seed"));
      row["mc_log_mean"] = io::number(e.log_mean);
      row["mc_stderr_log"] = io::number(e.stderr_log);
    }
    rows.push_back(row);
  }
  Outcome o;
  o.result["param"] = param;
  o.result["rows"] = rows;
  o.table = rows;
  return o;
}

// ---------------------------------------------------------------- parsing

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    double a = 0, b = 0;
    long n = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(s);
    if (!(in >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':' || n < 0)
      throw ValidationError(fmt::format("grid '{}' must be start:stop:count", s));
    for (long i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / (n - 1));
    return out;
  }
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    try {
      out.push_back(std::stod(tok));
    } catch (const std::logic_error&) {
      throw ValidationError(fmt::format("'{}' is not a number", tok));
    }
  }
  return out;
}

// Collects CLI11 options whose values are copied into the config only
// when given on the command line.
class Binder {
 public:
  template <class T>
  void value(CLI::App* app, const std::string& flag, const std::string& pointer, const std::string& help) {
    auto holder = std::make_shared<T>();
    auto* opt = app->add_option(flag, *holder, help);
    apply_.push_back([opt, holder, pointer](json& c) {
      if (opt->count() > 0) c[json::json_pointer(pointer)] = *holder;
    });
  }

  void flag(CLI::App* app, const std::string& flag, const std::string& pointer, const std::string& help) {
    auto* opt = app->add_flag(flag, help);
    apply_.push_back([opt, pointer](json& c) {
      if (opt->count() > 0) c[json::json_pointer(pointer)] = true;
    });
  }

  void custom(CLI::App* app, const std::string& flag, const std::string& help,
              std::function<void(json&, const std::string&)> fn) {
    auto holder = std::make_shared<std::string>();
    auto* opt = app->add_option(flag, *holder, help);
    apply_.push_back([opt, holder, fn](json& c) {
      if (opt->count() > 0) fn(c, *holder);
    });
  }

  void apply(json& c) const {
    for (const auto& f : apply_) f(c);
  }

 private:
  std::vector<std::function<void(json&)>> apply_;
};

void model_flags(Binder& b, CLI::App* app, const std::string& name_flag) {
  b.value<std::string>(app, name_flag, "/model/name",
                       "hydrogen, inverse_square, polaron, bipolaron or nelson");
  b.value<double>(app, "--alpha", "/model/alpha", "coupling constant");
  b.value<double>(app, "--gamma", "/model/gamma", "Nelson coupling");
  b.value<double>(app, "--tau", "/model/tau", "Nelson cutoff");
}

struct SpecFile {
  std::string command;
  json config;
};

SpecFile load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open spec '{}'", path));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("spec '{}' is not valid JSON: {}", path, e.what()));
  }
  if (!j.is_object()) throw ValidationError("spec must be a JSON object");
  if (j.contains("command") && j.contains("config")) return {j.at("command").get<std::string>(), j.at("config")};
  if (j.contains("terms")) {
    json c{{"action", j}};
    if (j.contains("T")) c["T"] = j.at("T");
    return {"simulate", c};
  }
  return {"", j};
}

// Restores process-wide defaults when a run ends.
struct ScopedDefaults {
  numerics::Tolerances tol = numerics::default_tolerances();
  unsigned threads = mc::default_threads();
  ~ScopedDefaults() {
    numerics::set_default_tolerances(tol);
    mc::set_default_threads(threads);
  }
};

void emit(const json& report, const Outcome& o, const std::string& format, std::ostream& out) {
  if (format == "json") {
    out << report.dump(2) << '\n';
  } else if (format == "csv") {
    if (o.table.is_array() && !o.table.empty()) {
      io::write_csv_table(o.table, out);
    } else {
      io::write_csv_flat(report.at("result"), out);
    }
  } else {
    io::write_pretty(report, out);
  }
}

}  // namespace

json with_defaults(const std::string& command, json config) {
  if (config.is_null()) config = json::object();
  fill(config, defaults_for(command));
  if (!config.contains("tolerances") || config["tolerances"].is_null()) config["tolerances"] = tolerance_defaults();
  fill(config["tolerances"], tolerance_defaults());
  if (command == "model" && config["verify"].is_object()) {
    fill(config["verify"], {{"paths", 10000}, {"steps", 512}, {"seed", 1}, {"allow_heavy_tail", false}});
  }
  if (command == "oscillator" && config["mc"].is_object()) {
    fill(config["mc"], {{"paths", 100000}, {"steps", 1024}, {"seed", 1}});
  }
  if (command == "sweep" && config["mc"].is_object()) {
    fill(config["mc"], {{"paths", 10000}, {"steps", 256}, {"seed", 1}});
  }
  return config;
}

Outcome execute(const std::string& command, const json& config) {
  const json c = with_defaults(command, config);
  numerics::set_default_tolerances({get<double>(c.at("tolerances"), "inner_abs"),
                                    get<double>(c.at("tolerances"), "outer_rel")});
  if (command == "bound") return run_bound(c);
  if (command == "simulate") return run_simulate(c);
  if (command == "model") return run_model(c);
  if (command == "oscillator") return run_oscillator(c);
  if (command == "pekar") return run_pekar(c);
  if (command == "kernels") return run_kernels(c);
  if (command == "sweep") return run_sweep(c);
  throw ValidationError(fmt::format("unknown command '{}'", command));
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Log-linear bounds and Monte Carlo checks for Feynman-Kac path integrals", "fkbound"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string format = "json";
  std::string out_path;
  std::string spec_path;
  unsigned threads = 0;
  if (const char* env = std::getenv("FKBOUND_THREADS")) {
    try {
      threads = static_cast<unsigned>(std::stoul(env));
    } catch (const std::logic_error&) {
      err << "ignoring FKBOUND_THREADS=" << env << '\n';
    }
  }
  app.add_option("--format", format, "json, csv or pretty")->check(CLI::IsMember({"json", "csv", "pretty"}));
  app.add_option("--out", out_path, "write the report to this file");
  app.add_option("--spec", spec_path, "config or earlier report (JSON) to run");
  app.add_option("--threads", threads, "worker threads (0 = all cores; default FKBOUND_THREADS)");
  Binder common;
  common.value<double>(&app, "--tol-inner", "/tolerances/inner_abs", "inner quadrature tolerance");
  common.value<double>(&app, "--tol-outer", "/tolerances/outer_rel", "outer quadrature tolerance");

  std::map<std::string, Binder> binders;
  std::map<std::string, CLI::App*> subs;

  {
    auto* s = app.add_subcommand("bound", "closed-form log bound for one action");
    auto& b = binders["bound"];
    b.value<int>(s, "--theorem", "/theorem", "1 single, 2 self-interaction, 3 two-path");
    b.value<double>(s, "--theta", "/theta", "singularity exponent");
    b.value<int>(s, "--dim", "/d", "dimension");
    b.value<double>(s, "--T", "/T", "time horizon");
    b.custom(s, "--coupling", "coupling as JSON", [](json& c, const std::string& v) {
      try {
        c["coupling"] = json::parse(v);
      } catch (const json::parse_error& e) {
        throw ValidationError(fmt::format("--coupling is not valid JSON: {}", e.what()));
      }
    });
    b.custom(s, "--coupling-csv", "tabulated coupling from (t,value) CSV", [](json& c, const std::string& v) {
      c["coupling"] = io::to_json(io::read_tabulated_csv_file(v));
    });
    b.value<std::string>(s, "--branch", "/branch", "force theta>=1 or theta<=1");
    b.flag(s, "--slope", "/slope", "also report the large-T slope");
    subs["bound"] = s;
  }
  {
    auto* s = app.add_subcommand("simulate", "Monte Carlo estimate of log E[exp(action)]");
    auto& b = binders["simulate"];
    model_flags(b, s, "--model");
    b.value<double>(s, "--theta", "/model/theta", "model exponent (inverse_square, nelson)");
    b.value<int>(s, "--dim", "/model/d", "model dimension (inverse_square)");
    b.value<double>(s, "--T", "/T", "time horizon");
    b.value<std::size_t>(s, "--paths", "/paths", "number of paths M");
    b.value<std::size_t>(s, "--steps", "/steps", "time steps N");
    b.value<std::uint64_t>(s, "--seed", "/seed", "RNG seed");
    b.value<double>(s, "--offset", "/offset", "start point |x|");
    b.value<double>(s, "--epsilon", "/epsilon", "mollifier");
    b.flag(s, "--ladder", "/ladder", "also run N/2 and report the discretization allowance");
    subs["simulate"] = s;
  }
  {
    auto* s = app.add_subcommand("model", "named scenario: bound, slope, Jensen, optional verification");
    auto& b = binders["model"];
    model_flags(b, s, "--name");
    b.value<double>(s, "--theta", "/model/theta", "exponent (inverse_square, nelson)");
    b.value<int>(s, "--dim", "/model/d", "dimension (inverse_square)");
    b.value<double>(s, "--T", "/T", "time horizon");
    auto* v = s->add_subcommand("verify", "MC sandwich check");
    v->fallthrough();
    b.value<std::size_t>(v, "--paths", "/verify/paths", "number of paths M");
    b.value<std::size_t>(v, "--steps", "/verify/steps", "time steps N");
    b.value<std::uint64_t>(v, "--seed", "/verify/seed", "RNG seed");
    b.flag(v, "--allow-heavy-tail", "/verify/allow_heavy_tail", "run past the slope*T <= 3 guard");
    subs["model"] = s;
    subs["model verify"] = v;
  }
  {
    auto* s = app.add_subcommand("oscillator", "exactly solvable quadratic action");
    auto& b = binders["oscillator"];
    b.value<double>(s, "--omega", "/omega", "frequency");
    b.value<double>(s, "--T", "/T", "time horizon");
    b.value<std::size_t>(s, "--grid", "/grid", "initial Riccati step count");
    b.flag(s, "--mc", "/mc/enabled", "compare with a Monte Carlo estimate");
    b.value<std::size_t>(s, "--paths", "/mc/paths", "number of paths M");
    b.value<std::size_t>(s, "--steps", "/mc/steps", "time steps N");
    b.value<std::uint64_t>(s, "--seed", "/mc/seed", "RNG seed");
    subs["oscillator"] = s;
  }
  {
    auto* s = app.add_subcommand("pekar", "radial Pekar-functional minimizer");
    auto& b = binders["pekar"];
    b.value<double>(s, "--theta", "/theta", "singularity exponent");
    b.value<double>(s, "--coupling", "/coupling", "g");
    b.value<int>(s, "--dim", "/d", "dimension");
    b.custom(s, "--grid", "r_max,n", [](json& c, const std::string& v) {
      const auto xs = parse_list(v);
      if (xs.size() != 2 || xs[1] < 16 || xs[1] != std::floor(xs[1]))
        throw ValidationError("--grid expects r_max,n with n >= 16");
      c["r_max"] = xs[0];
      c["nodes"] = static_cast<std::size_t>(xs[1]);
    });
    b.flag(s, "--scaling", "/scaling", "check energy(λg)/energy(g) = λ^{2/(2-θ)}");
    b.custom(s, "--lambdas", "scaling factors, comma separated",
             [](json& c, const std::string& v) { c["lambdas"] = parse_list(v); });
    b.flag(s, "--profile", "/profile", "include ψ(r) in the report");
    b.value<std::string>(s, "--model", "/model/name", "compare with Jensen and bound slopes for this model");
    b.value<double>(s, "--alpha", "/model/alpha", "model coupling");
    subs["pekar"] = s;
  }
  {
    auto* s = app.add_subcommand("kernels", "heat-kernel residual suites");
    auto& b = binders["kernels"];
    b.value<std::string>(s, "--check", "/check", "subordination, convolution or expectation");
    b.value<std::size_t>(s, "--count", "/count", "random tuples (convolution)");
    b.value<std::uint64_t>(s, "--seed", "/seed", "RNG seed");
    b.value<std::size_t>(s, "--paths", "/paths", "MC paths (expectation)");
    b.value<std::size_t>(s, "--steps", "/steps", "MC steps (expectation)");
    b.value<double>(s, "--hls-constant", "/hls_constant", "override the HLS constant");
    subs["kernels"] = s;
  }
  {
    auto* s = app.add_subcommand("sweep", "one-parameter table of bounds (CSV by default)");
    auto& b = binders["sweep"];
    model_flags(b, s, "--model");
    b.value<double>(s, "--theta", "/model/theta", "model exponent");
    b.value<int>(s, "--dim", "/model/d", "model dimension");
    b.value<double>(s, "--T", "/T", "time horizon");
    b.value<std::string>(s, "--param", "/param", "theta, alpha, gamma, tau, T or d");
    b.custom(s, "--values", "comma list or start:stop:count",
             [](json& c, const std::string& v) { c["values"] = parse_list(v); });
    b.flag(s, "--mc", "/mc/enabled", "add Monte Carlo columns");
    b.value<std::size_t>(s, "--paths", "/mc/paths", "number of paths M");
    b.value<std::size_t>(s, "--steps", "/mc/steps", "time steps N");
    b.value<std::uint64_t>(s, "--seed", "/mc/seed", "RNG seed");
    subs["sweep"] = s;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kValidation;
  }

  ScopedDefaults restore;
  try {
    std::string command;
    for (const auto& name : kCommands) {
      if (subs[name]->parsed()) command = name;
    }
    json config = json::object();
    if (!spec_path.empty()) {
      auto spec = load_spec(spec_path);
      if (command.empty()) command = spec.command;
      if (!spec.command.empty() && spec.command != command)
        throw ValidationError(fmt::format("spec is a '{}' run, not '{}'", spec.command, command));
      config = spec.config;
    }
    if (command.empty()) {
      err << "error: a subcommand is required\n\n" << app.help();
      return kValidation;
    }
    if (command == "sweep" && !app.get_option("--format")->count()) format = "csv";
    common.apply(config);
    binders[command].apply(config);
    if (command == "model" && subs["model verify"]->parsed() && !config.contains("verify")) {
      config["verify"] = json::object();
    }
    if (config.contains("mc") && config["mc"].is_object()) config["mc"].erase("enabled");
    config = with_defaults(command, config);
    mc::set_default_threads(threads);

    const Outcome o = execute(command, config);
    const json report{{"command", command}, {"config", config}, {"result", o.result}};
    if (out_path.empty()) {
      emit(report, o, format, out);
    } else {
      std::ofstream file(out_path);
      if (!file) throw ValidationError(fmt::format("cannot write '{}'", out_path));
      emit(report, o, format, file);
    }
    if (!o.verified) {
      err << "verification failed: " << o.failure << '\n';
      return kVerification;
    }
    return kOk;
  } catch (const VerificationFailure& e) {
    err << "verification failed: " << e.what() << '\n';
    return kVerification;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace fkbound::cli
