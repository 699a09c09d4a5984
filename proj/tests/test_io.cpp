#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "fkbound/errors.hpp"
#include "fkbound/io.hpp"

using namespace fkbound;
using namespace fkbound::io;
using schedule::CouplingFunction;

namespace {

json reparse(const json& j) { return json::parse(j.dump()); }

void check_same_function(const CouplingFunction& a, const CouplingFunction& b) {
  CHECK(a.kind() == b.kind());
  for (double t : {0.0, 0.1, 0.5, 1.0, 2.0, 3.7}) CHECK(a(t) == b(t));
}

}  // namespace

TEST_CASE("coupling JSON round-trips bit-exactly") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int i = 0; i < 50; ++i) {
    const double a = u(rng), b = u(rng);
    for (const auto& f : {CouplingFunction::constant(a), CouplingFunction::exp_decay(a, b),
                          CouplingFunction::indicator(a, b), CouplingFunction::power_law(a, b - 5.0),
                          CouplingFunction::tabulated({0.0, a, a + 4.0}, {b, a, 0.0})}) {
      const auto back = coupling_from_json(reparse(to_json(f)));
      check_same_function(f, back);
      CHECK(to_json(back) == to_json(f));
    }
  }
}

TEST_CASE("coupling JSON validation") {
  CHECK_THROWS_AS(coupling_from_json(json::parse(R"({"level": 1})")), ValidationError);
  CHECK_THROWS_AS(coupling_from_json(json::parse(R"({"kind": "cubic"})")), ValidationError);
  CHECK_THROWS_AS(coupling_from_json(json::parse(R"({"kind": "constant"})")), ValidationError);
  CHECK_THROWS_AS(coupling_from_json(json::parse(R"({"kind": "constant", "level": "1"})")), ValidationError);
  CHECK_THROWS_AS(coupling_from_json(json::parse(R"({"kind": "tabulated", "times": [0, 1]})")), ValidationError);
  CHECK_THROWS_AS(coupling_from_json(json::parse(R"({"kind": "constant", "level": -2})")), ValidationError);
  const auto e = coupling_from_json(json::parse(R"({"kind": "exp_decay", "amplitude": 2})"));
  CHECK(e(1.0) == doctest::Approx(2.0 * std::exp(-1.0)));
}

TEST_CASE("tabulated CSV input") {
  std::istringstream with_header("t,value\n0,1.5\n1,2.5\r\n\n2,0.5\n");
  const auto f = read_tabulated_csv(with_header);
  CHECK(f.kind() == "tabulated");
  CHECK(f(0.5) == 1.5);
  CHECK(f(1.5) == 2.5);
  CHECK(f(2.0) == 0.5);

  std::istringstream bare("0,1\n1,2\n");
  CHECK(read_tabulated_csv(bare)(0.0) == 1.0);

  std::istringstream bad("0,1\nx,2\n");
  CHECK_THROWS_AS(read_tabulated_csv(bad), ValidationError);
  std::istringstream nocomma("0 1\n");
  CHECK_THROWS_AS(read_tabulated_csv(nocomma), ValidationError);
  std::istringstream unsorted("0,1\n2,1\n1,1\n");
  CHECK_THROWS_AS(read_tabulated_csv(unsorted), ValidationError);

  const std::string path = "io_test_coupling.csv";
  {
    std::ofstream out(path);
    out << "time,f\n0,3\n0.5,1\n";
  }
  const auto g = coupling_from_json(json{{"kind", "tabulated"}, {"csv", path}});
  CHECK(g(0.25) == 3.0);
  CHECK(g(0.5) == 1.0);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_tabulated_csv_file("does/not/exist.csv"), ValidationError);
}

TEST_CASE("action spec JSON round-trip") {
  mc::ActionSpec s;
  s.theta = 1.25;
  s.d = 4;
  s.T = 2.5;
  s.epsilon = 1e-3;
  s.terms.push_back({mc::TermKind::Single, CouplingFunction::constant(0.3), 1.0, 0, 1, 0.75});
  s.terms.push_back({mc::TermKind::SelfDouble, CouplingFunction::exp_decay(0.1, 2.0), 0.5, 1, 0, 0.0});
  s.terms.push_back({mc::TermKind::CrossDouble, CouplingFunction::indicator(1.0, 0.4), 2.0, 0, 1, 0.1});
  const auto back = action_spec_from_json(reparse(to_json(s)));
  CHECK(back.theta == s.theta);
  CHECK(back.d == s.d);
  CHECK(back.T == s.T);
  CHECK(back.epsilon == s.epsilon);
  REQUIRE(back.terms.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.terms[i].kind == s.terms[i].kind);
    CHECK(back.terms[i].weight == s.terms[i].weight);
    CHECK(back.terms[i].role_a == s.terms[i].role_a);
    CHECK(back.terms[i].role_b == s.terms[i].role_b);
    CHECK(back.terms[i].offset == s.terms[i].offset);
    check_same_function(back.terms[i].f, s.terms[i].f);
  }
  CHECK(to_json(back) == to_json(s));
  CHECK_THROWS_AS(action_spec_from_json(json::parse(R"({"theta": 1, "d": 3, "T": 1})")), ValidationError);
  CHECK_THROWS_AS(
      action_spec_from_json(json::parse(
          R"({"theta": 1, "d": 3, "T": 1, "terms": [{"kind": "quartic", "coupling": {"kind": "constant", "level": 1}}]})")),
      ValidationError);
}

TEST_CASE("model parameter JSON round-trip") {
  for (auto k : {models::ModelKind::Hydrogen, models::ModelKind::InverseSquare, models::ModelKind::Polaron,
                 models::ModelKind::Bipolaron, models::ModelKind::NelsonQ}) {
    models::ModelParams p;
    p.kind = k;
    p.alpha = 0.1234567890123;
    p.theta = k == models::ModelKind::NelsonQ ? 1.7 : 1.3;
    p.d = 5;
    p.gamma = 2.5;
    p.tau = 0.3;
    const auto back = model_params_from_json(reparse(to_json(p)));
    CHECK(back.kind == k);
    CHECK(to_json(back) == to_json(p));
  }
  CHECK(model_params_from_json(json::parse(R"({"name": "nelson"})")).theta == 1.5);
  CHECK_THROWS_AS(model_params_from_json(json::parse(R"({"alpha": 1})")), ValidationError);
  CHECK_THROWS_AS(model_params_from_json(json::parse(R"({"name": "muonium"})")), ValidationError);
}

TEST_CASE("non-finite numbers become null") {
  CHECK(number(std::numeric_limits<double>::infinity()).is_null());
  CHECK(number(std::nan("")).is_null());
  CHECK(number(1.5) == json(1.5));
  mc::McEstimate e;
  e.log_mean = std::numeric_limits<double>::infinity();
  const auto j = to_json(e);
  CHECK(j.at("log_mean").is_null());
  CHECK(json::parse(j.dump()).at("log_mean").is_null());
}

TEST_CASE("doubles survive serialization bit-exactly") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double x = std::ldexp(std::uniform_real_distribution<double>(-1, 1)(rng), static_cast<int>(rng() % 200) - 100);
    CHECK(json::parse(json(x).dump()).get<double>() == x);
  }
}

TEST_CASE("CSV and pretty writers") {
  const json rows = json::array({{{"name", "a,b"}, {"value", 1.5}, {"ok", true}},
                                 {{"name", "say \"hi\""}, {"value", nullptr}, {"ok", false}}});
  std::ostringstream table;
  write_csv_table(rows, table);
  CHECK(table.str() == "name,value,ok\n\"a,b\",1.5,true\n\"say \"\"hi\"\"\",,false\n");

  std::ostringstream flat;
  write_csv_flat(json{{"x", 1}, {"y", {{"z", json::array({2, 3})}}}}, flat);
  CHECK(flat.str() == "path,value\n/x,1\n/y/z/0,2\n/y/z/1,3\n");

  std::ostringstream pretty;
  write_pretty(json{{"a", 1}, {"b", {{"c", "text"}}}, {"v", json::array({1, 2})}}, pretty);
  CHECK(pretty.str() == "a: 1\nb:\n  c: text\nv:\n  [1,2]\n");

  std::ostringstream empty;
  write_csv_table(json::array(), empty);
  CHECK(empty.str().empty());
}

TEST_CASE("report serializers") {
  pekar::PekarSolution s;
  s.energy = -0.2;
  s.r = {0.1, 0.2};
  s.psi = {1.0, 0.5};
  CHECK_FALSE(to_json(s, false).contains("psi"));
  CHECK(to_json(s, true).at("psi").size() == 2);

  kernels::SubordinationRow row;
  row.theta = 1.0;
  row.d = 3;
  row.r = 2.0;
  row.residual = 1e-12;
  row.pass = true;
  const auto j = to_json(row);
  CHECK(j.at("pass") == true);
  CHECK(j.at("d") == 3);

  bounds::SlopeResult sl;
  sl.slope = 1.25;
  CHECK(to_json(sl).at("slope") == 1.25);
}
