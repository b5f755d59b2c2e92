#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nlvn/scenario.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

using namespace nlvn;

namespace {

const double rt2 = std::sqrt(2.0);
const double rt5 = std::sqrt(5.0);
const double rt7 = std::sqrt(7.0);
const double rt15 = std::sqrt(15.0);

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(bool(f));
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  REQUIRE(bool(f));
  f << text;
}

bool has_rule(const std::vector<ValidationIssue>& issues, const std::string& rule) {
  for (const auto& i : issues)
    if (i.rule == rule) return true;
  return false;
}

CMatrix three_h() {
  CMatrix h(3);
  h.at(0, 1) = h.at(1, 0) = cplx(1, 0);
  h.at(2, 2) = cplx(1.0 / rt2, 0);
  return h;
}

} // namespace

TEST_CASE("builtin catalog pins the published data sets") {
  auto all = builtin_scenarios();
  REQUIRE(all.size() == 6);
  const char* names[] = {"ex51", "ex52", "ex53", "ex54", "ex55", "ex56"};
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(all[i].name == names[i]);
    CHECK_NOTHROW(require_valid(all[i]));
  }

  ScenarioSpec s51 = builtin_scenario("ex51");
  CHECK(matrix_distance(s51.H, three_h()) < 1e-15);
  CHECK(std::abs(s51.U0.at(0, 0) - cplx(0.5 + rt2 / 2, 0)) < 1e-15);
  CHECK(s51.basis_hint.size() == 2);
  CHECK(std::abs(s51.mu - cplx(0, 1)) == 0.0);
  CHECK(s51.a == 1.0);

  ScenarioSpec s52 = builtin_scenario("ex52");
  CHECK(std::abs(s52.H.at(0, 0) - cplx(1.5, 0)) < 1e-15);
  CHECK(std::abs(s52.H.at(0, 1) - cplx(-1, 0)) < 1e-15);
  CHECK(std::abs(s52.U0.at(0, 0) - cplx(4, 0)) < 1e-12);
  CHECK(std::abs(s52.U0.at(1, 1) - cplx(1, 0)) < 1e-12);
  CHECK(std::abs(s52.U0.at(2, 2) - cplx((5 + rt5) / 2, 0)) < 1e-12);

  ScenarioSpec s53 = builtin_scenario("ex53");
  CHECK(s53.H.dim() == 6);
  CHECK(std::abs(trace(s53.U0) - cplx((15 + rt5) / 2, 0)) < 1e-12);
  CHECK(std::abs(s53.H.at(5, 5) - cplx(5.5, 0)) == 0.0);

  ScenarioSpec s54 = builtin_scenario("ex54");
  CHECK(s54.kind == RhsKind::linear_plus_quadratic);
  CHECK(s54.eps == 0.1);
  CHECK(std::abs(s54.mu - cplx(0, 10)) < 1e-12);
  CHECK(matrix_distance(s54.H, s53.H) == 0.0);

  ScenarioSpec s55 = builtin_scenario("ex55");
  CHECK(s55.kind == RhsKind::homogeneous);
  CHECK(s55.normalize);
  CHECK(matrix_distance(s55.U0, s51.U0) == 0.0);

  ScenarioSpec s56 = builtin_scenario("ex56");
  REQUIRE(s56.tensor.has_value());
  CHECK(s56.tensor->d1 == 2);
  CHECK(s56.tensor->d2 == 2);
  CHECK(std::abs(s56.U0.at(2, 2) - cplx((5 + rt15) / 2, 0)) < 1e-15);
  CHECK(std::abs(s56.U0.at(1, 1) - cplx((5 - rt7) / 2, 0)) < 1e-15);
  CHECK(std::abs(s56.tensor->H2.at(0, 1) - cplx(2, 0)) == 0.0);

  CHECK_THROWS_AS(builtin_scenario("ex99"), std::invalid_argument);
}

TEST_CASE("serialization round trip is lossless") {
  for (const auto& s : builtin_scenarios()) {
    std::string first = serialize_scenario(s);
    std::string second = serialize_scenario(parse_scenario_text(first));
    CHECK(first == second);
  }

  ScenarioSpec s56 = builtin_scenario("ex56");
  spit("scn_roundtrip.json", serialize_scenario(s56));
  ScenarioSpec back = load_scenario("scn_roundtrip.json");
  CHECK(serialize_scenario(back) == serialize_scenario(s56));
  REQUIRE(back.tensor.has_value());
  CHECK(matrix_distance(back.tensor->H1, s56.tensor->H1) == 0.0);
  CHECK(back.basis_hint.size() == 2);
  std::remove("scn_roundtrip.json");

  CHECK_THROWS_AS(load_scenario("scn_no_such_file.json"), std::invalid_argument);
}

TEST_CASE("family files expand to the equally spaced data") {
  spit("scn_family.json", R"({
  "name": "family-run",
  "family": {"k": 0.5, "m": 1.0, "a": 5.0, "b": -4.0},
  "mu": [0.0, 1.0]
})");
  ScenarioSpec fam = load_scenario("scn_family.json");
  std::remove("scn_family.json");
  ScenarioSpec s52 = builtin_scenario("ex52");
  CHECK(matrix_distance(fam.H, s52.H) < 1e-14);
  CHECK(matrix_distance(fam.U0, s52.U0) < 1e-12);
  CHECK(fam.a == 5.0);

  // inadmissible parameters are rejected by rule name
  CHECK_THROWS_WITH_AS(
      parse_scenario_text(R"({"family": {"k": 0.5, "m": 1.0, "a": 5.0, "b": 0.0}, "mu": [0, 1]})"),
      doctest::Contains("b-nonzero"), std::invalid_argument);

  CHECK_THROWS_WITH_AS(
      parse_scenario_text(
          R"({"family": {"k": 0.5, "m": 1.0, "a": 5.0, "b": -4.0}, "H": [[[1,0]]], "mu": [0, 1]})"),
      doctest::Contains("both"), std::invalid_argument);
}

TEST_CASE("load errors carry positions and schema context") {
  try {
    parse_scenario_text("{\n  \"name\": \"x\",\n  \"mu\": [1.0, 0.x]\n}");
    FAIL("malformed text must not parse");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }

  try {
    parse_scenario_text(R"({"name": "y", "mu": [0, 1]})");
    FAIL("missing matrices must not parse");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("schema") != std::string::npos);
  }

  CHECK_THROWS_WITH_AS(parse_scenario_text(R"({"H": [[[1,0],[0,0]]], "U0": [[[1,0]]], "a": 1})"),
                       doctest::Contains("square"), std::invalid_argument);
}

TEST_CASE("validation names the violated rules") {
  ScenarioSpec s = builtin_scenario("ex51");
  s.A = cplx(0.9, 0);
  CHECK(has_rule(validate_spec(s), "amplitude-normalization"));

  s = builtin_scenario("ex54");
  s.eps = 0.0;
  CHECK(has_rule(validate_spec(s), "epsilon-positive"));

  s = builtin_scenario("ex56");
  s.tensor->H1 = CMatrix::identity(3);
  CHECK(has_rule(validate_spec(s), "tensor-hamiltonians"));
  s.tensor->d1 = 3;
  CHECK(has_rule(validate_spec(s), "tensor-dims"));

  s = builtin_scenario("ex51");
  s.mu = cplx(2, 0);
  CHECK(has_rule(validate_spec(s), "mu-nonreal"));

  s = builtin_scenario("ex51");
  s.kind = RhsKind::cubic;
  CHECK(has_rule(validate_spec(s), "kind-runnable"));

  s = builtin_scenario("ex55");
  s.iterations = 1;
  CHECK(has_rule(validate_spec(s), "iterations-plain"));

  s = builtin_scenario("ex51");
  s.grid = {2.0, -1.0, 5};
  CHECK(has_rule(validate_spec(s), "grid-steps"));

  s = builtin_scenario("ex51");
  s.U0.at(0, 1) = cplx(0, 1); // breaks hermiticity
  CHECK(has_rule(validate_spec(s), "hermiticity"));

  s = builtin_scenario("ex51");
  s.omega = -1.0;
  try {
    require_valid(s);
    FAIL("require_valid must throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("omega-positive") != std::string::npos);
  }
}

TEST_CASE("evolve mode samples the closed form") {
  ScenarioSpec s = builtin_scenario("ex51");
  s.grid = {-2.0, 2.0, 41};
  RunOutput out = run_scenario(s, RunMode::evolve);
  REQUIRE(out.series.times.size() == 41);
  CHECK(!out.residuals.has_value());
  CHECK(out.gates_pass);
  CHECK(out.provenance.size() == 16);

  EvolutionContext ctx = scenario_context(s);
  for (std::size_t i : {std::size_t{0}, std::size_t{17}, std::size_t{40}})
    CHECK(matrix_distance(out.series.matrices[i], solution_at(ctx, out.series.times[i])) < 1e-14);

  // same spec, same controls: identical provenance; different mode: different
  RunOutput again = run_scenario(s, RunMode::evolve);
  CHECK(again.provenance == out.provenance);
  s.grid.steps = 5;
  CHECK(run_scenario(s, RunMode::evolve).provenance != out.provenance);
}

TEST_CASE("verify mode gates the closed forms against the equation") {
  ScenarioSpec s = builtin_scenario("ex51");
  s.grid = {0.0, 2.0, 21};
  RunOutput out = run_scenario(s, RunMode::verify);
  REQUIRE(out.residuals.has_value());
  CHECK(out.gates_pass);
  CHECK(out.residuals->max_ode_residual < 1e-5);
  CHECK(out.rk4_deviation < 1e-6);

  ScenarioSpec s54 = builtin_scenario("ex54");
  s54.grid = {0.0, 1.0, 11};
  RunOutput o54 = run_scenario(s54, RunMode::verify);
  CHECK(o54.gates_pass);
  CHECK(o54.residuals->max_ode_residual < 1e-5);
  CHECK(o54.rk4_deviation < 1e-6);

  ScenarioSpec s55 = builtin_scenario("ex55");
  s55.grid = {-1.0, 1.0, 21};
  RunOutput o55 = run_scenario(s55, RunMode::verify);
  CHECK(o55.gates_pass);
  CHECK(o55.residuals->max_ode_residual < 1e-5);
  CHECK(o55.rk4_deviation < 1e-6);

  // verification targets the single dressing
  ScenarioSpec it = builtin_scenario("ex51");
  it.iterations = 1;
  CHECK_THROWS_AS(run_scenario(it, RunMode::verify), std::invalid_argument);
}

TEST_CASE("subsystem mode reports the bipartite observables") {
  ScenarioSpec s = builtin_scenario("ex56");
  s.grid = {-1.0, 1.0, 201};
  RunOutput out = run_scenario(s, RunMode::subsystem);
  REQUIRE(out.subsystem.has_value());
  CHECK(out.gates_pass);

  const SubsystemReport& sub = *out.subsystem;
  const double g = (rt15 - rt7) / 20;
  const double q = std::sqrt(26 + 2 * std::sqrt(105.0)) / 40;
  double peak_scale = 0.0;
  for (std::size_t i = 0; i < sub.times.size(); i += 25) {
    double t = sub.times[i];
    double th = std::fabs(std::tanh(2 * t));
    double ch = std::cosh(2 * t);
    CHECK(std::abs(sub.spectrum2[i][0] - (0.5 - g * th)) < 1e-10);
    CHECK(std::abs(sub.spectrum2[i][1] - (0.5 + g * th)) < 1e-10);
    CHECK(std::abs(sub.spectrum1[i][0] - (0.5 - q / ch)) < 1e-10);
    CHECK(std::abs(sub.spectrum1[i][1] - (0.5 + q / ch)) < 1e-10);
    CHECK(std::fabs(sub.energy1[i]) < 1e-9);
    CHECK(std::fabs(sub.energy2[i]) < 1e-9);
    CHECK(sub.balance_residual1[i] <= 5e-3 * (1 + sub.balance_scale1[i]));
    CHECK(sub.balance_residual2[i] <= 5e-3 * (1 + sub.balance_scale2[i]));
  }
  for (double v : sub.balance_scale2) peak_scale = std::max(peak_scale, v);
  CHECK(peak_scale > 0.1);

  CHECK_THROWS_AS(run_scenario(builtin_scenario("ex51"), RunMode::subsystem),
                  std::invalid_argument);
}

TEST_CASE("every builtin passes verify on its default grid") {
  for (const auto& s : builtin_scenarios()) {
    CAPTURE(s.name);
    RunOutput out = run_scenario(s, s.tensor ? RunMode::subsystem : RunMode::verify);
    REQUIRE(out.residuals.has_value());
    CHECK(out.residuals->max_ode_residual < 1e-5);
    CHECK(out.rk4_deviation < 1e-6);
    CHECK(out.gates_pass);
  }
}

TEST_CASE("gauge override shifts the reported state") {
  ScenarioSpec s = builtin_scenario("ex51");
  s.grid = {0.0, 0.0, 1};
  RunOutput plain = run_scenario(s, RunMode::evolve);
  s.lambda_gauge = 0.35;
  RunOutput shifted = run_scenario(s, RunMode::evolve);
  CMatrix want = plain.series.matrices[0] + cplx(0.35, 0) * CMatrix::identity(3);
  CHECK(matrix_distance(shifted.series.matrices[0], want) < 1e-12);

  // the gauged flow still satisfies the quadratic equation
  s.grid = {0.0, 1.0, 11};
  RunOutput v = run_scenario(s, RunMode::verify);
  CHECK(v.gates_pass);
  CHECK(v.residuals->max_ode_residual < 1e-5);
}

TEST_CASE("chained dressings run through the scenario surface") {
  ScenarioSpec s = builtin_scenario("ex51");
  s.grid = {0.0, 1.0, 6};
  RunOutput plain = run_scenario(s, RunMode::evolve);
  s.iterations = 1;
  RunOutput chained = run_scenario(s, RunMode::evolve);
  CHECK(chained.series.metadata.at("iterations") == 1.0);
  CHECK(matrix_distance(chained.series.matrices[5], plain.series.matrices[5]) > 1e-3);
  CHECK(chained.series.matrices[5].hermiticity_defect() < 1e-10);
  CHECK(std::abs(trace(chained.series.matrices[5]) - trace(plain.series.matrices[0])) < 1e-10);
}

TEST_CASE("writers emit deterministic files") {
  ScenarioSpec s = builtin_scenario("ex51");
  s.grid = {0.0, 1.0, 6};
  RunOutput out = run_scenario(s, RunMode::verify);

  write_csv(out, "scn_out_a.csv");
  write_csv(out, "scn_out_b.csv");
  std::string a = slurp("scn_out_a.csv");
  std::string b = slurp("scn_out_b.csv");
  CHECK(!a.empty());
  CHECK(a == b);
  CHECK(a.rfind("t,", 0) == 0);
  CHECK(a.find("re_0_0") != std::string::npos);
  CHECK(a.find("eig_2") != std::string::npos);
  CHECK(a.find("ode_residual") != std::string::npos);
  std::size_t lines = 0;
  for (char c : a)
    if (c == '\n') ++lines;
  CHECK(lines == 7); // header + 6 samples

  write_json(out, "scn_out_a.json");
  write_json(out, "scn_out_b.json");
  std::string ja = slurp("scn_out_a.json");
  CHECK(ja == slurp("scn_out_b.json"));
  auto doc = nlohmann::json::parse(ja);
  CHECK(doc.at("times").size() == 6);
  CHECK(doc.at("gates_pass").get<bool>());
  CHECK(doc.at("provenance").get<std::string>() == out.provenance);
  CHECK(doc.at("mode").get<std::string>() == "verify");
  CHECK(doc.at("residuals").contains("max_ode_residual"));

  // subsystem columns appear when the split is reported
  ScenarioSpec s56 = builtin_scenario("ex56");
  s56.grid = {-1.0, 1.0, 5};
  RunOutput o56 = run_scenario(s56, RunMode::subsystem);
  write_csv(o56, "scn_out_c.csv");
  std::string c = slurp("scn_out_c.csv");
  CHECK(c.find("sub1_eig_0") != std::string::npos);
  CHECK(c.find("balance_scale2") != std::string::npos);

  for (const char* p : {"scn_out_a.csv", "scn_out_b.csv", "scn_out_a.json", "scn_out_b.json",
                        "scn_out_c.csv"})
    std::remove(p);
}
