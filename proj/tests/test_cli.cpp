#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <ksm/cli.hpp>
#include <ksm/datasets.hpp>

#include <oracle_values.hpp>

#include <cmath>
#include <string>

using namespace ksm;
using nlohmann::json;

namespace {

RunConfig config(const std::string& text) { return parse_config(text, "test"); }

}  // namespace

TEST_CASE("config round trip") {
  const auto c = config(R"({
    "task": "geodesic", "ksm": "Z2",
    "sigma": {"kind": "tau_mix", "tau": 0.25},
    "field": {"solve": "path", "tau": 0.5, "parameter": "b1"},
    "mesh_level": 7, "tolerance": 1e-6,
    "geodesic": {"phi": [{"a": [1], "b": 0}, {"a": [-1], "b": 0}], "times": [0, 5, 10]},
    "probe": {"samples": 12, "seed": 9},
    "output": {"dir": "somewhere", "plots": true}
  })");
  CHECK(c.task == Task::geodesic);
  CHECK(c.dataset == std::optional<std::string>("Z2"));
  CHECK(c.sigma.kind == "tau_mix");
  CHECK(c.sigma.parameter == 0.25);
  CHECK(c.field.method == "path");
  CHECK(c.field.parameter == PathParameter::slope);
  CHECK(c.mesh_level == 7);
  CHECK(c.phi.size() == 2);
  CHECK(c.times.size() == 3);
  CHECK(c.samples == 12);
  CHECK(c.plots);
  const json once = to_json(c);
  CHECK(to_json(config_from_json(once)) == once);
  CHECK(to_json(parse_config(once.dump())) == once);
}

TEST_CASE("inline and serialized KSM data") {
  for (const auto& name : builtin_dataset_names()) {
    const auto d = builtin_dataset(name);
    const auto back = parse_ksm_data(to_json(d));
    CHECK(back.n == d.n);
    CHECK(back.l == d.l);
    CHECK(back.mu == d.mu);
    CHECK(back.polytope.vertices == d.polytope.vertices);
  }
  const auto c = config(R"({"task": "stability", "ksm": {"n": 1, "l": 1, "mu": [["1/2"]], "polytope": [[-1], [1]]}})");
  CHECK(load_ksm(c).mu[0][0] == Rational(1, 2));
}

TEST_CASE("diagnostics") {
  try {
    config("{\n  \"task\": \"stability\",\n  \"ksm\" \"Z1\"\n}");
    FAIL("expected a syntax error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).rfind("test:3:", 0) == 0);
  }
  CHECK_THROWS_AS(config(R"({"task": "fly"})"), ConfigError);
  CHECK_THROWS_AS(config(R"({"task": "stability", "sigma": {"kind": "cubic"}})"), ConfigError);
  CHECK_THROWS_AS(config(R"({"task": "stability", "mesh_level": "high"})"), ConfigError);
  CHECK_THROWS_AS(config("[1, 2]"), ConfigError);
}

TEST_CASE("reports are deterministic") {
  const auto c = config(R"({"task": "probe", "ksm": "Z1", "sigma": {"kind": "linear"},
                            "field": {"solve": "soliton"}, "mesh_level": 6, "probe": {"samples": 6, "seed": 3}})");
  CHECK(run(c).report.dump() == run(c).report.dump());
}

TEST_CASE("stability of Z1 without a field") {
  const auto r = run(config(R"({"task": "stability", "ksm": "Z1", "field": {"c": ["0"]}})")).report;
  CHECK(r.at("schema") == kReportSchema);
  const auto& v = r.at("results").at("verdict");
  CHECK(v.at("kind") == "unstable");
  REQUIRE(v.contains("destabilizer"));
  CHECK(std::abs(v.at("destabilizer_invariant").get<double>() + 1.0 / 6.0) <= 1e-10);
}

TEST_CASE("solve-metric on the soliton field") {
  auto c = config(R"({"task": "solve-metric", "ksm": "Z1", "sigma": {"kind": "linear"},
                      "field": {"solve": "soliton"}, "output": {"plots": true}})");
  const auto out = run(c);
  const auto& s = out.report.at("results").at("solution");
  CHECK(s.at("converged").get<bool>());
  CHECK(s.at("residual").get<double>() <= 1e-4);
  CHECK(out.csv.size() == 2);
}

TEST_CASE("reproduce") {
  const auto z1 = run(config(R"({"task": "reproduce", "example": "Z1"})")).report.at("results");
  const double roots[] = {oracle::Z1_root_0, oracle::Z1_root_0_25, oracle::Z1_root_0_5, oracle::Z1_root_0_75,
                          oracle::Z1_root_1};
  REQUIRE(z1.at("roots").size() == 5);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(std::abs(z1.at("roots")[i].at("root").get<double>() - roots[i]) <= 1e-10);

  const auto z2 = run(config(R"({"task": "reproduce", "example": "Z2"})")).report.at("results");
  CHECK(std::abs(z2.at("tau0").at("tau0").get<double>() - oracle::Z2_tau0) <= 1e-6);
  CHECK(z2.at("k_at_vertices").at("1") == "-1");
  CHECK(z2.at("k_at_vertices").at("-1") == "43/19");
  CHECK(z2.at("verdict").at("kind") == to_string(Stability::polystable_non_uniform));

  for (auto [name, defect] : {std::pair{"Z1", "1/3"}, std::pair{"Z2", "8/9"}}) {
    const auto r = run(config(std::string(R"({"task": "reproduce", "example": "classical", "ksm": ")") + name + "\"}"))
                       .report.at("results");
    CHECK_FALSE(r.at("ke_criterion").get<bool>());
    CHECK(r.at("exact_ke_defect")[0] == defect);
    CHECK(r.at("soliton").at("converged").get<bool>());
  }
}

TEST_CASE("validate reports Fano violations") {
  const auto r =
      run(config(R"({"task": "validate", "ksm": {"n": 0, "l": 2, "polytope": [[2, 1], [-1, 1], [-1, -2]]}})"))
          .report.at("results");
  CHECK_FALSE(r.at("fano").at("valid").get<bool>());
  CHECK(r.at("fano").at("violations").size() >= 1);
}
