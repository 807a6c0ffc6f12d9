#include "splitdom/config.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace splitdom;
using nlohmann::json;

namespace {

json inline_saddle() {
  return json::parse(R"({
    "system": {"type": "linear", "matrix": [[2, 0, 0], [0, -1.5, 0], [0, 0, -1]]},
    "splitting": {"E": [[0, 0, 1]], "F": [[1, 0, 0], [0, 1, 0]]},
    "singularity": [0.001, 0, 0],
    "span": 20,
    "checks": [
      {"criterion": "singularity_domination", "expect": "fail", "exponent": 0.5},
      {"criterion": "domination", "expect": "fail", "exponent": 0.5},
      {"criterion": "uniform_contraction", "expect": "pass", "exponent": -1},
      {"criterion": "sectional_expansion", "expect": "pass", "exponent": 0.5},
      {"criterion": "finite_time_domination"}
    ]
  })");
}

}  // namespace

TEST_CASE("gallery configurations") {
  const AnalysisConfig cfg = parse_config(json::parse(R"({
    "entry": "bowen_product", "parameters": {"mu": 0.95}, "criteria": ["singularity_domination@s1"],
    "seed": 7, "tolerance": 1e-4, "workers": 2
  })"));
  CHECK(*cfg.entry == "bowen_product");
  CHECK(cfg.parameters.at("mu") == 0.95);
  CHECK(cfg.seed == 7);
  CHECK(cfg.tolerance == 1e-4);
  CHECK(*cfg.workers == 2);
  CHECK_FALSE(cfg.sweep.has_value());
  const GalleryEntry e = resolve_entry(cfg);
  CHECK(e.parameters.at("mu") == 0.95);
  const auto sel = select_checks(e, cfg.criteria);
  REQUIRE(sel.size() == 1);
  const Verdict v = sel.front()->run({});
  CHECK(*v.exponent == doctest::Approx(-0.95 + 1.0).epsilon(1e-12));
}

TEST_CASE("malformed configurations are rejected") {
  const char* bad[] = {
      R"([1, 2])",
      R"({"entry": "lorenz", "colour": 3})",
      R"({"entry": 3})",
      R"({"entry": "lorenz", "seed": -1})",
      R"({"entry": "lorenz", "tolerance": 0})",
      R"({"entry": "lorenz", "workers": 0})",
      R"({"entry": "lorenz", "parameters": {"rho": "x"}})",
      R"({"entry": "lorenz", "criteria": "domination"})",
      R"({"entry": "lorenz", "span": 3})",
      R"({"entry": "lorenz", "system": {"type": "linear", "matrix": [[1]]}})",
      R"({"entry": "bowen_product", "sweep": {"parameter": "mu", "from": 1.2, "to": 0.8, "check": "x"}})",
      R"({"entry": "bowen_product", "sweep": {"parameter": "mu", "from": 0.8, "to": 0.8, "check": "x"}})",
      R"({"entry": "bowen_product", "sweep": {"parameter": "mu", "from": 0.8, "to": 1.2}})",
      R"({"entry": "bowen_product", "sweep": {"parameter": "mu", "from": 0.8, "to": 1.2, "check": "x", "points": 1}})",
      R"({"entry": "lorenz", "lyapunov": {"T": -5}})",
  };
  for (const char* text : bad) {
    INFO(text);
    CHECK_THROWS_AS(parse_config(json::parse(text)), ConfigError);
  }
  CHECK_THROWS_AS(resolve_entry(parse_config(json::parse(R"({"entry": "nope"})"))), ConfigError);
  CHECK_THROWS_AS(resolve_entry(parse_config(json::parse(R"({"entry": "lorenz", "parameters": {"rho": 0.5}})"))),
                  ConfigError);
  CHECK_THROWS_AS(resolve_entry(parse_config(json::parse(R"({"seed": 3})"))), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);

  const std::string path = "test_config_malformed.json";
  {
    std::ofstream os(path);
    os << "{\"entry\": \"lorenz\",";
  }
  CHECK_THROWS_AS(load_config(path), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("inline linear system reproduces the saddle") {
  const AnalysisConfig cfg = parse_config(inline_saddle());
  REQUIRE(cfg.inline_system.has_value());
  const GalleryEntry e = resolve_entry(cfg);
  REQUIRE(e.checks.size() == 5);
  for (const auto& c : e.checks) {
    const Verdict v = c.run({});
    INFO(c.id, ": ", to_string(v.status));
    CHECK(matches(c.expected, v, cfg.tolerance));
  }
  CHECK(e.checks.back().run({}).status == Status::fail);
}

TEST_CASE("inline definitions are validated") {
  auto broken = [](auto edit) {
    json d = inline_saddle();
    edit(d);
    return d;
  };
  const json cases[] = {
      broken([](json& d) { d["system"]["type"] = "duffing"; }),
      broken([](json& d) { d["system"]["matrix"] = json::parse("[[1, 2], [3]]"); }),
      broken([](json& d) { d["system"]["matrix"] = json::parse("[[1, 2, 3], [3, 4, 5]]"); }),
      broken([](json& d) { d["splitting"]["E"] = json::parse("[[1, 0, 0]]"); }),
      broken([](json& d) { d["splitting"]["E"] = json::parse("[[0, 0, 1], [0, 0, 2]]"); }),
      broken([](json& d) { d["splitting"]["F"] = json::parse("[[1, 0]]"); }),
      broken([](json& d) { d["singularity"] = json::parse("[1, 2]"); }),
      broken([](json& d) { d.erase("singularity"); }),
      broken([](json& d) { d["checks"] = json::array(); }),
      broken([](json& d) { d["checks"][0]["criterion"] = "hyperbolicity"; }),
      broken([](json& d) { d["checks"][0]["expect"] = "maybe"; }),
      broken([](json& d) { d["checks"][0]["colour"] = 1; }),
      broken([](json& d) { d["checks"][4]["exponent"] = 1.0; }),
      broken([](json& d) { d["time_grid"] = json::parse("[1, 0.5]"); }),
      broken([](json& d) { d["time_pairs"] = json::parse("[[1]]"); }),
      broken([](json& d) { d["checks"].push_back({{"criterion", "sectional_contraction"}}); }),
  };
  for (const auto& d : cases) {
    INFO(d.dump());
    CHECK_THROWS_AS(resolve_entry(parse_config(d)), ConfigError);
  }
}

TEST_CASE("inline Lorenz with random samples") {
  const json doc = json::parse(R"({
    "system": {"type": "lorenz"},
    "splitting": {"E": [[0, 0, 1]], "F": [[1, 0, 0], [0, 1, 0]]},
    "samples": {"random": {"count": 3, "center": [0, 0, 25], "radius": 2}},
    "checks": [{"criterion": "uniform_contraction", "id": "uc"}, {"criterion": "uniform_contraction", "id": "uc"}]
  })");
  const AnalysisConfig cfg = parse_config(doc);
  const GalleryEntry a = inline_entry(*cfg.inline_system, 5);
  const GalleryEntry b = inline_entry(*cfg.inline_system, 5);
  CHECK(a.parameters.at("rho") == 28.0);
  CHECK(a.checks[1].id == "uc#2");
  CHECK_FALSE(a.checks[0].expected.status.has_value());
  CHECK((a.base_point - b.base_point).norm() == 0.0);
  CHECK(std::abs(a.base_point(2) - 25.0) <= 2.0);
  const GalleryEntry c = inline_entry(*cfg.inline_system, 6);
  CHECK((a.base_point - c.base_point).norm() > 0.0);
}

TEST_CASE("check selection") {
  const GalleryEntry e = make_entry("lorenz");
  CHECK(select_checks(e, {}).size() == e.checks.size());
  const auto by_criterion = select_checks(e, {"uniform_contraction"});
  REQUIRE(by_criterion.size() == 2);
  CHECK(by_criterion[0]->id == "uniform_contraction@origin");
  CHECK(by_criterion[1]->id == "uniform_contraction@attractor");
  // entry order is kept and duplicates collapse
  const auto mixed = select_checks(e, {"lyapunov_spectrum", "singularity_domination@origin", "lyapunov_spectrum"});
  REQUIRE(mixed.size() == 2);
  CHECK(mixed[0]->id == "singularity_domination@origin");
  CHECK_THROWS_AS(select_checks(e, {"hyperbolicity"}), ConfigError);
}

TEST_CASE("sweep and lyapunov blocks") {
  const AnalysisConfig cfg = parse_config(json::parse(R"({
    "entry": "double_homoclinic",
    "sweep": {"parameter": "c", "from": 0.2, "to": 1.8, "points": 5, "check": "singularity_domination",
              "resolution": 1e-4, "expect_boundary": 1.0},
    "lyapunov": {"x0": [1, 1, 20], "T": 50, "transient": 5}
  })"));
  REQUIRE(cfg.sweep.has_value());
  CHECK(cfg.sweep->points == 5);
  CHECK(cfg.sweep->resolution == 1e-4);
  CHECK(*cfg.sweep->expected_boundary == 1.0);
  CHECK(cfg.lyapunov.span == 50.0);
  CHECK(cfg.lyapunov.transient == 5.0);
  CHECK(cfg.lyapunov.x0->size() == 3);
}
