// Copyright 2026 The polval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "polval/csv.hpp"
#include "polval/dataset_io.hpp"
#include "polval/errors.hpp"
#include "polval/simulate.hpp"
#include "test_util.hpp"

using namespace polval;
using nlohmann::json;

namespace {

const char* kConfig = R"({
  "outcomes": [
    {"name": "consumption", "transform": "log", "numeraire": true},
    {"name": "school", "transform": "linear", "bad": true}
  ],
  "welfare_covariates": ["income"],
  "heterogeneity_covariates": ["income", "land"]
})";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("CSV reader handles quotes, BOM and blank lines") {
  std::stringstream in("\xEF\xBB\xBF" "a,b\n\"x,1\",\"he said \"\"hi\"\"\"\n\n3,4\n");
  const auto t = csv::read(in);
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "x,1");
  CHECK(t.rows[0][1] == "he said \"hi\"");
  CHECK(t.line_numbers[1] == 4);
  std::stringstream ragged("a,b\n1\n");
  CHECK_THROWS_AS(csv::read(ragged), DataError);
  CHECK(csv::escape("a,b") == "\"a,b\"");
  CHECK(csv::format_double(0.1) == "0.1");
  CHECK(!csv::parse_double("", 1, "c").has_value());
  try {
    csv::parse_double("1.2.3", 7, "income");
    FAIL("expected parse failure");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 7") != std::string::npos);
    CHECK(std::string(e.what()).find("income") != std::string::npos);
  }
}

TEST_CASE("run config parsing and validation") {
  const auto c = run_config_from_json(json::parse(kConfig));
  CHECK(c.outcomes.size() == 2);
  CHECK(c.outcomes[1].is_bad);
  CHECK(c.het_covariates.size() == 2);
  CHECK(c.fingerprint().size() == 16);
  CHECK(c.fingerprint() == run_config_from_json(to_json(c)).fingerprint());
  RunConfig d = c;
  d.optimizer.seed = 5;
  CHECK(d.fingerprint() != c.fingerprint());

  auto j = json::parse(kConfig);
  j["outcomes"][1]["numeraire"] = true;
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j = json::parse(kConfig);
  j["optimiser"] = json::object();
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j = json::parse(kConfig);
  j["estimators"] = {{"nothing", "ols"}};
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j = json::parse(kConfig);
  j["outcomes"][0]["transform"] = "sqrt";
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
}

TEST_CASE("households CSV loading") {
  const auto cfg = run_config_from_json(json::parse(kConfig));
  const std::string header =
      "household_id,tier,treated,income,land,consumption_baseline,consumption_endline,"
      "school_baseline,school_endline,note\n";
  SUBCASE("typed fields and missing optional outcomes") {
    std::stringstream in(header + "a,1,1,0.5,2,10,12,3,,x\nb,,0,0.1,,9,9.5,2,1,y\n");
    const auto d = read_dataset(in, cfg).data;
    REQUIRE(d.size() == 2);
    CHECK(d.households[0].tier == 1);
    CHECK(d.households[0].treated);
    CHECK(!d.households[0].y_endline.at("school").has_value());
    CHECK(d.households[0].y_endline.at("consumption") == 12.0);
    CHECK(!d.households[1].tier.has_value());
    CHECK(d.households[1].x_tilde.count("land") == 0);
    CHECK(d.households[1].extra.at("note") == "y");
  }
  SUBCASE("duplicate id") {
    std::stringstream in(header + "a,1,1,0.5,2,10,12,3,2,x\na,0,0,0.1,1,9,9.5,2,1,y\n");
    CHECK_THROWS_AS(read_dataset(in, cfg), DataError);
  }
  SUBCASE("missing column") {
    std::stringstream in("household_id,tier,treated,income\na,1,1,0.5\n");
    CHECK_THROWS_WITH_AS(read_dataset(in, cfg), doctest::Contains("land"), DataError);
  }
  SUBCASE("unparseable cell reports line and column") {
    std::stringstream in(header + "a,1,1,0.5,2,10,12,3,2,x\nb,0,0,abc,1,9,9.5,2,1,y\n");
    CHECK_THROWS_WITH_AS(read_dataset(in, cfg), doctest::Contains("line 3, column 'income'"),
                         DataError);
  }
}

TEST_CASE("filters drop rows and report counts") {
  auto sim = simulate(SimulationConfig{.n = 1000, .seed = 12});
  std::size_t expected = 0;
  for (const auto& h : sim.data.households) {
    if (std::stoi(h.extra.at("n_child_0_5")) >= 1 && std::stoi(h.extra.at("n_child_6_16")) >= 1) {
      ++expected;
    }
  }
  std::stringstream buf;
  write_dataset(buf, sim.data);
  RunConfig cfg = sim.config;
  cfg.filters = {{"n_child_0_5", 1.0, std::nullopt}, {"n_child_6_16", 1.0, std::nullopt}};
  const auto loaded = read_dataset(buf, cfg);
  CHECK(loaded.data.size() == expected);
  CHECK(loaded.report.n_rows == 1000);
  CHECK(loaded.report.n_filtered == 1000 - expected);
  CHECK(loaded.report.filtered_by.at("n_child_0_5") + loaded.report.filtered_by.at("n_child_6_16") ==
        1000 - expected);
}

TEST_CASE("dataset save and load round trip every typed field") {
  auto sim = simulate(SimulationConfig{.n = 200, .seed = 13});
  sim.data.households[3].y_endline["sick_days"] = std::nullopt;
  sim.data.households[4].tier = std::nullopt;
  sim.data.households[5].x_tilde.erase("land_ha");
  std::stringstream buf;
  write_dataset(buf, sim.data);
  const auto back = read_dataset(buf, sim.config).data;
  REQUIRE(back.size() == sim.data.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& a = sim.data.households[i];
    const auto& b = back.households[i];
    CHECK(a.id == b.id);
    CHECK(a.tier == b.tier);
    CHECK(a.treated == b.treated);
    CHECK(a.x == b.x);
    CHECK(a.x_tilde == b.x_tilde);
    CHECK(a.y_baseline == b.y_baseline);
    CHECK(a.y_endline == b.y_endline);
    CHECK(a.cluster == b.cluster);
    CHECK(a.extra == b.extra);
  }
}

TEST_CASE("preference parameter JSON round trip") {
  const auto truth = SimulationConfig::default_truth();
  const auto back = params_from_json(to_json(truth));
  for (const auto& [k, w] : truth.omega) CHECK(back.omega.at(k) == doctest::Approx(w).epsilon(1e-14));
  CHECK(back.lambda == truth.lambda);
  CHECK(back.C == truth.C);
  CHECK(back.sigma == truth.sigma);
  CHECK(params_from_json(json{{"params", to_json(truth)}}).C == truth.C);
  CHECK_THROWS(params_from_json(json{{"omega", {{"a", -1.0}}}}));
}

TEST_CASE("simulation output is byte identical for a seed") {
  const auto a = polval::testing::temp_dir("sim_a");
  const auto b = polval::testing::temp_dir("sim_b");
  SimulationConfig c{.n = 300, .seed = 7};
  const auto s1 = simulate(c);
  write_simulation(s1, simulate_survey(s1.truth, 5, 7), a.string());
  const auto s2 = simulate(c);
  write_simulation(s2, simulate_survey(s2.truth, 5, 7), b.string());
  for (const char* f : {"households.csv", "te_true.csv", "truth.json", "run_config.json",
                        "survey.csv"}) {
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(!slurp(a / f).empty());
  }
  const auto cfg = load_run_config_resolved((a / "run_config.json").string());
  const auto loaded = load_dataset(cfg.paths.households, cfg);
  CHECK(loaded.data.size() == 300);
}

TEST_CASE("binary ranking uses two tiers with the configured share") {
  const auto sim = simulate(SimulationConfig{.n = 400, .seed = 2, .ranking = RankingMode::kBinary,
                                             .binary_share = 0.25});
  std::size_t top = 0;
  for (const auto& h : sim.data.households) {
    CHECK((*h.tier == 0 || *h.tier == 1));
    top += *h.tier == 1 ? 1 : 0;
  }
  CHECK(top == 100);
}
