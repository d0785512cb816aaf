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
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "polval/polval.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  polval_free(s);
  return out;
}

fs::path simulated_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "polval_test_capi";
    fs::remove_all(d);
    REQUIRE(polval_simulate(R"({"n": 600, "seed": 3, "survey_respondents": 40})",
                            d.string().c_str()) == POLVAL_OK);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("status names and errors") {
  CHECK(std::string(polval_version()) == "0.1.0");
  CHECK(std::string(polval_status_name(POLVAL_ERR_DATA)) == "data error");
  polval_run* run = nullptr;
  CHECK(polval_run_create("/nonexistent/config.json", &run) != POLVAL_OK);
  CHECK(run == nullptr);
  CHECK(std::string(polval_last_error()).size() > 0);
  CHECK(polval_run_create_from_json("{\"outcomes\": 3}", ".", &run) == POLVAL_ERR_CONFIG);
  CHECK(polval_run_create(nullptr, &run) == POLVAL_ERR_CONFIG);
  CHECK(polval_simulate("{\"bogus\": 1}", "/tmp/x") == POLVAL_ERR_CONFIG);
}

TEST_CASE("full pipeline through the C interface") {
  const auto dir = simulated_dir();
  polval_run* run = nullptr;
  REQUIRE(polval_run_create((dir / "run_config.json").string().c_str(), &run) == POLVAL_OK);

  char* fp = nullptr;
  REQUIRE(polval_run_fingerprint(run, &fp) == POLVAL_OK);
  CHECK(take(fp).size() == 16);

  size_t n = 0;
  CHECK(polval_run_n_households(run, &n) == POLVAL_ERR_STATE);
  size_t loaded = 0, filtered = 0;
  REQUIRE(polval_run_load_households(run, nullptr, &loaded, &filtered) == POLVAL_OK);
  CHECK(loaded == 600);
  CHECK(filtered == 0);

  char* js = nullptr;
  char* text = nullptr;
  REQUIRE(polval_run_fit_te(run, &js, &text) == POLVAL_OK);
  CHECK(json::parse(take(js))["command"] == "fit-te");
  CHECK(take(text).size() > 0);

  REQUIRE(polval_run_infer(run, &js, &text) == POLVAL_OK);
  const auto inf = json::parse(take(js));
  CHECK(inf["params"]["omega"].size() == 5);
  CHECK(take(text).find("log1.01") != std::string::npos);

  REQUIRE(polval_run_bootstrap(run, 5, &js, nullptr) == POLVAL_OK);
  CHECK(json::parse(take(js))["bootstrap"]["n_requested"] == 5);

  REQUIRE(polval_run_counterfactual(run, nullptr, 100, &js, nullptr) == POLVAL_OK);
  CHECK(json::parse(take(js))["k"] == 100);
  CHECK(polval_run_counterfactual(run, "{\"omega\": {\"x\": -1}}", 100, &js, nullptr) !=
        POLVAL_OK);

  char* plot = nullptr;
  REQUIRE(polval_run_frontier(run, "raw", 0, &js, nullptr, &plot) == POLVAL_OK);
  CHECK(json::parse(take(js))["weighting"] == "raw");
  CHECK(take(plot).rfind("point,", 0) != std::string::npos);
  CHECK(polval_run_frontier(run, "bogus", 0, &js, nullptr, nullptr) == POLVAL_ERR_CONFIG);

  const auto te_path = dir / "te_saved.csv";
  REQUIRE(polval_run_save_te(run, te_path.string().c_str()) == POLVAL_OK);
  CHECK(fs::file_size(te_path) > 0);
  polval_run_destroy(run);
}

TEST_CASE("seeded runs are reproducible") {
  const auto dir = simulated_dir();
  std::string out[2];
  for (auto& o : out) {
    polval_run* run = nullptr;
    REQUIRE(polval_run_create((dir / "run_config.json").string().c_str(), &run) == POLVAL_OK);
    REQUIRE(polval_run_set_seed(run, 99) == POLVAL_OK);
    char* js = nullptr;
    REQUIRE(polval_run_bootstrap(run, 4, &js, nullptr) == POLVAL_OK);
    o = take(js);
    polval_run_destroy(run);
  }
  CHECK(out[0] == out[1]);
}

TEST_CASE("external treatment effects and survey") {
  const auto dir = simulated_dir();
  polval_run* run = nullptr;
  REQUIRE(polval_run_create((dir / "run_config.json").string().c_str(), &run) == POLVAL_OK);
  REQUIRE(polval_run_load_te(run, (dir / "te_true.csv").string().c_str()) == POLVAL_OK);
  char* js = nullptr;
  REQUIRE(polval_run_infer(run, &js, nullptr) == POLVAL_OK);
  CHECK(json::parse(take(js))["converged"] == true);
  polval_run_destroy(run);

  REQUIRE(polval_survey((dir / "survey.csv").string().c_str(), 1, 20, &js, nullptr) == POLVAL_OK);
  CHECK(json::parse(take(js))["n_respondents"] == 40);
  CHECK(polval_survey("/nonexistent.csv", 1, 20, &js, nullptr) == POLVAL_ERR_DATA);
}
