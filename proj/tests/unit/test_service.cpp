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

#include <cmath>

#include "polval/errors.hpp"
#include "polval/service.hpp"
#include "polval/simulate.hpp"

// Must follow the Eigen headers (resolv.h macro clash).
#include <httplib.h>

using namespace polval;
using nlohmann::json;

namespace {

ServiceState make_state(bool with_te) {
  auto sim = simulate(SimulationConfig{.n = 300, .seed = 21});
  ServiceState s;
  s.config = sim.config;
  s.config.frontier.n_directions = 128;
  s.data = sim.data;
  if (with_te) s.te = sim.te_true;
  s.fitted = sim.truth;
  return s;
}

}  // namespace

TEST_CASE("service handlers without a network") {
  Service svc(make_state(true));
  const auto s = svc.summary();
  CHECK(s.status == 200);
  CHECK(s.body["n"] == 300);
  CHECK(s.body["te_loaded"] == true);
  CHECK(s.body["fingerprint"] == svc.fingerprint());

  SUBCASE("neutral request matches the library") {
    const auto r = svc.counterfactual("{}");
    REQUIRE(r.status == 200);
    const auto st = make_state(true);
    const auto neutral = PreferenceParams::neutral(st.data.welfare_covariates,
                                                   st.data.weighted_outcomes());
    OptimizerConfig opt = st.config.optimizer;
    opt.throw_on_nonconvergence = false;
    const std::size_t k = s.body["k_default"].get<std::size_t>();
    const auto lib = run_counterfactual(neutral, *st.te, st.data, k, opt);
    for (const auto& [o, v] : lib.expected_outcomes) {
      CHECK(r.body["expected_outcomes"][o].get<double>() == doctest::Approx(v).epsilon(1e-12));
    }
    CHECK(r.body.contains("echo"));
    CHECK(!r.body.contains("selected"));
  }
  SUBCASE("identical requests give identical responses") {
    const std::string body = R"({"omega": {"log_income": -20, "indigenous": 12}, "C": 0.4, "k": 50})";
    const auto a = svc.counterfactual(body);
    const auto b = svc.counterfactual(body);
    REQUIRE(a.status == 200);
    CHECK(a.body.dump() == b.body.dump());
    CHECK(a.body["echo"]["omega"]["log_income"] == -20);
    CHECK(a.body["echo"]["omega"]["head_age"] == 0);
    CHECK(a.body["echo"]["k"] == 50);
    CHECK(a.body["params"]["omega"]["log_income"].get<double>() ==
          doctest::Approx(std::pow(1.01, -20)).epsilon(1e-12));
  }
  SUBCASE("validation errors") {
    auto r = svc.counterfactual(R"({"k": 301})");
    CHECK(r.status == 400);
    CHECK(r.body["fields"].contains("k"));
    CHECK(svc.counterfactual(R"({"k": 0})").status == 400);
    CHECK(svc.counterfactual("{not json").status == 400);
    CHECK(svc.counterfactual("[1]").status == 400);
    r = svc.counterfactual(R"({"omega": {"nope": 1}, "extra": true})");
    CHECK(r.status == 400);
    CHECK(r.body["fields"].contains("omega.nope"));
    CHECK(r.body["fields"].contains("extra"));
    CHECK(svc.counterfactual(R"({"lambda": {"sick_days": "x"}})").status == 400);
  }
  SUBCASE("frontiers") {
    const auto raw = svc.frontier("raw");
    REQUIRE(raw.status == 200);
    CHECK(raw.body["weighting"] == "raw");
    CHECK(raw.body["hull_volume"].get<double>() > 0.0);
    CHECK(svc.frontier("welfare").status == 200);
    CHECK(svc.frontier("survey").status == 409);
    CHECK(svc.frontier("bogus").status == 400);
  }
}

TEST_CASE("service without treatment effects reports conflicts") {
  Service svc(make_state(false));
  CHECK(svc.summary().body["te_loaded"] == false);
  CHECK(svc.counterfactual("{}").status == 409);
  CHECK(svc.frontier("raw").status == 409);
}

TEST_CASE("HTTP endpoints over a live socket") {
  Service svc(make_state(true));
  const int port = svc.start("127.0.0.1", 0);
  REQUIRE(port > 0);
  httplib::Client cli("127.0.0.1", port);

  auto s = cli.Get("/summary");
  REQUIRE(s);
  CHECK(s->status == 200);
  CHECK(s->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(json::parse(s->body)["n"] == 300);

  const std::string body = R"({"omega": {"household_size": 13}, "k": 120})";
  auto a = cli.Post("/counterfactual", body, "application/json");
  auto b = cli.Post("/counterfactual", body, "application/json");
  REQUIRE(a);
  REQUIRE(b);
  CHECK(a->status == 200);
  CHECK(a->body == b->body);
  CHECK(a->body == svc.counterfactual(body).body.dump());

  auto bad = cli.Post("/counterfactual", R"({"k": 100000})", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  auto malformed = cli.Post("/counterfactual", "{", "application/json");
  REQUIRE(malformed);
  CHECK(malformed->status == 400);

  auto f = cli.Get("/frontier?weighting=welfare");
  REQUIRE(f);
  CHECK(f->status == 200);
  CHECK(json::parse(f->body)["weighting"] == "welfare_weighted");
  auto fr = cli.Get("/frontier");
  REQUIRE(fr);
  CHECK(json::parse(fr->body)["weighting"] == "raw");
  svc.stop();
}
