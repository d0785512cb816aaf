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
#include <sstream>

#include "polval/errors.hpp"
#include "polval/model.hpp"
#include "polval/rng.hpp"
#include "polval/simulate.hpp"
#include "polval/survey.hpp"

using namespace polval;

namespace {

// An omega item with a single switch at the given b/a increments.
MplResponse omega_item(const std::string& id, const std::string& focal, double switch_inc) {
  MplResponse r{id, focal, SurveyItemKind::kOmega, 1.0, {}};
  for (int v = -100; v <= 100; v += 2) {
    r.rows.push_back({100.0, 100.0 * std::pow(1.01, v), v < switch_inc});
  }
  return r;
}

}  // namespace

TEST_CASE("crossover takes the midpoint of the bracketing rows") {
  const std::vector<MplRow> rows = {{100, 50, true}, {100, 150, true}, {100, 250, false},
                                    {100, 350, false}};
  const auto c = crossover(rows);
  REQUIRE(c.has_value());
  CHECK(c->a == 100.0);
  CHECK(c->b == 200.0);
}

TEST_CASE("crossover invalid and precondition cases") {
  CHECK(!crossover(std::vector<MplRow>{{100, 50, true}, {100, 150, true}}).has_value());
  CHECK(!crossover(std::vector<MplRow>{{100, 50, true}, {100, 150, false}, {100, 250, true}})
             .has_value());
  CHECK_THROWS_AS(crossover(std::vector<MplRow>{{100, 50, true}, {100, 250, true},
                                                {100, 150, false}}),
                  DataError);
  CHECK_THROWS_AS(crossover(std::vector<MplRow>{{100, 50, true}}), DataError);
  CHECK_THROWS_AS(crossover(std::vector<MplRow>{{100, 50, true}, {100, 50, false}}), DataError);
}

TEST_CASE("omega from crossover") {
  CHECK(omega_from_crossover(100, 100, 1) == 1.0);
  CHECK(omega_from_crossover(100, 200, 1) == 2.0);
  CHECK(omega_from_crossover(100, 200, 2) == std::sqrt(2.0));
  CHECK(omega_from_crossover(100, 200, 2) == doctest::Approx(1.41421).epsilon(1e-5));
  CHECK_THROWS_AS(omega_from_crossover(100, 200, 0), DomainError);
  CHECK_THROWS_AS(omega_from_crossover(-1, 200, 1), DomainError);
}

TEST_CASE("lambda from crossover") {
  CHECK(lambda_from_crossover(3, 3) == 1.0);
  CHECK(lambda_from_crossover(1, 4) == 0.25);
  CHECK(lambda_from_crossover(-2, 4) < 0.0);
  CHECK_THROWS_AS(lambda_from_crossover(1, 0), DomainError);
}

TEST_CASE("reciprocity and scale invariance") {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(1, 500), b = rng.uniform(1, 500), dx = rng.uniform(0.2, 4);
    CHECK(std::abs(omega_from_crossover(a, b, dx) * omega_from_crossover(b, a, dx) - 1.0) <
          1e-12);
    for (double k : {2.0, 3.0, 0.5}) {
      CHECK(omega_from_crossover(k * a, k * b, dx) ==
            doctest::Approx(omega_from_crossover(a, b, dx)).epsilon(1e-14));
      CHECK(lambda_from_crossover(k * a, k * b) ==
            doctest::Approx(lambda_from_crossover(a, b)).epsilon(1e-14));
    }
  }
}

TEST_CASE("single respondent aggregates to its own value with zero SE") {
  const auto item = omega_item("r1", "income", -20.0);
  const auto est = aggregate({item}, 3);
  const auto c = crossover(item.rows);
  REQUIRE(c.has_value());
  CHECK(est.n_respondents == 1);
  CHECK(est.omega_median.at("income") ==
        doctest::Approx(to_increments(omega_from_crossover(c->a, c->b, 1.0))));
  CHECK(std::abs(est.se.at("omega:income")) < 1e-9);
}

TEST_CASE("repeated items are averaged within a respondent") {
  const auto a = omega_item("r1", "income", -20.0);
  const auto b = omega_item("r1", "income", 10.0);
  const auto c = omega_item("r2", "income", 40.0);
  const auto est = aggregate({a, b, c}, 3);
  const double va = to_increments(omega_from_crossover(crossover(a.rows)->a, crossover(a.rows)->b, 1));
  const double vb = to_increments(omega_from_crossover(crossover(b.rows)->a, crossover(b.rows)->b, 1));
  const double vc = to_increments(omega_from_crossover(crossover(c.rows)->a, crossover(c.rows)->b, 1));
  CHECK(est.omega_median.at("income") == doctest::Approx(0.5 * (0.5 * (va + vb) + vc)));
  CHECK(est.n_valid.at("omega:income") == 2);
}

TEST_CASE("invalid responses are dropped and missing parameters reported") {
  MplResponse never{"r1", "age", SurveyItemKind::kOmega, 1.0, {{100, 50, true}, {100, 150, true}}};
  const auto ok = omega_item("r2", "income", 5.0);
  const auto est = aggregate({never, ok}, 1);
  CHECK(est.n_invalid_items == 1);
  CHECK(est.missing == std::vector<std::string>{"omega:age"});
  CHECK(est.omega_median.count("age") == 0);
  CHECK(est.n_respondents == 1);
}

TEST_CASE("symmetric respondents around omega = 2 give a median near 2") {
  const double center = to_increments(2.0);
  double previous_error = INFINITY;
  for (std::size_t n : {25u, 401u, 4001u}) {
    Rng rng(7);
    std::vector<MplResponse> items;
    for (std::size_t r = 0; r < n; ++r) {
      MplResponse item{"r" + std::to_string(r), "x", SurveyItemKind::kOmega, 1.0, {}};
      const double inc = center + 15.0 * rng.normal();
      for (int v = 0; v <= 140; ++v) {
        item.rows.push_back({100.0, 100.0 * std::pow(1.01, v - 0.5), v - 0.5 < inc});
      }
      items.push_back(std::move(item));
    }
    const auto est = aggregate(items, 1, 50);
    const double err = std::abs(from_increments(est.omega_median.at("x")) - 2.0);
    CHECK(err < previous_error + 0.02);
    previous_error = err;
  }
  CHECK(previous_error < 0.02);
}

TEST_CASE("bootstrap SE shrinks with more respondents") {
  auto fine_items = [](std::size_t n) {
    Rng rng(5);
    std::vector<MplResponse> items;
    for (std::size_t r = 0; r < n; ++r) {
      MplResponse item{"r" + std::to_string(r), "x", SurveyItemKind::kOmega, 1.0, {}};
      const double inc = -20.0 + 5.0 * rng.normal();
      for (int v = -400; v <= 400; ++v) {
        item.rows.push_back({100.0, 100.0 * std::pow(1.01, v / 4.0), v / 4.0 < inc});
      }
      items.push_back(std::move(item));
    }
    return items;
  };
  const auto small = aggregate(fine_items(30), 2);
  const auto large = aggregate(fine_items(600), 2);
  CHECK(large.se.at("omega:x") < small.se.at("omega:x"));
  // Median of N(-20, 5^2) has asymptotic sd 1.2533 * 5 / sqrt(n).
  CHECK(large.se.at("omega:x") == doctest::Approx(1.2533 * 5.0 / std::sqrt(600.0)).epsilon(0.35));
  CHECK(large.omega_median.at("x") == doctest::Approx(-20.0).epsilon(0.05));
}

TEST_CASE("simulated survey recovers the truth") {
  const auto truth = SimulationConfig::default_truth();
  const auto est = aggregate(simulate_survey(truth, 600, 1), 2);
  for (const auto& [k, w] : truth.omega) {
    CHECK(std::abs(est.omega_median.at(k) - to_increments(w)) <= 2.5);
  }
  CHECK(est.lambda_median.at("sick_days") == doctest::Approx(0.08).epsilon(0.1));
}

TEST_CASE("survey CSV round trip") {
  const auto items = simulate_survey(SimulationConfig::default_truth(), 3, 4);
  std::stringstream buf;
  write_survey_csv(buf, items);
  const auto back = read_survey_csv(buf);
  REQUIRE(back.size() == items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    CHECK(back[i].respondent_id == items[i].respondent_id);
    CHECK(back[i].focal == items[i].focal);
    CHECK(back[i].kind == items[i].kind);
    CHECK(back[i].x_delta == items[i].x_delta);
    REQUIRE(back[i].rows.size() == items[i].rows.size());
    for (std::size_t r = 0; r < items[i].rows.size(); ++r) {
      CHECK(back[i].rows[r].amount_a == items[i].rows[r].amount_a);
      CHECK(back[i].rows[r].amount_b == items[i].rows[r].amount_b);
      CHECK(back[i].rows[r].chose_a == items[i].rows[r].chose_a);
    }
  }
  std::stringstream bad("respondent_id,focal,kind,x_delta,row_index,amount_a,amount_b,chose_a\n"
                        "r1,x,weird,1,0,1,2,1\n");
  CHECK_THROWS_AS(read_survey_csv(bad), DataError);
}
