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

#include "polval/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "polval/errors.hpp"
#include "polval/hte.hpp"
#include "polval/rng.hpp"

namespace polval {
namespace {

const std::vector<std::string> kWelfare = {"log_income", "household_size", "head_age",
                                           "head_education", "indigenous"};
const char* kLand = "land_ha";
const char* kLogBaseline = "log_baseline_consumption";

struct Effects {
  double consumption;  // log points, or levels under log_curvature
  double missed_school;
  double sick_days;
};

Effects true_effects(const SimulationConfig& cfg, const CovariateMap& x) {
  const double land = x.at(kLand);
  if (cfg.effect_shape == EffectShape::kStep) {
    const double step = land > 1.5 ? 1.0 : 0.0;
    return {0.10 + 0.30 * step, -0.5 - 1.5 * step, -0.4 - 1.0 * step};
  }
  if (cfg.log_curvature) {
    return {0.30 + 0.05 * land, -1.0 + 0.3 * x.at("head_education") - 0.4 * land,
            -0.8 + 0.3 * x.at("head_age") + 0.25 * land};
  }
  return {0.15 - 0.08 * x.at("log_income") + 0.05 * x.at("household_size") +
              0.08 * (land - 1.5) - 0.03 * x.at("indigenous"),
          -1.0 + 0.3 * x.at("head_education") - 0.4 * land + 0.2 * x.at("household_size"),
          -0.8 + 0.3 * x.at("head_age") + 0.25 * land - 0.2 * x.at("log_income")};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

}  // namespace

PreferenceParams SimulationConfig::default_truth() {
  PreferenceParams p;
  p.omega = {{"log_income", std::exp(-0.20)},
             {"household_size", std::exp(0.13)},
             {"head_age", std::exp(0.10)},
             {"head_education", std::exp(-0.10)},
             {"indigenous", std::exp(-0.12)}};
  p.lambda = {{"missed_school", -0.03}, {"sick_days", 0.08}};
  p.C = 0.47;
  p.sigma = 0.05;
  return p;
}

SimulatedData simulate(const SimulationConfig& cfg) {
  if (cfg.n < 2) throw ConfigError("simulation needs at least two households");
  if (!(cfg.binary_share > 0.0 && cfg.binary_share < 1.0)) {
    throw ConfigError("binary_share must lie in (0, 1)");
  }
  SimulatedData sim;
  sim.truth = cfg.truth;

  std::vector<std::string> welfare = kWelfare;
  if (cfg.log_curvature) welfare.push_back(kLogBaseline);
  for (const auto& c : welfare) {
    if (c != kLogBaseline && !sim.truth.omega.count(c)) {
      throw ConfigError(fmt::format("simulation truth lacks omega for '{}'", c));
    }
  }
  sim.truth.validate();

  RunConfig& rc = sim.config;
  rc.outcomes = {
      {"consumption", cfg.log_curvature ? Transform::kLinear : Transform::kLog, true, false,
       "pesos per capita"},
      {"missed_school", Transform::kLinear, false, true, "days"},
      {"sick_days", Transform::kLinear, false, true, "days"}};
  rc.welfare_covariates = welfare;
  rc.het_covariates = kWelfare;
  rc.het_covariates.push_back(kLand);
  rc.optimizer.seed = cfg.seed;
  rc.bootstrap.seed = cfg.seed;
  rc.frontier.seed = cfg.seed;
  rc.forest.rng_seed = cfg.seed;
  rc.filters = {};
  rc.paths.households = "households.csv";
  rc.paths.treatment_effects = "te_true.csv";
  rc.paths.survey = "survey.csv";
  rc.paths.output_dir = "out";

  Dataset& d = sim.data;
  d.outcomes = rc.outcomes;
  d.welfare_covariates = rc.welfare_covariates;
  d.het_covariates = rc.het_covariates;

  Rng rx(cfg.seed, 0);
  Rng rt(cfg.seed, 1);
  Rng ry(cfg.seed, 2);
  Rng rg(cfg.seed, 3);
  const int width = static_cast<int>(std::to_string(cfg.n - 1).size());
  std::vector<Effects> effects;
  std::vector<double> dv0;
  for (std::size_t i = 0; i < cfg.n; ++i) {
    Household h;
    h.id = fmt::format("h{:0{}}", i, width);
    CovariateMap x;
    x["log_income"] = rx.normal();
    x["household_size"] = rx.normal();
    x["head_age"] = rx.normal();
    x["head_education"] = rx.normal();
    x["indigenous"] = rx.bernoulli(0.3) ? 1.0 : 0.0;
    x[kLand] = rx.uniform(0.0, 3.0);
    h.cluster = fmt::format("v{:03}", rx.below(100));
    h.extra["n_child_0_5"] = std::to_string(rx.below(3));
    h.extra["n_child_6_16"] = std::to_string(rx.below(4));
    h.treated = rt.bernoulli(cfg.treated_share);

    const Effects e = true_effects(cfg, x);
    const double t = h.treated ? 1.0 : 0.0;
    const double s = cfg.outcome_noise;
    const double log_c0 = 0.3 * x["log_income"] + 0.4 * ry.normal();
    if (cfg.log_curvature) {
      const double y0 = std::exp(log_c0);
      h.y_baseline["consumption"] = y0;
      h.y_endline["consumption"] = y0 + t * e.consumption + s * ry.normal();
      x[kLogBaseline] = log_c0;
      dv0.push_back(std::log(y0 + e.consumption) - log_c0);
    } else {
      h.y_baseline["consumption"] = std::exp(log_c0 + s * ry.normal());
      h.y_endline["consumption"] =
          std::exp(0.05 + 0.3 * x["log_income"] + t * e.consumption + s * ry.normal());
      dv0.push_back(e.consumption);
    }
    const double school0 = 4.0 + 0.5 * x["household_size"] - 0.5 * x["head_education"];
    h.y_baseline["missed_school"] = school0 + s * ry.normal();
    h.y_endline["missed_school"] = school0 + t * e.missed_school + s * ry.normal();
    const double sick0 = 3.0 + 0.5 * x["head_age"];
    h.y_baseline["sick_days"] = sick0 + s * ry.normal();
    h.y_endline["sick_days"] = sick0 + t * e.sick_days + s * ry.normal();

    for (const auto& c : rc.welfare_covariates) h.x[c] = x.at(c);
    for (const auto& c : rc.het_covariates) h.x_tilde[c] = x.at(c);
    effects.push_back(e);
    d.households.push_back(std::move(h));
  }

  sim.te_true = TreatmentEffectMatrix(d.ids(), d.outcome_names(),
                                      {TeSource::kExternal, TeSource::kExternal,
                                       TeSource::kExternal});
  std::vector<double> latent(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const auto& h = d.households[i];
    sim.te_true.at(i, 0) = effects[i].consumption;
    sim.te_true.at(i, 1) = effects[i].missed_school;
    sim.te_true.at(i, 2) = effects[i].sick_days;
    const std::map<std::string, double> dv = {{"consumption", dv0[i]},
                                              {"missed_school", effects[i].missed_school},
                                              {"sick_days", effects[i].sick_days}};
    CovariateMap x = h.x;
    if (cfg.log_curvature && !sim.truth.omega.count(kLogBaseline)) x.erase(kLogBaseline);
    const double ds = welfare_impact(sim.truth, dv, "consumption", x);
    sim.delta_s.push_back(ds);
    latent[i] = ds + sim.truth.sigma * rg.gumbel();
  }

  std::vector<std::size_t> order(cfg.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return latent[a] < latent[b]; });
  const auto n_top = static_cast<std::size_t>(std::llround(cfg.binary_share * cfg.n));
  for (std::size_t pos = 0; pos < cfg.n; ++pos) {
    auto& h = d.households[order[pos]];
    if (cfg.ranking == RankingMode::kFull) {
      h.tier = static_cast<std::int64_t>(pos);
    } else {
      h.tier = pos >= cfg.n - n_top ? 1 : 0;
    }
  }
  d.validate();
  return sim;
}

std::vector<MplResponse> simulate_survey(const PreferenceParams& truth, std::size_t respondents,
                                         std::uint64_t seed, double omega_sd_increments,
                                         double lambda_sd) {
  Rng rng(seed, 17);
  std::vector<MplResponse> out;
  const int width = static_cast<int>(std::to_string(respondents).size());
  for (std::size_t r = 0; r < respondents; ++r) {
    const std::string id = fmt::format("r{:0{}}", r, width);
    for (const auto& [name, omega] : truth.omega) {
      const double inc = to_increments(omega) + omega_sd_increments * rng.normal();
      const double x_delta = 1.0;
      MplResponse item{id, name, SurveyItemKind::kOmega, x_delta, {}};
      // Give `a` to the household with the higher attribute value, `b` to
      // the other; pick a iff b is below a * omega^x_delta.
      for (int v = -60; v <= 60; v += 4) {
        const double a = 100.0;
        const double b = 100.0 * std::pow(1.01, v);
        item.rows.push_back({a, b, v < inc});
      }
      out.push_back(std::move(item));
    }
    for (const auto& [name, lambda] : truth.lambda) {
      const double value = lambda + lambda_sd * rng.normal();
      MplResponse item{id, name, SurveyItemKind::kLambda, 0.0, {}};
      for (int v = -40; v <= 40; ++v) {
        const double a = 0.005 * v;
        item.rows.push_back({a, 1.0, a > value});
      }
      out.push_back(std::move(item));
    }
  }
  return out;
}

void write_simulation(const SimulatedData& sim, const std::vector<MplResponse>& survey,
                      const std::string& directory) {
  namespace fs = std::filesystem;
  const fs::path dir(directory);
  fs::create_directories(dir);
  save_dataset((dir / "households.csv").string(), sim.data);
  save_te_csv((dir / "te_true.csv").string(), sim.te_true);
  nlohmann::json truth = {{"params", to_json(sim.truth)}};
  write_text(dir / "truth.json", truth.dump(2) + "\n");
  write_text(dir / "run_config.json", to_json(sim.config).dump(2) + "\n");
  std::ofstream s(dir / "survey.csv", std::ios::binary);
  if (!s) throw DataError(fmt::format("cannot write '{}'", (dir / "survey.csv").string()));
  write_survey_csv(s, survey);
}

}  // namespace polval
