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

#ifndef POLVAL_SIMULATE_HPP_
#define POLVAL_SIMULATE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "polval/dataset_io.hpp"
#include "polval/model.hpp"
#include "polval/survey.hpp"

namespace polval {

enum class RankingMode { kFull, kBinary };
enum class EffectShape { kLinear, kStep };

struct SimulationConfig {
  std::size_t n = 2000;
  std::uint64_t seed = 0;
  PreferenceParams truth = default_truth();
  RankingMode ranking = RankingMode::kFull;
  double binary_share = 0.5;  // share placed in the top tier under kBinary
  EffectShape effect_shape = EffectShape::kLinear;
  double outcome_noise = 0.05;
  double treated_share = 0.5;
  // Rank on log consumption utility but expose a linear consumption outcome
  // whose welfare covariates include log baseline consumption.
  bool log_curvature = false;

  static PreferenceParams default_truth();
};

struct SimulatedData {
  Dataset data;
  TreatmentEffectMatrix te_true;  // in the units of the exposed transforms
  PreferenceParams truth;
  std::vector<double> delta_s;    // true welfare impact per household
  RunConfig config;
};

SimulatedData simulate(const SimulationConfig& config);

// Synthetic MPL respondents whose log1.01 omega and lambda scatter around the
// truth with the given standard deviations.
std::vector<MplResponse> simulate_survey(const PreferenceParams& truth, std::size_t respondents,
                                         std::uint64_t seed, double omega_sd_increments = 5.0,
                                         double lambda_sd = 0.01);

// Writes households.csv, te_true.csv, truth.json, run_config.json and
// survey.csv into `directory` (created if needed).
void write_simulation(const SimulatedData& sim, const std::vector<MplResponse>& survey,
                      const std::string& directory);

}  // namespace polval

#endif  // POLVAL_SIMULATE_HPP_
