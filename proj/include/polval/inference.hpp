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

#ifndef POLVAL_INFERENCE_HPP_
#define POLVAL_INFERENCE_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "polval/hte.hpp"
#include "polval/model.hpp"
#include "polval/rank_likelihood.hpp"

namespace polval {

struct OptimizerConfig {
  int n_starts = 8;  // one neutral start plus n_starts - 1 perturbed ones
  int max_iterations = 2000;
  double gradient_tolerance = 1e-6;
  double loglik_tolerance = 1e-8;
  std::uint64_t seed = 0;
  // theta_k = ln(omega_k) below -corner_bound_increments * ln(1.01) is a
  // corner solution.
  double corner_bound_increments = 500.0;
  // When false, a fit without any converged start is returned with
  // converged = false instead of raising ConvergenceError.
  bool throw_on_nonconvergence = true;
};

struct EstimateResult {
  PreferenceParams params;
  double loglik = 0.0;
  bool converged = false;
  int n_iterations = 0;
  int n_starts_used = 0;
  double gradient_norm = 0.0;
  std::set<std::string> corner_flags;

  std::size_t n = 0;
  bool constrained = false;  // decision-rule characterization
  std::vector<double> start_logliks;
  std::vector<char> start_converged;
  std::vector<std::string> warnings;
};

EstimateResult estimate_preferences(const RankProblem& problem,
                                    const OptimizerConfig& config = {});
EstimateResult estimate_preferences(const Dataset& data,
                                    const TreatmentEffectMatrix& te,
                                    const OptimizerConfig& config = {});

// Ranking problem over the welfare covariates with no treatment effects:
// dS_i = mu~(x_i) * 1, sigma = 1.
RankProblem make_characterization_problem(const Dataset& data);
RankProblem make_characterization_problem(const RankProblem& problem);

// Fits mu~ with dv = 0, C = 1 and sigma = 1. Covariates whose |theta|
// exceeds the corner bound (perfect separation) are flagged as corners.
EstimateResult characterize_decision_rule(const RankProblem& problem,
                                          const OptimizerConfig& config = {});
EstimateResult characterize_decision_rule(const Dataset& data,
                                          const OptimizerConfig& config = {});

struct PipelineConfig {
  std::map<std::string, TeEstimator> estimators;
  ForestConfig forest;
  OptimizerConfig optimizer;
  const TreatmentEffectMatrix* external = nullptr;
  bool cluster_resampling = false;
};

struct BootstrapResult {
  std::vector<EstimateResult> draws;  // retained draws, by draw index
  std::vector<int> draw_index;
  int n_requested = 0;
  int n_excluded_corner = 0;
  // Std dev across retained draws, keyed theta:<k>, lambda:<j>, C, sigma.
  std::map<std::string, double> se;
};

// Resamples households (or clusters) with replacement, refits treatment
// effects, then refits preferences; draws with a corner flag are excluded.
BootstrapResult bootstrap(const Dataset& data, const PipelineConfig& config, int replicates,
                          std::uint64_t seed);

// Resample used by one bootstrap draw. Rows get ids "<id>#<position>".
Dataset bootstrap_sample(const Dataset& data, std::uint64_t seed, int draw,
                         bool cluster_resampling);

struct CommonWeightsTest {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  double loglik_a = 0.0;
  double loglik_b = 0.0;
  double loglik_pooled = 0.0;
  PreferenceParams pooled_a;
  PreferenceParams pooled_b;
};

// Likelihood-ratio test of a shared omega across two rankings, keeping
// lambda, C and sigma specific to each.
CommonWeightsTest test_common_weights(const RankProblem& a, const RankProblem& b,
                                      const OptimizerConfig& config = {});

}  // namespace polval

#endif  // POLVAL_INFERENCE_HPP_
