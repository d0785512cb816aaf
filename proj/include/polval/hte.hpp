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

#ifndef POLVAL_HTE_HPP_
#define POLVAL_HTE_HPP_

// Heterogeneous treatment effects. Outcomes are g-transformed before
// fitting, so every prediction is already a utility delta.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "polval/model.hpp"

namespace polval {

// g(y_endline) = b0 + bx.x + (bT + bTx.x) T + e
struct OlsTeModel {
  std::string outcome;
  std::vector<std::string> covariates;
  double beta0 = 0.0;
  std::map<std::string, double> beta_x;
  double beta_T = 0.0;
  std::map<std::string, double> beta_Tx;
  double residual_variance = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
  // Conventional (homoskedastic) standard errors.
  double se_T = 0.0;
  std::map<std::string, double> se_Tx;
};

OlsTeModel fit_ols_te(const Dataset& data, const OutcomeSpec& outcome,
                      const std::vector<std::string>& covariates);

// bT + bTx.x
double predict_te_ols(const OlsTeModel& model, const CovariateMap& x_tilde);

struct ForestConfig {
  int n_trees = 200;
  int min_leaf = 10;  // per arm, on the split half-sample
  double subsample_fraction = 0.5;
  int max_depth = 8;
  std::uint64_t rng_seed = 0;
  int max_cuts = 32;  // quantile cut points per covariate and node
};

struct TreeNode {
  int covariate = -1;  // -1 for a leaf
  double threshold = 0.0;  // left child takes x <= threshold
  int left = -1;
  int right = -1;
  std::size_t n_split = 0;  // split half-sample size at this node
  // Estimation half-sample statistics.
  int n_treated = 0;
  int n_control = 0;
  double mean_treated = 0.0;
  double mean_control = 0.0;

  bool is_leaf() const { return covariate < 0; }
  double effect() const { return mean_treated - mean_control; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::vector<std::string> split_ids;
  std::vector<std::string> estimation_ids;
};

struct ForestTeModel {
  std::string outcome;
  std::vector<std::string> covariates;
  ForestConfig config;
  std::vector<Tree> trees;
};

// Honest forest: every tree draws a subsample (seeded by tree index, over
// households sorted by id), splits it in half, grows on the first half by
// maximizing n_L n_R (tau_L - tau_R)^2, and estimates leaves on the second.
ForestTeModel fit_causal_forest(const Dataset& data, const OutcomeSpec& outcome,
                                const std::vector<std::string>& covariates,
                                const ForestConfig& config);

double predict_te_forest(const ForestTeModel& model, const CovariateMap& x_tilde);

using FeatureImportance = std::map<std::string, double>;

// Split counts weighted by node size, normalized to sum to one. A forest
// without any split spreads importance uniformly.
FeatureImportance feature_importance(const ForestTeModel& model);

enum class TeEstimator { kOls, kForest, kExternal };

std::string_view to_string(TeEstimator e);
TeEstimator parse_te_estimator(std::string_view s);

struct TeBuildResult {
  TreatmentEffectMatrix te;
  std::vector<std::string> warnings;
  std::map<std::string, OlsTeModel> ols_models;
  std::map<std::string, ForestTeModel> forest_models;
};

// One estimator per outcome (missing entries default to OLS). `external`
// supplies the columns of outcomes marked kExternal. Households missing a
// heterogeneity covariate are excluded with a warning.
TeBuildResult build_te_matrix(const Dataset& data,
                              const std::map<std::string, TeEstimator>& estimators,
                              const ForestConfig& forest = {},
                              const TreatmentEffectMatrix* external = nullptr);

// CSV: household_id,<outcome1>,<outcome2>,...
TreatmentEffectMatrix read_te_csv(std::istream& in);
TreatmentEffectMatrix load_te_csv(const std::string& path);
void write_te_csv(std::ostream& out, const TreatmentEffectMatrix& te);
void save_te_csv(const std::string& path, const TreatmentEffectMatrix& te);

}  // namespace polval

#endif  // POLVAL_HTE_HPP_
