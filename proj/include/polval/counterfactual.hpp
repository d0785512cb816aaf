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

#ifndef POLVAL_COUNTERFACTUAL_HPP_
#define POLVAL_COUNTERFACTUAL_HPP_

// Forward direction: preferences -> scores -> allocation -> outcomes.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "polval/inference.hpp"
#include "polval/model.hpp"

namespace polval {

struct WelfareImpactVector {
  std::vector<std::string> ids;
  std::vector<double> values;  // dS_i, aligned with ids

  std::size_t size() const { return ids.size(); }
};

// dS_i for every row of the TE matrix; covariates come from `data`.
WelfareImpactVector score_households(const PreferenceParams& params,
                                     const TreatmentEffectMatrix& te, const Dataset& data);

// The K highest scores, ties broken by ascending household id. Returned in
// selection order (best first).
std::vector<std::string> allocate_top_k(const WelfareImpactVector& scores, std::size_t k);

// Per outcome, in g-transformed units: mean over TE rows of the predicted
// untreated level plus the TE for selected households. The untreated level
// is the observed endline, less the TE for households that were treated.
std::map<std::string, double> expected_outcomes(const std::vector<std::string>& selection,
                                                const TreatmentEffectMatrix& te,
                                                const Dataset& data);

// Implied covariate priorities (log1.01 increments) of the ranking induced
// by `scores`, or of the two-tier split induced by `selection`.
std::map<std::string, double> characterize_counterfactual_rule(
    const WelfareImpactVector& scores, const Dataset& data, const OptimizerConfig& config = {});
std::map<std::string, double> characterize_counterfactual_rule(
    const std::vector<std::string>& selection, const TreatmentEffectMatrix& te,
    const Dataset& data, const OptimizerConfig& config = {});

struct CounterfactualResult {
  WelfareImpactVector scores;
  std::vector<std::string> selected;
  std::map<std::string, double> implied_priorities;
  std::map<std::string, double> expected_outcomes;
};

CounterfactualResult run_counterfactual(const PreferenceParams& params,
                                        const TreatmentEffectMatrix& te, const Dataset& data,
                                        std::size_t k, const OptimizerConfig& config = {});

enum class FrontierWeighting { kRaw, kWelfareWeighted, kSurveyWeighted };

std::string_view to_string(FrontierWeighting w);
FrontierWeighting parse_frontier_weighting(std::string_view s);

struct FrontierPoint {
  Eigen::Vector3d direction;  // in sign-adjusted outcome space
  Eigen::Vector3d impacts;    // per-outcome average impact, raw signs
  bool on_hull = false;
  bool axis = false;
};

struct FrontierResult {
  std::vector<std::string> outcomes;
  std::vector<FrontierPoint> points;
  std::vector<std::size_t> hull_vertices;  // indices into points
  FrontierWeighting weighting = FrontierWeighting::kRaw;
  std::size_t k = 0;
  double hull_volume = 0.0;
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kDefaultFrontierDirections = 2048;

// For n_directions seeded unit directions (a prefix of the same sequence for
// any n) followed by the six signed axes, selects the top K by the
// direction-weighted, sign-adjusted effects and records the average impact
// over all households. Weighted variants premultiply each household's
// effects by mu(x_i) under `omega`.
FrontierResult frontier(const TreatmentEffectMatrix& te, const Dataset& data, std::size_t k,
                        std::size_t n_directions, FrontierWeighting weighting,
                        const std::map<std::string, double>* omega, std::uint64_t seed);

// Per-household impacts used by the frontier, rows aligned with `te`,
// premultiplied by mu(x_i) for the weighted variants.
Eigen::MatrixXd frontier_impacts(const TreatmentEffectMatrix& te, const Dataset& data,
                                 FrontierWeighting weighting,
                                 const std::map<std::string, double>* omega);

// Sum of the selected rows divided by the total number of rows.
Eigen::Vector3d average_impacts(const std::vector<std::size_t>& rows,
                                const Eigen::MatrixXd& impacts);

}  // namespace polval

#endif  // POLVAL_COUNTERFACTUAL_HPP_
