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

#ifndef POLVAL_RANK_LIKELIHOOD_HPP_
#define POLVAL_RANK_LIKELIHOOD_HPP_

// Exploded-logit likelihood of a tiered ranking.
//
// Each household i in tier t contributes
//   u_i - logsumexp({u_i} U {u_m : m in a strictly lower tier}),
// with u_i = dS_i / sigma. Members of the same tier are not in each other's
// comparison sets, so a two-tier ranking (a binary allocation) is a set of
// independent "beats every non-recipient" choices.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "polval/model.hpp"

namespace polval {

// Tier 0 is the highest priority. Entries are row indices.
using IndexTiers = std::vector<std::vector<std::size_t>>;

struct RankingTiers {
  std::vector<std::vector<std::string>> tiers;  // tier 0 = highest priority

  std::size_t size() const { return tiers.size(); }
};

// Groups ids by equal raw value, higher value first. Requires at least two
// distinct values.
RankingTiers tiers_from_ranking(const std::map<std::string, double>& raw);
// Index form of the same grouping over a value vector.
IndexTiers tiers_from_values(std::span<const double> values);

// Scaled utilities beyond this magnitude are clipped before exponentiation.
inline constexpr double kUtilityClip = 700.0;

// Everything the likelihood needs, laid out densely.
struct RankProblem {
  std::vector<std::string> ids;
  std::vector<std::string> covariates;  // K welfare covariates
  std::vector<std::string> outcomes;    // numeraire first, then J weighted
  Eigen::MatrixXd x;                    // N x K
  Eigen::MatrixXd dv;                   // N x (1 + J), utility units
  IndexTiers tiers;
  std::vector<std::string> excluded;    // dataset ids left out, with reason

  std::size_t n() const { return ids.size(); }
  std::size_t n_covariates() const { return covariates.size(); }
  std::size_t n_weighted() const { return outcomes.empty() ? 0 : outcomes.size() - 1; }
  // Free parameter vector: [theta_1..K, lambda_1..J, C, log_sigma].
  std::size_t n_params() const { return n_covariates() + n_weighted() + 2; }
  std::size_t c_index() const { return n_covariates() + n_weighted(); }
  std::size_t log_sigma_index() const { return c_index() + 1; }
  std::vector<std::string> parameter_names() const;
  // Throws DataError unless there are at least two tiers covering all rows
  // exactly once.
  void validate() const;
};

// Builds the problem from ranked households that have a TE row. Households
// without a tier or without TEs are listed in `excluded`.
RankProblem make_rank_problem(const Dataset& data,
                              const TreatmentEffectMatrix& te);

// Same households, tiers replaced.
RankProblem with_tiers(RankProblem problem, IndexTiers tiers);

Eigen::VectorXd pack_params(const RankProblem& problem,
                            const PreferenceParams& params);
PreferenceParams unpack_params(const RankProblem& problem,
                               const Eigen::VectorXd& z);

struct LogLikResult {
  double loglik = 0.0;
  Eigen::VectorXd gradient;  // d loglik / d [theta, lambda, C, log_sigma]
  std::vector<std::string> names;
  std::size_t n_clipped = 0;

  std::map<std::string, double> gradient_map() const;
};

// Scaled utilities u_i = dS_i / sigma (clipped), in row order.
Eigen::VectorXd scaled_utilities(const RankProblem& problem,
                                 const Eigen::VectorXd& z,
                                 std::size_t* n_clipped = nullptr);

// Reference evaluation: one explicit logsumexp per household, O(N^2).
double exploded_loglik_naive(const RankProblem& problem,
                             const PreferenceParams& params);
double exploded_loglik_naive(const RankProblem& problem,
                             const Eigen::VectorXd& z);

// Single pass from the lowest tier upward with a running logsumexp and
// matching gradient sums; O(N * P).
LogLikResult exploded_loglik_fast(const RankProblem& problem,
                                  const PreferenceParams& params);
LogLikResult exploded_loglik_fast(const RankProblem& problem,
                                  const Eigen::VectorXd& z);

// Absolute change in the log likelihood caused by clipping utilities at
// +-kUtilityClip: zero when nothing is clipped, infinite when the unclipped
// utilities overflow.
double clipping_effect(const RankProblem& problem, const Eigen::VectorXd& z);

inline constexpr std::size_t kMaxProbabilityRanking = 15;

// exp(loglik); refuses rankings over kMaxProbabilityRanking households.
double ranking_probability(const RankProblem& problem,
                           const PreferenceParams& params);

}  // namespace polval

#endif  // POLVAL_RANK_LIKELIHOOD_HPP_
