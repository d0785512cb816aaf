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

#ifndef POLVAL_MODEL_HPP_
#define POLVAL_MODEL_HPP_

// Domain types and the welfare arithmetic shared by every module.
//
// Welfare weights are multiplicative in the covariates:
//   mu(x) = prod_k omega_k ^ x_k,
// so mu(0) = 1. Covariates should be coded so that the all-zeros vector is a
// meaningful reference household; continuous covariates enter raw and their
// centering changes the level of mu (not the implied ranking of households
// within a fit).

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace polval {

enum class Transform { kLog, kLinear };

std::string_view to_string(Transform t);
Transform parse_transform(std::string_view s);

struct OutcomeSpec {
  std::string name;
  Transform transform = Transform::kLinear;
  bool is_numeraire = false;
  // Bads (sick days, missed school) are sign-flipped when searching for the
  // allocation that is best on this outcome alone.
  bool is_bad = false;
  std::string units;

  double sign() const { return is_bad ? -1.0 : 1.0; }
};

using CovariateMap = std::map<std::string, double>;
using OutcomeValues = std::map<std::string, std::optional<double>>;

struct Household {
  std::string id;
  std::optional<std::int64_t> tier;  // larger = higher priority
  bool treated = false;
  CovariateMap x;        // welfare covariates
  CovariateMap x_tilde;  // heterogeneity covariates (absent key = missing)
  OutcomeValues y_baseline;
  OutcomeValues y_endline;
  std::optional<std::string> cluster;
  // Columns not named by the configuration, kept verbatim for filters and
  // round trips.
  std::map<std::string, std::string> extra;
};

struct Dataset {
  std::vector<OutcomeSpec> outcomes;
  std::vector<std::string> welfare_covariates;
  std::vector<std::string> het_covariates;
  std::vector<Household> households;

  std::size_t size() const { return households.size(); }
  const OutcomeSpec& numeraire() const;
  const OutcomeSpec& outcome(std::string_view name) const;
  // Non-numeraire outcomes in configuration order.
  std::vector<std::string> weighted_outcomes() const;
  std::vector<std::string> outcome_names() const;
  std::vector<std::string> ids() const;
  // Throws ConfigError unless exactly one outcome is the numeraire.
  void validate() const;
};

enum class TeSource { kOls, kForest, kExternal };

std::string_view to_string(TeSource s);

// Per-household, per-outcome treatment effects in utility units.
class TreatmentEffectMatrix {
 public:
  TreatmentEffectMatrix() = default;
  TreatmentEffectMatrix(std::vector<std::string> household_ids,
                        std::vector<std::string> outcomes,
                        std::vector<TeSource> sources);

  std::size_t rows() const { return ids_.size(); }
  std::size_t cols() const { return outcomes_.size(); }
  const std::vector<std::string>& household_ids() const { return ids_; }
  const std::vector<std::string>& outcomes() const { return outcomes_; }
  const std::vector<TeSource>& sources() const { return sources_; }

  double& at(std::size_t row, std::size_t col) { return values_(row, col); }
  double at(std::size_t row, std::size_t col) const {
    return values_(row, col);
  }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }

  std::optional<std::size_t> row_of(std::string_view id) const;
  std::size_t col_of(std::string_view outcome) const;  // ConfigError if absent
  double get(std::string_view id, std::string_view outcome) const;

  // Mean over households for one outcome.
  double average_te(std::string_view outcome) const;
  // Throws DataError naming the first non-finite entry.
  void check_finite() const;

 private:
  std::vector<std::string> ids_;
  std::vector<std::string> outcomes_;
  std::vector<TeSource> sources_;
  Eigen::MatrixXd values_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct PreferenceParams {
  std::map<std::string, double> omega;   // > 0, one per welfare covariate
  std::map<std::string, double> lambda;  // one per non-numeraire outcome
  double C = 0.0;
  double sigma = 1.0;

  // Throws DomainError if omega or sigma is non-positive.
  void validate() const;
  // omega_k = 1, lambda_j = 0, C = 0, sigma = 1.
  static PreferenceParams neutral(const std::vector<std::string>& covariates,
                                  const std::vector<std::string>& outcomes);
};

// g(y1) - g(y0) with g = ln or identity.
double utility_delta(const OutcomeSpec& spec, double y0, double y1);
// g(y).
double utility_level(const OutcomeSpec& spec, double y);

// prod_k omega_k ^ x_k. Every key of omega must be present in x.
double welfare_weight(const std::map<std::string, double>& omega,
                      const CovariateMap& x);

// mu(x) * (dv_numeraire + sum_j lambda_j dv_j + C). `dv` is keyed by outcome
// name; `numeraire` names the outcome with unit weight.
double welfare_impact(const PreferenceParams& params,
                      const std::map<std::string, double>& dv,
                      std::string_view numeraire, const CovariateMap& x);

// ln(omega) / ln(1.01): the number of successive 1% increments.
double to_increments(double omega);
// 1.01 ^ increments.
double from_increments(double increments);

inline constexpr double kLogOnePercent = 0.009950330853168092;  // ln 1.01

}  // namespace polval

#endif  // POLVAL_MODEL_HPP_
