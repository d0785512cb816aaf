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

#include "polval/model.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "polval/errors.hpp"

namespace polval {

std::string_view to_string(Transform t) {
  return t == Transform::kLog ? "log" : "linear";
}

Transform parse_transform(std::string_view s) {
  if (s == "log") return Transform::kLog;
  if (s == "linear") return Transform::kLinear;
  throw ConfigError(fmt::format("unknown outcome transform '{}'", s));
}

std::string_view to_string(TeSource s) {
  switch (s) {
    case TeSource::kOls:
      return "ols";
    case TeSource::kForest:
      return "forest";
    case TeSource::kExternal:
      return "external";
  }
  return "external";
}

const OutcomeSpec& Dataset::numeraire() const {
  for (const auto& o : outcomes) {
    if (o.is_numeraire) return o;
  }
  throw ConfigError("no numeraire outcome configured");
}

const OutcomeSpec& Dataset::outcome(std::string_view name) const {
  for (const auto& o : outcomes) {
    if (o.name == name) return o;
  }
  throw ConfigError(fmt::format("unknown outcome '{}'", name));
}

std::vector<std::string> Dataset::weighted_outcomes() const {
  std::vector<std::string> out;
  for (const auto& o : outcomes) {
    if (!o.is_numeraire) out.push_back(o.name);
  }
  return out;
}

std::vector<std::string> Dataset::outcome_names() const {
  std::vector<std::string> out;
  out.reserve(outcomes.size());
  for (const auto& o : outcomes) out.push_back(o.name);
  return out;
}

std::vector<std::string> Dataset::ids() const {
  std::vector<std::string> out;
  out.reserve(households.size());
  for (const auto& h : households) out.push_back(h.id);
  return out;
}

void Dataset::validate() const {
  int n_numeraire = 0;
  for (const auto& o : outcomes) n_numeraire += o.is_numeraire ? 1 : 0;
  if (n_numeraire != 1) {
    throw ConfigError(fmt::format(
        "exactly one numeraire outcome required, found {}", n_numeraire));
  }
}

TreatmentEffectMatrix::TreatmentEffectMatrix(
    std::vector<std::string> household_ids, std::vector<std::string> outcomes,
    std::vector<TeSource> sources)
    : ids_(std::move(household_ids)),
      outcomes_(std::move(outcomes)),
      sources_(std::move(sources)),
      values_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ids_.size()),
                                    static_cast<Eigen::Index>(outcomes_.size()))) {
  if (sources_.size() != outcomes_.size()) {
    throw ConfigError("one TE source per outcome required");
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw DataError(fmt::format("duplicate household id '{}' in TE matrix",
                                  ids_[i]));
    }
  }
}

std::optional<std::size_t> TreatmentEffectMatrix::row_of(
    std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t TreatmentEffectMatrix::col_of(std::string_view outcome) const {
  for (std::size_t j = 0; j < outcomes_.size(); ++j) {
    if (outcomes_[j] == outcome) return j;
  }
  throw ConfigError(fmt::format("TE matrix has no outcome '{}'", outcome));
}

double TreatmentEffectMatrix::get(std::string_view id,
                                  std::string_view outcome) const {
  auto row = row_of(id);
  if (!row) throw DataError(fmt::format("TE matrix has no household '{}'", id));
  return at(*row, col_of(outcome));
}

double TreatmentEffectMatrix::average_te(std::string_view outcome) const {
  if (rows() == 0) throw DataError("empty TE matrix");
  return values_.col(static_cast<Eigen::Index>(col_of(outcome))).mean();
}

void TreatmentEffectMatrix::check_finite() const {
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t j = 0; j < cols(); ++j) {
      if (!std::isfinite(at(i, j))) {
        throw DataError(fmt::format(
            "non-finite treatment effect for household '{}', outcome '{}'",
            ids_[i], outcomes_[j]));
      }
    }
  }
}

void PreferenceParams::validate() const {
  for (const auto& [k, w] : omega) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw DomainError(fmt::format("omega[{}] must be positive, got {}", k, w));
    }
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError(fmt::format("sigma must be positive, got {}", sigma));
  }
}

PreferenceParams PreferenceParams::neutral(
    const std::vector<std::string>& covariates,
    const std::vector<std::string>& outcomes) {
  PreferenceParams p;
  for (const auto& k : covariates) p.omega[k] = 1.0;
  for (const auto& j : outcomes) p.lambda[j] = 0.0;
  return p;
}

double utility_level(const OutcomeSpec& spec, double y) {
  if (spec.transform == Transform::kLinear) return y;
  if (!(y > 0.0)) {
    throw DomainError(fmt::format(
        "outcome '{}' uses a log transform but has non-positive value {}",
        spec.name, y));
  }
  return std::log(y);
}

double utility_delta(const OutcomeSpec& spec, double y0, double y1) {
  if (spec.transform == Transform::kLinear) return y1 - y0;
  return utility_level(spec, y1) - utility_level(spec, y0);
}

double welfare_weight(const std::map<std::string, double>& omega,
                      const CovariateMap& x) {
  double log_mu = 0.0;
  for (const auto& [k, w] : omega) {
    auto it = x.find(k);
    if (it == x.end()) {
      throw ConfigError(fmt::format("missing welfare covariate '{}'", k));
    }
    if (!(w > 0.0)) {
      throw DomainError(fmt::format("omega[{}] must be positive, got {}", k, w));
    }
    log_mu += it->second * std::log(w);
  }
  return std::exp(log_mu);
}

double welfare_impact(const PreferenceParams& params,
                      const std::map<std::string, double>& dv,
                      std::string_view numeraire, const CovariateMap& x) {
  auto base = dv.find(std::string(numeraire));
  if (base == dv.end()) {
    throw ConfigError(fmt::format("missing numeraire impact '{}'", numeraire));
  }
  double inner = base->second + params.C;
  for (const auto& [j, lam] : params.lambda) {
    auto it = dv.find(j);
    if (it == dv.end()) {
      throw ConfigError(fmt::format("missing impact for outcome '{}'", j));
    }
    inner += lam * it->second;
  }
  return welfare_weight(params.omega, x) * inner;
}

double to_increments(double omega) {
  if (!(omega > 0.0)) {
    throw DomainError(fmt::format("omega must be positive, got {}", omega));
  }
  return std::log(omega) / kLogOnePercent;
}

double from_increments(double increments) {
  return std::exp(increments * kLogOnePercent);
}

}  // namespace polval
