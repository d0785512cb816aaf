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

#include "polval/counterfactual.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "polval/errors.hpp"
#include "polval/hull.hpp"
#include "polval/parallel.hpp"
#include "polval/rng.hpp"

namespace polval {
namespace {

std::unordered_map<std::string, const Household*> index_households(const Dataset& data) {
  std::unordered_map<std::string, const Household*> out;
  for (const auto& h : data.households) out.emplace(h.id, &h);
  return out;
}

const Household& find_household(
    const std::unordered_map<std::string, const Household*>& index, const std::string& id) {
  auto it = index.find(id);
  if (it == index.end()) throw DataError(fmt::format("dataset has no household '{}'", id));
  return *it->second;
}

// Row order by ascending id, used for deterministic tie-breaks.
std::vector<std::size_t> id_ranks(const std::vector<std::string>& ids) {
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  std::vector<std::size_t> rank(ids.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  return rank;
}

std::vector<std::size_t> top_k_rows(const std::vector<double>& score,
                                    const std::vector<std::size_t>& rank, std::size_t k) {
  std::vector<std::size_t> rows(score.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    return score[a] != score[b] ? score[a] > score[b] : rank[a] < rank[b];
  };
  if (k < rows.size()) {
    std::nth_element(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end(),
                     better);
    rows.resize(k);
  }
  std::sort(rows.begin(), rows.end(), better);
  return rows;
}

}  // namespace

WelfareImpactVector score_households(const PreferenceParams& params,
                                     const TreatmentEffectMatrix& te, const Dataset& data) {
  params.validate();
  const auto index = index_households(data);
  const auto num = te.col_of(data.numeraire().name);
  std::vector<std::pair<std::size_t, double>> weighted;
  for (const auto& [j, lam] : params.lambda) weighted.emplace_back(te.col_of(j), lam);
  std::vector<std::pair<std::string, double>> log_omega;
  for (const auto& [k, w] : params.omega) log_omega.emplace_back(k, std::log(w));

  WelfareImpactVector out;
  out.ids = te.household_ids();
  out.values.resize(te.rows());
  for (std::size_t r = 0; r < te.rows(); ++r) {
    const Household& h = find_household(index, out.ids[r]);
    double log_mu = 0.0;
    for (const auto& [k, lw] : log_omega) {
      auto it = h.x.find(k);
      if (it == h.x.end()) {
        throw ConfigError(fmt::format("household '{}' lacks welfare covariate '{}'", h.id, k));
      }
      log_mu += it->second * lw;
    }
    double inner = te.at(r, num) + params.C;
    for (const auto& [col, lam] : weighted) inner += lam * te.at(r, col);
    out.values[r] = std::exp(log_mu) * inner;
    if (!std::isfinite(out.values[r])) {
      throw DataError(fmt::format("non-finite welfare impact for household '{}'", h.id));
    }
  }
  return out;
}

std::vector<std::string> allocate_top_k(const WelfareImpactVector& scores, std::size_t k) {
  if (k == 0 || k > scores.size()) {
    throw ConfigError(fmt::format("K must be in [1, {}], got {}", scores.size(), k));
  }
  const auto rows = top_k_rows(scores.values, id_ranks(scores.ids), k);
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(scores.ids[r]);
  return out;
}

std::map<std::string, double> expected_outcomes(const std::vector<std::string>& selection,
                                                const TreatmentEffectMatrix& te,
                                                const Dataset& data) {
  if (te.rows() == 0) throw DataError("empty TE matrix");
  const auto index = index_households(data);
  std::vector<char> chosen(te.rows(), 0);
  for (const auto& id : selection) {
    auto r = te.row_of(id);
    if (!r) throw DataError(fmt::format("selected household '{}' has no treatment effects", id));
    chosen[*r] = 1;
  }
  std::map<std::string, double> out;
  for (const auto& spec : data.outcomes) {
    const auto col = te.col_of(spec.name);
    double sum = 0.0;
    for (std::size_t r = 0; r < te.rows(); ++r) {
      const Household& h = find_household(index, te.household_ids()[r]);
      auto it = h.y_endline.find(spec.name);
      if (it == h.y_endline.end() || !it->second) {
        throw DataError(fmt::format("household '{}' has no endline value for '{}'", h.id,
                                    spec.name));
      }
      const double effect = te.at(r, col);
      const double untreated = utility_level(spec, *it->second) - (h.treated ? effect : 0.0);
      sum += untreated + (chosen[r] ? effect : 0.0);
    }
    out[spec.name] = sum / static_cast<double>(te.rows());
  }
  return out;
}

namespace {

std::map<std::string, double> characterize_rows(const std::vector<std::string>& ids,
                                                const std::vector<double>& values,
                                                const Dataset& data,
                                                const OptimizerConfig& config) {
  const auto index = index_households(data);
  RankProblem p;
  p.covariates = data.welfare_covariates;
  p.outcomes = {"numeraire"};
  p.ids = ids;
  const auto n = static_cast<Eigen::Index>(ids.size());
  const auto k = static_cast<Eigen::Index>(p.covariates.size());
  p.x.resize(n, k);
  p.dv = Eigen::MatrixXd::Zero(n, 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Household& h = find_household(index, ids[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < k; ++c) {
      p.x(r, c) = h.x.at(p.covariates[static_cast<std::size_t>(c)]);
    }
  }
  p.tiers = tiers_from_values(values);
  const EstimateResult res = characterize_decision_rule(p, config);
  std::map<std::string, double> out;
  for (const auto& [name, w] : res.params.omega) out[name] = to_increments(w);
  return out;
}

}  // namespace

std::map<std::string, double> characterize_counterfactual_rule(const WelfareImpactVector& scores,
                                                               const Dataset& data,
                                                               const OptimizerConfig& config) {
  return characterize_rows(scores.ids, scores.values, data, config);
}

std::map<std::string, double> characterize_counterfactual_rule(
    const std::vector<std::string>& selection, const TreatmentEffectMatrix& te,
    const Dataset& data, const OptimizerConfig& config) {
  std::vector<double> values(te.rows(), 0.0);
  for (const auto& id : selection) {
    auto r = te.row_of(id);
    if (!r) throw DataError(fmt::format("selected household '{}' has no treatment effects", id));
    values[*r] = 1.0;
  }
  return characterize_rows(te.household_ids(), values, data, config);
}

CounterfactualResult run_counterfactual(const PreferenceParams& params,
                                        const TreatmentEffectMatrix& te, const Dataset& data,
                                        std::size_t k, const OptimizerConfig& config) {
  CounterfactualResult out;
  out.scores = score_households(params, te, data);
  out.selected = allocate_top_k(out.scores, k);
  out.implied_priorities = characterize_counterfactual_rule(out.scores, data, config);
  out.expected_outcomes = expected_outcomes(out.selected, te, data);
  return out;
}

std::string_view to_string(FrontierWeighting w) {
  switch (w) {
    case FrontierWeighting::kRaw:
      return "raw";
    case FrontierWeighting::kWelfareWeighted:
      return "welfare_weighted";
    case FrontierWeighting::kSurveyWeighted:
      return "survey_weighted";
  }
  return "raw";
}

FrontierWeighting parse_frontier_weighting(std::string_view s) {
  if (s == "raw") return FrontierWeighting::kRaw;
  if (s == "welfare" || s == "welfare_weighted") return FrontierWeighting::kWelfareWeighted;
  if (s == "survey" || s == "survey_weighted") return FrontierWeighting::kSurveyWeighted;
  throw ConfigError(fmt::format("unknown frontier weighting '{}'", s));
}

Eigen::MatrixXd frontier_impacts(const TreatmentEffectMatrix& te, const Dataset& data,
                                 FrontierWeighting weighting,
                                 const std::map<std::string, double>* omega) {
  if (te.cols() != 3 || data.outcomes.size() != 3) {
    throw ConfigError(fmt::format("the outcome frontier needs exactly 3 outcomes, found {}",
                                  data.outcomes.size()));
  }
  const auto n = static_cast<Eigen::Index>(te.rows());
  Eigen::MatrixXd out(n, 3);
  for (Eigen::Index j = 0; j < 3; ++j) {
    out.col(j) = te.values().col(static_cast<Eigen::Index>(
        te.col_of(data.outcomes[static_cast<std::size_t>(j)].name)));
  }
  if (weighting == FrontierWeighting::kRaw) return out;
  if (!omega) {
    throw StateError(fmt::format("{} frontier needs welfare weights", to_string(weighting)));
  }
  const auto index = index_households(data);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Household& h = find_household(index, te.household_ids()[static_cast<std::size_t>(r)]);
    out.row(r) *= welfare_weight(*omega, h.x);
  }
  return out;
}

Eigen::Vector3d average_impacts(const std::vector<std::size_t>& rows,
                                const Eigen::MatrixXd& impacts) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (auto r : rows) sum += impacts.row(static_cast<Eigen::Index>(r)).transpose();
  return sum / static_cast<double>(impacts.rows());
}

FrontierResult frontier(const TreatmentEffectMatrix& te, const Dataset& data, std::size_t k,
                        std::size_t n_directions, FrontierWeighting weighting,
                        const std::map<std::string, double>* omega, std::uint64_t seed) {
  if (n_directions < 6) throw ConfigError("the frontier needs at least 6 directions");
  if (k == 0 || k > te.rows()) {
    throw ConfigError(fmt::format("K must be in [1, {}], got {}", te.rows(), k));
  }
  const Eigen::MatrixXd impacts = frontier_impacts(te, data, weighting, omega);
  Eigen::Vector3d sign;
  for (int j = 0; j < 3; ++j) sign(j) = data.outcomes[static_cast<std::size_t>(j)].sign();
  const Eigen::MatrixXd adjusted = impacts * sign.asDiagonal();

  FrontierResult out;
  out.outcomes = data.outcome_names();
  out.weighting = weighting;
  out.k = k;
  out.points.resize(n_directions + 6);
  Rng rng(seed, 0);
  for (std::size_t d = 0; d < n_directions; ++d) {
    Eigen::Vector3d w;
    do {
      w = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    } while (w.norm() < 1e-12);
    out.points[d].direction = w.normalized();
  }
  for (int a = 0; a < 6; ++a) {
    auto& p = out.points[n_directions + static_cast<std::size_t>(a)];
    p.direction = Eigen::Vector3d::Zero();
    p.direction(a / 2) = a % 2 == 0 ? 1.0 : -1.0;
    p.axis = true;
  }

  const auto rank = id_ranks(te.household_ids());
  parallel_for(out.points.size(), [&](std::size_t d) {
    const Eigen::VectorXd s = adjusted * out.points[d].direction;
    const std::vector<double> score(s.data(), s.data() + s.size());
    out.points[d].impacts = average_impacts(top_k_rows(score, rank, k), impacts);
  });

  std::vector<Eigen::Vector3d> cloud;
  cloud.reserve(out.points.size());
  for (const auto& p : out.points) cloud.push_back(p.impacts);
  const ConvexHull3 hull(cloud);
  out.hull_volume = hull.volume();
  if (hull.dimension() == 0) {
    out.warnings.push_back("degenerate frontier: every allocation yields the same impacts");
  }
  std::vector<Eigen::Vector3d> vertex_points;
  for (auto v : hull.vertices()) vertex_points.push_back(cloud[v]);
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    for (const auto& v : vertex_points) {
      if (out.points[i].impacts == v) {
        out.points[i].on_hull = true;
        out.hull_vertices.push_back(i);
        break;
      }
    }
  }
  return out;
}

}  // namespace polval
