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

#include "polval/rank_likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "polval/errors.hpp"

namespace polval {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// u_i and its derivative row for one household. Returns false when the
// utility is clipped (derivatives are then zero).
bool utility_and_jacobian(const RankProblem& p, const Eigen::VectorXd& z,
                          Eigen::Index i, double* u,
                          Eigen::Ref<Eigen::RowVectorXd> du) {
  const auto k = static_cast<Eigen::Index>(p.n_covariates());
  const auto j = static_cast<Eigen::Index>(p.n_weighted());
  const Eigen::Index ic = k + j;
  const double log_sigma = z(ic + 1);

  double inner = p.dv(i, 0) + z(ic);
  for (Eigen::Index m = 0; m < j; ++m) inner += z(k + m) * p.dv(i, m + 1);
  const double log_scale = p.x.row(i).dot(z.head(k)) - log_sigma;

  const double log_limit = std::log(kUtilityClip);
  if (inner == 0.0) {
    *u = 0.0;
    if (log_scale > log_limit) {
      du.setZero();
      return false;
    }
  } else if (log_scale + std::log(std::abs(inner)) > log_limit) {
    *u = std::copysign(kUtilityClip, inner);
    du.setZero();
    return false;
  } else {
    *u = std::exp(log_scale) * inner;
  }
  const double scale = std::exp(log_scale);  // mu / sigma
  du.head(k) = *u * p.x.row(i);
  for (Eigen::Index m = 0; m < j; ++m) du(k + m) = scale * p.dv(i, m + 1);
  du(ic) = scale;
  du(ic + 1) = -*u;
  return true;
}

}  // namespace

RankingTiers tiers_from_ranking(const std::map<std::string, double>& raw) {
  std::vector<std::pair<double, std::string>> items;
  items.reserve(raw.size());
  for (const auto& [id, v] : raw) {
    if (!std::isfinite(v)) {
      throw DataError(fmt::format("non-finite ranking value for '{}'", id));
    }
    items.emplace_back(v, id);
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  RankingTiers out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i == 0 || items[i].first != items[i - 1].first) out.tiers.emplace_back();
    out.tiers.back().push_back(items[i].second);
  }
  if (out.tiers.size() < 2) {
    throw DataError("degenerate ranking: fewer than two distinct values");
  }
  return out;
}

IndexTiers tiers_from_values(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DataError(fmt::format("non-finite ranking value at row {}", i));
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] > values[b];
  });
  IndexTiers out;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (r == 0 || values[order[r]] != values[order[r - 1]]) out.emplace_back();
    out.back().push_back(order[r]);
  }
  if (out.size() < 2) {
    throw DataError("degenerate ranking: fewer than two distinct values");
  }
  return out;
}

std::vector<std::string> RankProblem::parameter_names() const {
  std::vector<std::string> names;
  names.reserve(n_params());
  for (const auto& k : covariates) names.push_back("theta:" + k);
  for (std::size_t m = 1; m < outcomes.size(); ++m) {
    names.push_back("lambda:" + outcomes[m]);
  }
  names.emplace_back("C");
  names.emplace_back("log_sigma");
  return names;
}

void RankProblem::validate() const {
  const auto n_rows = n();
  if (static_cast<std::size_t>(x.rows()) != n_rows ||
      static_cast<std::size_t>(dv.rows()) != n_rows) {
    throw DataError("rank problem matrices do not match the household count");
  }
  if (static_cast<std::size_t>(x.cols()) != n_covariates() ||
      static_cast<std::size_t>(dv.cols()) != outcomes.size() || outcomes.empty()) {
    throw DataError("rank problem column layout is inconsistent");
  }
  if (tiers.size() < 2) throw DataError("ranking needs at least two tiers");
  std::vector<char> seen(n_rows, 0);
  std::size_t count = 0;
  for (const auto& tier : tiers) {
    if (tier.empty()) throw DataError("empty ranking tier");
    for (auto i : tier) {
      if (i >= n_rows || seen[i]) {
        throw DataError("ranking tiers must partition the sample");
      }
      seen[i] = 1;
      ++count;
    }
  }
  if (count != n_rows) throw DataError("ranking tiers must cover the sample");
}

RankProblem make_rank_problem(const Dataset& data,
                              const TreatmentEffectMatrix& te) {
  data.validate();
  RankProblem p;
  p.covariates = data.welfare_covariates;
  p.outcomes.push_back(data.numeraire().name);
  for (auto& j : data.weighted_outcomes()) p.outcomes.push_back(j);

  std::vector<std::size_t> te_cols;
  for (const auto& o : p.outcomes) te_cols.push_back(te.col_of(o));

  std::vector<std::size_t> rows;
  std::vector<std::size_t> te_rows;
  for (std::size_t i = 0; i < data.households.size(); ++i) {
    const auto& h = data.households[i];
    if (!h.tier) {
      p.excluded.push_back(h.id + ": no tier");
      continue;
    }
    auto r = te.row_of(h.id);
    if (!r) {
      p.excluded.push_back(h.id + ": no treatment effects");
      continue;
    }
    rows.push_back(i);
    te_rows.push_back(*r);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto k = static_cast<Eigen::Index>(p.covariates.size());
  p.x.resize(n, k);
  p.dv.resize(n, static_cast<Eigen::Index>(p.outcomes.size()));
  std::vector<double> tier_values(rows.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& h = data.households[rows[static_cast<std::size_t>(r)]];
    p.ids.push_back(h.id);
    for (Eigen::Index c = 0; c < k; ++c) {
      auto it = h.x.find(p.covariates[static_cast<std::size_t>(c)]);
      if (it == h.x.end()) {
        throw ConfigError(fmt::format("household '{}' lacks welfare covariate '{}'",
                                      h.id, p.covariates[static_cast<std::size_t>(c)]));
      }
      p.x(r, c) = it->second;
    }
    for (std::size_t m = 0; m < te_cols.size(); ++m) {
      const double v = te.at(te_rows[static_cast<std::size_t>(r)], te_cols[m]);
      if (!std::isfinite(v)) {
        throw DataError(fmt::format("non-finite treatment effect for household '{}'",
                                    h.id));
      }
      p.dv(r, static_cast<Eigen::Index>(m)) = v;
    }
    tier_values[static_cast<std::size_t>(r)] = static_cast<double>(*h.tier);
  }
  p.tiers = tiers_from_values(tier_values);
  p.validate();
  return p;
}

RankProblem with_tiers(RankProblem problem, IndexTiers tiers) {
  problem.tiers = std::move(tiers);
  problem.validate();
  return problem;
}

Eigen::VectorXd pack_params(const RankProblem& p, const PreferenceParams& params) {
  params.validate();
  Eigen::VectorXd z(static_cast<Eigen::Index>(p.n_params()));
  Eigen::Index at = 0;
  for (const auto& k : p.covariates) {
    auto it = params.omega.find(k);
    if (it == params.omega.end()) {
      throw ConfigError(fmt::format("omega missing covariate '{}'", k));
    }
    z(at++) = std::log(it->second);
  }
  for (std::size_t m = 1; m < p.outcomes.size(); ++m) {
    auto it = params.lambda.find(p.outcomes[m]);
    z(at++) = it == params.lambda.end() ? 0.0 : it->second;
  }
  z(at++) = params.C;
  z(at) = std::log(params.sigma);
  return z;
}

PreferenceParams unpack_params(const RankProblem& p, const Eigen::VectorXd& z) {
  PreferenceParams out;
  Eigen::Index at = 0;
  for (const auto& k : p.covariates) out.omega[k] = std::exp(z(at++));
  for (std::size_t m = 1; m < p.outcomes.size(); ++m) {
    out.lambda[p.outcomes[m]] = z(at++);
  }
  out.C = z(at++);
  out.sigma = std::exp(z(at));
  return out;
}

std::map<std::string, double> LogLikResult::gradient_map() const {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    out[names[i]] = gradient(static_cast<Eigen::Index>(i));
  }
  return out;
}

Eigen::VectorXd scaled_utilities(const RankProblem& p, const Eigen::VectorXd& z,
                                 std::size_t* n_clipped) {
  const auto n = static_cast<Eigen::Index>(p.n());
  Eigen::VectorXd u(n);
  Eigen::RowVectorXd scratch(static_cast<Eigen::Index>(p.n_params()));
  std::size_t clipped = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!utility_and_jacobian(p, z, i, &u(i), scratch)) ++clipped;
  }
  if (n_clipped) *n_clipped = clipped;
  return u;
}

double exploded_loglik_naive(const RankProblem& p, const PreferenceParams& params) {
  return exploded_loglik_naive(p, pack_params(p, params));
}

double exploded_loglik_naive(const RankProblem& p, const Eigen::VectorXd& z) {
  const Eigen::VectorXd u = scaled_utilities(p, z);
  double ll = 0.0;
  for (std::size_t t = 0; t < p.tiers.size(); ++t) {
    for (auto i : p.tiers[t]) {
      std::vector<double> terms{u(static_cast<Eigen::Index>(i))};
      for (std::size_t lower = t + 1; lower < p.tiers.size(); ++lower) {
        for (auto m : p.tiers[lower]) terms.push_back(u(static_cast<Eigen::Index>(m)));
      }
      const double mx = *std::max_element(terms.begin(), terms.end());
      double s = 0.0;
      for (double v : terms) s += std::exp(v - mx);
      ll += u(static_cast<Eigen::Index>(i)) - (mx + std::log(s));
    }
  }
  return ll;
}

LogLikResult exploded_loglik_fast(const RankProblem& p,
                                  const PreferenceParams& params) {
  return exploded_loglik_fast(p, pack_params(p, params));
}

LogLikResult exploded_loglik_fast(const RankProblem& p, const Eigen::VectorXd& z) {
  const auto n = static_cast<Eigen::Index>(p.n());
  const auto np = static_cast<Eigen::Index>(p.n_params());
  if (z.size() != np) throw ConfigError("parameter vector has the wrong length");

  Eigen::VectorXd u(n);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> du(n, np);
  LogLikResult out;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!utility_and_jacobian(p, z, i, &u(i), du.row(i))) ++out.n_clipped;
  }

  // Running state over all strictly lower tiers, stored relative to `max`:
  //   sum_e = sum exp(u_m - max),  sum_g = sum exp(u_m - max) du_m.
  double max = kNegInf;
  double sum_e = 0.0;
  Eigen::RowVectorXd sum_g = Eigen::RowVectorXd::Zero(np);
  Eigen::RowVectorXd grad = Eigen::RowVectorXd::Zero(np);
  double ll = 0.0;

  for (auto t = p.tiers.size(); t-- > 0;) {
    const auto& tier = p.tiers[t];
    for (auto idx : tier) {
      const auto i = static_cast<Eigen::Index>(idx);
      const double m = std::max(max, u(i));
      const double own = std::exp(u(i) - m);
      const double rest = sum_e == 0.0 ? 0.0 : sum_e * std::exp(max - m);
      const double denom = own + rest;
      ll += u(i) - (m + std::log(denom));
      grad += du.row(i) * (1.0 - own / denom);
      if (rest != 0.0) grad -= sum_g * (std::exp(max - m) / denom);
    }
    for (auto idx : tier) {
      const auto i = static_cast<Eigen::Index>(idx);
      if (u(i) > max) {
        const double rescale = sum_e == 0.0 ? 0.0 : std::exp(max - u(i));
        sum_e *= rescale;
        sum_g *= rescale;
        max = u(i);
      }
      const double w = std::exp(u(i) - max);
      sum_e += w;
      sum_g += w * du.row(i);
    }
  }
  out.loglik = ll;
  out.gradient = grad.transpose();
  out.names = p.parameter_names();
  return out;
}

namespace {

// Tiered exploded-logit likelihood of given utilities, in O(N).
double loglik_of_utilities(const RankProblem& p, const Eigen::VectorXd& u) {
  double max = kNegInf;
  double sum_e = 0.0;
  double ll = 0.0;
  for (auto t = p.tiers.size(); t-- > 0;) {
    for (auto idx : p.tiers[t]) {
      const double ui = u(static_cast<Eigen::Index>(idx));
      const double m = std::max(max, ui);
      const double rest = sum_e == 0.0 ? 0.0 : sum_e * std::exp(max - m);
      ll += ui - (m + std::log(std::exp(ui - m) + rest));
    }
    for (auto idx : p.tiers[t]) {
      const double ui = u(static_cast<Eigen::Index>(idx));
      if (ui > max) {
        sum_e = sum_e == 0.0 ? 0.0 : sum_e * std::exp(max - ui);
        max = ui;
      }
      sum_e += std::exp(ui - max);
    }
  }
  return ll;
}

}  // namespace

double clipping_effect(const RankProblem& p, const Eigen::VectorXd& z) {
  std::size_t clipped = 0;
  const Eigen::VectorXd u = scaled_utilities(p, z, &clipped);
  if (clipped == 0) return 0.0;
  const auto k = static_cast<Eigen::Index>(p.n_covariates());
  const auto j = static_cast<Eigen::Index>(p.n_weighted());
  Eigen::VectorXd raw(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    double inner = p.dv(i, 0) + z(k + j);
    for (Eigen::Index m = 0; m < j; ++m) inner += z(k + m) * p.dv(i, m + 1);
    raw(i) = std::exp(p.x.row(i).dot(z.head(k)) - z(k + j + 1)) * inner;
    if (!std::isfinite(raw(i))) return std::numeric_limits<double>::infinity();
  }
  const double diff = std::abs(loglik_of_utilities(p, u) - loglik_of_utilities(p, raw));
  return std::isfinite(diff) ? diff : std::numeric_limits<double>::infinity();
}

double ranking_probability(const RankProblem& p, const PreferenceParams& params) {
  if (p.n() > kMaxProbabilityRanking) {
    throw ConfigError(fmt::format(
        "ranking probability is only reported for at most {} households (got {})",
        kMaxProbabilityRanking, p.n()));
  }
  return std::exp(exploded_loglik_fast(p, params).loglik);
}

}  // namespace polval
