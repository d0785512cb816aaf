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

#include "polval/hte.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "polval/csv.hpp"
#include "polval/errors.hpp"
#include "polval/parallel.hpp"
#include "polval/rng.hpp"

namespace polval {
namespace {

bool has_covariates(const Household& h, const std::vector<std::string>& covariates) {
  return std::all_of(covariates.begin(), covariates.end(),
                     [&](const std::string& c) { return h.x_tilde.count(c) > 0; });
}

// Rows with an observed endline outcome and complete heterogeneity
// covariates, sorted by household id.
std::vector<std::size_t> fit_rows(const Dataset& data, const OutcomeSpec& outcome,
                                  const std::vector<std::string>& covariates) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.households.size(); ++i) {
    const auto& h = data.households[i];
    auto it = h.y_endline.find(outcome.name);
    if (it == h.y_endline.end() || !it->second) continue;
    if (!has_covariates(h, covariates)) continue;
    rows.push_back(i);
  }
  std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    const auto& ia = data.households[a].id;
    const auto& ib = data.households[b].id;
    return ia != ib ? ia < ib : a < b;
  });
  return rows;
}

double covariate(const CovariateMap& x, const std::string& name) {
  auto it = x.find(name);
  if (it == x.end()) {
    throw ConfigError(fmt::format("missing heterogeneity covariate '{}'", name));
  }
  return it->second;
}

}  // namespace

OlsTeModel fit_ols_te(const Dataset& data, const OutcomeSpec& outcome,
                      const std::vector<std::string>& covariates) {
  const auto rows = fit_rows(data, outcome, covariates);
  const auto k = static_cast<Eigen::Index>(covariates.size());
  const Eigen::Index p = 2 * k + 2;
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n < 2 * p) {
    throw DataError(fmt::format(
        "outcome '{}': interacted regression needs at least {} households, found {}",
        outcome.name, 2 * p, n));
  }

  std::vector<std::string> names{"intercept"};
  for (const auto& c : covariates) names.push_back(c);
  names.emplace_back("treated");
  for (const auto& c : covariates) names.push_back("treated*" + c);

  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& h = data.households[rows[static_cast<std::size_t>(r)]];
    const double t = h.treated ? 1.0 : 0.0;
    X(r, 0) = 1.0;
    X(r, k + 1) = t;
    for (Eigen::Index c = 0; c < k; ++c) {
      const double v = h.x_tilde.at(covariates[static_cast<std::size_t>(c)]);
      X(r, 1 + c) = v;
      X(r, k + 2 + c) = t * v;
    }
    y(r) = utility_level(outcome, *h.y_endline.at(outcome.name));
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    std::vector<std::string> collinear;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = qr.rank(); i < p; ++i) {
      collinear.push_back(names[static_cast<std::size_t>(perm(i))]);
    }
    throw SingularDesignError(fmt::format(
        "outcome '{}': singular design, collinear columns: {}", outcome.name,
        fmt::join(collinear, ", ")));
  }
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - X * beta;
  const double rss = resid.squaredNorm();
  const double tss = (y.array() - y.mean()).matrix().squaredNorm();

  OlsTeModel m;
  m.outcome = outcome.name;
  m.covariates = covariates;
  m.n = static_cast<std::size_t>(n);
  m.beta0 = beta(0);
  m.beta_T = beta(k + 1);
  m.residual_variance = rss / static_cast<double>(n - p);
  m.r2 = tss > 0.0 ? 1.0 - rss / tss : 1.0;

  const Eigen::MatrixXd xtx_inv =
      (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  m.se_T = std::sqrt(m.residual_variance * xtx_inv(k + 1, k + 1));
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto& name = covariates[static_cast<std::size_t>(c)];
    m.beta_x[name] = beta(1 + c);
    m.beta_Tx[name] = beta(k + 2 + c);
    m.se_Tx[name] = std::sqrt(m.residual_variance * xtx_inv(k + 2 + c, k + 2 + c));
  }
  return m;
}

double predict_te_ols(const OlsTeModel& model, const CovariateMap& x_tilde) {
  double te = model.beta_T;
  for (const auto& c : model.covariates) {
    te += model.beta_Tx.at(c) * covariate(x_tilde, c);
  }
  return te;
}

namespace {

struct ArmStats {
  int n_treated = 0;
  int n_control = 0;
  double sum_treated = 0.0;
  double sum_control = 0.0;

  void add(bool treated, double y) {
    if (treated) {
      ++n_treated;
      sum_treated += y;
    } else {
      ++n_control;
      sum_control += y;
    }
  }
  double effect() const {
    return sum_treated / n_treated - sum_control / n_control;
  }
};

class TreeGrower {
 public:
  TreeGrower(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
             const std::vector<char>& treated, const ForestConfig& config)
      : x_(x), y_(y), treated_(treated), config_(config) {}

  Tree grow(std::vector<std::size_t> split, std::vector<std::size_t> est) {
    Tree tree;
    tree.nodes.emplace_back();
    build(&tree, 0, std::move(split), std::move(est), 0);
    return tree;
  }

 private:
  struct Candidate {
    int covariate = -1;
    double threshold = 0.0;
    double score = 0.0;
  };

  void build(Tree* tree, int node, std::vector<std::size_t> split,
             std::vector<std::size_t> est, int depth) {
    {
      ArmStats s;
      for (auto i : est) s.add(treated_[i] != 0, y_(static_cast<Eigen::Index>(i)));
      auto& nd = tree->nodes[static_cast<std::size_t>(node)];
      nd.n_split = split.size();
      nd.n_treated = s.n_treated;
      nd.n_control = s.n_control;
      nd.mean_treated = s.n_treated ? s.sum_treated / s.n_treated : 0.0;
      nd.mean_control = s.n_control ? s.sum_control / s.n_control : 0.0;
    }
    if (depth >= config_.max_depth) return;
    const Candidate best = best_split(split, est);
    if (best.covariate < 0) return;

    std::vector<std::size_t> split_l, split_r, est_l, est_r;
    const auto c = static_cast<Eigen::Index>(best.covariate);
    for (auto i : split) {
      (x_(static_cast<Eigen::Index>(i), c) <= best.threshold ? split_l : split_r).push_back(i);
    }
    for (auto i : est) {
      (x_(static_cast<Eigen::Index>(i), c) <= best.threshold ? est_l : est_r).push_back(i);
    }
    const int left = static_cast<int>(tree->nodes.size());
    tree->nodes.emplace_back();
    tree->nodes.emplace_back();
    auto& nd = tree->nodes[static_cast<std::size_t>(node)];
    nd.covariate = best.covariate;
    nd.threshold = best.threshold;
    nd.left = left;
    nd.right = left + 1;
    split.clear();
    est.clear();
    build(tree, left, std::move(split_l), std::move(est_l), depth + 1);
    build(tree, left + 1, std::move(split_r), std::move(est_r), depth + 1);
  }

  Candidate best_split(const std::vector<std::size_t>& split,
                       const std::vector<std::size_t>& est) const {
    Candidate best;
    const int min_leaf = config_.min_leaf;
    for (Eigen::Index c = 0; c < x_.cols(); ++c) {
      auto by_value = [&](std::size_t a, std::size_t b) {
        return x_(static_cast<Eigen::Index>(a), c) < x_(static_cast<Eigen::Index>(b), c);
      };
      std::vector<std::size_t> s = split;
      std::sort(s.begin(), s.end(), by_value);
      std::vector<double> est_treated_vals, est_control_vals;
      for (auto i : est) {
        (treated_[i] ? est_treated_vals : est_control_vals)
            .push_back(x_(static_cast<Eigen::Index>(i), c));
      }
      std::sort(est_treated_vals.begin(), est_treated_vals.end());
      std::sort(est_control_vals.begin(), est_control_vals.end());

      // Prefix sums over the sorted split sample.
      const std::size_t m = s.size();
      std::vector<ArmStats> prefix(m + 1);
      for (std::size_t r = 0; r < m; ++r) {
        prefix[r + 1] = prefix[r];
        prefix[r + 1].add(treated_[s[r]] != 0, y_(static_cast<Eigen::Index>(s[r])));
      }
      const ArmStats& total = prefix[m];

      double last = -std::numeric_limits<double>::infinity();
      for (int q = 1; q <= config_.max_cuts; ++q) {
        const std::size_t pos = static_cast<std::size_t>(
            static_cast<double>(q) * static_cast<double>(m) / (config_.max_cuts + 1));
        if (pos >= m) continue;
        const double thr = x_(static_cast<Eigen::Index>(s[pos]), c);
        if (thr <= last) continue;
        last = thr;
        // Number of split rows with value <= thr.
        const auto n_left = static_cast<std::size_t>(
            std::upper_bound(s.begin(), s.end(), thr,
                             [&](double v, std::size_t i) {
                               return v < x_(static_cast<Eigen::Index>(i), c);
                             }) -
            s.begin());
        if (n_left == 0 || n_left == m) continue;
        const ArmStats& l = prefix[n_left];
        ArmStats r;
        r.n_treated = total.n_treated - l.n_treated;
        r.n_control = total.n_control - l.n_control;
        r.sum_treated = total.sum_treated - l.sum_treated;
        r.sum_control = total.sum_control - l.sum_control;
        if (l.n_treated < min_leaf || l.n_control < min_leaf ||
            r.n_treated < min_leaf || r.n_control < min_leaf) {
          continue;
        }
        const auto et_l = std::upper_bound(est_treated_vals.begin(),
                                           est_treated_vals.end(), thr) -
                          est_treated_vals.begin();
        const auto ec_l = std::upper_bound(est_control_vals.begin(),
                                           est_control_vals.end(), thr) -
                          est_control_vals.begin();
        const auto et_r = static_cast<std::ptrdiff_t>(est_treated_vals.size()) - et_l;
        const auto ec_r = static_cast<std::ptrdiff_t>(est_control_vals.size()) - ec_l;
        if (et_l < 1 || ec_l < 1 || et_r < 1 || ec_r < 1) continue;

        const double nl = l.n_treated + l.n_control;
        const double nr = r.n_treated + r.n_control;
        const double diff = l.effect() - r.effect();
        const double score = nl * nr * diff * diff;
        if (score > best.score) {
          best.covariate = static_cast<int>(c);
          best.threshold = thr;
          best.score = score;
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  const std::vector<char>& treated_;
  const ForestConfig& config_;
};

}  // namespace

ForestTeModel fit_causal_forest(const Dataset& data, const OutcomeSpec& outcome,
                                const std::vector<std::string>& covariates,
                                const ForestConfig& config) {
  if (config.n_trees <= 0) throw ConfigError("forest needs n_trees > 0");
  if (config.min_leaf <= 0) throw ConfigError("forest needs min_leaf > 0");
  if (config.max_depth < 0) throw ConfigError("forest needs max_depth >= 0");
  if (config.max_cuts <= 0) throw ConfigError("forest needs max_cuts > 0");
  if (!(config.subsample_fraction > 0.0 && config.subsample_fraction <= 1.0)) {
    throw ConfigError("forest subsample_fraction must be in (0, 1]");
  }
  const auto rows = fit_rows(data, outcome, covariates);
  const std::size_t n = rows.size();
  if (n < 4 * static_cast<std::size_t>(config.min_leaf)) {
    throw EstimationError(fmt::format(
        "outcome '{}': forest needs at least {} households, found {}", outcome.name,
        4 * config.min_leaf, n));
  }

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(covariates.size()));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  std::vector<char> treated(n);
  std::vector<std::string> ids(n);
  std::size_t n_treated = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& h = data.households[rows[r]];
    ids[r] = h.id;
    treated[r] = h.treated ? 1 : 0;
    n_treated += h.treated ? 1 : 0;
    y(static_cast<Eigen::Index>(r)) = utility_level(outcome, *h.y_endline.at(outcome.name));
    for (std::size_t c = 0; c < covariates.size(); ++c) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = h.x_tilde.at(covariates[c]);
    }
  }
  if (n_treated < 2 || n - n_treated < 2) {
    throw EstimationError(fmt::format(
        "outcome '{}': forest needs treated and control households ({} treated, {} control)",
        outcome.name, n_treated, n - n_treated));
  }

  const auto sub = std::max<std::size_t>(
      4, static_cast<std::size_t>(std::llround(config.subsample_fraction * static_cast<double>(n))));
  const std::size_t sub_n = std::min(sub, n);

  ForestTeModel model;
  model.outcome = outcome.name;
  model.covariates = covariates;
  model.config = config;
  model.trees.resize(static_cast<std::size_t>(config.n_trees));
  TreeGrower grower(x, y, treated, config);

  parallel_for(model.trees.size(), [&](std::size_t t) {
    // Partial Fisher-Yates over the id-sorted rows; redraw until both
    // halves see each arm.
    for (int attempt = 0;; ++attempt) {
      Rng rng(config.rng_seed, t * 1024 + static_cast<std::uint64_t>(attempt));
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      for (std::size_t i = 0; i < sub_n; ++i) {
        std::swap(perm[i], perm[i + rng.below(n - i)]);
      }
      std::vector<std::size_t> split(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(sub_n / 2));
      std::vector<std::size_t> est(perm.begin() + static_cast<std::ptrdiff_t>(sub_n / 2),
                                   perm.begin() + static_cast<std::ptrdiff_t>(sub_n));
      auto arms_ok = [&](const std::vector<std::size_t>& s) {
        std::size_t tr = 0;
        for (auto i : s) tr += treated[i] ? 1 : 0;
        return tr >= 1 && tr < s.size();
      };
      if (!(arms_ok(split) && arms_ok(est))) {
        if (attempt >= 64) {
          throw EstimationError(fmt::format(
              "outcome '{}': subsample lacks treated or control households", outcome.name));
        }
        continue;
      }
      Tree tree = grower.grow(split, est);
      for (auto i : split) tree.split_ids.push_back(ids[i]);
      for (auto i : est) tree.estimation_ids.push_back(ids[i]);
      model.trees[t] = std::move(tree);
      break;
    }
  });
  return model;
}

double predict_te_forest(const ForestTeModel& model, const CovariateMap& x_tilde) {
  if (model.trees.empty()) throw ConfigError("empty forest");
  std::vector<double> values;
  values.reserve(model.covariates.size());
  for (const auto& c : model.covariates) values.push_back(covariate(x_tilde, c));
  double sum = 0.0;
  for (const auto& tree : model.trees) {
    int node = 0;
    while (!tree.nodes[static_cast<std::size_t>(node)].is_leaf()) {
      const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
      node = values[static_cast<std::size_t>(nd.covariate)] <= nd.threshold ? nd.left : nd.right;
    }
    sum += tree.nodes[static_cast<std::size_t>(node)].effect();
  }
  return sum / static_cast<double>(model.trees.size());
}

FeatureImportance feature_importance(const ForestTeModel& model) {
  std::vector<double> weight(model.covariates.size(), 0.0);
  double total = 0.0;
  for (const auto& tree : model.trees) {
    for (const auto& nd : tree.nodes) {
      if (nd.is_leaf()) continue;
      weight[static_cast<std::size_t>(nd.covariate)] += static_cast<double>(nd.n_split);
      total += static_cast<double>(nd.n_split);
    }
  }
  FeatureImportance out;
  for (std::size_t c = 0; c < model.covariates.size(); ++c) {
    out[model.covariates[c]] =
        total > 0.0 ? weight[c] / total : 1.0 / static_cast<double>(model.covariates.size());
  }
  return out;
}

std::string_view to_string(TeEstimator e) {
  switch (e) {
    case TeEstimator::kOls:
      return "ols";
    case TeEstimator::kForest:
      return "forest";
    case TeEstimator::kExternal:
      return "external";
  }
  return "ols";
}

TeEstimator parse_te_estimator(std::string_view s) {
  if (s == "ols") return TeEstimator::kOls;
  if (s == "forest") return TeEstimator::kForest;
  if (s == "external") return TeEstimator::kExternal;
  throw ConfigError(fmt::format("unknown TE estimator '{}'", s));
}

TeBuildResult build_te_matrix(const Dataset& data,
                              const std::map<std::string, TeEstimator>& estimators,
                              const ForestConfig& forest,
                              const TreatmentEffectMatrix* external) {
  data.validate();
  TeBuildResult out;
  std::vector<std::string> ids;
  std::vector<const Household*> members;
  for (const auto& h : data.households) {
    if (!has_covariates(h, data.het_covariates)) {
      out.warnings.push_back(fmt::format(
          "household '{}' lacks heterogeneity covariates; excluded from the TE matrix", h.id));
      continue;
    }
    ids.push_back(h.id);
    members.push_back(&h);
  }

  std::vector<std::string> outcomes = data.outcome_names();
  std::vector<TeSource> sources;
  std::vector<TeEstimator> choice;
  for (const auto& o : outcomes) {
    auto it = estimators.find(o);
    const TeEstimator e = it == estimators.end() ? TeEstimator::kOls : it->second;
    choice.push_back(e);
    sources.push_back(e == TeEstimator::kOls      ? TeSource::kOls
                      : e == TeEstimator::kForest ? TeSource::kForest
                                                  : TeSource::kExternal);
  }
  TreatmentEffectMatrix te(ids, outcomes, sources);

  for (std::size_t j = 0; j < outcomes.size(); ++j) {
    const auto& spec = data.outcome(outcomes[j]);
    switch (choice[j]) {
      case TeEstimator::kOls: {
        auto model = fit_ols_te(data, spec, data.het_covariates);
        for (std::size_t r = 0; r < members.size(); ++r) {
          te.at(r, j) = predict_te_ols(model, members[r]->x_tilde);
        }
        out.ols_models.emplace(spec.name, std::move(model));
        break;
      }
      case TeEstimator::kForest: {
        auto model = fit_causal_forest(data, spec, data.het_covariates, forest);
        for (std::size_t r = 0; r < members.size(); ++r) {
          te.at(r, j) = predict_te_forest(model, members[r]->x_tilde);
        }
        out.forest_models.emplace(spec.name, std::move(model));
        break;
      }
      case TeEstimator::kExternal: {
        if (!external) {
          throw ConfigError(fmt::format(
              "outcome '{}' uses external TEs but none were supplied", spec.name));
        }
        const auto col = external->col_of(spec.name);
        for (std::size_t r = 0; r < members.size(); ++r) {
          auto row = external->row_of(ids[r]);
          if (!row) {
            throw DataError(fmt::format("external TE file has no household '{}'", ids[r]));
          }
          te.at(r, j) = external->at(*row, col);
        }
        break;
      }
    }
  }
  te.check_finite();
  out.te = std::move(te);
  return out;
}

TreatmentEffectMatrix read_te_csv(std::istream& in) {
  const auto table = csv::read(in);
  if (table.header.empty() || table.header[0] != "household_id") {
    throw DataError("TE CSV must start with a 'household_id' column");
  }
  std::vector<std::string> outcomes(table.header.begin() + 1, table.header.end());
  if (outcomes.empty()) throw DataError("TE CSV has no outcome columns");
  std::vector<std::string> ids;
  for (const auto& row : table.rows) ids.push_back(row[0]);
  TreatmentEffectMatrix te(ids, outcomes,
                           std::vector<TeSource>(outcomes.size(), TeSource::kExternal));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t j = 0; j < outcomes.size(); ++j) {
      auto v = csv::parse_double(table.rows[r][j + 1], table.line_numbers[r], outcomes[j]);
      if (!v) {
        throw DataError(fmt::format("line {}, column '{}': missing treatment effect",
                                    table.line_numbers[r], outcomes[j]));
      }
      te.at(r, j) = *v;
    }
  }
  return te;
}

TreatmentEffectMatrix load_te_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path));
  return read_te_csv(in);
}

void write_te_csv(std::ostream& out, const TreatmentEffectMatrix& te) {
  std::vector<std::string> header{"household_id"};
  for (const auto& o : te.outcomes()) header.push_back(o);
  csv::write_row(out, header);
  for (std::size_t r = 0; r < te.rows(); ++r) {
    std::vector<std::string> row{te.household_ids()[r]};
    for (std::size_t j = 0; j < te.cols(); ++j) row.push_back(csv::format_double(te.at(r, j)));
    csv::write_row(out, row);
  }
}

void save_te_csv(const std::string& path, const TreatmentEffectMatrix& te) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path));
  write_te_csv(out, te);
}

}  // namespace polval
