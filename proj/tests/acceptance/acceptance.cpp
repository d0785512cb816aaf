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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Optional arguments select criteria by
// name substring.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracles.hpp"
#include "polval/counterfactual.hpp"
#include "polval/errors.hpp"
#include "polval/hte.hpp"
#include "polval/hull.hpp"
#include "polval/inference.hpp"
#include "polval/rank_likelihood.hpp"
#include "polval/rng.hpp"
#include "polval/simulate.hpp"
#include "polval/survey.hpp"
#include "test_util.hpp"

using namespace polval;
using polval::testing::normal_equations;
using polval::testing::pearson;
using polval::testing::random_params;
using polval::testing::random_problem;
using polval::testing::rel_err;
using polval::testing::spearman;
using polval::testing::strict_tiers;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::vector<std::vector<std::size_t>> permutations(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> out;
  do {
    out.push_back(order);
  } while (std::next_permutation(order.begin(), order.end()));
  return out;
}

Outcome likelihood_oracle() {
  Rng rng(101);
  double worst_mc = 0.0;
  double worst_sum = 0.0;
  for (std::size_t n = 2; n <= 4; ++n) {
    for (int instance = 0; instance < 3; ++instance) {
      auto p = random_problem(rng, n, 2, 1, 2);
      const auto z = random_params(rng, p, 0.6);
      const Eigen::VectorXd u = scaled_utilities(p, z);
      const auto perms = permutations(n);
      std::map<std::vector<std::size_t>, int> counts;
      Rng noise(1000 + n * 10 + static_cast<std::size_t>(instance));
      const int draws = 1000000;
      std::vector<std::pair<double, std::size_t>> latent(n);
      std::vector<std::size_t> order(n);
      for (int d = 0; d < draws; ++d) {
        for (std::size_t i = 0; i < n; ++i) latent[i] = {u(static_cast<Eigen::Index>(i)) + noise.gumbel(), i};
        std::sort(latent.begin(), latent.end(), std::greater<>());
        for (std::size_t i = 0; i < n; ++i) order[i] = latent[i].second;
        ++counts[order];
      }
      for (const auto& perm : perms) {
        p.tiers = strict_tiers(perm);
        const double prob = std::exp(exploded_loglik_fast(p, z).loglik);
        worst_mc = std::max(worst_mc, std::abs(prob - counts[perm] / static_cast<double>(draws)));
      }
    }
  }
  for (std::size_t n = 2; n <= 6; ++n) {
    for (int instance = 0; instance < 5; ++instance) {
      auto p = random_problem(rng, n, 3, 2, 2);
      const auto z = random_params(rng, p, 1.0);
      double total = 0.0;
      for (const auto& perm : permutations(n)) {
        p.tiers = strict_tiers(perm);
        total += std::exp(exploded_loglik_fast(p, z).loglik);
      }
      worst_sum = std::max(worst_sum, std::abs(total - 1.0));
    }
  }
  return {worst_mc <= 0.01 && worst_sum <= 1e-9,
          fmt::format("max |P - MC freq| = {:.4g} (tol 0.01, 1e6 draws, N<=4); "
                      "max |sum P - 1| = {:.3g} (tol 1e-9, N<=6)",
                      worst_mc, worst_sum)};
}

Outcome fast_path() {
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    const std::size_t tiers = 2 + rng.below(19);
    const auto p = random_problem(rng, n, 1 + rng.below(5), rng.below(3), tiers);
    const auto z = random_params(rng, p);
    worst = std::max(worst, std::abs(exploded_loglik_fast(p, z).loglik -
                                     exploded_loglik_naive(p, z)));
  }
  return {worst <= 1e-10,
          fmt::format("max |fast - naive| = {:.3g} over 100 instances (tol 1e-10)", worst)};
}

Outcome gradient_check() {
  Rng rng(303);
  double worst = 0.0;
  std::size_t n_checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_problem(rng, 5 + rng.below(60), 1 + rng.below(5), rng.below(3),
                                  2 + rng.below(8));
    const auto z = random_params(rng, p);
    const auto res = exploded_loglik_fast(p, z);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(z(i)));
      Eigen::VectorXd zp = z, zm = z;
      zp(i) += h;
      zm(i) -= h;
      const double fd = (exploded_loglik_naive(p, zp) - exploded_loglik_naive(p, zm)) / (2 * h);
      worst = std::max(worst, rel_err(res.gradient(i), fd));
      ++n_checked;
    }
  }
  return {worst < 1e-6, fmt::format("max relative error {:.3g} over {} partials (tol 1e-6)",
                                    worst, n_checked)};
}

// Two-step pipeline: OLS treatment effects, then preference estimation.
EstimateResult fit_pipeline(const SimulatedData& sim) {
  const auto te = build_te_matrix(sim.data, sim.config.estimators, sim.config.forest);
  return estimate_preferences(sim.data, te.te, sim.config.optimizer);
}

Outcome recovery() {
  int ok = 0;
  double worst_theta = 0.0, worst_lambda = 0.0;
  std::vector<int> failed;
  for (int seed = 1; seed <= 20; ++seed) {
    const auto sim = simulate(SimulationConfig{.n = 2000, .seed = static_cast<std::uint64_t>(seed)});
    const auto est = fit_pipeline(sim);
    double dt = 0.0, dl = 0.0;
    for (const auto& [k, w] : sim.truth.omega) {
      dt = std::max(dt, std::abs(std::log(est.params.omega.at(k)) - std::log(w)));
    }
    for (const auto& [j, l] : sim.truth.lambda) {
      dl = std::max(dl, std::abs(est.params.lambda.at(j) - l));
    }
    worst_theta = std::max(worst_theta, dt);
    worst_lambda = std::max(worst_lambda, dl);
    if (est.converged && dt <= 0.05 && dl <= 0.05) {
      ++ok;
    } else {
      failed.push_back(seed);
    }
  }
  return {ok >= 18, fmt::format("{}/20 replications within |d ln omega| <= 0.05 and |d lambda| "
                                "<= 0.05 (need 18); worst {:.4f} / {:.4f}; failed seeds [{}]",
                                ok, worst_theta, worst_lambda, fmt::join(failed, ", "))};
}

Outcome bootstrap_calibration() {
  int covered = 0, total = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto sim =
        simulate(SimulationConfig{.n = 2000, .seed = static_cast<std::uint64_t>(500 + rep)});
    const auto point = fit_pipeline(sim);
    PipelineConfig pc;
    pc.estimators = sim.config.estimators;
    pc.forest = sim.config.forest;
    pc.optimizer = sim.config.optimizer;
    const auto boot = bootstrap(sim.data, pc, 50, static_cast<std::uint64_t>(900 + rep));
    auto check = [&](const std::string& key, double estimate, double truth) {
      ++total;
      if (std::abs(estimate - truth) <= 3.0 * boot.se.at(key)) ++covered;
    };
    for (const auto& [k, w] : sim.truth.omega) {
      check("theta:" + k, std::log(point.params.omega.at(k)), std::log(w));
    }
    for (const auto& [j, l] : sim.truth.lambda) check("lambda:" + j, point.params.lambda.at(j), l);
    check("C", point.params.C, sim.truth.C);
    check("sigma", point.params.sigma, sim.truth.sigma);
  }
  const double share = covered / static_cast<double>(total);
  return {share >= 0.9, fmt::format("truth within 3 se for {}/{} = {:.1f}% of parameter "
                                    "replications (need 90%; 20 x B=50)",
                                    covered, total, 100.0 * share)};
}

Outcome ols_oracle() {
  Rng rng(404);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + rng.below(4);
    const std::size_t n = 4 * (2 * k + 2) + rng.below(60);
    Dataset d;
    d.outcomes = {{"y", Transform::kLinear, true, false, ""}};
    for (std::size_t c = 0; c < k; ++c) d.het_covariates.push_back("z" + std::to_string(c));
    d.welfare_covariates = d.het_covariates;
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) {
      Household h;
      h.id = fmt::format("h{:03}", i);
      h.tier = static_cast<std::int64_t>(i % 2);
      h.treated = rng.bernoulli(0.5);
      const double t = h.treated ? 1.0 : 0.0;
      double yi = rng.normal();
      std::vector<double> row{1.0};
      for (const auto& c : d.het_covariates) {
        const double v = rng.normal(0.0, 2.0);
        h.x[c] = v;
        h.x_tilde[c] = v;
        yi += (0.2 + 0.5 * t) * v + 0.3 * t;
        row.push_back(v);
      }
      row.push_back(t);
      for (const auto& c : d.het_covariates) row.push_back(t * h.x_tilde.at(c));
      h.y_endline["y"] = yi;
      h.y_baseline["y"] = 0.0;
      x.push_back(row);
      y.push_back(yi);
      d.households.push_back(std::move(h));
    }
    const auto m = fit_ols_te(d, d.outcomes[0], d.het_covariates);
    const auto b = normal_equations(x, y);
    std::vector<double> got = {m.beta0};
    for (const auto& c : d.het_covariates) got.push_back(m.beta_x.at(c));
    got.push_back(m.beta_T);
    for (const auto& c : d.het_covariates) got.push_back(m.beta_Tx.at(c));
    for (std::size_t i = 0; i < got.size(); ++i) {
      const double ref = static_cast<double>(b[i]);
      worst = std::max(worst, std::abs(got[i] - ref) / std::max(1.0, std::abs(ref)));
    }
  }
  return {worst <= 1e-8,
          fmt::format("max relative coefficient error {:.3g} over 50 designs (tol 1e-8)", worst)};
}

Outcome forest_sanity() {
  SimulationConfig c;
  c.n = 2000;
  c.seed = 6;
  c.effect_shape = EffectShape::kStep;
  c.outcome_noise = 0.5;
  const auto sim = simulate(c);
  ForestConfig fc;
  fc.n_trees = 200;
  fc.rng_seed = 17;
  const auto& spec = sim.data.outcome("missed_school");
  const auto f = fit_causal_forest(sim.data, spec, sim.data.het_covariates, fc);
  std::vector<double> pred, truth;
  for (const auto& h : sim.data.households) {
    pred.push_back(predict_te_forest(f, h.x_tilde));
    truth.push_back(sim.te_true.get(h.id, "missed_school"));
  }
  const double corr = pearson(pred, truth);
  std::size_t dishonest = 0;
  for (const auto& t : f.trees) {
    const std::set<std::string> split(t.split_ids.begin(), t.split_ids.end());
    for (const auto& id : t.estimation_ids) dishonest += split.count(id);
  }
  const auto imp = feature_importance(f);
  const auto top = std::max_element(imp.begin(), imp.end(), [](const auto& a, const auto& b) {
                     return a.second < b.second;
                   })->first;
  return {corr > 0.8 && dishonest == 0 && top == "land_ha",
          fmt::format("correlation {:.3f} (need > 0.8); {} trees, {} split/estimation overlaps; "
                      "top importance '{}' (truth land_ha)",
                      corr, f.trees.size(), dishonest, top)};
}

Dataset tiny_dataset(Rng& rng, std::size_t n) {
  Dataset d;
  d.outcomes = {{"c", Transform::kLinear, true, false, ""},
                {"s", Transform::kLinear, false, true, ""},
                {"h", Transform::kLinear, false, false, ""}};
  d.welfare_covariates = {"x"};
  d.het_covariates = {"x"};
  for (std::size_t i = 0; i < n; ++i) {
    Household h;
    h.id = fmt::format("h{:02}", i);
    h.tier = static_cast<std::int64_t>(i);
    h.treated = rng.bernoulli(0.5);
    h.x["x"] = rng.normal();
    h.x_tilde = h.x;
    for (const auto& o : d.outcome_names()) {
      h.y_baseline[o] = rng.normal();
      h.y_endline[o] = rng.normal(1.0, 1.0);
    }
    d.households.push_back(std::move(h));
  }
  return d;
}

TreatmentEffectMatrix random_te(Rng& rng, const Dataset& d) {
  TreatmentEffectMatrix te(d.ids(), d.outcome_names(),
                           {TeSource::kExternal, TeSource::kExternal, TeSource::kExternal});
  for (std::size_t r = 0; r < te.rows(); ++r) {
    for (std::size_t c = 0; c < 3; ++c) te.at(r, c) = rng.normal();
  }
  return te;
}

std::vector<std::uint32_t> subsets(std::size_t n, std::size_t k) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) == k) out.push_back(mask);
  }
  return out;
}

std::vector<std::string> ids_of(const Dataset& d, std::uint32_t mask) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (mask & (1u << i)) ids.push_back(d.households[i].id);
  }
  return ids;
}

Outcome counterfactual_optimality() {
  Rng rng(505);
  int topk_ok = 0, extremes_ok = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(11);
    const std::size_t k = 1 + rng.below(n);
    const auto d = tiny_dataset(rng, n);
    const auto te = random_te(rng, d);
    PreferenceParams params;
    params.omega = {{"x", std::exp(0.5 * rng.normal())}};
    params.lambda = {{"s", rng.normal()}, {"h", rng.normal()}};
    params.C = rng.normal();
    const auto scores = score_households(params, te, d);
    const auto sel = allocate_top_k(scores, k);
    double chosen = 0.0;
    for (const auto& id : sel) chosen += scores.values[std::stoul(id.substr(1))];
    double best = -INFINITY;
    for (auto mask : subsets(n, k)) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1u << i)) sum += scores.values[i];
      }
      best = std::max(best, sum);
    }
    worst = std::max(worst, std::abs(chosen - best));
    topk_ok += std::abs(chosen - best) <= 1e-12 * std::max(1.0, std::abs(best)) ? 1 : 0;

    // Allocating on one outcome alone reaches that outcome's best expected
    // level (lowest for bads) among all size-K subsets.
    bool all = true;
    for (std::size_t c = 0; c < 3; ++c) {
      const auto& spec = d.outcomes[c];
      WelfareImpactVector one;
      one.ids = d.ids();
      for (std::size_t r = 0; r < n; ++r) one.values.push_back(spec.sign() * te.at(r, c));
      const double got = expected_outcomes(allocate_top_k(one, k), te, d).at(spec.name);
      double ref = spec.is_bad ? INFINITY : -INFINITY;
      for (auto mask : subsets(n, k)) {
        double level = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          const auto& h = d.households[r];
          const double eff = te.at(r, c);
          level += *h.y_endline.at(spec.name) - (h.treated ? eff : 0.0) +
                   ((mask & (1u << r)) ? eff : 0.0);
        }
        level /= static_cast<double>(n);
        ref = spec.is_bad ? std::min(ref, level) : std::max(ref, level);
      }
      all = all && std::abs(got - ref) <= 1e-12 * std::max(1.0, std::abs(ref));
    }
    extremes_ok += all ? 1 : 0;
  }
  return {topk_ok == 100 && extremes_ok == 100,
          fmt::format("top-K optimal in {}/100 instances (max gap {:.3g}); expected-outcome "
                      "extremes match in {}/100",
                      topk_ok, worst, extremes_ok)};
}

Outcome frontier_containment() {
  Rng rng(606);
  double worst_ratio = INFINITY;
  std::size_t outside = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = tiny_dataset(rng, 12);
    const auto te = random_te(rng, d);
    const auto f = frontier(te, d, 4, 500, FrontierWeighting::kRaw, nullptr,
                            static_cast<std::uint64_t>(trial));
    std::vector<Eigen::Vector3d> exact;
    for (auto mask : subsets(12, 4)) {
      Eigen::Vector3d avg = Eigen::Vector3d::Zero();
      for (std::size_t r = 0; r < 12; ++r) {
        if (!(mask & (1u << r))) continue;
        for (int c = 0; c < 3; ++c) avg(c) += te.at(r, static_cast<std::size_t>(c)) / 12.0;
      }
      exact.push_back(avg);
    }
    const ConvexHull3 exact_hull(exact);
    for (const auto& p : f.points) outside += exact_hull.contains(p.impacts) ? 0 : 1;
    worst_ratio = std::min(worst_ratio, f.hull_volume / exact_hull.volume());
  }
  return {worst_ratio >= 0.95 && outside == 0,
          fmt::format("min sampled/exact hull volume {:.4f} over 20 instances (need >= 0.95; "
                      "N=12, K=4, 500 directions); {} sampled points outside exact hull",
                      worst_ratio, outside)};
}

Outcome curvature() {
  SimulationConfig c;
  c.n = 2000;
  c.seed = 77;
  c.log_curvature = true;
  const auto sim = simulate(c);
  const auto est = estimate_preferences(sim.data, sim.te_true, sim.config.optimizer);
  const auto& numeraire = sim.data.numeraire().name;
  std::vector<double> fitted, truth;
  for (const auto& h : sim.data.households) {
    fitted.push_back(welfare_weight(est.params.omega, h.x));
    CovariateMap x = h.x;
    for (auto it = x.begin(); it != x.end();) {
      it = sim.truth.omega.count(it->first) ? std::next(it) : x.erase(it);
    }
    truth.push_back(welfare_weight(sim.truth.omega, x) / *h.y_baseline.at(numeraire));
  }
  const double rho = spearman(fitted, truth);
  return {rho > 0.9, fmt::format("Spearman(mu_linear_fit, mu * g'(y0)) = {:.4f} (need > 0.9)", rho)};
}

Outcome binary_vs_full() {
  int agree = 0;
  const int reps = 5;
  std::vector<std::string> details;
  for (int rep = 0; rep < reps; ++rep) {
    const auto sim =
        simulate(SimulationConfig{.n = 2000, .seed = static_cast<std::uint64_t>(700 + rep)});
    const auto te = build_te_matrix(sim.data, sim.config.estimators, sim.config.forest).te;
    const auto full = estimate_preferences(sim.data, te, sim.config.optimizer);
    Dataset binary = sim.data;
    std::vector<std::int64_t> tiers;
    for (const auto& h : binary.households) tiers.push_back(*h.tier);
    std::vector<std::int64_t> sorted = tiers;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2),
                     sorted.end());
    const auto cut = sorted[sorted.size() / 2];
    for (auto& h : binary.households) h.tier = *h.tier >= cut ? 1 : 0;
    const auto bin = estimate_preferences(binary, te, sim.config.optimizer);
    bool same = true;
    for (const auto& [k, w] : full.params.omega) {
      const bool sf = std::log(w) > 0.0;
      const bool sb = std::log(bin.params.omega.at(k)) > 0.0;
      same = same && sf == sb;
    }
    agree += same ? 1 : 0;
    if (!same) details.push_back(std::to_string(700 + rep));
  }
  return {agree == reps,
          fmt::format("all omega signs agree in {}/{} replications (sigma = 0.05, N=2000, "
                      "median split, OLS effects){}",
                      agree, reps,
                      details.empty() ? "" : fmt::format("; disagreeing seeds [{}]",
                                                         fmt::join(details, ", ")))};
}

Outcome survey_formulas() {
  std::vector<std::string> bad;
  if (omega_from_crossover(100.0, 100.0, 1.0) != 1.0) bad.push_back("omega(a=b)");
  if (omega_from_crossover(100.0, 200.0, 1.0) != 2.0) bad.push_back("omega(100,200,1)");
  if (omega_from_crossover(100.0, 200.0, 2.0) != std::sqrt(2.0)) bad.push_back("omega(100,200,2)");
  if (lambda_from_crossover(3.0, 3.0) != 1.0) bad.push_back("lambda(a=b)");
  if (lambda_from_crossover(1.0, 4.0) != 0.25) bad.push_back("lambda(1,4)");
  if (!(lambda_from_crossover(-1.0, 4.0) < 0.0)) bad.push_back("lambda sign");
  const std::vector<MplRow> rows = {{100, 50, true}, {100, 150, true}, {100, 250, false}};
  const auto c = crossover(rows);
  if (!c || c->a != 100.0 || c->b != 200.0) bad.push_back("crossover midpoint");
  Rng rng(808);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double a = std::exp(rng.normal(4.0, 1.0));
    const double b = std::exp(rng.normal(4.0, 1.0));
    const double x = rng.uniform(0.2, 3.0) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
    const double s = std::exp(rng.normal(0.0, 2.0));
    const double w = omega_from_crossover(a, b, x);
    worst = std::max(worst, std::abs(w * omega_from_crossover(b, a, x) - 1.0));
    worst = std::max(worst, std::abs(omega_from_crossover(s * a, s * b, x) / w - 1.0));
    worst = std::max(worst, std::abs(lambda_from_crossover(s * a, s * b) /
                                     lambda_from_crossover(a, b) - 1.0));
  }
  if (worst > 1e-12) bad.push_back("reciprocity/scale");
  return {bad.empty(),
          fmt::format("examples exact; reciprocity and scale invariance max deviation {:.3g} "
                      "(tol 1e-12){}",
                      worst, bad.empty() ? "" : fmt::format("; failed: {}", fmt::join(bad, ", ")))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {"likelihood-oracle", 60, likelihood_oracle},
      {"fast-path-equivalence", 10, fast_path},
      {"gradient-check", 30, gradient_check},
      {"parameter-recovery", 600, recovery},
      {"bootstrap-calibration", 1800, bootstrap_calibration},
      {"ols-oracle", 5, ols_oracle},
      {"forest-sanity", 120, forest_sanity},
      {"counterfactual-optimality", 60, counterfactual_optimality},
      {"frontier-containment", 120, frontier_containment},
      {"curvature-property", 300, curvature},
      {"binary-vs-full", 300, binary_vs_full},
      {"survey-formulas", 60, survey_formulas},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    bool selected = argc < 2;
    for (int i = 1; i < argc; ++i) selected = selected || c.name.find(argv[i]) != std::string::npos;
    if (!selected) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = o.pass && secs <= c.budget_seconds;
    failures += pass ? 0 : 1;
    fmt::print("{} {}: {} [{:.1f} s, budget {:.0f} s]\n", pass ? "PASS" : "FAIL", c.name,
               o.detail, secs, c.budget_seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
