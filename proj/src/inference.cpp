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

#include "polval/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "polval/errors.hpp"
#include "polval/optimizer.hpp"
#include "polval/parallel.hpp"
#include "polval/rng.hpp"

namespace polval {
namespace {

using Index = Eigen::Index;

struct StartOutcome {
  Eigen::VectorXd z;  // full parameter vector
  MinimizeResult opt;
  double loglik = -std::numeric_limits<double>::infinity();
  std::size_t clipped = 0;  // households whose utility is clipped at the optimum
  bool binding = false;     // clipping changes the likelihood at the optimum
};

// Log likelihood change above which clipping counts as binding.
constexpr double kClipBindingTolerance = 1e-6;

// Optima where clipping binds rank behind the rest, then by likelihood.
bool better(const StartOutcome& a, const StartOutcome& b) {
  if (a.binding != b.binding) return !a.binding;
  return a.loglik > b.loglik;
}

Objective masked_objective(const RankProblem& p, const std::vector<Index>& free,
                           const Eigen::VectorXd& base) {
  const double n = static_cast<double>(p.n());
  return [&p, free, base, n](const Eigen::VectorXd& xf, Eigen::VectorXd* grad) {
    Eigen::VectorXd z = base;
    for (std::size_t i = 0; i < free.size(); ++i) z(free[i]) = xf(static_cast<Index>(i));
    const LogLikResult r = exploded_loglik_fast(p, z);
    grad->resize(static_cast<Index>(free.size()));
    for (std::size_t i = 0; i < free.size(); ++i) {
      (*grad)(static_cast<Index>(i)) = -r.gradient(free[i]) / n;
    }
    return -r.loglik / n;
  };
}

StartOutcome run_from(const RankProblem& p, const std::vector<Index>& free,
                      const Eigen::VectorXd& start, const OptimizerConfig& cfg) {
  MinimizeOptions opts;
  opts.max_iterations = cfg.max_iterations;
  opts.gradient_tolerance = cfg.gradient_tolerance;
  opts.value_tolerance = cfg.loglik_tolerance;
  Eigen::VectorXd x0(static_cast<Index>(free.size()));
  for (std::size_t i = 0; i < free.size(); ++i) x0(static_cast<Index>(i)) = start(free[i]);
  StartOutcome out;
  out.opt = minimize_bfgs(masked_objective(p, free, start), x0, opts);
  out.z = start;
  for (std::size_t i = 0; i < free.size(); ++i) out.z(free[i]) = out.opt.x(static_cast<Index>(i));
  if (std::isfinite(out.opt.value)) out.loglik = -out.opt.value * static_cast<double>(p.n());
  scaled_utilities(p, out.z, &out.clipped);
  out.binding = out.clipped > 0 && clipping_effect(p, out.z) > kClipBindingTolerance;
  return out;
}

// Multi-start fit over the `free` coordinates; the rest stay at `base`.
EstimateResult fit(const RankProblem& p, const std::vector<Index>& free,
                   const Eigen::VectorXd& base, const OptimizerConfig& cfg,
                   bool two_sided_corners) {
  p.validate();
  if (cfg.n_starts < 1) throw ConfigError("optimizer needs n_starts >= 1");
  const auto k = static_cast<Index>(p.n_covariates());
  const auto j = static_cast<Index>(p.n_weighted());

  std::vector<StartOutcome> starts(static_cast<std::size_t>(cfg.n_starts));
  for (int s = 0; s < cfg.n_starts; ++s) {
    Eigen::VectorXd z0 = base;
    if (s > 0) {
      Rng rng(cfg.seed, static_cast<std::uint64_t>(s));
      for (Index i : free) {
        if (i < k) {
          z0(i) += rng.normal(0.0, 0.3);
        } else if (i < k + j) {
          z0(i) += rng.normal(0.0, 0.1);
        } else if (i == k + j) {
          z0(i) += rng.normal(0.0, 0.5);
        } else {
          z0(i) += rng.normal(0.0, 1.0);
        }
      }
    }
    starts[static_cast<std::size_t>(s)] = run_from(p, free, z0, cfg);
  }

  std::size_t best = 0;
  for (std::size_t s = 1; s < starts.size(); ++s) {
    if (better(starts[s], starts[best])) best = s;
  }
  StartOutcome chosen = starts[best];
  int iterations = 0;
  for (const auto& s : starts) iterations += s.opt.iterations;
  // Polish a stalled best start with a fresh curvature estimate.
  for (int round = 0; round < 3 && !chosen.opt.converged && std::isfinite(chosen.loglik);
       ++round) {
    StartOutcome again = run_from(p, free, chosen.z, cfg);
    iterations += again.opt.iterations;
    if (!better(chosen, again)) chosen = std::move(again);
  }

  EstimateResult res;
  res.n = p.n();
  res.params = unpack_params(p, chosen.z);
  res.loglik = chosen.loglik;
  res.converged = chosen.opt.converged;
  res.gradient_norm = chosen.opt.gradient_norm;
  res.n_iterations = iterations;
  res.n_starts_used = cfg.n_starts;
  for (const auto& s : starts) {
    res.start_logliks.push_back(s.loglik);
    res.start_converged.push_back(s.opt.converged ? 1 : 0);
  }
  const double bound = cfg.corner_bound_increments * kLogOnePercent;
  for (Index i = 0; i < k; ++i) {
    const double theta = chosen.z(i);
    if (theta < -bound || (two_sided_corners && theta > bound)) {
      const auto& name = p.covariates[static_cast<std::size_t>(i)];
      res.corner_flags.insert(name);
      const double clamped = std::clamp(theta, -bound, bound);
      res.params.omega[name] = std::exp(clamped);
      res.warnings.push_back(fmt::format(
          "{}: ln omega diverged to {:.4g}; reported at the corner bound {:.1f} increments", name,
          theta, clamped / kLogOnePercent));
    }
  }
  const std::size_t clipped = chosen.clipped;
  const auto n_binding_starts = std::count_if(
      starts.begin(), starts.end(), [](const StartOutcome& s) { return s.binding; });
  if (!chosen.binding && n_binding_starts > 0) {
    res.warnings.push_back(fmt::format(
        "{} of {} starts ended where utility clipping (|u| = {}) changes the likelihood and "
        "were not selected",
        n_binding_starts, starts.size(), kUtilityClip));
  }
  if (clipped > 0 && !chosen.binding) {
    res.warnings.push_back(fmt::format(
        "{} households have utilities beyond |u| = {} at the optimum; their likelihood terms "
        "are saturated and clipping leaves the likelihood unchanged",
        clipped, kUtilityClip));
  }
  if (chosen.binding && res.corner_flags.empty()) {
    throw EstimationError(fmt::format(
        "utility clipping at |u| = {} binds for {} households at the optimum", kUtilityClip,
        clipped));
  }
  if (!std::isfinite(res.loglik)) {
    throw ConvergenceError("likelihood is not finite at any start");
  }
  if (!res.converged && res.corner_flags.empty() && cfg.throw_on_nonconvergence) {
    throw ConvergenceError(fmt::format(
        "no start converged: best loglik {:.6f}, scaled gradient norm {:.3e} (tolerance {:.1e}) "
        "after {} iterations; status '{}'",
        res.loglik, res.gradient_norm, cfg.gradient_tolerance, iterations, chosen.opt.status));
  }
  return res;
}

std::vector<Index> all_indices(std::size_t n) {
  std::vector<Index> out(n);
  std::iota(out.begin(), out.end(), Index{0});
  return out;
}

bool constant_column(const Eigen::MatrixXd& m, Index col) {
  if (m.rows() == 0) return true;
  const double first = m(0, col);
  for (Index r = 1; r < m.rows(); ++r) {
    if (std::abs(m(r, col) - first) > 1e-12 * std::max(1.0, std::abs(first))) return false;
  }
  return true;
}

}  // namespace

EstimateResult estimate_preferences(const RankProblem& problem, const OptimizerConfig& config) {
  problem.validate();
  std::vector<std::string> warnings;
  if (constant_column(problem.dv, 0)) {
    warnings.push_back(
        "identification: treatment effects on the numeraire do not vary across households; "
        "sigma and omega are not separately identified");
  }
  for (Index m = 1; m < problem.dv.cols(); ++m) {
    if (constant_column(problem.dv, m)) {
      warnings.push_back(fmt::format(
          "identification: treatment effects on '{}' do not vary across households; its "
          "impact weight is not separately identified",
          problem.outcomes[static_cast<std::size_t>(m)]));
    }
  }
  const Eigen::VectorXd base = Eigen::VectorXd::Zero(static_cast<Index>(problem.n_params()));
  EstimateResult res = fit(problem, all_indices(problem.n_params()), base, config, false);
  res.warnings.insert(res.warnings.begin(), warnings.begin(), warnings.end());
  return res;
}

EstimateResult estimate_preferences(const Dataset& data, const TreatmentEffectMatrix& te,
                                    const OptimizerConfig& config) {
  const RankProblem p = make_rank_problem(data, te);
  EstimateResult res = estimate_preferences(p, config);
  if (!p.excluded.empty()) {
    res.warnings.push_back(fmt::format("{} households excluded from estimation", p.excluded.size()));
  }
  return res;
}

RankProblem make_characterization_problem(const RankProblem& problem) {
  RankProblem out;
  out.ids = problem.ids;
  out.covariates = problem.covariates;
  out.outcomes = {problem.outcomes.empty() ? std::string("numeraire") : problem.outcomes[0]};
  out.x = problem.x;
  out.dv = Eigen::MatrixXd::Zero(problem.x.rows(), 1);
  out.tiers = problem.tiers;
  out.excluded = problem.excluded;
  out.validate();
  return out;
}

RankProblem make_characterization_problem(const Dataset& data) {
  RankProblem p;
  p.covariates = data.welfare_covariates;
  p.outcomes = {"numeraire"};
  std::vector<const Household*> rows;
  for (const auto& h : data.households) {
    if (!h.tier) {
      p.excluded.push_back(h.id + ": no tier");
      continue;
    }
    rows.push_back(&h);
  }
  const auto n = static_cast<Index>(rows.size());
  const auto k = static_cast<Index>(p.covariates.size());
  p.x.resize(n, k);
  p.dv = Eigen::MatrixXd::Zero(n, 1);
  std::vector<double> tiers(rows.size());
  for (Index r = 0; r < n; ++r) {
    const Household& h = *rows[static_cast<std::size_t>(r)];
    p.ids.push_back(h.id);
    for (Index c = 0; c < k; ++c) {
      const auto& name = p.covariates[static_cast<std::size_t>(c)];
      auto it = h.x.find(name);
      if (it == h.x.end()) {
        throw ConfigError(fmt::format("household '{}' lacks welfare covariate '{}'", h.id, name));
      }
      p.x(r, c) = it->second;
    }
    tiers[static_cast<std::size_t>(r)] = static_cast<double>(*h.tier);
  }
  p.tiers = tiers_from_values(tiers);
  p.validate();
  return p;
}

EstimateResult characterize_decision_rule(const RankProblem& problem,
                                          const OptimizerConfig& config) {
  const RankProblem p = problem.n_weighted() == 0 && problem.dv.isZero()
                            ? problem
                            : make_characterization_problem(problem);
  Eigen::VectorXd base = Eigen::VectorXd::Zero(static_cast<Index>(p.n_params()));
  base(static_cast<Index>(p.c_index())) = 1.0;
  base(static_cast<Index>(p.log_sigma_index())) = 0.0;
  OptimizerConfig cfg = config;
  // A diverging coefficient is reported as a corner, not an error.
  cfg.throw_on_nonconvergence = false;
  EstimateResult res = fit(p, all_indices(p.n_covariates()), base, cfg, true);
  res.constrained = true;
  res.params.lambda.clear();
  if (!res.converged && res.corner_flags.empty() && config.throw_on_nonconvergence) {
    throw ConvergenceError(fmt::format(
        "decision-rule characterization did not converge (scaled gradient norm {:.3e})",
        res.gradient_norm));
  }
  return res;
}

EstimateResult characterize_decision_rule(const Dataset& data, const OptimizerConfig& config) {
  return characterize_decision_rule(make_characterization_problem(data), config);
}

Dataset bootstrap_sample(const Dataset& data, std::uint64_t seed, int draw,
                         bool cluster_resampling) {
  Dataset out;
  out.outcomes = data.outcomes;
  out.welfare_covariates = data.welfare_covariates;
  out.het_covariates = data.het_covariates;
  Rng rng(seed, static_cast<std::uint64_t>(draw));
  const std::size_t n = data.households.size();
  if (n == 0) throw DataError("cannot bootstrap an empty dataset");
  out.households.reserve(n);
  auto push = [&](std::size_t i) {
    Household h = data.households[i];
    h.id = fmt::format("{}#{}", h.id, out.households.size());
    out.households.push_back(std::move(h));
  };
  if (!cluster_resampling) {
    for (std::size_t i = 0; i < n; ++i) push(static_cast<std::size_t>(rng.below(n)));
    return out;
  }
  std::map<std::string, std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& h = data.households[i];
    if (!h.cluster) {
      throw ConfigError(fmt::format("cluster resampling requested but household '{}' has no cluster",
                                    h.id));
    }
    clusters[*h.cluster].push_back(i);
  }
  std::vector<const std::vector<std::size_t>*> groups;
  for (const auto& [name, members] : clusters) groups.push_back(&members);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    for (auto i : *groups[static_cast<std::size_t>(rng.below(groups.size()))]) push(i);
  }
  return out;
}

BootstrapResult bootstrap(const Dataset& data, const PipelineConfig& config, int replicates,
                          std::uint64_t seed) {
  if (replicates < 2) throw ConfigError("bootstrap needs at least 2 replicates");
  std::vector<std::optional<EstimateResult>> results(static_cast<std::size_t>(replicates));
  std::vector<std::string> failures(static_cast<std::size_t>(replicates));

  parallel_for(results.size(), [&](std::size_t b) {
    const Dataset sample =
        bootstrap_sample(data, seed, static_cast<int>(b), config.cluster_resampling);
    std::optional<TreatmentEffectMatrix> ext;
    if (config.external) {
      std::vector<std::string> ids;
      for (const auto& h : sample.households) ids.push_back(h.id);
      ext.emplace(ids, config.external->outcomes(), config.external->sources());
      for (std::size_t r = 0; r < ids.size(); ++r) {
        const std::string original = ids[r].substr(0, ids[r].rfind('#'));
        auto row = config.external->row_of(original);
        if (!row) throw DataError(fmt::format("external TE file has no household '{}'", original));
        for (std::size_t c = 0; c < ext->cols(); ++c) ext->at(r, c) = config.external->at(*row, c);
      }
    }
    ForestConfig forest = config.forest;
    forest.rng_seed = stream_seed(config.forest.rng_seed, b);
    const auto te = build_te_matrix(sample, config.estimators, forest, ext ? &*ext : nullptr);
    OptimizerConfig opt = config.optimizer;
    opt.seed = stream_seed(config.optimizer.seed, b);
    opt.throw_on_nonconvergence = false;
    results[b] = estimate_preferences(make_rank_problem(sample, te.te), opt);
  });

  BootstrapResult out;
  out.n_requested = replicates;
  for (std::size_t b = 0; b < results.size(); ++b) {
    if (!results[b]->corner_flags.empty()) {
      ++out.n_excluded_corner;
      continue;
    }
    out.draws.push_back(std::move(*results[b]));
    out.draw_index.push_back(static_cast<int>(b));
  }
  if (out.draws.empty()) {
    throw EstimationError("bootstrap failed: every draw converged to a corner solution");
  }

  std::map<std::string, std::vector<double>> values;
  for (const auto& d : out.draws) {
    for (const auto& [k, w] : d.params.omega) values["theta:" + k].push_back(std::log(w));
    for (const auto& [j, l] : d.params.lambda) values["lambda:" + j].push_back(l);
    values["C"].push_back(d.params.C);
    values["sigma"].push_back(d.params.sigma);
  }
  for (const auto& [name, v] : values) {
    if (v.size() < 2) {
      out.se[name] = 0.0;
      continue;
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    out.se[name] = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

CommonWeightsTest test_common_weights(const RankProblem& a, const RankProblem& b,
                                      const OptimizerConfig& config) {
  if (a.covariates != b.covariates) {
    throw ConfigError("common-weights test needs the same welfare covariates in both rankings");
  }
  OptimizerConfig cfg = config;
  const EstimateResult fa = estimate_preferences(a, cfg);
  const EstimateResult fb = estimate_preferences(b, cfg);

  const auto k = static_cast<Index>(a.n_covariates());
  const Index ra = static_cast<Index>(a.n_params()) - k;
  const Index rb = static_cast<Index>(b.n_params()) - k;
  const double n_total = static_cast<double>(a.n() + b.n());

  auto split = [&](const Eigen::VectorXd& z, Eigen::VectorXd* za, Eigen::VectorXd* zb) {
    za->resize(k + ra);
    zb->resize(k + rb);
    za->head(k) = z.head(k);
    zb->head(k) = z.head(k);
    za->tail(ra) = z.segment(k, ra);
    zb->tail(rb) = z.tail(rb);
  };
  Objective objective = [&](const Eigen::VectorXd& z, Eigen::VectorXd* grad) {
    Eigen::VectorXd za, zb;
    split(z, &za, &zb);
    const LogLikResult la = exploded_loglik_fast(a, za);
    const LogLikResult lb = exploded_loglik_fast(b, zb);
    grad->resize(z.size());
    grad->head(k) = -(la.gradient.head(k) + lb.gradient.head(k)) / n_total;
    grad->segment(k, ra) = -la.gradient.tail(ra) / n_total;
    grad->tail(rb) = -lb.gradient.tail(rb) / n_total;
    return -(la.loglik + lb.loglik) / n_total;
  };

  const Eigen::VectorXd za = pack_params(a, fa.params);
  const Eigen::VectorXd zb = pack_params(b, fb.params);
  std::vector<Eigen::VectorXd> starts;
  for (double wa : {0.5, 1.0, 0.0}) {
    Eigen::VectorXd z(k + ra + rb);
    z.head(k) = wa * za.head(k) + (1.0 - wa) * zb.head(k);
    z.segment(k, ra) = za.tail(ra);
    z.tail(rb) = zb.tail(rb);
    starts.push_back(z);
  }
  MinimizeOptions opts;
  opts.max_iterations = cfg.max_iterations;
  opts.gradient_tolerance = cfg.gradient_tolerance;
  opts.value_tolerance = cfg.loglik_tolerance;
  MinimizeResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    MinimizeResult r = minimize_bfgs(objective, s, opts);
    if (!r.converged) r = minimize_bfgs(objective, r.x, opts);
    if (r.value < best.value) best = std::move(r);
  }
  if (!best.converged && config.throw_on_nonconvergence) {
    throw ConvergenceError(fmt::format(
        "pooled-omega fit did not converge (scaled gradient norm {:.3e})", best.gradient_norm));
  }

  CommonWeightsTest t;
  t.loglik_a = fa.loglik;
  t.loglik_b = fb.loglik;
  t.loglik_pooled = -best.value * n_total;
  t.statistic = std::max(0.0, 2.0 * (t.loglik_a + t.loglik_b - t.loglik_pooled));
  t.dof = static_cast<int>(k);
  t.p_value = t.dof > 0 ? boost::math::gamma_q(0.5 * t.dof, 0.5 * t.statistic) : 1.0;
  Eigen::VectorXd pa, pb;
  split(best.x, &pa, &pb);
  t.pooled_a = unpack_params(a, pa);
  t.pooled_b = unpack_params(b, pb);
  return t;
}

}  // namespace polval
