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

#include "polval/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "polval/csv.hpp"
#include "polval/errors.hpp"

namespace polval {

using nlohmann::json;

namespace {

constexpr int kLabelWidth = 28;

std::string row(const std::string& label, const std::string& value,
                const std::string& se = std::string()) {
  std::string out = fmt::format("  {:<{}}{:>10}", label, kLabelWidth, value);
  if (!se.empty()) out += fmt::format("  ({})", se);
  return out + "\n";
}

std::optional<double> lookup(const std::map<std::string, double>* se, const std::string& key) {
  if (!se) return std::nullopt;
  auto it = se->find(key);
  if (it == se->end()) return std::nullopt;
  return it->second;
}

json string_array(const std::vector<std::string>& v) { return json(v); }

}  // namespace

json meta_json(const ReportMeta& meta) {
  return {{"command", meta.command},
          {"fingerprint", meta.fingerprint},
          {"seed", meta.seed},
          {"version", "0.1.0"}};
}

json estimate_json(const EstimateResult& r, const ReportMeta& meta,
                   const std::map<std::string, double>* se) {
  json j = meta_json(meta);
  j["params"] = to_json(r.params);
  j["loglik"] = r.loglik;
  j["converged"] = r.converged;
  j["n_iterations"] = r.n_iterations;
  j["n_starts_used"] = r.n_starts_used;
  j["gradient_norm"] = r.gradient_norm;
  j["n"] = r.n;
  j["constrained"] = r.constrained;
  j["corner_flags"] = json(std::vector<std::string>(r.corner_flags.begin(), r.corner_flags.end()));
  j["warnings"] = string_array(r.warnings);
  if (se) {
    j["se"] = *se;
    json inc = json::object();
    for (const auto& [k, v] : *se) {
      if (k.rfind("theta:", 0) == 0) inc[k.substr(6)] = v / kLogOnePercent;
    }
    j["se_omega_increments"] = inc;
  }
  return j;
}

std::string estimate_text(const EstimateResult& r, const std::string& title,
                          const std::map<std::string, double>* se) {
  std::ostringstream out;
  out << title << "\n";
  out << "Welfare weights (log1.01 omega)\n";
  for (const auto& [k, w] : r.params.omega) {
    auto s = lookup(se, "theta:" + k);
    out << row(k, fmt::format("{:.1f}", to_increments(w)),
               s ? fmt::format("{:.1f}", *s / kLogOnePercent) : "");
  }
  if (!r.constrained) {
    if (!r.params.lambda.empty()) out << "Impact weights (lambda)\n";
    for (const auto& [j, l] : r.params.lambda) {
      auto s = lookup(se, "lambda:" + j);
      out << row(j, fmt::format("{:.3f}", l), s ? fmt::format("{:.3f}", *s) : "");
    }
    auto sc = lookup(se, "C");
    out << row("Intrinsic value C", fmt::format("{:.3f}", r.params.C),
               sc ? fmt::format("{:.3f}", *sc) : "");
    auto ss = lookup(se, "sigma");
    out << row("sigma", fmt::format("{:.4f}", r.params.sigma),
               ss ? fmt::format("{:.4f}", *ss) : "");
  }
  out << row("N", std::to_string(r.n));
  out << row("Log likelihood", fmt::format("{:.2f}", r.loglik));
  out << row("Converged", r.converged ? "yes" : "no");
  if (!r.corner_flags.empty()) {
    std::string flags;
    for (const auto& f : r.corner_flags) flags += (flags.empty() ? "" : ", ") + f;
    out << "Corner solution: " << flags << "\n";
  }
  for (const auto& w : r.warnings) out << "warning: " << w << "\n";
  return out.str();
}

json bootstrap_json(const EstimateResult& point, const BootstrapResult& boot,
                    const ReportMeta& meta) {
  json j = estimate_json(point, meta, &boot.se);
  json draws = json::array();
  for (std::size_t d = 0; d < boot.draws.size(); ++d) {
    draws.push_back({{"index", boot.draw_index[d]},
                     {"params", to_json(boot.draws[d].params)},
                     {"loglik", boot.draws[d].loglik},
                     {"converged", boot.draws[d].converged}});
  }
  j["bootstrap"] = {{"n_requested", boot.n_requested},
                    {"n_retained", boot.draws.size()},
                    {"n_excluded_corner", boot.n_excluded_corner},
                    {"draws", draws}};
  return j;
}

json fit_te_json(const TeBuildResult& fit, const Dataset& data, const ReportMeta& meta) {
  json j = meta_json(meta);
  j["n_households"] = fit.te.rows();
  j["warnings"] = string_array(fit.warnings);
  json outs = json::array();
  for (std::size_t c = 0; c < fit.te.cols(); ++c) {
    const auto& name = fit.te.outcomes()[c];
    json o = {{"name", name},
              {"source", std::string(to_string(fit.te.sources()[c]))},
              {"average_te", fit.te.average_te(name)}};
    if (auto it = fit.ols_models.find(name); it != fit.ols_models.end()) {
      const auto& m = it->second;
      o["ols"] = {{"beta_T", m.beta_T},  {"se_T", m.se_T},   {"beta_Tx", m.beta_Tx},
                  {"se_Tx", m.se_Tx},    {"r2", m.r2},       {"n", m.n},
                  {"residual_variance", m.residual_variance}};
    }
    if (auto it = fit.forest_models.find(name); it != fit.forest_models.end()) {
      o["forest"] = {{"n_trees", it->second.trees.size()},
                     {"feature_importance", feature_importance(it->second)}};
    }
    outs.push_back(o);
  }
  j["outcomes"] = outs;
  j["welfare_covariates"] = data.welfare_covariates;
  j["heterogeneity_covariates"] = data.het_covariates;
  return j;
}

std::string fit_te_text(const TeBuildResult& fit, const Dataset& data) {
  std::ostringstream out;
  out << "Treatment effects (" << fit.te.rows() << " households)\n";
  for (std::size_t c = 0; c < fit.te.cols(); ++c) {
    const auto& name = fit.te.outcomes()[c];
    const auto& spec = data.outcome(name);
    out << row(fmt::format("{} [{}, {}]", name, to_string(spec.transform),
                           to_string(fit.te.sources()[c])),
               fmt::format("{:.4f}", fit.te.average_te(name)));
    if (auto it = fit.forest_models.find(name); it != fit.forest_models.end()) {
      for (const auto& [cov, imp] : feature_importance(it->second)) {
        out << row("    importance " + cov, fmt::format("{:.3f}", imp));
      }
    }
  }
  for (const auto& w : fit.warnings) out << "warning: " << w << "\n";
  return out.str();
}

json counterfactual_json(const CounterfactualResult& r, const PreferenceParams& params,
                         std::size_t k, const ReportMeta& meta, std::size_t top_n) {
  json j = meta_json(meta);
  j["k"] = k;
  j["n"] = r.scores.size();
  j["params"] = to_json(params);
  j["implied_priorities"] = r.implied_priorities;
  j["expected_outcomes"] = r.expected_outcomes;
  std::vector<std::size_t> order(r.scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (r.scores.values[a] != r.scores.values[b]) return r.scores.values[a] > r.scores.values[b];
    return r.scores.ids[a] < r.scores.ids[b];
  });
  json top = json::array();
  for (std::size_t i = 0; i < std::min(top_n, order.size()); ++i) {
    top.push_back({{"id", r.scores.ids[order[i]]}, {"score", r.scores.values[order[i]]}});
  }
  j["top_households"] = top;
  j["selected"] = r.selected;
  return j;
}

std::string counterfactual_text(const CounterfactualResult& r, std::size_t k) {
  std::ostringstream out;
  out << "Counterfactual allocation: top " << k << " of " << r.scores.size() << " households\n";
  out << "Implied priorities (log1.01 omega)\n";
  for (const auto& [c, v] : r.implied_priorities) out << row(c, fmt::format("{:.1f}", v));
  out << "Expected outcomes\n";
  for (const auto& [o, v] : r.expected_outcomes) out << row(o, fmt::format("{:.4f}", v));
  return out.str();
}

json frontier_json(const FrontierResult& r, const ReportMeta& meta) {
  json j = meta_json(meta);
  j["outcomes"] = r.outcomes;
  j["weighting"] = std::string(to_string(r.weighting));
  j["k"] = r.k;
  j["hull_volume"] = r.hull_volume;
  j["hull_vertices"] = r.hull_vertices;
  j["warnings"] = string_array(r.warnings);
  json pts = json::array();
  for (const auto& p : r.points) {
    pts.push_back({{"direction", {p.direction(0), p.direction(1), p.direction(2)}},
                   {"impacts", {p.impacts(0), p.impacts(1), p.impacts(2)}},
                   {"on_hull", p.on_hull},
                   {"axis", p.axis}});
  }
  j["points"] = pts;
  return j;
}

std::string frontier_text(const FrontierResult& r) {
  std::ostringstream out;
  out << fmt::format("Outcome frontier ({}, K={}): {} directions, {} hull vertices\n",
                     to_string(r.weighting), r.k, r.points.size(), r.hull_vertices.size());
  out << row("Hull volume", fmt::format("{:.6g}", r.hull_volume));
  for (std::size_t c = 0; c < r.outcomes.size(); ++c) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& p : r.points) {
      lo = std::min(lo, p.impacts(static_cast<Eigen::Index>(c)));
      hi = std::max(hi, p.impacts(static_cast<Eigen::Index>(c)));
    }
    out << row(r.outcomes[c] + " range", fmt::format("[{:.4f}, {:.4f}]", lo, hi));
  }
  for (const auto& w : r.warnings) out << "warning: " << w << "\n";
  return out.str();
}

std::string frontier_plot_csv(const FrontierResult& r) {
  std::ostringstream out;
  std::vector<std::string> header = {"point", "w1", "w2", "w3"};
  for (const auto& o : r.outcomes) header.push_back(o);
  header.push_back("on_hull");
  csv::write_row(out, header);
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const auto& p = r.points[i];
    std::vector<std::string> fields = {std::to_string(i)};
    for (int c = 0; c < 3; ++c) fields.push_back(csv::format_double(p.direction(c)));
    for (int c = 0; c < 3; ++c) fields.push_back(csv::format_double(p.impacts(c)));
    fields.push_back(p.on_hull ? "1" : "0");
    csv::write_row(out, fields);
  }
  return out.str();
}

json survey_json(const SurveyEstimate& s, const ReportMeta& meta) {
  json j = meta_json(meta);
  j["omega_median_increments"] = s.omega_median;
  j["omega_median"] = s.omega();
  j["lambda_median"] = s.lambda_median;
  j["se"] = s.se;
  j["n_valid"] = s.n_valid;
  j["missing"] = s.missing;
  j["n_respondents"] = s.n_respondents;
  j["n_items"] = s.n_items;
  j["n_invalid_items"] = s.n_invalid_items;
  return j;
}

std::string survey_text(const SurveyEstimate& s) {
  std::ostringstream out;
  out << "Stated preferences (resident survey)\n";
  out << "Welfare weights (log1.01 omega)\n";
  for (const auto& [k, v] : s.omega_median) {
    auto it = s.se.find("omega:" + k);
    out << row(k, fmt::format("{:.1f}", v),
               it == s.se.end() ? "" : fmt::format("{:.1f}", it->second));
  }
  if (!s.lambda_median.empty()) out << "Impact weights (lambda)\n";
  for (const auto& [k, v] : s.lambda_median) {
    auto it = s.se.find("lambda:" + k);
    out << row(k, fmt::format("{:.3f}", v),
               it == s.se.end() ? "" : fmt::format("{:.3f}", it->second));
  }
  out << row("Respondents", std::to_string(s.n_respondents));
  out << row("Invalid items", fmt::format("{} of {}", s.n_invalid_items, s.n_items));
  for (const auto& m : s.missing) out << "missing: " << m << " (no valid responses)\n";
  return out.str();
}

json load_report_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("'{}' is not valid JSON: {}", path, e.what()));
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path));
  out << text;
}

}  // namespace polval
