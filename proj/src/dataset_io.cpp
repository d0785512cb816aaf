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

#include "polval/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "polval/csv.hpp"
#include "polval/errors.hpp"

namespace polval {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(fmt::format("config: '{}' must be an object", where));
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(fmt::format("config: unknown key '{}' in {}", key, where));
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out, std::string_view where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config: {}.{} has the wrong type ({})", where, key, e.what()));
  }
}

std::vector<std::string> string_list(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) return {};
  if (!it->is_array()) throw ConfigError(fmt::format("config: '{}' must be an array", key));
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw ConfigError(fmt::format("config: '{}' entries must be strings", key));
    out.push_back(v.get<std::string>());
  }
  return out;
}

bool parse_flag(const std::string& cell, std::size_t line, std::string_view column) {
  if (cell == "1" || cell == "true" || cell == "TRUE") return true;
  if (cell == "0" || cell == "false" || cell == "FALSE") return false;
  throw DataError(fmt::format("line {}, column '{}': expected 0 or 1, got '{}'", line, column, cell));
}

std::int64_t parse_int(const std::string& cell, std::size_t line, std::string_view column) {
  std::int64_t v = 0;
  const char* end = cell.data() + cell.size();
  auto [p, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw DataError(fmt::format("line {}, column '{}': cannot parse '{}' as an integer", line,
                                column, cell));
  }
  return v;
}

}  // namespace

void RunConfig::validate() const {
  Dataset probe;
  probe.outcomes = outcomes;
  probe.validate();
  std::set<std::string> names;
  for (const auto& o : outcomes) {
    if (o.name.empty()) throw ConfigError("config: outcome with empty name");
    if (!names.insert(o.name).second) {
      throw ConfigError(fmt::format("config: duplicate outcome '{}'", o.name));
    }
  }
  if (welfare_covariates.empty()) throw ConfigError("config: no welfare covariates");
  std::set<std::string> covs;
  for (const auto& c : welfare_covariates) {
    if (!covs.insert(c).second) {
      throw ConfigError(fmt::format("config: duplicate welfare covariate '{}'", c));
    }
  }
  for (const auto& [name, _] : estimators) {
    if (!names.count(name)) {
      throw ConfigError(fmt::format("config: estimator given for unknown outcome '{}'", name));
    }
  }
  if (bootstrap.replicates < 2) throw ConfigError("config: bootstrap.replicates must be >= 2");
  if (frontier.n_directions < 6) throw ConfigError("config: frontier.n_directions must be >= 6");
  if (k && *k == 0) throw ConfigError("config: k must be positive");
  for (const auto& f : filters) {
    if (f.column.empty()) throw ConfigError("config: filter without column");
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string RunConfig::fingerprint() const {
  return fmt::format("{:016x}", fnv1a64(to_json(*this).dump()));
}

RunConfig run_config_from_json(const json& j) {
  check_keys(j, "config",
             {"outcomes", "welfare_covariates", "heterogeneity_covariates", "estimators", "forest",
              "optimizer", "bootstrap", "frontier", "k", "filters", "paths"});
  RunConfig c;
  auto outs = j.find("outcomes");
  if (outs == j.end() || !outs->is_array()) throw ConfigError("config: 'outcomes' array required");
  for (const auto& o : *outs) {
    check_keys(o, "outcomes[]", {"name", "transform", "numeraire", "bad", "units"});
    OutcomeSpec s;
    read_opt(o, "name", s.name, "outcomes[]");
    std::string transform = "linear";
    read_opt(o, "transform", transform, "outcomes[]");
    s.transform = parse_transform(transform);
    read_opt(o, "numeraire", s.is_numeraire, "outcomes[]");
    read_opt(o, "bad", s.is_bad, "outcomes[]");
    read_opt(o, "units", s.units, "outcomes[]");
    c.outcomes.push_back(std::move(s));
  }
  c.welfare_covariates = string_list(j, "welfare_covariates");
  c.het_covariates = j.contains("heterogeneity_covariates")
                         ? string_list(j, "heterogeneity_covariates")
                         : c.welfare_covariates;
  if (auto e = j.find("estimators"); e != j.end()) {
    if (!e->is_object()) throw ConfigError("config: 'estimators' must be an object");
    for (const auto& [name, v] : e->items()) {
      if (!v.is_string()) throw ConfigError("config: estimator names must be strings");
      c.estimators[name] = parse_te_estimator(v.get<std::string>());
    }
  }
  if (auto f = j.find("forest"); f != j.end()) {
    check_keys(*f, "forest",
               {"n_trees", "min_leaf", "subsample_fraction", "max_depth", "seed", "max_cuts"});
    read_opt(*f, "n_trees", c.forest.n_trees, "forest");
    read_opt(*f, "min_leaf", c.forest.min_leaf, "forest");
    read_opt(*f, "subsample_fraction", c.forest.subsample_fraction, "forest");
    read_opt(*f, "max_depth", c.forest.max_depth, "forest");
    read_opt(*f, "seed", c.forest.rng_seed, "forest");
    read_opt(*f, "max_cuts", c.forest.max_cuts, "forest");
  }
  if (auto o = j.find("optimizer"); o != j.end()) {
    check_keys(*o, "optimizer",
               {"n_starts", "max_iterations", "gradient_tolerance", "loglik_tolerance", "seed"});
    read_opt(*o, "n_starts", c.optimizer.n_starts, "optimizer");
    read_opt(*o, "max_iterations", c.optimizer.max_iterations, "optimizer");
    read_opt(*o, "gradient_tolerance", c.optimizer.gradient_tolerance, "optimizer");
    read_opt(*o, "loglik_tolerance", c.optimizer.loglik_tolerance, "optimizer");
    read_opt(*o, "seed", c.optimizer.seed, "optimizer");
  }
  if (auto b = j.find("bootstrap"); b != j.end()) {
    check_keys(*b, "bootstrap", {"replicates", "seed", "corner_bound_increments", "cluster"});
    read_opt(*b, "replicates", c.bootstrap.replicates, "bootstrap");
    read_opt(*b, "seed", c.bootstrap.seed, "bootstrap");
    read_opt(*b, "corner_bound_increments", c.optimizer.corner_bound_increments, "bootstrap");
    read_opt(*b, "cluster", c.bootstrap.cluster, "bootstrap");
  }
  if (auto f = j.find("frontier"); f != j.end()) {
    check_keys(*f, "frontier", {"n_directions", "seed", "weighting"});
    read_opt(*f, "n_directions", c.frontier.n_directions, "frontier");
    read_opt(*f, "seed", c.frontier.seed, "frontier");
    std::string w = std::string(to_string(c.frontier.weighting));
    read_opt(*f, "weighting", w, "frontier");
    c.frontier.weighting = parse_frontier_weighting(w);
  }
  if (auto k = j.find("k"); k != j.end() && !k->is_null()) {
    if (!k->is_number_integer() || k->get<std::int64_t>() <= 0) {
      throw ConfigError("config: k must be a positive integer");
    }
    c.k = k->get<std::size_t>();
  }
  if (auto fs = j.find("filters"); fs != j.end()) {
    if (!fs->is_array()) throw ConfigError("config: 'filters' must be an array");
    for (const auto& f : *fs) {
      check_keys(f, "filters[]", {"column", "min", "max"});
      RowFilter rf;
      read_opt(f, "column", rf.column, "filters[]");
      if (f.contains("min")) rf.min = f["min"].get<double>();
      if (f.contains("max")) rf.max = f["max"].get<double>();
      c.filters.push_back(std::move(rf));
    }
  }
  if (auto p = j.find("paths"); p != j.end()) {
    check_keys(*p, "paths", {"households", "treatment_effects", "survey", "params", "output_dir"});
    read_opt(*p, "households", c.paths.households, "paths");
    read_opt(*p, "treatment_effects", c.paths.treatment_effects, "paths");
    read_opt(*p, "survey", c.paths.survey, "paths");
    read_opt(*p, "params", c.paths.params, "paths");
    read_opt(*p, "output_dir", c.paths.output_dir, "paths");
  }
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  json j;
  j["outcomes"] = json::array();
  for (const auto& o : c.outcomes) {
    j["outcomes"].push_back({{"name", o.name},
                             {"transform", std::string(to_string(o.transform))},
                             {"numeraire", o.is_numeraire},
                             {"bad", o.is_bad},
                             {"units", o.units}});
  }
  j["welfare_covariates"] = c.welfare_covariates;
  j["heterogeneity_covariates"] = c.het_covariates;
  j["estimators"] = json::object();
  for (const auto& [name, e] : c.estimators) j["estimators"][name] = std::string(to_string(e));
  j["forest"] = {{"n_trees", c.forest.n_trees},
                 {"min_leaf", c.forest.min_leaf},
                 {"subsample_fraction", c.forest.subsample_fraction},
                 {"max_depth", c.forest.max_depth},
                 {"seed", c.forest.rng_seed},
                 {"max_cuts", c.forest.max_cuts}};
  j["optimizer"] = {{"n_starts", c.optimizer.n_starts},
                    {"max_iterations", c.optimizer.max_iterations},
                    {"gradient_tolerance", c.optimizer.gradient_tolerance},
                    {"loglik_tolerance", c.optimizer.loglik_tolerance},
                    {"seed", c.optimizer.seed}};
  j["bootstrap"] = {{"replicates", c.bootstrap.replicates},
                    {"seed", c.bootstrap.seed},
                    {"corner_bound_increments", c.optimizer.corner_bound_increments},
                    {"cluster", c.bootstrap.cluster}};
  j["frontier"] = {{"n_directions", c.frontier.n_directions},
                   {"seed", c.frontier.seed},
                   {"weighting", std::string(to_string(c.frontier.weighting))}};
  j["k"] = c.k ? json(*c.k) : json(nullptr);
  j["filters"] = json::array();
  for (const auto& f : c.filters) {
    json jf = {{"column", f.column}};
    if (f.min) jf["min"] = *f.min;
    if (f.max) jf["max"] = *f.max;
    j["filters"].push_back(jf);
  }
  j["paths"] = {{"households", c.paths.households},
                {"treatment_effects", c.paths.treatment_effects},
                {"survey", c.paths.survey},
                {"params", c.paths.params},
                {"output_dir", c.paths.output_dir}};
  return j;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path, e.what()));
  }
  return run_config_from_json(j);
}

RunConfig load_run_config_resolved(const std::string& path) {
  RunConfig c = load_run_config(path);
  const auto base = std::filesystem::path(path).parent_path();
  auto fix = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  fix(c.paths.households);
  fix(c.paths.treatment_effects);
  fix(c.paths.survey);
  fix(c.paths.params);
  fix(c.paths.output_dir);
  return c;
}

LoadedDataset read_dataset(std::istream& in, const RunConfig& config) {
  config.validate();
  const auto table = csv::read(in);
  auto need = [&](const std::string& name) {
    auto c = table.column(name);
    if (!c) throw DataError(fmt::format("households CSV lacks column '{}'", name));
    return *c;
  };

  std::set<std::size_t> used;
  auto claim = [&](const std::string& name) {
    const auto c = need(name);
    used.insert(c);
    return c;
  };
  const auto c_id = claim("household_id");
  const auto c_tier = claim("tier");
  const auto c_treated = claim("treated");
  std::map<std::string, std::size_t> c_cov;
  for (const auto& name : config.welfare_covariates) c_cov[name] = claim(name);
  for (const auto& name : config.het_covariates) c_cov[name] = claim(name);
  std::vector<std::pair<std::size_t, std::size_t>> c_out;
  for (const auto& o : config.outcomes) {
    c_out.emplace_back(claim(o.name + "_baseline"), claim(o.name + "_endline"));
  }
  std::optional<std::size_t> c_cluster = table.column("cluster");
  if (c_cluster) used.insert(*c_cluster);
  std::vector<std::pair<std::size_t, std::size_t>> c_filter;
  for (std::size_t f = 0; f < config.filters.size(); ++f) {
    c_filter.emplace_back(f, need(config.filters[f].column));
  }

  LoadedDataset result;
  Dataset& d = result.data;
  d.outcomes = config.outcomes;
  d.welfare_covariates = config.welfare_covariates;
  d.het_covariates = config.het_covariates;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.line_numbers[r];
    ++result.report.n_rows;

    bool keep = true;
    for (const auto& [f, col] : c_filter) {
      const auto& filter = config.filters[f];
      std::optional<double> v;
      try {
        v = csv::parse_double(row[col], line, filter.column);
      } catch (const DataError&) {
        v.reset();
      }
      if (!v || (filter.min && *v < *filter.min) || (filter.max && *v > *filter.max)) {
        ++result.report.filtered_by[filter.column];
        keep = false;
        break;
      }
    }
    if (!keep) {
      ++result.report.n_filtered;
      continue;
    }

    Household h;
    h.id = row[c_id];
    if (h.id.empty()) throw DataError(fmt::format("line {}: empty household_id", line));
    if (!seen.insert(h.id).second) {
      throw DataError(fmt::format("line {}: duplicate household_id '{}'", line, h.id));
    }
    if (!row[c_tier].empty()) h.tier = parse_int(row[c_tier], line, "tier");
    h.treated = parse_flag(row[c_treated], line, "treated");
    for (const auto& name : config.welfare_covariates) {
      auto v = csv::parse_double(row[c_cov[name]], line, name);
      if (!v) throw DataError(fmt::format("line {}, column '{}': welfare covariate is empty", line, name));
      h.x[name] = *v;
    }
    for (const auto& name : config.het_covariates) {
      auto v = csv::parse_double(row[c_cov[name]], line, name);
      if (v) h.x_tilde[name] = *v;
    }
    for (std::size_t o = 0; o < config.outcomes.size(); ++o) {
      const auto& name = config.outcomes[o].name;
      h.y_baseline[name] = csv::parse_double(row[c_out[o].first], line, name + "_baseline");
      h.y_endline[name] = csv::parse_double(row[c_out[o].second], line, name + "_endline");
    }
    if (c_cluster && !row[*c_cluster].empty()) h.cluster = row[*c_cluster];
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (!used.count(c)) h.extra[table.header[c]] = row[c];
    }
    d.households.push_back(std::move(h));
  }
  d.validate();
  return result;
}

LoadedDataset load_dataset(const std::string& path, const RunConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open households file '{}'", path));
  return read_dataset(in, config);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  std::vector<std::string> covs = data.welfare_covariates;
  for (const auto& c : data.het_covariates) {
    if (std::find(covs.begin(), covs.end(), c) == covs.end()) covs.push_back(c);
  }
  bool any_cluster = false;
  std::set<std::string> extras;
  for (const auto& h : data.households) {
    any_cluster = any_cluster || h.cluster.has_value();
    for (const auto& [k, _] : h.extra) extras.insert(k);
  }
  std::vector<std::string> header = {"household_id", "tier", "treated"};
  header.insert(header.end(), covs.begin(), covs.end());
  for (const auto& o : data.outcomes) {
    header.push_back(o.name + "_baseline");
    header.push_back(o.name + "_endline");
  }
  if (any_cluster) header.push_back("cluster");
  header.insert(header.end(), extras.begin(), extras.end());
  csv::write_row(out, header);

  auto num = [](const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); };
  for (const auto& h : data.households) {
    std::vector<std::string> row = {h.id, h.tier ? std::to_string(*h.tier) : std::string(),
                                    h.treated ? "1" : "0"};
    for (const auto& c : covs) {
      if (auto it = h.x.find(c); it != h.x.end()) {
        row.push_back(csv::format_double(it->second));
      } else if (auto jt = h.x_tilde.find(c); jt != h.x_tilde.end()) {
        row.push_back(csv::format_double(jt->second));
      } else {
        row.emplace_back();
      }
    }
    for (const auto& o : data.outcomes) {
      auto b = h.y_baseline.find(o.name);
      auto e = h.y_endline.find(o.name);
      row.push_back(b == h.y_baseline.end() ? std::string() : num(b->second));
      row.push_back(e == h.y_endline.end() ? std::string() : num(e->second));
    }
    if (any_cluster) row.push_back(h.cluster.value_or(""));
    for (const auto& k : extras) {
      auto it = h.extra.find(k);
      row.push_back(it == h.extra.end() ? std::string() : it->second);
    }
    csv::write_row(out, row);
  }
}

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path));
  write_dataset(out, data);
}

json to_json(const PreferenceParams& p) {
  json j;
  j["omega"] = p.omega;
  json inc = json::object();
  for (const auto& [k, w] : p.omega) inc[k] = to_increments(w);
  j["omega_increments"] = inc;
  j["lambda"] = p.lambda;
  j["C"] = p.C;
  j["sigma"] = p.sigma;
  return j;
}

PreferenceParams params_from_json(const json& j_in) {
  const json& j = j_in.contains("params") ? j_in["params"] : j_in;
  PreferenceParams p;
  try {
    if (j.contains("omega_increments")) {
      for (const auto& [k, v] : j["omega_increments"].items()) p.omega[k] = from_increments(v.get<double>());
    } else if (j.contains("omega")) {
      for (const auto& [k, v] : j["omega"].items()) p.omega[k] = v.get<double>();
    }
    if (j.contains("lambda")) {
      for (const auto& [k, v] : j["lambda"].items()) p.lambda[k] = v.get<double>();
    }
    if (j.contains("C")) p.C = j["C"].get<double>();
    if (j.contains("sigma")) p.sigma = j["sigma"].get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed preference parameters: {}", e.what()));
  }
  p.validate();
  return p;
}

}  // namespace polval
