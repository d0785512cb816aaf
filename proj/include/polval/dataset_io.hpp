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

#ifndef POLVAL_DATASET_IO_HPP_
#define POLVAL_DATASET_IO_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "polval/counterfactual.hpp"
#include "polval/hte.hpp"
#include "polval/inference.hpp"
#include "polval/model.hpp"

namespace polval {

// Keeps rows whose `column` parses as a number within [min, max].
// Rows with an empty or non-numeric cell in that column are dropped.
struct RowFilter {
  std::string column;
  std::optional<double> min;
  std::optional<double> max;
};

struct BootstrapConfig {
  int replicates = 100;
  std::uint64_t seed = 0;
  bool cluster = false;
};

struct FrontierConfig {
  std::size_t n_directions = kDefaultFrontierDirections;
  std::uint64_t seed = 0;
  FrontierWeighting weighting = FrontierWeighting::kRaw;
};

struct RunPaths {
  std::string households;
  std::string treatment_effects;
  std::string survey;
  std::string params;  // fitted preferences (infer output) for counterfactual/serve
  std::string output_dir = ".";
};

struct RunConfig {
  std::vector<OutcomeSpec> outcomes;
  std::vector<std::string> welfare_covariates;
  std::vector<std::string> het_covariates;
  std::map<std::string, TeEstimator> estimators;  // absent outcome = OLS
  ForestConfig forest;
  OptimizerConfig optimizer;
  BootstrapConfig bootstrap;
  FrontierConfig frontier;
  std::optional<std::size_t> k;  // allocation size; defaults to #treated
  std::vector<RowFilter> filters;
  RunPaths paths;

  void validate() const;
  // FNV-1a 64 of the canonical JSON form, as 16 hex digits.
  std::string fingerprint() const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);
RunConfig load_run_config(const std::string& path);

// Paths inside a config file are taken relative to the file's directory.
RunConfig load_run_config_resolved(const std::string& path);

struct LoadReport {
  std::size_t n_rows = 0;      // data rows read
  std::size_t n_filtered = 0;  // rows dropped by filters
  std::map<std::string, std::size_t> filtered_by;  // first failing filter column
};

struct LoadedDataset {
  Dataset data;
  LoadReport report;
};

// Columns: household_id, tier, treated, covariates, <outcome>_baseline,
// <outcome>_endline, optional cluster; unknown columns are kept as extras.
LoadedDataset read_dataset(std::istream& in, const RunConfig& config);
LoadedDataset load_dataset(const std::string& path, const RunConfig& config);

void write_dataset(std::ostream& out, const Dataset& data);
void save_dataset(const std::string& path, const Dataset& data);

std::uint64_t fnv1a64(std::string_view bytes);

nlohmann::json to_json(const PreferenceParams& params);
PreferenceParams params_from_json(const nlohmann::json& j);

}  // namespace polval

#endif  // POLVAL_DATASET_IO_HPP_
