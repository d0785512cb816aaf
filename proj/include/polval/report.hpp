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

#ifndef POLVAL_REPORT_HPP_
#define POLVAL_REPORT_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "polval/counterfactual.hpp"
#include "polval/dataset_io.hpp"
#include "polval/hte.hpp"
#include "polval/inference.hpp"
#include "polval/survey.hpp"

namespace polval {

// Header fields shared by every JSON report.
struct ReportMeta {
  std::string command;
  std::string fingerprint;
  std::uint64_t seed = 0;
};

nlohmann::json meta_json(const ReportMeta& meta);

// `se` uses bootstrap keys: theta:<k> (ln omega), lambda:<j>, C, sigma.
nlohmann::json estimate_json(const EstimateResult& r, const ReportMeta& meta,
                             const std::map<std::string, double>* se = nullptr);
std::string estimate_text(const EstimateResult& r, const std::string& title,
                          const std::map<std::string, double>* se = nullptr);

nlohmann::json bootstrap_json(const EstimateResult& point, const BootstrapResult& boot,
                              const ReportMeta& meta);

nlohmann::json fit_te_json(const TeBuildResult& fit, const Dataset& data, const ReportMeta& meta);
std::string fit_te_text(const TeBuildResult& fit, const Dataset& data);

nlohmann::json counterfactual_json(const CounterfactualResult& r, const PreferenceParams& params,
                                   std::size_t k, const ReportMeta& meta,
                                   std::size_t top_n = 50);
std::string counterfactual_text(const CounterfactualResult& r, std::size_t k);

nlohmann::json frontier_json(const FrontierResult& r, const ReportMeta& meta);
std::string frontier_text(const FrontierResult& r);
// One row per point: direction, the impact triple and the hull flag.
std::string frontier_plot_csv(const FrontierResult& r);

nlohmann::json survey_json(const SurveyEstimate& s, const ReportMeta& meta);
std::string survey_text(const SurveyEstimate& s);

nlohmann::json load_report_json(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace polval

#endif  // POLVAL_REPORT_HPP_
