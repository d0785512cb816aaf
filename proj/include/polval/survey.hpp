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

#ifndef POLVAL_SURVEY_HPP_
#define POLVAL_SURVEY_HPP_

// Stated preferences from multiple price lists (MPLs).
//
// Welfare-weight items compare consumption gains a (household i) and b
// (household i') that differ only in one attribute by x_delta:
//   omega = (b / a) ^ (1 / x_delta).
// Impact-weight items compare a consumption gain a with a gain b on another
// outcome for the same household: lambda = a / b.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace polval {

enum class SurveyItemKind { kOmega, kLambda };

struct MplRow {
  double amount_a = 0.0;
  double amount_b = 0.0;
  bool chose_a = false;
};

struct MplResponse {
  std::string respondent_id;
  std::string focal;  // covariate (omega items) or outcome (lambda items)
  SurveyItemKind kind = SurveyItemKind::kOmega;
  double x_delta = 0.0;
  std::vector<MplRow> rows;
};

struct Crossover {
  double a = 0.0;
  double b = 0.0;
};

// Midpoint of the two rows bracketing the single switch, or nullopt when the
// list never switches or switches more than once. Throws DataError when the
// amounts are not monotone along the rows or fewer than two rows are given.
std::optional<Crossover> crossover(std::span<const MplRow> rows);

double omega_from_crossover(double a, double b, double x_delta);
double lambda_from_crossover(double a, double b);

struct SurveyEstimate {
  std::map<std::string, double> omega_median;   // log1.01 increments
  std::map<std::string, double> lambda_median;
  std::map<std::string, double> se;             // keys omega:<k>, lambda:<j>
  std::map<std::string, std::size_t> n_valid;   // respondents per key
  std::vector<std::string> missing;             // keys with no valid response
  std::size_t n_respondents = 0;
  std::size_t n_items = 0;
  std::size_t n_invalid_items = 0;

  // Median omega as a multiplier (1.01 ^ increments).
  std::map<std::string, double> omega() const;
};

// A respondent's repeated items on the same focal attribute are averaged
// (in increments for omega) before the cross-respondent median. SEs are the
// std dev of medians over `bootstrap_draws` respondent resamples.
SurveyEstimate aggregate(const std::vector<MplResponse>& responses, std::uint64_t seed = 0,
                         int bootstrap_draws = 200);

// CSV: respondent_id,focal,kind,x_delta,row_index,amount_a,amount_b,chose_a
// Consecutive rows of one respondent, focal and kind form one item; an item
// ends when row_index stops increasing.
std::vector<MplResponse> read_survey_csv(std::istream& in);
std::vector<MplResponse> load_survey_csv(const std::string& path);
void write_survey_csv(std::ostream& out, const std::vector<MplResponse>& responses);

}  // namespace polval

#endif  // POLVAL_SURVEY_HPP_
