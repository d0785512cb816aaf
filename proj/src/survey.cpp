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

#include "polval/survey.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "polval/csv.hpp"
#include "polval/errors.hpp"
#include "polval/model.hpp"
#include "polval/rng.hpp"

namespace polval {
namespace {

// -1, 0 or +1 for a monotone sequence; throws if the direction changes.
int direction(std::span<const MplRow> rows, double MplRow::*field) {
  int dir = 0;
  bool strict = true;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const double d = rows[r].*field - rows[r - 1].*field;
    if (d == 0.0) {
      strict = false;
      continue;
    }
    const int s = d > 0.0 ? 1 : -1;
    if (dir != 0 && s != dir) throw DataError("MPL amounts are not monotone along the rows");
    dir = s;
  }
  if (dir != 0 && !strict) throw DataError("MPL amounts are not strictly monotone along the rows");
  return dir;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::optional<Crossover> crossover(std::span<const MplRow> rows) {
  if (rows.size() < 2) throw DataError("an MPL needs at least two rows");
  const int da = direction(rows, &MplRow::amount_a);
  const int db = direction(rows, &MplRow::amount_b);
  if (da == 0 && db == 0) throw DataError("MPL amounts do not vary along the rows");

  std::optional<std::size_t> at;
  for (std::size_t r = 0; r + 1 < rows.size(); ++r) {
    if (rows[r].chose_a != rows[r + 1].chose_a) {
      if (at) return std::nullopt;  // multiple switches
      at = r;
    }
  }
  if (!at) return std::nullopt;
  const auto& lo = rows[*at];
  const auto& hi = rows[*at + 1];
  return Crossover{0.5 * (lo.amount_a + hi.amount_a), 0.5 * (lo.amount_b + hi.amount_b)};
}

double omega_from_crossover(double a, double b, double x_delta) {
  if (x_delta == 0.0 || !std::isfinite(x_delta)) {
    throw DomainError("omega crossover needs a non-zero attribute difference");
  }
  if (!(a > 0.0) || !(b > 0.0)) {
    throw DomainError(fmt::format("omega crossover needs positive amounts, got a={} b={}", a, b));
  }
  return std::pow(b / a, 1.0 / x_delta);
}

double lambda_from_crossover(double a, double b) {
  if (b == 0.0) throw DomainError("lambda crossover needs a non-zero outcome amount");
  return a / b;
}

std::map<std::string, double> SurveyEstimate::omega() const {
  std::map<std::string, double> out;
  for (const auto& [k, inc] : omega_median) out[k] = from_increments(inc);
  return out;
}

SurveyEstimate aggregate(const std::vector<MplResponse>& responses, std::uint64_t seed,
                         int bootstrap_draws) {
  SurveyEstimate est;
  // respondent -> key -> item values
  std::map<std::string, std::map<std::string, std::vector<double>>> items;
  std::set<std::string> keys;
  for (const auto& r : responses) {
    ++est.n_items;
    const std::string key =
        (r.kind == SurveyItemKind::kOmega ? "omega:" : "lambda:") + r.focal;
    keys.insert(key);
    const auto c = crossover(r.rows);
    if (!c) {
      ++est.n_invalid_items;
      continue;
    }
    double value = 0.0;
    try {
      value = r.kind == SurveyItemKind::kOmega
                  ? to_increments(omega_from_crossover(c->a, c->b, r.x_delta))
                  : lambda_from_crossover(c->a, c->b);
    } catch (const DomainError&) {
      ++est.n_invalid_items;
      continue;
    }
    items[r.respondent_id][key].push_back(value);
  }
  est.n_respondents = items.size();

  // Per-respondent means.
  std::vector<std::string> respondents;
  std::vector<std::map<std::string, double>> means;
  for (const auto& [id, per_key] : items) {
    respondents.push_back(id);
    std::map<std::string, double> m;
    for (const auto& [key, values] : per_key) {
      m[key] = std::accumulate(values.begin(), values.end(), 0.0) /
               static_cast<double>(values.size());
    }
    means.push_back(std::move(m));
  }

  auto medians_over = [&](const std::vector<std::size_t>& sample) {
    std::map<std::string, std::vector<double>> pooled;
    for (auto s : sample) {
      for (const auto& [key, v] : means[s]) pooled[key].push_back(v);
    }
    std::map<std::string, double> out;
    for (auto& [key, v] : pooled) out[key] = median(std::move(v));
    return out;
  };

  std::vector<std::size_t> all(respondents.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto point = medians_over(all);
  for (const auto& key : keys) {
    auto it = point.find(key);
    if (it == point.end()) {
      est.missing.push_back(key);
      continue;
    }
    const auto colon = key.find(':');
    const std::string name = key.substr(colon + 1);
    (key.rfind("omega:", 0) == 0 ? est.omega_median : est.lambda_median)[name] = it->second;
    std::size_t count = 0;
    for (const auto& m : means) count += m.count(key);
    est.n_valid[key] = count;
  }

  std::map<std::string, std::vector<double>> draws;
  Rng rng(seed, 0);
  for (int b = 0; b < bootstrap_draws && !all.empty(); ++b) {
    std::vector<std::size_t> sample(all.size());
    for (auto& s : sample) s = static_cast<std::size_t>(rng.below(all.size()));
    for (const auto& [key, v] : medians_over(sample)) draws[key].push_back(v);
  }
  for (const auto& [key, v] : point) {
    const auto& d = draws[key];
    if (d.size() < 2) {
      est.se[key] = 0.0;
      continue;
    }
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    est.se[key] = std::sqrt(ss / static_cast<double>(d.size() - 1));
  }
  return est;
}

std::vector<MplResponse> read_survey_csv(std::istream& in) {
  const auto table = csv::read(in);
  const char* names[] = {"respondent_id", "focal",    "kind",     "x_delta",
                         "row_index",     "amount_a", "amount_b", "chose_a"};
  std::size_t col[8];
  for (int i = 0; i < 8; ++i) {
    auto c = table.column(names[i]);
    if (!c) throw DataError(fmt::format("survey CSV lacks column '{}'", names[i]));
    col[i] = *c;
  }
  std::vector<MplResponse> out;
  double last_index = 0.0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.line_numbers[r];
    auto number = [&](int i) {
      auto v = csv::parse_double(row[col[i]], line, names[i]);
      if (!v) throw DataError(fmt::format("line {}: empty '{}'", line, names[i]));
      return *v;
    };
    const std::string& kind_text = row[col[2]];
    SurveyItemKind kind;
    if (kind_text == "omega") {
      kind = SurveyItemKind::kOmega;
    } else if (kind_text == "lambda") {
      kind = SurveyItemKind::kLambda;
    } else {
      throw DataError(fmt::format("line {}: kind must be 'omega' or 'lambda', got '{}'", line,
                                  kind_text));
    }
    const std::string& chose = row[col[7]];
    bool chose_a;
    if (chose == "1" || chose == "true" || chose == "a") {
      chose_a = true;
    } else if (chose == "0" || chose == "false" || chose == "b") {
      chose_a = false;
    } else {
      throw DataError(fmt::format("line {}: cannot parse chose_a '{}'", line, chose));
    }
    const double index = number(4);
    const bool continues = !out.empty() && out.back().respondent_id == row[col[0]] &&
                           out.back().focal == row[col[1]] && out.back().kind == kind &&
                           index > last_index;
    if (!continues) {
      MplResponse item;
      item.respondent_id = row[col[0]];
      item.focal = row[col[1]];
      item.kind = kind;
      item.x_delta = kind == SurveyItemKind::kOmega ? number(3) : 0.0;
      out.push_back(std::move(item));
    }
    out.back().rows.push_back(MplRow{number(5), number(6), chose_a});
    last_index = index;
  }
  return out;
}

std::vector<MplResponse> load_survey_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path));
  return read_survey_csv(in);
}

void write_survey_csv(std::ostream& out, const std::vector<MplResponse>& responses) {
  csv::write_row(out, {"respondent_id", "focal", "kind", "x_delta", "row_index", "amount_a",
                       "amount_b", "chose_a"});
  for (const auto& r : responses) {
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      const auto& row = r.rows[i];
      csv::write_row(out, {r.respondent_id, r.focal,
                           r.kind == SurveyItemKind::kOmega ? "omega" : "lambda",
                           csv::format_double(r.x_delta), std::to_string(i),
                           csv::format_double(row.amount_a), csv::format_double(row.amount_b),
                           row.chose_a ? "1" : "0"});
    }
  }
}

}  // namespace polval
