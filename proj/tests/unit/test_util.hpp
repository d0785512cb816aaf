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

#ifndef POLVAL_TESTS_TEST_UTIL_HPP_
#define POLVAL_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "polval/model.hpp"
#include "polval/rank_likelihood.hpp"
#include "polval/rng.hpp"

namespace polval::testing {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Random problem with K covariates, J weighted outcomes and a random tier
// assignment over at most `max_tiers` levels (at least two are non-empty).
inline RankProblem random_problem(Rng& rng, std::size_t n, std::size_t k, std::size_t j,
                                  std::size_t max_tiers) {
  RankProblem p;
  for (std::size_t i = 0; i < n; ++i) p.ids.push_back(fmt::format("h{}", i));
  for (std::size_t c = 0; c < k; ++c) p.covariates.push_back(fmt::format("x{}", c));
  p.outcomes.push_back("y0");
  for (std::size_t m = 0; m < j; ++m) p.outcomes.push_back(fmt::format("y{}", m + 1));
  p.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  p.dv.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j + 1));
  for (Eigen::Index r = 0; r < p.x.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.x.cols(); ++c) p.x(r, c) = rng.normal();
    for (Eigen::Index c = 0; c < p.dv.cols(); ++c) p.dv(r, c) = rng.normal();
  }
  std::vector<double> tier(n);
  for (;;) {
    for (auto& t : tier) t = static_cast<double>(rng.below(max_tiers));
    if (std::adjacent_find(tier.begin(), tier.end(), std::not_equal_to<>()) != tier.end()) break;
  }
  p.tiers = tiers_from_values(tier);
  return p;
}

inline Eigen::VectorXd random_params(Rng& rng, const RankProblem& p, double spread = 0.5) {
  Eigen::VectorXd z(static_cast<Eigen::Index>(p.n_params()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = spread * rng.normal();
  return z;
}

// Strict ranking tiers from an order of row indices, best first.
inline IndexTiers strict_tiers(const std::vector<std::size_t>& order) {
  IndexTiers t;
  for (auto i : order) t.push_back({i});
  return t;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / fmt::format("polval_test_{}", name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace polval::testing

#endif  // POLVAL_TESTS_TEST_UTIL_HPP_
