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

#ifndef POLVAL_OPTIMIZER_HPP_
#define POLVAL_OPTIMIZER_HPP_

#include <functional>
#include <string>

#include <Eigen/Core>

namespace polval {

// Objective returning f(x) and writing the gradient into *grad.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct MinimizeOptions {
  int max_iterations = 2000;
  double gradient_tolerance = 1e-6;  // on scaled_gradient_norm
  double value_tolerance = 1e-8;     // relative change in f
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::string status;
};

// max_i |g_i| * max(1, |x_i|).
double scaled_gradient_norm(const Eigen::VectorXd& g, const Eigen::VectorXd& x);

// Dense BFGS with a strong-Wolfe line search. Intended for the small
// parameter vectors of the preference model (tens of entries).
MinimizeResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0,
                             const MinimizeOptions& options = {});

}  // namespace polval

#endif  // POLVAL_OPTIMIZER_HPP_
