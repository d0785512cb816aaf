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

#include "polval/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace polval {
namespace {

constexpr double kC1 = 1e-4;
constexpr double kC2 = 0.9;

struct Trial {
  double alpha = 0.0;
  double f = 0.0;
  double slope = 0.0;  // directional derivative
  Eigen::VectorXd x;
  Eigen::VectorXd g;
};

// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db), kept
// inside the bracket.
double cubic_step(const Trial& a, const Trial& b) {
  const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.slope * b.slope;
  const double lo = std::min(a.alpha, b.alpha);
  const double hi = std::max(a.alpha, b.alpha);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    const double step = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) /
                                      (b.slope - a.slope + 2.0 * d2);
    const double margin = 0.1 * (hi - lo);
    if (std::isfinite(step) && step > lo + margin && step < hi - margin) return step;
  }
  return 0.5 * (lo + hi);
}

class LineSearch {
 public:
  LineSearch(const Objective& f, const Eigen::VectorXd& x, double fx,
             const Eigen::VectorXd& gx, const Eigen::VectorXd& dir, int* evals)
      : f_(f), x_(x), dir_(dir), evals_(evals) {
    zero_.alpha = 0.0;
    zero_.f = fx;
    zero_.slope = gx.dot(dir);
    zero_.x = x;
    zero_.g = gx;
  }

  bool run(double alpha0, Trial* out) {
    Trial prev = zero_;
    double alpha = alpha0;
    for (int it = 0; it < 40; ++it) {
      Trial cur = eval(alpha);
      if (!std::isfinite(cur.f)) {
        alpha = 0.5 * (prev.alpha + alpha);
        continue;
      }
      if (cur.f > zero_.f + kC1 * alpha * zero_.slope || (it > 0 && cur.f >= prev.f)) {
        return zoom(prev, cur, out);
      }
      if (std::abs(cur.slope) <= -kC2 * zero_.slope) {
        *out = std::move(cur);
        return true;
      }
      if (cur.slope >= 0.0) return zoom(cur, prev, out);
      prev = std::move(cur);
      alpha *= 2.0;
    }
    return false;
  }

 private:
  Trial eval(double alpha) {
    Trial t;
    t.alpha = alpha;
    t.x = x_ + alpha * dir_;
    t.g.resize(x_.size());
    t.f = f_(t.x, &t.g);
    ++*evals_;
    t.slope = std::isfinite(t.f) ? t.g.dot(dir_) : 0.0;
    return t;
  }

  bool zoom(Trial lo, Trial hi, Trial* out) {
    for (int it = 0; it < 60; ++it) {
      const double alpha = cubic_step(lo, hi);
      if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
      Trial cur = eval(alpha);
      if (!std::isfinite(cur.f) || cur.f > zero_.f + kC1 * alpha * zero_.slope ||
          cur.f >= lo.f) {
        hi = std::move(cur);
        continue;
      }
      if (std::abs(cur.slope) <= -kC2 * zero_.slope) {
        *out = std::move(cur);
        return true;
      }
      if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = std::move(cur);
    }
    // Accept any strict decrease found.
    if (lo.alpha > 0.0 && lo.f < zero_.f) {
      *out = std::move(lo);
      return true;
    }
    return false;
  }

  const Objective& f_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& dir_;
  int* evals_;
  Trial zero_;
};

}  // namespace

double scaled_gradient_norm(const Eigen::VectorXd& g, const Eigen::VectorXd& x) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    out = std::max(out, std::abs(g(i)) * std::max(1.0, std::abs(x(i))));
  }
  return out;
}

MinimizeResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0,
                             const MinimizeOptions& options) {
  const Eigen::Index n = x0.size();
  MinimizeResult res;
  res.x = std::move(x0);
  res.gradient.resize(n);
  res.value = f(res.x, &res.gradient);
  res.evaluations = 1;
  if (!std::isfinite(res.value)) {
    res.status = "non-finite objective at start";
    res.gradient_norm = std::numeric_limits<double>::infinity();
    return res;
  }

  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;
  int stall = 0;
  res.status = "iteration limit";
  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    res.gradient_norm = scaled_gradient_norm(res.gradient, res.x);
    if (res.gradient_norm < options.gradient_tolerance) {
      res.converged = true;
      res.status = "gradient tolerance";
      return res;
    }
    Eigen::VectorXd dir = -h_inv * res.gradient;
    if (dir.dot(res.gradient) >= 0.0) {
      h_inv.setIdentity();
      fresh = true;
      dir = -res.gradient;
    }
    double alpha0 = 1.0;
    if (fresh) alpha0 = std::min(1.0, 1.0 / std::max(1e-12, dir.lpNorm<Eigen::Infinity>()));

    Trial step;
    LineSearch search(f, res.x, res.value, res.gradient, dir, &res.evaluations);
    if (!search.run(alpha0, &step)) {
      if (fresh) {
        res.status = "line search failed";
        break;
      }
      h_inv.setIdentity();
      fresh = true;
      continue;
    }

    const Eigen::VectorXd s = step.x - res.x;
    const Eigen::VectorXd y = step.g - res.gradient;
    const double change = res.value - step.f;
    res.x = std::move(step.x);
    res.gradient = std::move(step.g);
    const double prev_value = res.value;
    res.value = step.f;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) {
        h_inv *= sy / y.squaredNorm();
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd left =
          Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
      h_inv = left * h_inv * left.transpose() + rho * s * s.transpose();
      fresh = false;
    }

    if (change <= options.value_tolerance * std::max(1.0, std::abs(prev_value))) {
      if (++stall >= 5) {
        res.status = "objective change below tolerance";
        ++res.iterations;
        break;
      }
    } else {
      stall = 0;
    }
  }
  res.gradient_norm = scaled_gradient_norm(res.gradient, res.x);
  res.converged = res.gradient_norm < options.gradient_tolerance;
  if (res.converged) res.status = "gradient tolerance";
  return res;
}

}  // namespace polval
