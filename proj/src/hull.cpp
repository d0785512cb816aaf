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

#include "polval/hull.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <utility>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

namespace polval {
namespace {

struct Face {
  std::array<std::size_t, 3> v;
  Eigen::Vector3d normal;  // unit, outward
  double offset;           // normal . p for p on the face
  bool alive = true;
};

Face make_face(const std::vector<Eigen::Vector3d>& pts, std::size_t a, std::size_t b,
               std::size_t c) {
  Face f;
  f.v = {a, b, c};
  Eigen::Vector3d n = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
  const double len = n.norm();
  f.normal = len > 0.0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::Zero();
  f.offset = f.normal.dot(pts[a]);
  return f;
}

double cross2(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

}  // namespace

ConvexHull3::ConvexHull3(std::vector<Eigen::Vector3d> points) : points_(std::move(points)) {
  if (points_.empty()) return;
  Eigen::Vector3d lo = points_[0], hi = points_[0];
  for (const auto& p : points_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double extent = (hi - lo).maxCoeff();
  tol_ = 1e-10 * std::max(extent, 1e-300);

  // First occurrence of each distinct point.
  std::vector<std::size_t> order(points_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& p = points_[a];
    const auto& q = points_[b];
    if (p.x() != q.x()) return p.x() < q.x();
    if (p.y() != q.y()) return p.y() < q.y();
    return p.z() < q.z();
  });
  std::vector<std::size_t> unique;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (r > 0 && points_[order[r]] == points_[order[r - 1]]) continue;
    unique.push_back(order[r]);
  }
  std::sort(unique.begin(), unique.end());

  // Initial simplex by successive farthest points.
  std::size_t a = unique[0];
  for (auto i : unique) {
    if (points_[i].x() < points_[a].x()) a = i;
  }
  std::size_t b = a;
  double best = 0.0;
  for (auto i : unique) {
    const double d = (points_[i] - points_[a]).norm();
    if (d > best) {
      best = d;
      b = i;
    }
  }
  if (best <= tol_) {
    build_lower(unique);
    return;
  }
  const Eigen::Vector3d dir = (points_[b] - points_[a]).normalized();
  std::size_t c = a;
  best = 0.0;
  for (auto i : unique) {
    const Eigen::Vector3d w = points_[i] - points_[a];
    const double d = (w - w.dot(dir) * dir).norm();
    if (d > best) {
      best = d;
      c = i;
    }
  }
  if (best <= tol_) {
    build_lower(unique);
    return;
  }
  const Eigen::Vector3d n = (points_[b] - points_[a]).cross(points_[c] - points_[a]).normalized();
  std::size_t d = a;
  best = 0.0;
  for (auto i : unique) {
    const double dist = std::abs(n.dot(points_[i] - points_[a]));
    if (dist > best) {
      best = dist;
      d = i;
    }
  }
  if (best <= tol_) {
    build_lower(unique);
    return;
  }
  build_3d(unique, {a, b, c, d});
}

void ConvexHull3::build_3d(const std::vector<std::size_t>& unique,
                           const std::array<std::size_t, 4>& s) {
  dimension_ = 3;
  const Eigen::Vector3d centroid =
      (points_[s[0]] + points_[s[1]] + points_[s[2]] + points_[s[3]]) / 4.0;
  std::vector<Face> faces;
  auto add_face = [&](std::size_t a, std::size_t b, std::size_t c) {
    Face f = make_face(points_, a, b, c);
    if (f.normal.dot(centroid) - f.offset > 0.0) f = make_face(points_, a, c, b);
    faces.push_back(f);
  };
  add_face(s[0], s[1], s[2]);
  add_face(s[0], s[1], s[3]);
  add_face(s[0], s[2], s[3]);
  add_face(s[1], s[2], s[3]);

  for (auto p : unique) {
    if (std::find(s.begin(), s.end(), p) != s.end()) continue;
    const Eigen::Vector3d& q = points_[p];
    std::vector<std::size_t> visible;
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (faces[f].alive && faces[f].normal.dot(q) - faces[f].offset > tol_) visible.push_back(f);
    }
    if (visible.empty()) continue;
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (auto f : visible) {
      const auto& v = faces[f].v;
      for (int e = 0; e < 3; ++e) edges.emplace(v[e], v[(e + 1) % 3]);
      faces[f].alive = false;
    }
    for (const auto& [u, w] : edges) {
      if (edges.count({w, u})) continue;  // interior to the visible region
      Face f = make_face(points_, u, w, p);
      faces.push_back(f);
    }
  }

  std::set<std::size_t> verts;
  for (const auto& f : faces) {
    if (!f.alive) continue;
    faces_.push_back(f.v);
    verts.insert(f.v.begin(), f.v.end());
  }
  vertices_.assign(verts.begin(), verts.end());
  Eigen::Vector3d inner = Eigen::Vector3d::Zero();
  for (auto v : vertices_) inner += points_[v];
  inner /= static_cast<double>(vertices_.size());
  volume_ = 0.0;
  for (const auto& f : faces_) {
    volume_ += std::abs((points_[f[0]] - inner).dot(
                   (points_[f[1]] - inner).cross(points_[f[2]] - inner))) /
               6.0;
  }
}

void ConvexHull3::build_lower(const std::vector<std::size_t>& unique) {
  volume_ = 0.0;
  origin_ = points_[unique[0]];
  // Principal directions of the centered cloud.
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (auto i : unique) {
    const Eigen::Vector3d d = points_[i] - origin_;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  basis_.col(0) = eig.eigenvectors().col(2);
  basis_.col(1) = eig.eigenvectors().col(1);

  std::vector<std::pair<Eigen::Vector2d, std::size_t>> pts;
  for (auto i : unique) pts.emplace_back(basis_.transpose() * (points_[i] - origin_), i);
  double spread0 = 0.0, spread1 = 0.0;
  for (const auto& [p, i] : pts) {
    spread0 = std::max(spread0, std::abs(p.x()));
    spread1 = std::max(spread1, std::abs(p.y()));
  }
  if (spread0 <= tol_) {
    dimension_ = 0;
    vertices_ = {unique[0]};
    polygon_ = {Eigen::Vector2d::Zero()};
    return;
  }
  std::sort(pts.begin(), pts.end(), [](const auto& l, const auto& r) {
    return l.first.x() != r.first.x() ? l.first.x() < r.first.x() : l.first.y() < r.first.y();
  });
  if (spread1 <= tol_) {
    dimension_ = 1;
    vertices_ = {std::min(pts.front().second, pts.back().second),
                 std::max(pts.front().second, pts.back().second)};
    polygon_ = {Eigen::Vector2d(pts.front().first.x(), 0.0),
                Eigen::Vector2d(pts.back().first.x(), 0.0)};
    return;
  }
  dimension_ = 2;
  // Andrew's monotone chain.
  std::vector<std::pair<Eigen::Vector2d, std::size_t>> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross2(hull[k - 2].first, hull[k - 1].first, pts[i].first) <= tol_ * tol_) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross2(hull[k - 2].first, hull[k - 1].first, pts[i - 1].first) <= tol_ * tol_) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  std::set<std::size_t> verts;
  for (const auto& [p, i] : hull) {
    polygon_.push_back(p);
    verts.insert(i);
  }
  vertices_.assign(verts.begin(), verts.end());
}

bool ConvexHull3::contains(const Eigen::Vector3d& q) const {
  if (points_.empty()) return false;
  const double slack = 1e3 * tol_;
  if (dimension_ == 3) {
    for (const auto& f : faces_) {
      Face face = make_face(points_, f[0], f[1], f[2]);
      if (face.normal.dot(q) - face.offset > slack) return false;
    }
    return true;
  }
  const Eigen::Vector3d d = q - origin_;
  const Eigen::Vector2d p = basis_.transpose() * d;
  if ((d - basis_ * p).norm() > slack) return false;
  if (dimension_ == 0) return p.norm() <= slack;
  if (dimension_ == 1) {
    return std::abs(p.y()) <= slack && p.x() >= polygon_[0].x() - slack &&
           p.x() <= polygon_[1].x() + slack;
  }
  for (std::size_t i = 0; i < polygon_.size(); ++i) {
    const auto& a = polygon_[i];
    const auto& b = polygon_[(i + 1) % polygon_.size()];
    const Eigen::Vector2d e = b - a;
    if ((e.x() * (p.y() - a.y()) - e.y() * (p.x() - a.x())) / e.norm() < -slack) return false;
  }
  return true;
}

}  // namespace polval
