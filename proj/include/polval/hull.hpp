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

#ifndef POLVAL_HULL_HPP_
#define POLVAL_HULL_HPP_

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace polval {

// Convex hull of a 3-D point cloud. Lower-dimensional inputs (coplanar,
// collinear or a single point) are handled in their affine span and report
// zero volume.
class ConvexHull3 {
 public:
  explicit ConvexHull3(std::vector<Eigen::Vector3d> points);

  int dimension() const { return dimension_; }
  // Indices into the input of the hull's extreme points. Duplicate inputs
  // are represented by their first occurrence.
  const std::vector<std::size_t>& vertices() const { return vertices_; }
  // Outward-oriented triangles (3-D case only).
  const std::vector<std::array<std::size_t, 3>>& faces() const { return faces_; }
  double volume() const { return volume_; }
  // True if q lies inside or on the hull, up to the hull's tolerance
  // (relative to the extent of the input).
  bool contains(const Eigen::Vector3d& q) const;
  double tolerance() const { return tol_; }

 private:
  void build_3d(const std::vector<std::size_t>& unique, const std::array<std::size_t, 4>& simplex);
  void build_lower(const std::vector<std::size_t>& unique);

  std::vector<Eigen::Vector3d> points_;
  std::vector<std::size_t> vertices_;
  std::vector<std::array<std::size_t, 3>> faces_;
  int dimension_ = 0;
  double volume_ = 0.0;
  double tol_ = 0.0;
  // Affine frame of lower-dimensional hulls.
  Eigen::Vector3d origin_ = Eigen::Vector3d::Zero();
  Eigen::Matrix<double, 3, 2> basis_ = Eigen::Matrix<double, 3, 2>::Zero();
  std::vector<Eigen::Vector2d> polygon_;  // 2-D hull in basis coordinates, CCW
};

}  // namespace polval

#endif  // POLVAL_HULL_HPP_
