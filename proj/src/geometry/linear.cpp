// Copyright 2026 The mvcorr Authors
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

#include <cmath>

#include "internal.hpp"

namespace mvcorr {

namespace {

// Ratio below which a singular value counts as zero.
constexpr double kRankTolerance = 1e-10;

}  // namespace

EssentialModel eight_point_refit(std::span<const PointPair> points) {
  if (points.size() < 8) {
    throw Error(ErrorCode::kDegenerateSample, "eight-point needs at least 8 matches");
  }
  const Eigen::Matrix3d T = internal::hartley_transform(points, false);
  const Eigen::Matrix3d Tp = internal::hartley_transform(points, true);
  Eigen::Matrix<double, Eigen::Dynamic, 9> A(static_cast<Eigen::Index>(points.size()), 9);
  for (std::size_t r = 0; r < points.size(); ++r) {
    const Eigen::Vector2d x = internal::apply(T, points[r].x);
    const Eigen::Vector2d xp = internal::apply(Tp, points[r].xp);
    A.row(static_cast<Eigen::Index>(r)) << xp.x() * x.x(), xp.x() * x.y(), xp.x(),
        xp.y() * x.x(), xp.y() * x.y(), xp.y(), x.x(), x.y(), 1.0;
  }
  const internal::NullSpace ns = internal::null_space(A);
  if (!(ns.sigma(7) > kRankTolerance * ns.sigma(0))) {
    throw Error(ErrorCode::kDegenerateSample, "epipolar design matrix is rank deficient");
  }
  Eigen::Matrix3d En;
  for (int k = 0; k < 9; ++k) En(k / 3, k % 3) = ns.V(k, 8);
  return {project_to_essential(Tp.transpose() * En * T)};
}

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

bool has_collinear_triple(std::span<const PointPair> pts, bool primed) {
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      for (int c = b + 1; c < 4; ++c) {
        const Eigen::Vector2d& pa = primed ? pts[a].xp : pts[a].x;
        const Eigen::Vector2d& pb = primed ? pts[b].xp : pts[b].x;
        const Eigen::Vector2d& pc = primed ? pts[c].xp : pts[c].x;
        const Eigen::Vector2d u = pb - pa;
        const Eigen::Vector2d v = pc - pa;
        const double scale = u.norm() * v.norm();
        if (!(std::abs(cross2(u, v)) > 1e-10 * scale) || scale == 0.0) return true;
      }
    }
  }
  return false;
}

}  // namespace

HomographyModel dlt_homography(std::span<const PointPair> points) {
  if (points.size() < 4) {
    throw Error(ErrorCode::kDegenerateSample, "homography needs at least 4 matches");
  }
  if (points.size() == 4 && (has_collinear_triple(points, false) ||
                             has_collinear_triple(points, true))) {
    throw Error(ErrorCode::kDegenerateSample, "collinear points in minimal sample");
  }
  const Eigen::Matrix3d T = internal::hartley_transform(points, false);
  const Eigen::Matrix3d Tp = internal::hartley_transform(points, true);
  Eigen::Matrix<double, Eigen::Dynamic, 9> A(static_cast<Eigen::Index>(2 * points.size()), 9);
  for (std::size_t r = 0; r < points.size(); ++r) {
    const Eigen::Vector2d x = internal::apply(T, points[r].x);
    const Eigen::Vector2d xp = internal::apply(Tp, points[r].xp);
    const auto row = static_cast<Eigen::Index>(2 * r);
    A.row(row) << 0, 0, 0, -x.x(), -x.y(), -1, xp.y() * x.x(), xp.y() * x.y(), xp.y();
    A.row(row + 1) << x.x(), x.y(), 1, 0, 0, 0, -xp.x() * x.x(), -xp.x() * x.y(), -xp.x();
  }
  const internal::NullSpace ns = internal::null_space(A);
  if (!(ns.sigma(7) > kRankTolerance * ns.sigma(0))) {
    throw Error(ErrorCode::kDegenerateSample, "homography design matrix is rank deficient");
  }
  Eigen::Matrix3d Hn;
  for (int k = 0; k < 9; ++k) Hn(k / 3, k % 3) = ns.V(k, 8);
  Eigen::Matrix3d H = Tp.inverse() * Hn * T;
  if (!(std::abs(H(2, 2)) > 1e-12 * H.norm())) {
    throw Error(ErrorCode::kDegenerateSample, "homography maps the origin to infinity");
  }
  H /= H(2, 2);
  if (!(std::abs(H.determinant()) > 1e-12)) {
    throw Error(ErrorCode::kDegenerateSample, "singular homography");
  }
  return {H};
}

}  // namespace mvcorr
