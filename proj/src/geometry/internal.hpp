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

#pragma once

#include <span>

#include <Eigen/Dense>

#include "mvcorr/error.hpp"
#include "mvcorr/geometry.hpp"

namespace mvcorr::internal {

// Similarity taking points to zero centroid and mean distance sqrt(2).
inline Eigen::Matrix3d hartley_transform(std::span<const PointPair> pts, bool primed) {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const PointPair& p : pts) c += primed ? p.xp : p.x;
  c /= static_cast<double>(pts.size());
  double mean = 0.0;
  for (const PointPair& p : pts) mean += ((primed ? p.xp : p.x) - c).norm();
  mean /= static_cast<double>(pts.size());
  if (!(mean > 1e-15)) throw Error(ErrorCode::kDegenerateSample, "coincident points");
  const double s = std::sqrt(2.0) / mean;
  Eigen::Matrix3d T;
  T << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
  return T;
}

inline Eigen::Vector2d apply(const Eigen::Matrix3d& T, const Eigen::Vector2d& p) {
  return {T(0, 0) * p.x() + T(0, 2), T(1, 1) * p.y() + T(1, 2)};
}

// Right singular vectors and singular values of a tall design matrix,
// reduced through QR so the SVD runs on a 9x9 factor.
struct NullSpace {
  Eigen::Matrix<double, 9, 9> V;
  Eigen::Matrix<double, 9, 1> sigma;
};

inline NullSpace null_space(const Eigen::Matrix<double, Eigen::Dynamic, 9>& A) {
  Eigen::Matrix<double, 9, 9> R = Eigen::Matrix<double, 9, 9>::Zero();
  if (A.rows() >= 9) {
    Eigen::HouseholderQR<Eigen::Matrix<double, Eigen::Dynamic, 9>> qr(A);
    R = qr.matrixQR().topRows<9>().triangularView<Eigen::Upper>();
  } else {
    R.topRows(A.rows()) = A;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 9, 9>> svd(R, Eigen::ComputeFullV);
  return {svd.matrixV(), svd.singularValues()};
}

}  // namespace mvcorr::internal
