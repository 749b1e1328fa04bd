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

#include <Eigen/Core>

namespace mvcorr {

// Pinhole intrinsics shared by every frame of a sequence (no distortion).
struct CameraIntrinsics {
  double fx = 1000.0;
  double fy = 1000.0;
  double cx = 0.0;
  double cy = 0.0;

  bool valid() const { return fx > 0.0 && fy > 0.0; }
  double mean_focal() const { return 0.5 * (fx + fy); }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }

  bool operator==(const CameraIntrinsics&) const = default;
};

// Pixel -> normalized camera coordinates, K^-1 x.
inline Eigen::Vector2d normalize(const CameraIntrinsics& k, const Eigen::Vector2d& px) {
  return {(px.x() - k.cx) / k.fx, (px.y() - k.cy) / k.fy};
}

inline Eigen::Vector2d denormalize(const CameraIntrinsics& k, const Eigen::Vector2d& n) {
  return {n.x() * k.fx + k.cx, n.y() * k.fy + k.cy};
}

}  // namespace mvcorr
