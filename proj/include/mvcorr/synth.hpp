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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mvcorr/camera.hpp"
#include "mvcorr/geometry.hpp"
#include "mvcorr/mvdump.hpp"

namespace mvcorr {

enum class MotionKind { kTranslation2d, kHomography, kEpipolar };

// Generator for synthetic motion-vector dumps. Every model describes one
// frame step and maps frame n onto its reference frame n-1.
struct MotionSpec {
  MotionKind kind = MotionKind::kTranslation2d;

  // kTranslation2d: displacement in pixels of every block center.
  Eigen::Vector2d shift_px = Eigen::Vector2d::Zero();
  // kHomography: pixel-coordinate homography, x_{n-1} ~ H x_n.
  Eigen::Matrix3d homography = Eigen::Matrix3d::Identity();
  // kEpipolar: X_{n-1} = R X_n + t for a scene point in camera coordinates;
  // each block center sees its own point at a depth drawn from the range.
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double min_depth = 4.0;
  double max_depth = 12.0;

  int n_frames = 10;
  int width = 640;
  int height = 480;
  int block_size = 16;
  double noise_sigma_px = 0.0;
  double outlier_fraction = 0.0;
  // Outlier motion vectors are uniform in [-range, range]^2 and are redrawn
  // until their target is at least `outlier_margin_px` away from what the
  // generating model predicts.
  double outlier_range_px = 64.0;
  double outlier_margin_px = 8.0;
};

struct GroundTruthMatch {
  int block = 0;        // index into the frame's raster-ordered blocks
  Eigen::Vector2d src;  // block center in frame j
  Eigen::Vector2d dst;  // exact (unquantized) target in frame i
  bool inlier = true;
};

struct GroundTruthPair {
  int i = 0;  // reference frame (older)
  int j = 0;  // current frame (newer)
  std::vector<GroundTruthMatch> matches;
};

struct TrueModel {
  ModelKind kind = ModelKind::kHomography;
  // Normalized coordinates; |E|_F == 1 or H(2,2) == 1.
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();
};

struct GroundTruth {
  MotionSpec spec;
  CameraIntrinsics intrinsics;
  // One entry per adjacent pair (n-1, n), n = 1..n_frames-1. Only blocks that
  // end up INTER with a nonzero motion vector are listed.
  std::vector<GroundTruthPair> pairs;
};

struct SyntheticSequence {
  MVDumpSequence dump;
  GroundTruth truth;
};

// Deterministic for a fixed (spec, intrinsics, seed). Throws
// Error(kDegenerateSpec) for invalid specs or displacements that leave the
// frame entirely.
SyntheticSequence gen_sequence(const MotionSpec& spec, const CameraIntrinsics& k,
                               std::uint64_t seed);

// Generating model for the pair (i, j), i < j, in normalized coordinates,
// mapping frame j onto frame i.
TrueModel true_model(const MotionSpec& spec, const CameraIntrinsics& k, int i, int j);

// Ground-truth sidecar JSON (spec echo, models per adjacent pair, exact
// correspondences with inlier labels).
std::string ground_truth_json(const GroundTruth& truth);

}  // namespace mvcorr
