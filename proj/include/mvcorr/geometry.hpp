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
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mvcorr/camera.hpp"

namespace mvcorr {

// One correspondence in normalized camera coordinates. For an image pair
// (i, j) with i < j, `x` lies in the newer frame j and `xp` in the older frame
// i, following the motion-vector direction. Models satisfy xp^T E x = 0 and
// xp ~ H x.
struct PointPair {
  Eigen::Vector2d x;
  Eigen::Vector2d xp;
};

enum class ModelKind { kEssential, kHomography };
enum class ChosenModel { kE, kH, kNone };

std::string_view chosen_model_name(ChosenModel m);

// Unit Frobenius norm, rank 2 with two equal singular values.
struct EssentialModel {
  Eigen::Matrix3d E = Eigen::Matrix3d::Zero();
};

// Nonsingular, H(2,2) == 1.
struct HomographyModel {
  Eigen::Matrix3d H = Eigen::Matrix3d::Identity();
};

inline constexpr double kInfiniteResidual = std::numeric_limits<double>::infinity();

// Squared Sampson distance of (x, xp) to the epipolar geometry E. Returns
// kInfiniteResidual when the gradient vanishes (both points at the epipoles).
double sampson_error(const Eigen::Matrix3d& E, const Eigen::Vector2d& x,
                     const Eigen::Vector2d& xp);

// Symmetric transfer error 0.5 * (|pi(H x) - xp|^2 + |pi(H^-1 xp) - x|^2).
// Returns kInfiniteResidual when either mapped point lands at infinity.
double homography_residual(const Eigen::Matrix3d& H, const Eigen::Matrix3d& H_inv,
                           const Eigen::Vector2d& x, const Eigen::Vector2d& xp);
double homography_residual(const HomographyModel& model, const Eigen::Vector2d& x,
                           const Eigen::Vector2d& xp);

// Nearest essential matrix (singular values (s, s, 0)), scaled to unit norm.
Eigen::Matrix3d project_to_essential(const Eigen::Matrix3d& M);

// Minimal solver: exactly five correspondences, up to ten real solutions.
// Throws Error(kDegenerateSample) when the epipolar design matrix or the
// elimination template is rank deficient.
std::vector<EssentialModel> five_point_essential(std::span<const PointPair> sample);

// Least-squares essential matrix from >= 8 correspondences (Hartley
// normalized eight-point, then projected onto the essential manifold).
EssentialModel eight_point_refit(std::span<const PointPair> points);

// Hartley-normalized DLT from >= 4 correspondences.
HomographyModel dlt_homography(std::span<const PointPair> points);

struct RansacConfig {
  double max_error_px = 4.0;
  double min_inlier_ratio = 0.25;
  int max_num_trials = 10000;
  int lo_refit_rounds = 2;
  double confidence = 0.99;
  std::uint64_t rng_seed = 0;
};

enum class RansacStatus { kOk, kTooFewMatches, kNoModel };

struct RansacResult {
  RansacStatus status = RansacStatus::kTooFewMatches;
  ModelKind kind = ModelKind::kEssential;
  Eigen::Matrix3d model = Eigen::Matrix3d::Zero();
  std::vector<std::uint8_t> inlier_mask;
  std::size_t n_inliers = 0;
  int trials = 0;
  // Median residual (Sampson for E, symmetric transfer for H) over inliers.
  double median_residual = kInfiniteResidual;
};

// Inlier threshold on squared normalized residuals for a pixel error bound.
double normalized_threshold_sq(double max_error_px, const CameraIntrinsics& k);

// Trials needed to draw one all-inlier sample with the given confidence.
int adaptive_trial_count(double inlier_ratio, int sample_size, double confidence,
                         int max_trials);

// Hypothesize-and-verify with local optimization: every new best model is
// refit by least squares on its inliers `lo_refit_rounds` times. Points are
// in normalized coordinates; the threshold is derived from `cfg.max_error_px`
// and the mean focal length of `k`.
RansacResult lo_ransac(std::span<const PointPair> matches, ModelKind kind,
                       const RansacConfig& cfg, const CameraIntrinsics& k);

struct PairReport {
  int i = 0;
  int j = 0;
  ChosenModel chosen = ChosenModel::kNone;
  double inlier_ratio = 0.0;
  double median_sampson = 0.0;
  std::size_t n_matches = 0;
  std::size_t n_inliers = 0;
  int trials = 0;

  bool operator==(const PairReport&) const = default;
};

inline constexpr double kSubstantiallyMore = 1.2;

// Picks between an E report and an H report of the same pair. A report
// whose `chosen` is kNone is treated as a failed estimate.
PairReport select_model(const PairReport& report_e, const PairReport& report_h,
                        double kappa = kSubstantiallyMore);

}  // namespace mvcorr
