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
#include <span>
#include <vector>

#include "mvcorr/camera.hpp"
#include "mvcorr/geometry.hpp"
#include "mvcorr/tracks.hpp"

namespace mvcorr {

struct VerifyConfig {
  RansacConfig ransac;
  // Independent seeds per pair; the run with the median score is reported.
  int repeats = 3;
  double kappa = kSubstantiallyMore;
  // When this fraction of the E inliers also fits H, the epipolar geometry is
  // not identifiable from the pair and E is discarded.
  double degenerate_overlap = 0.95;
  // Also report the median over all pooled inlier residuals.
  bool pooled_sampson = false;
  int threads = 1;
};

struct PairVerdict {
  PairReport report;
  // Over the pair's matches, for the reported model.
  std::vector<std::uint8_t> inlier_mask;
  // Filled only when VerifyConfig::pooled_sampson is set.
  std::vector<double> inlier_residuals;
};

struct VerifySummary {
  std::size_t n_pairs = 0;
  std::size_t n_e = 0;
  std::size_t n_h = 0;
  std::size_t n_none = 0;
  // Over pairs with at least one match; NONE pairs count as ratio 0.
  double median_inlier_ratio = 0.0;
  // Median of per-pair median residuals over E and H pairs; NaN if none.
  double median_sampson = 0.0;
  bool has_pooled = false;
  double pooled_median_sampson = 0.0;
  std::vector<std::uint64_t> per_image_matches;
  std::vector<std::uint64_t> per_image_inliers;
};

struct VerifyResult {
  std::vector<PairReport> reports;  // ordered by (i, j)
  VerifySummary summary;
};

// Per-pair RNG seed, independent of evaluation order.
std::uint64_t pair_seed(std::uint64_t seed, int i, int j, int repeat, int stream);

// Verifies one pair. `matches` are normalized, x in frame j and xp in frame i.
PairVerdict verify_pair(int i, int j, std::span<const PointPair> matches,
                        const CameraIntrinsics& k, const VerifyConfig& cfg);

// Normalized point pairs of one frame pair.
std::vector<PointPair> pair_points(int i, int j, const MatchList& list,
                                   const KeypointPositions& positions, const CameraIntrinsics& k);

VerifyResult verify_all_pairs(const PairMatches& matches, const KeypointPositions& positions,
                              const CameraIntrinsics& k, const VerifyConfig& cfg);

// `pooled`, when given, holds the inlier residuals of all reported models.
VerifySummary compute_summary(const std::vector<PairReport>& reports, int num_frames,
                              const std::vector<double>* pooled = nullptr);

}  // namespace mvcorr
