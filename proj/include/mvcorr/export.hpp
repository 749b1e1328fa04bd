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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mvcorr/geometry.hpp"
#include "mvcorr/tracks.hpp"
#include "mvcorr/verify.hpp"

namespace mvcorr {

// COLMAP text features carry a descriptor per keypoint; these are zeros.
inline constexpr int kDescriptorDim = 128;

// "frame_000000.png", ...
std::vector<std::string> default_image_names(int num_frames);

// Throws NAME_COLLISION on duplicates and MALFORMED on empty names or names
// containing whitespace or path separators.
void check_image_names(const std::vector<std::string>& names);

void write_colmap_features(const std::vector<Eigen::Vector2d>& keypoints, std::ostream& out);
std::vector<Eigen::Vector2d> read_colmap_features(std::istream& in);

// Empty pairs are omitted. Throws INVARIANT_VIOLATION when an index is not
// below the feature count of its image.
void write_colmap_matches(const PairMatches& matches, const std::vector<std::string>& names,
                          const std::vector<std::size_t>& feature_counts, std::ostream& out);
PairMatches read_colmap_matches(std::istream& in, const std::vector<std::string>& names);

struct ColmapFiles {
  std::vector<std::filesystem::path> features;
  std::filesystem::path matches;
};

// Writes <dir>/<name>.txt per image and <dir>/matches.txt. Feature line k
// holds keypoint id k of that frame.
ColmapFiles export_colmap(const KeypointPositions& positions, const PairMatches& matches,
                          const std::vector<std::string>& names,
                          const std::filesystem::path& dir);

// P5 binary PGM, value round(255 * count / max_count).
std::string adjacency_pgm(const AdjacencyMatrix& adjacency);

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
};

GrayImage read_pgm(std::istream& in);

void write_pairs_csv(const std::vector<PairReport>& reports, std::ostream& out);
std::vector<PairReport> read_pairs_csv(std::istream& in);

// Sequence-level summary as a JSON document.
std::string summary_json(const VerifySummary& summary);

struct RunStats {
  // Stage name -> wall-clock seconds, in pipeline order.
  std::vector<std::pair<std::string, double>> stages;
  double cpu_seconds = 0.0;
  int threads = 1;
  std::size_t frames = 0;
  std::size_t peak_keypoints = 0;
  std::size_t correspondences = 0;
  std::size_t tracks = 0;
  std::size_t pair_matches = 0;
  std::size_t dropped_out_of_bounds = 0;
  std::size_t merged_duplicates = 0;

  double total_seconds() const;
};

// User plus system CPU time of this process.
double process_cpu_seconds();

std::string stats_json(const RunStats& stats);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace mvcorr
