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
#include <iosfwd>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mvcorr/correspond.hpp"

namespace mvcorr {

struct Detection {
  int frame = 0;
  std::uint32_t keypoint = 0;
  Eigen::Vector2d pos;

  bool operator==(const Detection&) const = default;
};

// Detections in strictly increasing frame order. segments[k] is the
// displacement from detection k to detection k + 1.
struct Track {
  std::uint32_t id = 0;
  std::vector<Detection> detections;
  std::vector<Eigen::Vector2d> segments;

  std::size_t length() const { return detections.size(); }
  bool operator==(const Track&) const = default;
};

// Builds a track from detections, filling in the segments.
Track make_track(std::uint32_t id, std::vector<Detection> detections);

struct CosineParams {
  double epsilon = 0.1;
  double tau = 1e-3;  // pixels
  // True bypass: never split on direction.
  bool disabled = false;
};

enum class GateResult { kPass, kFail, kSkipped };

// PASS iff <v1,v2> / (|v1| |v2|) >= 1 - epsilon; SKIPPED when either vector
// is shorter than tau.
GateResult cosine_gate(const Eigen::Vector2d& v1, const Eigen::Vector2d& v2,
                       const CosineParams& params);

inline constexpr std::size_t kMinTrackLength = 3;

// Links correspondences into maximal chains. A keypoint that several
// correspondences land on (after duplicate merging) continues only the
// earliest-emitted one; the others end there.
std::vector<Track> build_tracks(const KeypointStore& store);

// Splits tracks in front of every segment failing the cosine gate (the
// split detection is shared by both pieces), then drops tracks shorter than
// three detections. `keep_pairs` retains two-detection tracks.
std::vector<Track> filter_tracks(const std::vector<Track>& tracks, const CosineParams& params,
                                 bool keep_pairs = false);

// Keypoint id pairs (id in frame i, id in frame j) per frame pair i < j.
using MatchList = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

struct PairMatches {
  int num_frames = 0;
  std::map<std::pair<int, int>, MatchList> pairs;

  std::size_t total() const;
  bool operator==(const PairMatches&) const = default;
};

// Every pair of detections of every track, k (k - 1) / 2 per track. Duplicate
// id pairs within a frame pair are dropped (first track wins).
PairMatches propagate_pairs(const std::vector<Track>& tracks, int num_frames);

// Symmetric match-count matrix with a zero diagonal.
class AdjacencyMatrix {
 public:
  explicit AdjacencyMatrix(int n = 0)
      : n_(n), counts_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0) {}

  int size() const { return n_; }
  std::uint64_t at(int i, int j) const {
    return counts_[static_cast<std::size_t>(i) * n_ + static_cast<std::size_t>(j)];
  }
  void set(int i, int j, std::uint64_t v) {
    counts_[static_cast<std::size_t>(i) * n_ + static_cast<std::size_t>(j)] = v;
    counts_[static_cast<std::size_t>(j) * n_ + static_cast<std::size_t>(i)] = v;
  }
  std::uint64_t max_count() const;

 private:
  int n_;
  std::vector<std::uint64_t> counts_;
};

AdjacencyMatrix adjacency(const PairMatches& matches);

// Keypoint positions addressed by (frame, id); unknown entries are NaN.
struct KeypointPositions {
  std::vector<std::vector<Eigen::Vector2d>> frames;

  const Eigen::Vector2d& at(int frame, std::uint32_t id) const {
    return frames[static_cast<std::size_t>(frame)][id];
  }
};

KeypointPositions positions_from_store(const KeypointStore& store);
KeypointPositions positions_from_tracks(const std::vector<Track>& tracks, int num_frames);

// {"id":N,"detections":[[frame,x,y],...],"keypoints":[id,...]} per line,
// preceded by a {"frames":N,"width":W,"height":H} header line.
void write_tracks_jsonl(const std::vector<Track>& tracks, int num_frames, std::ostream& out,
                        std::pair<int, int> frame_size = {0, 0});
std::vector<Track> read_tracks_jsonl(std::istream& in, int* num_frames = nullptr,
                                     std::pair<int, int>* frame_size = nullptr);

}  // namespace mvcorr
