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
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "mvcorr/mvdump.hpp"

namespace mvcorr {

// Raw 1/8-pel integers to pixels. Exact: the result is a binary fraction.
inline Eigen::Vector2d scale_mv(int dx8, int dy8) {
  return {dx8 / 8.0, dy8 / 8.0};
}
inline Eigen::Vector2d scale_mv(const BlockRecord& b) { return scale_mv(b.dx8, b.dy8); }

// Distance kept between a clamped padding-block center and the frame edge.
// One 1/8 pel step keeps clamped centers on the motion-vector lattice.
inline constexpr double kEdgeInset = 0.125;

// (x0 + w/2, y0 + h/2); padding blocks whose center falls outside the frame
// are clamped to the last lattice position inside it.
Eigen::Vector2d block_center(const BlockRecord& b, const FrameMeta& frame);

inline bool inside_frame(const Eigen::Vector2d& p, const FrameMeta& frame) {
  return p.x() >= 0.0 && p.y() >= 0.0 && p.x() < frame.width && p.y() < frame.height;
}

// Point -> block lookup for one tiled frame. Block origins and sizes are
// multiples of 4 (guaranteed by validation), so the index is a grid of 4x4
// units holding block numbers; containment uses half-open spans
// [x0, x0 + w) x [y0, y0 + h).
class BlockIndex {
 public:
  explicit BlockIndex(const DumpFrame& frame);

  // Block number covering `pos`, which must lie inside the frame.
  int block_at(const Eigen::Vector2d& pos) const;
  const BlockRecord& containing_block(const Eigen::Vector2d& pos) const {
    return frame_->blocks[static_cast<std::size_t>(block_at(pos))];
  }

 private:
  const DumpFrame* frame_;
  int cols_ = 0;
  int rows_ = 0;
  std::vector<std::int32_t> units_;
};

enum class KeypointOrigin : std::uint8_t { kBlockCenter, kInjected };

struct Keypoint {
  Eigen::Vector2d pos;
  KeypointOrigin origin = KeypointOrigin::kBlockCenter;
  // kBlockCenter: (this frame, block number). kInjected: the source keypoint.
  int from_frame = 0;
  std::uint32_t from_id = 0;
};

struct Correspondence {
  int src_frame = 0;
  std::uint32_t src_id = 0;
  int dst_frame = 0;
  std::uint32_t dst_id = 0;
  Eigen::Vector2d mv_px;  // dst.pos - src.pos
};

struct CorrespondStats {
  std::size_t dropped_out_of_bounds = 0;
  std::size_t merged_duplicates = 0;
  std::size_t chained = 0;
  // frame gap (n - m) -> number of correspondences across it
  std::map<int, std::size_t> ref_gaps;
};

// Per-frame keypoint sets S_m plus every correspondence. Keypoint ids are
// dense per frame and equal to the position in `keypoints(frame)`.
class KeypointStore {
 public:
  KeypointStore() = default;
  explicit KeypointStore(std::vector<std::pair<int, int>> frame_sizes);

  int num_frames() const { return static_cast<int>(frames_.size()); }
  std::pair<int, int> frame_size(int frame) const { return sizes_[static_cast<std::size_t>(frame)]; }
  const std::vector<Keypoint>& keypoints(int frame) const {
    return frames_[static_cast<std::size_t>(frame)];
  }
  const std::vector<Correspondence>& correspondences() const { return correspondences_; }
  const CorrespondStats& stats() const { return stats_; }
  CorrespondStats& mutable_stats() { return stats_; }
  std::size_t total_keypoints() const;

  // Inserts a keypoint into S_frame, or returns the id of an existing one at
  // the same position (within 1/16 pel). The earliest id wins.
  std::uint32_t add_or_merge(int frame, const Keypoint& kp, bool* merged = nullptr);
  // Appends without the duplicate check (used when loading a store).
  std::uint32_t append(int frame, const Keypoint& kp);
  void add_correspondence(const Correspondence& c) { correspondences_.push_back(c); }

  // Drops the duplicate-lookup tables once construction is finished.
  void seal();

 private:
  std::vector<std::pair<int, int>> sizes_;
  std::vector<std::vector<Keypoint>> frames_;
  std::vector<std::unordered_map<std::uint64_t, std::uint32_t>> lookup_;
  std::vector<Correspondence> correspondences_;
  CorrespondStats stats_;
};

struct CorrespondOptions {
  // Re-emit injected keypoints through the block that contains them.
  bool chain = true;
};

// Processes frame n: every keypoint of S_n that sits in an INTER block with a
// nonzero motion vector produces a correspondence to the referenced frame and
// an injected keypoint there. Frames must be visited in decreasing order;
// the block centers of frame n are added to S_n first.
void emit_correspondences(const MVDumpSequence& seq, int n, const BlockIndex& index,
                          KeypointStore& store, const CorrespondOptions& options = {});

KeypointStore build_keypoint_store(const MVDumpSequence& seq,
                                   const CorrespondOptions& options = {});

// JSON-lines debug/interchange form. First line is a header, then keypoints
// in (frame, id) order, then correspondences in emission order, then stats.
void write_store_jsonl(const KeypointStore& store, std::ostream& out);
KeypointStore read_store_jsonl(std::istream& in);

}  // namespace mvcorr
