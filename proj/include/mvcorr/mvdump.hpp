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
#include <string>
#include <string_view>
#include <vector>

namespace mvcorr {

inline constexpr int kMaxRefSlots = 7;
inline constexpr int kNoRefSlot = -1;
// Smallest AV1 block edge; frame sizes and block origins live on this grid.
inline constexpr int kMinBlockSize = 4;
inline constexpr int kMaxBlockSize = 128;

enum class FrameType : std::uint8_t { kIntra = 0, kInter = 1 };
enum class BlockMode : std::uint8_t { kInter = 0, kIntra = 1, kSkip = 2 };
enum class DumpFormat { kJson, kBinary };

struct FrameMeta {
  int index = 0;
  int width = 0;
  int height = 0;
  FrameType type = FrameType::kInter;
  // ref slot (0..6) -> frame index of the referenced, previously decoded frame.
  std::map<int, int> refs;

  bool operator==(const FrameMeta&) const = default;
};

// One codec block. The motion vector is kept in raw 1/8-pel integer units.
struct BlockRecord {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;
  BlockMode mode = BlockMode::kInter;
  int ref_slot = kNoRefSlot;
  std::int16_t dx8 = 0;
  std::int16_t dy8 = 0;

  bool operator==(const BlockRecord&) const = default;
};

struct DumpFrame {
  FrameMeta meta;
  std::vector<BlockRecord> blocks;

  bool operator==(const DumpFrame&) const = default;
};

struct MVDumpSequence {
  std::string source;
  std::vector<DumpFrame> frames;

  bool operator==(const MVDumpSequence&) const = default;
};

// Sorts the blocks of every frame into raster order of (y0, x0).
void canonicalize(MVDumpSequence& seq);

// Checks every type invariant (frame sizes, backward references, block
// sizes, mode/MV consistency, tiling). Throws Error(kInvariantViolation) on
// the first violation. Soft problems (streaming-config expectations) are
// appended to `warnings` when it is non-null.
void validate(const MVDumpSequence& seq,
              std::vector<std::string>* warnings = nullptr);

// Tiling check for a single frame via a skyline sweep over blocks in raster
// order; O(B log B). Returns an empty string when the frame is tiled exactly,
// otherwise a description of the first gap or overlap.
std::string check_tiling(const FrameMeta& meta,
                         const std::vector<BlockRecord>& blocks);

MVDumpSequence parse_dump(std::string_view bytes, DumpFormat format,
                          std::vector<std::string>* warnings = nullptr);
MVDumpSequence parse_dump(std::istream& in, DumpFormat format,
                          std::vector<std::string>* warnings = nullptr);
std::string write_dump(const MVDumpSequence& seq, DumpFormat format);

// Reads a file; the format is taken from the magic bytes ("MVD" prefix means
// BINARY, anything else is parsed as JSON).
MVDumpSequence load_dump_file(const std::string& path,
                              std::vector<std::string>* warnings = nullptr);
void save_dump_file(const MVDumpSequence& seq, const std::string& path,
                    DumpFormat format);
DumpFormat format_for_path(const std::string& path);

// Adapter for the JSON written by libaom's inspect tool. Each frame carries
// per-4x4 (mi) grids for "blockSize", "motionVectors" and "referenceFrame";
// units belonging to one codec block are coalesced into a single record.
// Sub-block disagreements are resolved in favour of the top-left unit and
// reported through `warnings`.
MVDumpSequence normalize_aom_inspect(std::string_view text,
                                     std::vector<std::string>* warnings = nullptr);

}  // namespace mvcorr
