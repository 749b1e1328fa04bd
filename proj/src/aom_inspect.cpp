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

// Adapter from the libaom inspect tool JSON to MVDumpSequence.
//
// Per frame the tool writes 2-D grids indexed [mi_row][mi_col] (one entry
// per 4x4 mode-info unit):
//   "blockSize":      BLOCK_SIZE enum value
//   "motionVectors":  [mv0.col, mv0.row, mv1.col, mv1.row] in 1/8 pel
//   "referenceFrame": [ref0, ref1] with INTRA_FRAME = 0, LAST_FRAME = 1, ...
//   "skip" (optional)
// plus "frame" and "frameType" scalars.

#include <algorithm>
#include <array>
#include <string>

#include "json.hpp"
#include "mvcorr/error.hpp"
#include "mvcorr/mvdump.hpp"

namespace mvcorr {
namespace {

using nlohmann::json;

constexpr int kMiSize = 4;

struct BlockDims {
  int w;
  int h;
};

// libaom BLOCK_SIZE order (BLOCK_4X4 .. BLOCK_64X16); names are WxH.
constexpr std::array<BlockDims, 22> kBlockSizes = {{
    {4, 4},    {4, 8},    {8, 4},    {8, 8},     {8, 16},   {16, 8},
    {16, 16},  {16, 32},  {32, 16},  {32, 32},   {32, 64},  {64, 32},
    {64, 64},  {64, 128}, {128, 64}, {128, 128}, {4, 16},   {16, 4},
    {8, 32},   {32, 8},   {16, 64},  {64, 16},
}};

// Frame types as written by the tool: KEY_FRAME, INTER_FRAME, INTRA_ONLY_FRAME,
// S_FRAME.
constexpr int kKeyFrame = 0;
constexpr int kIntraOnlyFrame = 2;

struct Unit {
  int block_size = 0;
  int mv_col = 0;
  int mv_row = 0;
  int ref = 0;
  int skip = 0;

  bool same_block(const Unit& o) const {
    return block_size == o.block_size && mv_col == o.mv_col &&
           mv_row == o.mv_row && ref == o.ref;
  }
};

const json& layer(const json& frame, const char* name, int index) {
  if (!frame.contains(name)) {
    throw Error(ErrorCode::kMissingLayer,
                "frame " + std::to_string(index) + ": missing \"" + name + "\" layer");
  }
  const json& grid = frame[name];
  if (!grid.is_array()) {
    throw Error(ErrorCode::kMalformed,
                "frame " + std::to_string(index) + ": \"" + name + "\" is not a grid");
  }
  return grid;
}

DumpFrame convert_frame(const json& jf, int position, std::vector<std::string>* warnings) {
  const int index = jf.contains("frame") ? jf["frame"].get<int>() : position;
  const json& sizes = layer(jf, "blockSize", index);
  const json& mvs = layer(jf, "motionVectors", index);
  const json& refs = layer(jf, "referenceFrame", index);
  const json* skips = jf.contains("skip") ? &jf["skip"] : nullptr;
  const std::string at = "frame " + std::to_string(index) + ": ";

  const int rows = static_cast<int>(sizes.size());
  const int cols = rows ? static_cast<int>(sizes[0].size()) : 0;
  if (rows == 0 || cols == 0) throw Error(ErrorCode::kMalformed, at + "empty mi grid");
  auto check_shape = [&](const json& grid, const char* name) {
    if (static_cast<int>(grid.size()) != rows) {
      throw Error(ErrorCode::kMalformed, at + "\"" + name + "\" row count mismatch");
    }
    for (const json& row : grid) {
      if (!row.is_array() || static_cast<int>(row.size()) != cols) {
        throw Error(ErrorCode::kMalformed, at + "\"" + name + "\" column count mismatch");
      }
    }
  };
  check_shape(sizes, "blockSize");
  check_shape(mvs, "motionVectors");
  check_shape(refs, "referenceFrame");
  if (skips) check_shape(*skips, "skip");

  std::vector<Unit> units(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      Unit& u = units[static_cast<std::size_t>(r) * cols + c];
      u.block_size = sizes[r][c].get<int>();
      const json& mv = mvs[r][c];
      if (!mv.is_array() || mv.size() < 2) {
        throw Error(ErrorCode::kMalformed, at + "motion vector entry is not [col,row,...]");
      }
      u.mv_col = mv[0].get<int>();
      u.mv_row = mv[1].get<int>();
      const json& ref = refs[r][c];
      u.ref = ref.is_array() ? ref.at(0).get<int>() : ref.get<int>();
      if (skips) u.skip = (*skips)[r][c].get<int>();
      if (u.block_size < 0 || u.block_size >= static_cast<int>(kBlockSizes.size())) {
        throw Error(ErrorCode::kMalformed, at + "unknown block size enum " +
                                               std::to_string(u.block_size));
      }
    }
  }

  DumpFrame frame;
  frame.meta.index = index;
  frame.meta.width = cols * kMiSize;
  frame.meta.height = rows * kMiSize;
  const int frame_type = jf.contains("frameType") ? jf["frameType"].get<int>() : 1;
  const bool intra = frame_type == kKeyFrame || frame_type == kIntraOnlyFrame;
  frame.meta.type = intra ? FrameType::kIntra : FrameType::kInter;

  std::vector<char> visited(units.size(), 0);
  int disagreements = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (visited[static_cast<std::size_t>(r) * cols + c]) continue;
      const Unit& top_left = units[static_cast<std::size_t>(r) * cols + c];
      const BlockDims dims = kBlockSizes[top_left.block_size];
      const int r_end = std::min(rows, r + dims.h / kMiSize);
      const int c_end = std::min(cols, c + dims.w / kMiSize);
      for (int rr = r; rr < r_end; ++rr) {
        for (int cc = c; cc < c_end; ++cc) {
          const std::size_t k = static_cast<std::size_t>(rr) * cols + cc;
          if (visited[k]) {
            throw Error(ErrorCode::kMalformed,
                        at + "blocks overlap in the mi grid at unit (" +
                            std::to_string(rr) + "," + std::to_string(cc) + ")");
          }
          visited[k] = 1;
          if (!units[k].same_block(top_left)) ++disagreements;
        }
      }

      BlockRecord b;
      b.x0 = c * kMiSize;
      b.y0 = r * kMiSize;
      b.w = dims.w;
      b.h = dims.h;
      if (top_left.ref <= 0) {
        b.mode = BlockMode::kIntra;
      } else if (top_left.skip && top_left.mv_col == 0 && top_left.mv_row == 0) {
        b.mode = BlockMode::kSkip;
      } else {
        if (intra) {
          throw Error(ErrorCode::kMalformed, at + "inter block inside an intra frame");
        }
        b.mode = BlockMode::kInter;
        b.ref_slot = top_left.ref - 1;
        if (top_left.mv_col < INT16_MIN || top_left.mv_col > INT16_MAX ||
            top_left.mv_row < INT16_MIN || top_left.mv_row > INT16_MAX) {
          throw Error(ErrorCode::kMalformed, at + "motion vector out of range");
        }
        b.dx8 = static_cast<std::int16_t>(top_left.mv_col);
        b.dy8 = static_cast<std::int16_t>(top_left.mv_row);
      }
      frame.blocks.push_back(b);
    }
  }
  if (disagreements && warnings) {
    warnings->push_back(at + std::to_string(disagreements) +
                        " mi units disagree with their block's top-left unit");
  }

  if (!intra) {
    if (jf.contains("refs")) {
      for (const auto& [key, value] : jf["refs"].items()) {
        frame.meta.refs[std::stoi(key)] = value.get<int>();
      }
    } else {
      // Streaming configuration: every reference is the previous frame.
      for (const BlockRecord& b : frame.blocks) {
        if (b.mode == BlockMode::kInter) frame.meta.refs[b.ref_slot] = index - 1;
      }
    }
  }
  return frame;
}

}  // namespace

MVDumpSequence normalize_aom_inspect(std::string_view text,
                                     std::vector<std::string>* warnings) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformed, e.what());
  }
  if (doc.is_object()) doc = json::array({doc});
  if (!doc.is_array()) throw Error(ErrorCode::kMalformed, "expected frame object or array");

  MVDumpSequence seq;
  seq.source = "aom-inspect";
  try {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      seq.frames.push_back(convert_frame(doc[i], static_cast<int>(i), warnings));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformed, e.what());
  }
  canonicalize(seq);
  validate(seq, warnings);
  return seq;
}

}  // namespace mvcorr
