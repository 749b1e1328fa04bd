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

#include "mvcorr/correspond.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"
#include "mvcorr/error.hpp"
#include "mvcorr/textio.hpp"

namespace mvcorr {
namespace {

constexpr int kUnit = kMinBlockSize;

std::uint64_t position_key(const Eigen::Vector2d& p) {
  // 1/16 pel cells; positions produced from 1/8-pel vectors never straddle.
  const auto qx = static_cast<std::uint32_t>(std::llround(p.x() * 16.0));
  const auto qy = static_cast<std::uint32_t>(std::llround(p.y() * 16.0));
  return (static_cast<std::uint64_t>(qx) << 32) | qy;
}

}  // namespace

Eigen::Vector2d block_center(const BlockRecord& b, const FrameMeta& frame) {
  double x = b.x0 + b.w / 2.0;
  double y = b.y0 + b.h / 2.0;
  if (x >= frame.width) x = frame.width - kEdgeInset;
  if (y >= frame.height) y = frame.height - kEdgeInset;
  return {x, y};
}

BlockIndex::BlockIndex(const DumpFrame& frame)
    : frame_(&frame),
      cols_(frame.meta.width / kUnit),
      rows_(frame.meta.height / kUnit),
      units_(static_cast<std::size_t>(cols_) * rows_, -1) {
  for (std::size_t k = 0; k < frame.blocks.size(); ++k) {
    const BlockRecord& b = frame.blocks[k];
    const int r_end = std::min(rows_, (b.y0 + b.h) / kUnit);
    const int c_end = std::min(cols_, (b.x0 + b.w) / kUnit);
    for (int r = b.y0 / kUnit; r < r_end; ++r) {
      std::fill(units_.begin() + static_cast<std::ptrdiff_t>(r) * cols_ + b.x0 / kUnit,
                units_.begin() + static_cast<std::ptrdiff_t>(r) * cols_ + c_end,
                static_cast<std::int32_t>(k));
    }
  }
}

int BlockIndex::block_at(const Eigen::Vector2d& pos) const {
  const int c = std::clamp(static_cast<int>(std::floor(pos.x() / kUnit)), 0, cols_ - 1);
  const int r = std::clamp(static_cast<int>(std::floor(pos.y() / kUnit)), 0, rows_ - 1);
  return units_[static_cast<std::size_t>(r) * cols_ + c];
}

KeypointStore::KeypointStore(std::vector<std::pair<int, int>> frame_sizes)
    : sizes_(std::move(frame_sizes)), frames_(sizes_.size()), lookup_(sizes_.size()) {}

std::size_t KeypointStore::total_keypoints() const {
  std::size_t n = 0;
  for (const auto& f : frames_) n += f.size();
  return n;
}

std::uint32_t KeypointStore::add_or_merge(int frame, const Keypoint& kp, bool* merged) {
  auto& table = lookup_[static_cast<std::size_t>(frame)];
  auto& points = frames_[static_cast<std::size_t>(frame)];
  const auto [it, inserted] =
      table.try_emplace(position_key(kp.pos), static_cast<std::uint32_t>(points.size()));
  if (merged) *merged = !inserted;
  if (inserted) {
    points.push_back(kp);
  } else {
    ++stats_.merged_duplicates;
  }
  return it->second;
}

std::uint32_t KeypointStore::append(int frame, const Keypoint& kp) {
  auto& points = frames_[static_cast<std::size_t>(frame)];
  points.push_back(kp);
  return static_cast<std::uint32_t>(points.size() - 1);
}

void KeypointStore::seal() {
  lookup_.clear();
  lookup_.shrink_to_fit();
}

void emit_correspondences(const MVDumpSequence& seq, int n, const BlockIndex& index,
                          KeypointStore& store, const CorrespondOptions& options) {
  const DumpFrame& frame = seq.frames[static_cast<std::size_t>(n)];
  for (std::size_t k = 0; k < frame.blocks.size(); ++k) {
    const BlockRecord& b = frame.blocks[k];
    if (b.mode != BlockMode::kInter || (b.dx8 == 0 && b.dy8 == 0)) continue;
    store.add_or_merge(n, {block_center(b, frame.meta), KeypointOrigin::kBlockCenter, n,
                           static_cast<std::uint32_t>(k)});
  }

  // S_n is stable while we iterate: targets always land in older frames.
  const std::size_t count = store.keypoints(n).size();
  CorrespondStats& stats = store.mutable_stats();
  for (std::uint32_t id = 0; id < count; ++id) {
    const Keypoint& kp = store.keypoints(n)[id];
    if (!options.chain && kp.origin == KeypointOrigin::kInjected) continue;
    const BlockRecord& b = index.containing_block(kp.pos);
    if (b.mode != BlockMode::kInter || (b.dx8 == 0 && b.dy8 == 0)) continue;
    const int m = frame.meta.refs.at(b.ref_slot);
    const Eigen::Vector2d src = kp.pos;
    const Eigen::Vector2d target = src + scale_mv(b);
    if (!inside_frame(target, seq.frames[static_cast<std::size_t>(m)].meta)) {
      ++stats.dropped_out_of_bounds;
      continue;
    }
    const std::uint32_t dst =
        store.add_or_merge(m, {target, KeypointOrigin::kInjected, n, id});
    const Eigen::Vector2d dst_pos = store.keypoints(m)[dst].pos;
    store.add_correspondence({n, id, m, dst, dst_pos - src});
    if (kp.origin == KeypointOrigin::kInjected) ++stats.chained;
    ++stats.ref_gaps[n - m];
  }
}

KeypointStore build_keypoint_store(const MVDumpSequence& seq, const CorrespondOptions& options) {
  std::vector<std::pair<int, int>> sizes;
  sizes.reserve(seq.frames.size());
  for (const DumpFrame& f : seq.frames) sizes.emplace_back(f.meta.width, f.meta.height);
  KeypointStore store(std::move(sizes));
  for (int n = static_cast<int>(seq.frames.size()) - 1; n >= 0; --n) {
    const BlockIndex index(seq.frames[static_cast<std::size_t>(n)]);
    emit_correspondences(seq, n, index, store, options);
  }
  store.seal();
  return store;
}

void write_store_jsonl(const KeypointStore& store, std::ostream& out) {
  std::string line;
  line = "{\"type\":\"header\",\"version\":1,\"frames\":[";
  for (int f = 0; f < store.num_frames(); ++f) {
    if (f) line += ',';
    line += '[';
    append_number(line, store.frame_size(f).first);
    line += ',';
    append_number(line, store.frame_size(f).second);
    line += ']';
  }
  line += "]}\n";
  out << line;

  for (int f = 0; f < store.num_frames(); ++f) {
    const auto& points = store.keypoints(f);
    for (std::size_t id = 0; id < points.size(); ++id) {
      const Keypoint& kp = points[id];
      line = "{\"type\":\"kp\",\"frame\":";
      append_number(line, f);
      line += ",\"id\":";
      append_number(line, static_cast<long long>(id));
      line += ",\"x\":";
      append_number(line, kp.pos.x());
      line += ",\"y\":";
      append_number(line, kp.pos.y());
      line += kp.origin == KeypointOrigin::kBlockCenter ? ",\"origin\":\"block\",\"from\":["
                                                        : ",\"origin\":\"injected\",\"from\":[";
      append_number(line, kp.from_frame);
      line += ',';
      append_number(line, static_cast<long long>(kp.from_id));
      line += "]}\n";
      out << line;
    }
  }
  for (const Correspondence& c : store.correspondences()) {
    line = "{\"type\":\"corr\",\"src\":[";
    append_number(line, c.src_frame);
    line += ',';
    append_number(line, static_cast<long long>(c.src_id));
    line += "],\"dst\":[";
    append_number(line, c.dst_frame);
    line += ',';
    append_number(line, static_cast<long long>(c.dst_id));
    line += "],\"mv\":[";
    append_number(line, c.mv_px.x());
    line += ',';
    append_number(line, c.mv_px.y());
    line += "]}\n";
    out << line;
  }
  const CorrespondStats& s = store.stats();
  nlohmann::json stats = {{"type", "stats"},
                          {"dropped_out_of_bounds", s.dropped_out_of_bounds},
                          {"merged_duplicates", s.merged_duplicates},
                          {"chained", s.chained}};
  nlohmann::json gaps = nlohmann::json::object();
  for (const auto& [gap, count] : s.ref_gaps) gaps[std::to_string(gap)] = count;
  stats["ref_gaps"] = gaps;
  out << stats.dump() << '\n';
  if (!out) throw Error(ErrorCode::kIo, "failed writing keypoint store");
}

KeypointStore read_store_jsonl(std::istream& in) {
  using nlohmann::json;
  std::string line;
  std::size_t line_no = 0;
  KeypointStore store;
  bool have_header = false;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        if (j.value("version", 0) != 1) {
          throw Error(ErrorCode::kVersionUnsupported, "keypoint store version");
        }
        std::vector<std::pair<int, int>> sizes;
        for (const json& s : j.at("frames")) sizes.emplace_back(s.at(0).get<int>(), s.at(1).get<int>());
        store = KeypointStore(std::move(sizes));
        have_header = true;
        continue;
      }
      if (!have_header) throw Error(ErrorCode::kMalformed, "missing header line");
      if (type == "kp") {
        const int frame = j.at("frame").get<int>();
        if (frame < 0 || frame >= store.num_frames()) throw Error(ErrorCode::kMalformed, "bad frame");
        Keypoint kp;
        kp.pos = {j.at("x").get<double>(), j.at("y").get<double>()};
        kp.origin = j.at("origin").get<std::string>() == "block" ? KeypointOrigin::kBlockCenter
                                                                 : KeypointOrigin::kInjected;
        kp.from_frame = j.at("from").at(0).get<int>();
        kp.from_id = j.at("from").at(1).get<std::uint32_t>();
        const auto id = j.at("id").get<std::uint32_t>();
        if (id != store.keypoints(frame).size()) {
          throw Error(ErrorCode::kMalformed, "keypoint ids must be dense and ordered");
        }
        store.append(frame, kp);
      } else if (type == "corr") {
        Correspondence c;
        c.src_frame = j.at("src").at(0).get<int>();
        c.src_id = j.at("src").at(1).get<std::uint32_t>();
        c.dst_frame = j.at("dst").at(0).get<int>();
        c.dst_id = j.at("dst").at(1).get<std::uint32_t>();
        c.mv_px = {j.at("mv").at(0).get<double>(), j.at("mv").at(1).get<double>()};
        for (const auto& [f, id] : {std::pair{c.src_frame, c.src_id}, std::pair{c.dst_frame, c.dst_id}}) {
          if (f < 0 || f >= store.num_frames() || id >= store.keypoints(f).size()) {
            throw Error(ErrorCode::kMalformed, "correspondence references unknown keypoint");
          }
        }
        store.add_correspondence(c);
      } else if (type == "stats") {
        CorrespondStats& s = store.mutable_stats();
        s.dropped_out_of_bounds = j.value("dropped_out_of_bounds", std::size_t{0});
        s.merged_duplicates = j.value("merged_duplicates", std::size_t{0});
        s.chained = j.value("chained", std::size_t{0});
        if (j.contains("ref_gaps")) {
          for (const auto& [gap, count] : j["ref_gaps"].items()) {
            s.ref_gaps[std::stoi(gap)] = count.get<std::size_t>();
          }
        }
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformed, "store line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_header) throw Error(ErrorCode::kMalformed, "empty keypoint store");
  store.seal();
  return store;
}

}  // namespace mvcorr
