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

#include "mvcorr/mvdump.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"
#include "mvcorr/error.hpp"

namespace mvcorr {
namespace {

using nlohmann::json;

constexpr int kDumpVersion = 1;
constexpr char kBinaryMagic[] = "MVD";
constexpr std::size_t kBlockRecordBytes = 16;

bool valid_block_edge(int v) {
  return v == 4 || v == 8 || v == 16 || v == 32 || v == 64 || v == 128;
}

std::string frame_prefix(int index) {
  return "frame " + std::to_string(index) + ": ";
}

[[noreturn]] void violation(const std::string& msg) {
  throw Error(ErrorCode::kInvariantViolation, msg);
}

[[noreturn]] void malformed(const std::string& msg) {
  throw Error(ErrorCode::kMalformed, msg);
}

// ---------------------------------------------------------------------------
// JSON

BlockMode mode_from_int(int v) {
  switch (v) {
    case 0: return BlockMode::kInter;
    case 1: return BlockMode::kIntra;
    case 2: return BlockMode::kSkip;
    default: malformed("unknown block mode " + std::to_string(v));
  }
}

std::int16_t checked_i16(long long v, const char* what) {
  if (v < INT16_MIN || v > INT16_MAX) {
    malformed(std::string(what) + " out of 16-bit range");
  }
  return static_cast<std::int16_t>(v);
}

MVDumpSequence parse_json(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    malformed(e.what());
  }
  if (!doc.is_object()) malformed("top level is not an object");
  if (!doc.contains("version")) malformed("missing \"version\"");
  if (!doc["version"].is_number_integer()) malformed("\"version\" is not an integer");
  if (doc["version"].get<int>() != kDumpVersion) {
    throw Error(ErrorCode::kVersionUnsupported,
                "dump version " + doc["version"].dump());
  }

  MVDumpSequence seq;
  try {
    if (doc.contains("source")) seq.source = doc["source"].get<std::string>();
    const json& frames = doc.at("frames");
    if (!frames.is_array()) malformed("\"frames\" is not an array");
    seq.frames.reserve(frames.size());
    for (const json& jf : frames) {
      DumpFrame frame;
      frame.meta.index = jf.at("index").get<int>();
      frame.meta.width = jf.at("width").get<int>();
      frame.meta.height = jf.at("height").get<int>();
      const std::string type = jf.at("type").get<std::string>();
      if (type == "INTRA") {
        frame.meta.type = FrameType::kIntra;
      } else if (type == "INTER") {
        frame.meta.type = FrameType::kInter;
      } else {
        malformed(frame_prefix(frame.meta.index) + "unknown frame type " + type);
      }
      if (jf.contains("refs")) {
        for (const auto& [key, value] : jf["refs"].items()) {
          int slot = 0;
          try {
            std::size_t used = 0;
            slot = std::stoi(key, &used);
            if (used != key.size()) throw std::invalid_argument(key);
          } catch (const std::exception&) {
            malformed(frame_prefix(frame.meta.index) + "bad ref slot key " + key);
          }
          frame.meta.refs[slot] = value.get<int>();
        }
      }
      const json& blocks = jf.at("blocks");
      frame.blocks.reserve(blocks.size());
      for (const json& jb : blocks) {
        if (!jb.is_array() || jb.size() < 8) {
          malformed(frame_prefix(frame.meta.index) + "block is not an 8-int array");
        }
        BlockRecord b;
        b.x0 = jb[0].get<int>();
        b.y0 = jb[1].get<int>();
        b.w = jb[2].get<int>();
        b.h = jb[3].get<int>();
        b.mode = mode_from_int(jb[4].get<int>());
        b.ref_slot = jb[5].get<int>();
        b.dx8 = checked_i16(jb[6].get<long long>(), "dx8");
        b.dy8 = checked_i16(jb[7].get<long long>(), "dy8");
        frame.blocks.push_back(b);
      }
      seq.frames.push_back(std::move(frame));
    }
  } catch (const json::exception& e) {
    malformed(e.what());
  }
  return seq;
}

std::string write_json(const MVDumpSequence& seq) {
  // Hand-formatted: dumps can hold millions of integers and building a DOM
  // first roughly triples peak memory.
  std::string out;
  out.reserve(64 + seq.frames.size() * 64);
  out += "{\"version\":1,\"source\":";
  out += json(seq.source).dump();
  out += ",\"frames\":[";
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    const DumpFrame& frame = seq.frames[f];
    if (f) out += ',';
    out += "\n{\"index\":" + std::to_string(frame.meta.index);
    out += ",\"width\":" + std::to_string(frame.meta.width);
    out += ",\"height\":" + std::to_string(frame.meta.height);
    out += frame.meta.type == FrameType::kIntra ? ",\"type\":\"INTRA\""
                                                : ",\"type\":\"INTER\"";
    out += ",\"refs\":{";
    bool first = true;
    for (const auto& [slot, target] : frame.meta.refs) {
      if (!first) out += ',';
      first = false;
      out += '"' + std::to_string(slot) + "\":" + std::to_string(target);
    }
    out += "},\"blocks\":[";
    for (std::size_t i = 0; i < frame.blocks.size(); ++i) {
      const BlockRecord& b = frame.blocks[i];
      if (i) out += ',';
      out += '[';
      out += std::to_string(b.x0) + ',' + std::to_string(b.y0) + ',' +
             std::to_string(b.w) + ',' + std::to_string(b.h) + ',' +
             std::to_string(static_cast<int>(b.mode)) + ',' +
             std::to_string(b.ref_slot) + ',' + std::to_string(b.dx8) + ',' +
             std::to_string(b.dy8);
      out += ']';
    }
    out += "]}";
  }
  out += "]}\n";
  return out;
}

// ---------------------------------------------------------------------------
// BINARY (little-endian)

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    u16(static_cast<std::uint16_t>(v));
    u16(static_cast<std::uint16_t>(v >> 16));
  }
  void bytes(std::string_view s) { buf_.append(s); }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint16_t u16() {
    const std::uint16_t lo = u8();
    return static_cast<std::uint16_t>(lo | (static_cast<std::uint16_t>(u8()) << 8));
  }
  std::uint32_t u32() {
    const std::uint32_t lo = u16();
    return lo | (static_cast<std::uint32_t>(u16()) << 16);
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    std::string_view s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) malformed("truncated binary dump");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

std::string write_binary(const MVDumpSequence& seq) {
  ByteWriter w;
  w.bytes("MVD1");
  w.u32(static_cast<std::uint32_t>(seq.source.size()));
  w.bytes(seq.source);
  w.u32(static_cast<std::uint32_t>(seq.frames.size()));
  for (const DumpFrame& frame : seq.frames) {
    const FrameMeta& m = frame.meta;
    w.u32(static_cast<std::uint32_t>(m.index));
    w.u16(static_cast<std::uint16_t>(m.width));
    w.u16(static_cast<std::uint16_t>(m.height));
    w.u8(static_cast<std::uint8_t>(m.type));
    w.u8(static_cast<std::uint8_t>(m.refs.size()));
    for (const auto& [slot, target] : m.refs) {
      w.u8(static_cast<std::uint8_t>(slot));
      w.u32(static_cast<std::uint32_t>(target));
    }
    w.u32(static_cast<std::uint32_t>(frame.blocks.size()));
    for (const BlockRecord& b : frame.blocks) {
      w.u16(static_cast<std::uint16_t>(b.x0));
      w.u16(static_cast<std::uint16_t>(b.y0));
      w.u8(static_cast<std::uint8_t>(b.w));
      w.u8(static_cast<std::uint8_t>(b.h));
      w.u8(static_cast<std::uint8_t>(b.mode));
      w.u8(static_cast<std::uint8_t>(static_cast<std::int8_t>(b.ref_slot)));
      w.u16(static_cast<std::uint16_t>(b.dx8));
      w.u16(static_cast<std::uint16_t>(b.dy8));
      w.u32(0);  // reserved
    }
  }
  return w.take();
}

MVDumpSequence parse_binary(std::string_view bytes) {
  ByteReader r(bytes);
  const std::string_view magic = r.bytes(4);
  if (magic.substr(0, 3) != kBinaryMagic) malformed("bad magic");
  if (magic[3] != '1') {
    throw Error(ErrorCode::kVersionUnsupported,
                "binary dump version '" + std::string(1, magic[3]) + "'");
  }
  MVDumpSequence seq;
  seq.source = std::string(r.bytes(r.u32()));
  const std::uint32_t n_frames = r.u32();
  for (std::uint32_t f = 0; f < n_frames; ++f) {
    DumpFrame frame;
    FrameMeta& m = frame.meta;
    m.index = static_cast<int>(r.u32());
    m.width = r.u16();
    m.height = r.u16();
    const std::uint8_t type = r.u8();
    if (type > 1) malformed(frame_prefix(m.index) + "unknown frame type");
    m.type = static_cast<FrameType>(type);
    const int n_refs = r.u8();
    for (int i = 0; i < n_refs; ++i) {
      const int slot = r.u8();
      m.refs[slot] = static_cast<int>(r.u32());
    }
    const std::uint32_t n_blocks = r.u32();
    if (r.remaining() / kBlockRecordBytes < n_blocks) malformed("truncated block table");
    frame.blocks.resize(n_blocks);
    for (BlockRecord& b : frame.blocks) {
      b.x0 = r.u16();
      b.y0 = r.u16();
      b.w = r.u8();
      b.h = r.u8();
      b.mode = mode_from_int(r.u8());
      b.ref_slot = static_cast<std::int8_t>(r.u8());
      b.dx8 = static_cast<std::int16_t>(r.u16());
      b.dy8 = static_cast<std::int16_t>(r.u16());
      r.u32();  // reserved
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

void validate_frame(const DumpFrame& frame) {
  const FrameMeta& m = frame.meta;
  const std::string at = frame_prefix(m.index);
  if (m.width <= 0 || m.height <= 0 || m.width % kMinBlockSize != 0 ||
      m.height % kMinBlockSize != 0) {
    violation(at + "frame size must be positive multiples of 4");
  }
  if (m.width > 0xFFFF || m.height > 0xFFFF) violation(at + "frame too large");
  if (m.type == FrameType::kIntra && !m.refs.empty()) {
    violation(at + "INTRA frame with references");
  }
  for (const auto& [slot, target] : m.refs) {
    if (slot < 0 || slot >= kMaxRefSlots) {
      violation(at + "ref slot " + std::to_string(slot) + " outside 0..6");
    }
    if (target < 0 || target >= m.index) {
      violation(at + "ref slot " + std::to_string(slot) + " points to frame " +
                std::to_string(target) + ", not a previously decoded frame");
    }
  }
  for (const BlockRecord& b : frame.blocks) {
    const std::string where = at + "block (" + std::to_string(b.x0) + "," +
                              std::to_string(b.y0) + "): ";
    if (!valid_block_edge(b.w) || !valid_block_edge(b.h)) {
      violation(where + "block size outside 4..128");
    }
    if (b.x0 < 0 || b.y0 < 0 || b.x0 >= m.width || b.y0 >= m.height) {
      violation(where + "origin outside the frame");
    }
    if (b.mode != BlockMode::kInter) {
      if (b.dx8 != 0 || b.dy8 != 0 || b.ref_slot != kNoRefSlot) {
        violation(where + "non-INTER block carries motion");
      }
    } else {
      if (m.type == FrameType::kIntra) violation(where + "INTER block in INTRA frame");
      if (!m.refs.contains(b.ref_slot)) {
        violation(where + "ref slot " + std::to_string(b.ref_slot) +
                  " not in the frame's reference map");
      }
    }
  }
  const std::string tiling = check_tiling(m, frame.blocks);
  if (!tiling.empty()) violation(at + tiling);
}

}  // namespace

void canonicalize(MVDumpSequence& seq) {
  for (DumpFrame& frame : seq.frames) {
    std::stable_sort(frame.blocks.begin(), frame.blocks.end(),
                     [](const BlockRecord& a, const BlockRecord& b) {
                       return std::tie(a.y0, a.x0) < std::tie(b.y0, b.x0);
                     });
  }
}

std::string check_tiling(const FrameMeta& meta,
                         const std::vector<BlockRecord>& blocks) {
  std::vector<const BlockRecord*> order;
  order.reserve(blocks.size());
  for (const BlockRecord& b : blocks) order.push_back(&b);
  std::sort(order.begin(), order.end(), [](const BlockRecord* a, const BlockRecord* b) {
    return std::tie(a->y0, a->x0) < std::tie(b->y0, b->x0);
  });

  // Piecewise-constant skyline: interval start -> filled height of the
  // columns [start, next start). Processing blocks in raster order, a valid
  // tiling places every block exactly on the skyline.
  std::map<int, int> skyline{{0, 0}};
  auto split_at = [&](int x) {
    if (x >= meta.width) return skyline.end();
    auto it = skyline.upper_bound(x);
    --it;
    if (it->first == x) return it;
    return skyline.emplace_hint(std::next(it), x, it->second);
  };

  for (const BlockRecord* b : order) {
    const int x1 = std::min(b->x0 + b->w, meta.width);
    const int top = std::min(b->y0 + b->h, meta.height);
    auto first = split_at(b->x0);
    auto last = split_at(x1);
    for (auto it = first; it != last; ++it) {
      if (it->second != b->y0) {
        const bool overlap = it->second > b->y0;
        return std::string(overlap ? "overlap" : "gap") + " at block (" +
               std::to_string(b->x0) + "," + std::to_string(b->y0) + ")";
      }
    }
    skyline.erase(first, last);
    skyline.emplace(b->x0, top);
  }
  for (const auto& [x, height] : skyline) {
    if (height != meta.height) {
      return "columns from x=" + std::to_string(x) + " not covered to the bottom";
    }
  }
  return {};
}

void validate(const MVDumpSequence& seq, std::vector<std::string>* warnings) {
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const DumpFrame& frame = seq.frames[i];
    if (frame.meta.index != static_cast<int>(i)) {
      violation("frame indices must be dense and start at 0 (found " +
                std::to_string(frame.meta.index) + " at position " +
                std::to_string(i) + ")");
    }
    validate_frame(frame);
    if (frame.meta.type == FrameType::kIntra) {
      if (i != 0 && warnings) {
        warnings->push_back(frame_prefix(frame.meta.index) +
                            "INTRA frame after the first (not a streaming configuration)");
      }
    }
  }
  if (warnings && !seq.frames.empty() &&
      seq.frames.front().meta.type != FrameType::kIntra) {
    warnings->push_back("frame 0 is not INTRA");
  }
}

MVDumpSequence parse_dump(std::string_view bytes, DumpFormat format,
                          std::vector<std::string>* warnings) {
  MVDumpSequence seq =
      format == DumpFormat::kJson ? parse_json(bytes) : parse_binary(bytes);
  canonicalize(seq);
  validate(seq, warnings);
  return seq;
}

MVDumpSequence parse_dump(std::istream& in, DumpFormat format,
                          std::vector<std::string>* warnings) {
  std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed");
  return parse_dump(bytes, format, warnings);
}

std::string write_dump(const MVDumpSequence& seq, DumpFormat format) {
  return format == DumpFormat::kJson ? write_json(seq) : write_binary(seq);
}

DumpFormat format_for_path(const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  return (ext == ".mvd" || ext == ".bin") ? DumpFormat::kBinary : DumpFormat::kJson;
}

MVDumpSequence load_dump_file(const std::string& path,
                              std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const DumpFormat format =
      bytes.compare(0, 3, kBinaryMagic) == 0 ? DumpFormat::kBinary : DumpFormat::kJson;
  try {
    return parse_dump(bytes, format, warnings);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.detail());
  }
}

void save_dump_file(const MVDumpSequence& seq, const std::string& path,
                    DumpFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  const std::string bytes = write_dump(seq, format);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

}  // namespace mvcorr
