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

#include "mvcorr/tracks.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "json.hpp"
#include "mvcorr/error.hpp"
#include "mvcorr/textio.hpp"

namespace mvcorr {
namespace {

constexpr std::int64_t kNone = -1;

}  // namespace

Track make_track(std::uint32_t id, std::vector<Detection> detections) {
  Track t;
  t.id = id;
  t.detections = std::move(detections);
  t.segments.reserve(t.detections.empty() ? 0 : t.detections.size() - 1);
  for (std::size_t k = 1; k < t.detections.size(); ++k) {
    t.segments.push_back(t.detections[k].pos - t.detections[k - 1].pos);
  }
  return t;
}

GateResult cosine_gate(const Eigen::Vector2d& v1, const Eigen::Vector2d& v2,
                       const CosineParams& params) {
  const double n1 = v1.norm();
  const double n2 = v2.norm();
  if (n1 < params.tau || n2 < params.tau) return GateResult::kSkipped;
  const double cosine = v1.dot(v2) / (n1 * n2);
  return cosine >= 1.0 - params.epsilon ? GateResult::kPass : GateResult::kFail;
}

std::vector<Track> build_tracks(const KeypointStore& store) {
  const auto& corr = store.correspondences();
  const int n_frames = store.num_frames();
  std::vector<std::vector<std::int64_t>> outgoing(static_cast<std::size_t>(n_frames));
  std::vector<std::vector<std::int64_t>> first_incoming(static_cast<std::size_t>(n_frames));
  for (int f = 0; f < n_frames; ++f) {
    outgoing[static_cast<std::size_t>(f)].assign(store.keypoints(f).size(), kNone);
    first_incoming[static_cast<std::size_t>(f)].assign(store.keypoints(f).size(), kNone);
  }
  for (std::size_t e = 0; e < corr.size(); ++e) {
    const Correspondence& c = corr[e];
    outgoing[static_cast<std::size_t>(c.src_frame)][c.src_id] = static_cast<std::int64_t>(e);
    auto& in = first_incoming[static_cast<std::size_t>(c.dst_frame)][c.dst_id];
    if (in == kNone) in = static_cast<std::int64_t>(e);
  }

  auto detection = [&](int frame, std::uint32_t id) {
    return Detection{frame, id, store.keypoints(frame)[id].pos};
  };

  std::vector<Track> tracks;
  std::vector<Detection> path;
  for (std::size_t e = 0; e < corr.size(); ++e) {
    const Correspondence& start = corr[e];
    if (first_incoming[static_cast<std::size_t>(start.src_frame)][start.src_id] != kNone) continue;
    path.clear();
    path.push_back(detection(start.src_frame, start.src_id));
    std::int64_t edge = static_cast<std::int64_t>(e);
    while (edge != kNone) {
      const Correspondence& c = corr[static_cast<std::size_t>(edge)];
      path.push_back(detection(c.dst_frame, c.dst_id));
      const bool continues = first_incoming[static_cast<std::size_t>(c.dst_frame)][c.dst_id] == edge;
      edge = continues ? outgoing[static_cast<std::size_t>(c.dst_frame)][c.dst_id] : kNone;
    }
    std::reverse(path.begin(), path.end());
    tracks.push_back(make_track(static_cast<std::uint32_t>(tracks.size()), path));
  }
  return tracks;
}

std::vector<Track> filter_tracks(const std::vector<Track>& tracks, const CosineParams& params,
                                 bool keep_pairs) {
  const std::size_t min_length = keep_pairs ? 2 : kMinTrackLength;
  std::vector<Track> out;
  auto keep = [&](const Track& t, std::size_t first, std::size_t last) {
    if (last - first + 1 < min_length) return;
    out.push_back(make_track(
        static_cast<std::uint32_t>(out.size()),
        {t.detections.begin() + static_cast<std::ptrdiff_t>(first),
         t.detections.begin() + static_cast<std::ptrdiff_t>(last) + 1}));
  };
  for (const Track& t : tracks) {
    if (t.detections.empty()) continue;
    std::size_t first = 0;
    if (!params.disabled) {
      for (std::size_t s = 1; s < t.segments.size(); ++s) {
        if (cosine_gate(t.segments[s - 1], t.segments[s], params) == GateResult::kFail) {
          keep(t, first, s);
          first = s;
        }
      }
    }
    keep(t, first, t.detections.size() - 1);
  }
  return out;
}

std::size_t PairMatches::total() const {
  std::size_t n = 0;
  for (const auto& [key, list] : pairs) n += list.size();
  return n;
}

PairMatches propagate_pairs(const std::vector<Track>& tracks, int num_frames) {
  PairMatches out;
  out.num_frames = num_frames;
  for (const Track& t : tracks) {
    const auto& d = t.detections;
    for (std::size_t a = 0; a < d.size(); ++a) {
      for (std::size_t b = a + 1; b < d.size(); ++b) {
        out.pairs[{d[a].frame, d[b].frame}].emplace_back(d[a].keypoint, d[b].keypoint);
      }
    }
  }
  for (auto& [key, list] : out.pairs) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return out;
}

std::uint64_t AdjacencyMatrix::max_count() const {
  return counts_.empty() ? 0 : *std::max_element(counts_.begin(), counts_.end());
}

AdjacencyMatrix adjacency(const PairMatches& matches) {
  AdjacencyMatrix a(matches.num_frames);
  for (const auto& [key, list] : matches.pairs) {
    if (key.first == key.second) continue;
    a.set(key.first, key.second, list.size());
  }
  return a;
}

KeypointPositions positions_from_store(const KeypointStore& store) {
  KeypointPositions p;
  p.frames.resize(static_cast<std::size_t>(store.num_frames()));
  for (int f = 0; f < store.num_frames(); ++f) {
    auto& dst = p.frames[static_cast<std::size_t>(f)];
    dst.reserve(store.keypoints(f).size());
    for (const Keypoint& kp : store.keypoints(f)) dst.push_back(kp.pos);
  }
  return p;
}

KeypointPositions positions_from_tracks(const std::vector<Track>& tracks, int num_frames) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  KeypointPositions p;
  p.frames.resize(static_cast<std::size_t>(num_frames));
  for (const Track& t : tracks) {
    for (const Detection& d : t.detections) {
      auto& dst = p.frames[static_cast<std::size_t>(d.frame)];
      if (dst.size() <= d.keypoint) dst.resize(d.keypoint + 1, Eigen::Vector2d(nan, nan));
      dst[d.keypoint] = d.pos;
    }
  }
  return p;
}

void write_tracks_jsonl(const std::vector<Track>& tracks, int num_frames, std::ostream& out,
                        std::pair<int, int> frame_size) {
  std::string line = "{\"frames\":";
  append_number(line, num_frames);
  line += ",\"width\":";
  append_number(line, frame_size.first);
  line += ",\"height\":";
  append_number(line, frame_size.second);
  line += "}\n";
  out << line;
  for (const Track& t : tracks) {
    line = "{\"id\":";
    append_number(line, static_cast<long long>(t.id));
    line += ",\"detections\":[";
    for (std::size_t k = 0; k < t.detections.size(); ++k) {
      const Detection& d = t.detections[k];
      if (k) line += ',';
      line += '[';
      append_number(line, d.frame);
      line += ',';
      append_number(line, d.pos.x());
      line += ',';
      append_number(line, d.pos.y());
      line += ']';
    }
    line += "],\"keypoints\":[";
    for (std::size_t k = 0; k < t.detections.size(); ++k) {
      if (k) line += ',';
      append_number(line, static_cast<long long>(t.detections[k].keypoint));
    }
    line += "]}\n";
    out << line;
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing tracks");
}

std::vector<Track> read_tracks_jsonl(std::istream& in, int* num_frames,
                                     std::pair<int, int>* frame_size) {
  using nlohmann::json;
  std::vector<Track> tracks;
  std::string line;
  std::size_t line_no = 0;
  int frames = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (!j.contains("id")) {
        frames = j.value("frames", frames);
        if (frame_size) *frame_size = {j.value("width", 0), j.value("height", 0)};
        continue;
      }
      const json& dets = j.at("detections");
      const json* kps = j.contains("keypoints") ? &j["keypoints"] : nullptr;
      if (kps && kps->size() != dets.size()) {
        throw Error(ErrorCode::kMalformed, "keypoints and detections differ in length");
      }
      std::vector<Detection> d;
      d.reserve(dets.size());
      for (std::size_t k = 0; k < dets.size(); ++k) {
        Detection det;
        det.frame = dets[k].at(0).get<int>();
        det.pos = {dets[k].at(1).get<double>(), dets[k].at(2).get<double>()};
        det.keypoint = kps ? (*kps)[k].get<std::uint32_t>() : 0;
        if (!d.empty() && det.frame <= d.back().frame) {
          throw Error(ErrorCode::kMalformed, "track frames must increase strictly");
        }
        frames = std::max(frames, det.frame + 1);
        d.push_back(det);
      }
      tracks.push_back(make_track(j.at("id").get<std::uint32_t>(), std::move(d)));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformed, "tracks line " + std::to_string(line_no) + ": " + e.what());
  }
  if (num_frames) *num_frames = frames;
  return tracks;
}

}  // namespace mvcorr
