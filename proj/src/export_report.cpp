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

#include "mvcorr/export.hpp"

#include <sys/resource.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "mvcorr/error.hpp"
#include "mvcorr/textio.hpp"

namespace mvcorr {
namespace {

std::string descriptor_suffix() {
  std::string s = " 1.0 0.0";
  for (int k = 0; k < kDescriptorDim; ++k) s += " 0";
  s += '\n';
  return s;
}

void json_number(std::string& out, double v) {
  if (std::isfinite(v)) {
    append_number(out, v);
  } else {
    out += "null";
  }
}

template <typename T>
void json_array(std::string& out, const std::vector<T>& values) {
  out += '[';
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out += ',';
    append_number(out, static_cast<long long>(values[k]));
  }
  out += ']';
}

}  // namespace

std::vector<std::string> default_image_names(int num_frames) {
  std::vector<std::string> names;
  for (int f = 0; f < num_frames; ++f) {
    std::string digits = std::to_string(f);
    names.push_back("frame_" + std::string(digits.size() < 6 ? 6 - digits.size() : 0, '0') +
                    digits + ".png");
  }
  return names;
}

void check_image_names(const std::vector<std::string>& names) {
  std::unordered_set<std::string> seen;
  for (const std::string& n : names) {
    if (n.empty() || n.find_first_of(" \t\r\n/\\") != std::string::npos) {
      throw Error(ErrorCode::kMalformed, "unusable image name '" + n + "'");
    }
    if (!seen.insert(n).second) throw Error(ErrorCode::kNameCollision, "image name " + n);
  }
}

void write_colmap_features(const std::vector<Eigen::Vector2d>& keypoints, std::ostream& out) {
  const std::string suffix = descriptor_suffix();
  std::string buf;
  append_number(buf, static_cast<long long>(keypoints.size()));
  buf += ' ';
  append_number(buf, kDescriptorDim);
  buf += '\n';
  for (const Eigen::Vector2d& p : keypoints) {
    if (!p.allFinite()) throw Error(ErrorCode::kInvariantViolation, "keypoint without a position");
    append_number(buf, p.x());
    buf += ' ';
    append_number(buf, p.y());
    buf += suffix;
    if (buf.size() > (1 << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
  if (!out) throw Error(ErrorCode::kIo, "failed writing features");
}

std::vector<Eigen::Vector2d> read_colmap_features(std::istream& in) {
  std::size_t n = 0;
  int dim = 0;
  if (!(in >> n >> dim) || dim < 0) throw Error(ErrorCode::kMalformed, "feature header");
  std::vector<Eigen::Vector2d> out;
  out.reserve(n);
  std::string line;
  std::getline(in, line);
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::getline(in, line)) throw Error(ErrorCode::kMalformed, "truncated feature file");
    std::istringstream ls(line);
    double x, y, scale, orientation;
    if (!(ls >> x >> y >> scale >> orientation)) {
      throw Error(ErrorCode::kMalformed, "feature line " + std::to_string(k + 2));
    }
    int d = 0;
    for (int v; ls >> v;) ++d;
    if (d != dim) {
      throw Error(ErrorCode::kMalformed, "descriptor length on line " + std::to_string(k + 2));
    }
    out.emplace_back(x, y);
  }
  return out;
}

void write_colmap_matches(const PairMatches& matches, const std::vector<std::string>& names,
                          const std::vector<std::size_t>& feature_counts, std::ostream& out) {
  std::string buf;
  for (const auto& [key, list] : matches.pairs) {
    if (list.empty()) continue;
    const auto [i, j] = key;
    if (i < 0 || j < 0 || static_cast<std::size_t>(std::max(i, j)) >= names.size()) {
      throw Error(ErrorCode::kInvariantViolation, "pair refers to a frame without a name");
    }
    const std::size_t ni = feature_counts[static_cast<std::size_t>(i)];
    const std::size_t nj = feature_counts[static_cast<std::size_t>(j)];
    buf += names[static_cast<std::size_t>(i)];
    buf += ' ';
    buf += names[static_cast<std::size_t>(j)];
    buf += '\n';
    for (const auto& [a, b] : list) {
      if (a >= ni || b >= nj) {
        throw Error(ErrorCode::kInvariantViolation,
                    "match index out of range in pair " + std::to_string(i) + "," +
                        std::to_string(j));
      }
      append_number(buf, static_cast<long long>(a));
      buf += ' ';
      append_number(buf, static_cast<long long>(b));
      buf += '\n';
    }
    buf += '\n';
    if (buf.size() > (1 << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
  if (!out) throw Error(ErrorCode::kIo, "failed writing matches");
}

PairMatches read_colmap_matches(std::istream& in, const std::vector<std::string>& names) {
  std::unordered_map<std::string, int> index;
  for (std::size_t k = 0; k < names.size(); ++k) index[names[k]] = static_cast<int>(k);
  PairMatches out;
  out.num_frames = static_cast<int>(names.size());
  MatchList* current = nullptr;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      current = nullptr;
      continue;
    }
    std::istringstream ls(line);
    if (!current) {
      std::string a, b;
      if (!(ls >> a >> b) || !index.count(a) || !index.count(b)) {
        throw Error(ErrorCode::kMalformed, "matches line " + std::to_string(line_no) +
                                               ": unknown image pair");
      }
      current = &out.pairs[{index[a], index[b]}];
      continue;
    }
    long long a, b;
    if (!(ls >> a >> b) || a < 0 || b < 0) {
      throw Error(ErrorCode::kMalformed, "matches line " + std::to_string(line_no));
    }
    current->emplace_back(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
  }
  return out;
}

ColmapFiles export_colmap(const KeypointPositions& positions, const PairMatches& matches,
                          const std::vector<std::string>& names,
                          const std::filesystem::path& dir) {
  if (names.size() != positions.frames.size()) {
    throw Error(ErrorCode::kInvariantViolation, "one image name per frame is required");
  }
  check_image_names(names);
  std::filesystem::create_directories(dir);
  ColmapFiles files;
  std::vector<std::size_t> counts;
  for (std::size_t f = 0; f < names.size(); ++f) {
    const std::filesystem::path p = dir / (names[f] + ".txt");
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + p.string());
    write_colmap_features(positions.frames[f], out);
    counts.push_back(positions.frames[f].size());
    files.features.push_back(p);
  }
  files.matches = dir / "matches.txt";
  std::ofstream out(files.matches, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + files.matches.string());
  write_colmap_matches(matches, names, counts, out);
  return files;
}

std::string adjacency_pgm(const AdjacencyMatrix& adjacency) {
  const int n = adjacency.size();
  std::string out = "P5\n" + std::to_string(n) + " " + std::to_string(n) + "\n255\n";
  const std::uint64_t max_count = adjacency.max_count();
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double v = max_count == 0 ? 0.0
                                      : std::round(255.0 * static_cast<double>(adjacency.at(y, x)) /
                                                   static_cast<double>(max_count));
      out += static_cast<char>(static_cast<std::uint8_t>(v));
    }
  }
  return out;
}

GrayImage read_pgm(std::istream& in) {
  std::string magic;
  int maxval = 0;
  GrayImage img;
  if (!(in >> magic >> img.width >> img.height >> maxval) || magic != "P5" || maxval != 255 ||
      img.width < 0 || img.height < 0) {
    throw Error(ErrorCode::kMalformed, "not an 8-bit P5 image");
  }
  in.get();
  img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw Error(ErrorCode::kMalformed, "truncated image");
  }
  return img;
}

void write_pairs_csv(const std::vector<PairReport>& reports, std::ostream& out) {
  std::string buf = "pair_i,pair_j,model,n_matches,n_inliers,inlier_ratio,median_sampson,trials\n";
  for (const PairReport& r : reports) {
    append_number(buf, r.i);
    buf += ',';
    append_number(buf, r.j);
    buf += ',';
    buf += chosen_model_name(r.chosen);
    buf += ',';
    append_number(buf, static_cast<long long>(r.n_matches));
    buf += ',';
    append_number(buf, static_cast<long long>(r.n_inliers));
    buf += ',';
    append_number(buf, r.inlier_ratio);
    buf += ',';
    append_number(buf, r.median_sampson);
    buf += ',';
    append_number(buf, r.trials);
    buf += '\n';
  }
  out << buf;
  if (!out) throw Error(ErrorCode::kIo, "failed writing pair reports");
}

std::vector<PairReport> read_pairs_csv(std::istream& in) {
  std::vector<PairReport> out;
  std::string line;
  std::getline(in, line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (cells.size() != 8) throw Error(ErrorCode::kMalformed, "csv line " + std::to_string(line_no));
    PairReport r;
    try {
      r.i = std::stoi(cells[0]);
      r.j = std::stoi(cells[1]);
      r.chosen = cells[2] == "E" ? ChosenModel::kE
                 : cells[2] == "H" ? ChosenModel::kH
                                   : ChosenModel::kNone;
      r.n_matches = std::stoull(cells[3]);
      r.n_inliers = std::stoull(cells[4]);
      r.inlier_ratio = std::stod(cells[5]);
      r.median_sampson = std::stod(cells[6]);
      r.trials = std::stoi(cells[7]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kMalformed, "csv line " + std::to_string(line_no));
    }
    out.push_back(r);
  }
  return out;
}

std::string summary_json(const VerifySummary& s) {
  std::string out = "{\n  \"n_pairs\": ";
  append_number(out, static_cast<long long>(s.n_pairs));
  out += ",\n  \"n_E\": ";
  append_number(out, static_cast<long long>(s.n_e));
  out += ",\n  \"n_H\": ";
  append_number(out, static_cast<long long>(s.n_h));
  out += ",\n  \"n_NONE\": ";
  append_number(out, static_cast<long long>(s.n_none));
  out += ",\n  \"median_inlier_ratio\": ";
  json_number(out, s.median_inlier_ratio);
  out += ",\n  \"median_sampson\": ";
  json_number(out, s.median_sampson);
  if (s.has_pooled) {
    out += ",\n  \"pooled_median_sampson\": ";
    json_number(out, s.pooled_median_sampson);
  }
  out += ",\n  \"per_image_matches\": ";
  json_array(out, s.per_image_matches);
  out += ",\n  \"per_image_inliers\": ";
  json_array(out, s.per_image_inliers);
  out += "\n}\n";
  return out;
}

double RunStats::total_seconds() const {
  double t = 0.0;
  for (const auto& [name, seconds] : stages) t += seconds;
  return t;
}

double process_cpu_seconds() {
  rusage usage{};
  if (getrusage(RUSAGE_SELF, &usage) != 0) return 0.0;
  auto seconds = [](const timeval& tv) {
    return static_cast<double>(tv.tv_sec) + 1e-6 * static_cast<double>(tv.tv_usec);
  };
  return seconds(usage.ru_utime) + seconds(usage.ru_stime);
}

std::string stats_json(const RunStats& s) {
  std::string out = "{\n  \"stages\": {";
  for (std::size_t k = 0; k < s.stages.size(); ++k) {
    out += k ? ", \"" : "\"";
    out += s.stages[k].first;
    out += "\": ";
    json_number(out, s.stages[k].second);
  }
  const double total = s.total_seconds();
  out += "},\n  \"total_seconds\": ";
  json_number(out, total);
  out += ",\n  \"cpu_seconds\": ";
  json_number(out, s.cpu_seconds);
  out += ",\n  \"cpu_percent\": ";
  json_number(out, total > 0.0 ? 100.0 * s.cpu_seconds / total : 0.0);
  out += ",\n  \"threads\": ";
  append_number(out, s.threads);
  out += ",\n  \"frames\": ";
  append_number(out, static_cast<long long>(s.frames));
  out += ",\n  \"peak_keypoints\": ";
  append_number(out, static_cast<long long>(s.peak_keypoints));
  out += ",\n  \"correspondences\": ";
  append_number(out, static_cast<long long>(s.correspondences));
  out += ",\n  \"tracks\": ";
  append_number(out, static_cast<long long>(s.tracks));
  out += ",\n  \"pair_matches\": ";
  append_number(out, static_cast<long long>(s.pair_matches));
  out += ",\n  \"dropped_out_of_bounds\": ";
  append_number(out, static_cast<long long>(s.dropped_out_of_bounds));
  out += ",\n  \"merged_duplicates\": ";
  append_number(out, static_cast<long long>(s.merged_duplicates));
  out += "\n}\n";
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out << contents;
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mvcorr
