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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "mvcorr/error.hpp"
#include "mvcorr/export.hpp"

namespace mvcorr {
namespace {

using Eigen::Vector2d;

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("mvcorr_export_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

TEST(ColmapTest, FeatureFileFormat) {
  std::ostringstream out;
  write_colmap_features({{8.0, 8.0}, {9.125, 6.5}}, out);
  const std::vector<std::string> lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "2 128");
  std::string zeros;
  for (int k = 0; k < 128; ++k) zeros += " 0";
  EXPECT_EQ(lines[1], "8 8 1.0 0.0" + zeros);
  EXPECT_EQ(lines[2], "9.125 6.5 1.0 0.0" + zeros);

  std::istringstream in(out.str());
  EXPECT_EQ(read_colmap_features(in), (std::vector<Vector2d>{{8.0, 8.0}, {9.125, 6.5}}));

  std::ostringstream bad;
  EXPECT_EQ(code_of([&] { write_colmap_features({{NAN, 1.0}}, bad); }),
            ErrorCode::kInvariantViolation);
}

TEST(ColmapTest, SingleMatchBlock) {
  PairMatches m;
  m.num_frames = 2;
  m.pairs[{0, 1}] = {{1, 0}};
  std::ostringstream out;
  write_colmap_matches(m, {"a.png", "b.png"}, {2, 2}, out);
  EXPECT_EQ(out.str(), "a.png b.png\n1 0\n\n");
  EXPECT_EQ(lines_of(out.str()).size(), 3u);
}

TEST(ColmapTest, EmptyPairOmitted) {
  PairMatches m;
  m.num_frames = 3;
  m.pairs[{0, 1}] = {};
  m.pairs[{0, 2}] = {{0, 0}, {1, 1}};
  std::ostringstream out;
  write_colmap_matches(m, {"a", "b", "c"}, {2, 2, 2}, out);
  EXPECT_EQ(out.str(), "a c\n0 0\n1 1\n\n");
}

TEST(ColmapTest, IndexOutOfRangeRejected) {
  PairMatches m;
  m.num_frames = 2;
  m.pairs[{0, 1}] = {{0, 2}};
  std::ostringstream out;
  EXPECT_EQ(code_of([&] { write_colmap_matches(m, {"a", "b"}, {1, 2}, out); }),
            ErrorCode::kInvariantViolation);
}

TEST(ColmapTest, ImageNames) {
  const std::vector<std::string> names = default_image_names(3);
  EXPECT_EQ(names[0], "frame_000000.png");
  EXPECT_EQ(names[2], "frame_000002.png");
  EXPECT_NO_THROW(check_image_names(names));
  EXPECT_EQ(code_of([] { check_image_names({"a.png", "b.png", "a.png"}); }),
            ErrorCode::kNameCollision);
  EXPECT_EQ(code_of([] { check_image_names({"a b.png"}); }), ErrorCode::kMalformed);
  EXPECT_EQ(code_of([] { check_image_names({"dir/a.png"}); }), ErrorCode::kMalformed);
  EXPECT_EQ(code_of([] { check_image_names({""}); }), ErrorCode::kMalformed);
}

TEST(ColmapTest, ExportRoundTrip) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> coord(0, 8 * 640 - 1);
  const int frames = 5;
  KeypointPositions pos;
  pos.frames.resize(frames);
  for (int f = 0; f < frames; ++f) {
    for (int k = 0; k < 30 + 7 * f; ++k) pos.frames[f].emplace_back(coord(rng) / 8.0, coord(rng) / 16.0);
  }
  PairMatches m;
  m.num_frames = frames;
  for (int i = 0; i < frames; ++i) {
    for (int j = i + 1; j < frames; ++j) {
      if ((i + j) % 4 == 0) continue;
      MatchList& list = m.pairs[{i, j}];
      for (std::uint32_t a = 0; a < 20; a += 1 + (a % 3)) list.emplace_back(a, (a * 7 + j) % 30);
    }
  }
  TempDir dir;
  const std::vector<std::string> names = default_image_names(frames);
  const ColmapFiles files = export_colmap(pos, m, names, dir.path());
  ASSERT_EQ(files.features.size(), static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    EXPECT_EQ(files.features[f], dir.path() / (names[f] + ".txt"));
    std::ifstream in(files.features[f]);
    EXPECT_EQ(read_colmap_features(in), pos.frames[f]);
  }
  std::ifstream in(files.matches);
  EXPECT_EQ(read_colmap_matches(in, names), m);

  std::vector<std::string> dup = names;
  dup[3] = dup[1];
  EXPECT_EQ(code_of([&] { export_colmap(pos, m, dup, dir.path()); }), ErrorCode::kNameCollision);
}

GrayImage pgm(const AdjacencyMatrix& a) {
  std::istringstream in(adjacency_pgm(a));
  return read_pgm(in);
}

TEST(PgmTest, ZeroMatrixIsBlack) {
  const std::string bytes = adjacency_pgm(AdjacencyMatrix(3));
  EXPECT_EQ(bytes.substr(0, 2), "P5");
  const GrayImage img = pgm(AdjacencyMatrix(3));
  ASSERT_EQ(img.width, 3);
  ASSERT_EQ(img.height, 3);
  EXPECT_TRUE(std::all_of(img.pixels.begin(), img.pixels.end(), [](auto v) { return v == 0; }));
}

TEST(PgmTest, SingleMaxPair) {
  AdjacencyMatrix a(4);
  a.set(1, 3, 17);
  const GrayImage img = pgm(a);
  int bright = 0;
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) bright += img.at(x, y) == 255 ? 1 : 0;
  }
  EXPECT_EQ(bright, 2);
  EXPECT_EQ(img.at(3, 1), 255);
  EXPECT_EQ(img.at(1, 3), 255);
}

TEST(PgmTest, Rounding) {
  AdjacencyMatrix a(3);
  a.set(0, 1, 200);
  a.set(0, 2, 1);
  a.set(1, 2, 3);
  const GrayImage img = pgm(a);
  EXPECT_EQ(img.at(1, 0), 255);
  EXPECT_EQ(img.at(2, 0), static_cast<int>(std::lround(255.0 / 200.0)));
  EXPECT_EQ(img.at(2, 1), static_cast<int>(std::lround(255.0 * 3 / 200.0)));
  EXPECT_EQ(img.at(0, 0), 0);
}

PairReport report(int i, int j, ChosenModel m, std::size_t n, std::size_t inl, double s, int trials) {
  PairReport r;
  r.i = i;
  r.j = j;
  r.chosen = m;
  r.n_matches = n;
  r.n_inliers = inl;
  r.inlier_ratio = n ? static_cast<double>(inl) / static_cast<double>(n) : 0.0;
  r.median_sampson = s;
  r.trials = trials;
  return r;
}

// Independent summary of pairs.csv: parses the text columns directly.
struct CsvSummary {
  double median_ratio;
  double median_residual;
  std::vector<std::uint64_t> per_image_matches;
};

double plain_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

CsvSummary recompute(const std::string& csv, int frames) {
  CsvSummary s{0, 0, std::vector<std::uint64_t>(static_cast<std::size_t>(frames), 0)};
  std::vector<double> ratios, residuals;
  std::vector<std::string> rows = lines_of(csv);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::vector<std::string> col;
    std::stringstream ss(rows[r]);
    for (std::string c; std::getline(ss, c, ',');) col.push_back(c);
    const int i = std::stoi(col[0]);
    const int j = std::stoi(col[1]);
    const unsigned long n = std::stoul(col[3]);
    s.per_image_matches[static_cast<std::size_t>(i)] += n;
    s.per_image_matches[static_cast<std::size_t>(j)] += n;
    if (n == 0) continue;
    ratios.push_back(col[2] == "NONE" ? 0.0 : std::stod(col[5]));
    if (col[2] != "NONE") residuals.push_back(std::stod(col[6]));
  }
  s.median_ratio = plain_median(ratios);
  s.median_residual = plain_median(residuals);
  return s;
}

TEST(ReportTest, CsvRoundTripAndRecompute) {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> count(0, 400);
  std::uniform_real_distribution<double> res(1e-12, 1e-6);
  const int frames = 8;
  std::vector<PairReport> reports;
  for (int i = 0; i < frames; ++i) {
    for (int j = i + 1; j < frames; ++j) {
      const std::size_t n = static_cast<std::size_t>(count(rng));
      const int kind = count(rng) % 5;
      const ChosenModel m = n == 0 || kind == 0 ? ChosenModel::kNone
                                                : (kind % 2 ? ChosenModel::kE : ChosenModel::kH);
      const std::size_t inl = m == ChosenModel::kNone ? 0 : n - n / 7;
      reports.push_back(report(i, j, m, n, inl, m == ChosenModel::kNone ? 0.0 : res(rng), count(rng)));
    }
  }
  std::ostringstream csv;
  write_pairs_csv(reports, csv);
  EXPECT_EQ(lines_of(csv.str())[0],
            "pair_i,pair_j,model,n_matches,n_inliers,inlier_ratio,median_sampson,trials");
  std::istringstream in(csv.str());
  EXPECT_EQ(read_pairs_csv(in), reports);

  const VerifySummary s = compute_summary(reports, frames);
  const CsvSummary oracle = recompute(csv.str(), frames);
  EXPECT_EQ(s.median_inlier_ratio, oracle.median_ratio);
  EXPECT_EQ(s.median_sampson, oracle.median_residual);
  EXPECT_EQ(s.per_image_matches, oracle.per_image_matches);

  const nlohmann::json j = nlohmann::json::parse(summary_json(s));
  EXPECT_EQ(j["n_pairs"].get<std::size_t>(), reports.size());
  EXPECT_EQ(j["n_E"].get<std::size_t>() + j["n_H"].get<std::size_t>() +
                j["n_NONE"].get<std::size_t>(),
            reports.size());
  EXPECT_EQ(j["median_inlier_ratio"].get<double>(), oracle.median_ratio);
  EXPECT_EQ(j["median_sampson"].get<double>(), oracle.median_residual);
  EXPECT_EQ(j["per_image_matches"].get<std::vector<std::uint64_t>>(), oracle.per_image_matches);
  EXPECT_FALSE(j.contains("pooled_median_sampson"));
}

TEST(ReportTest, NaNResidualBecomesNull) {
  const VerifySummary s = compute_summary({report(0, 1, ChosenModel::kNone, 10, 0, 0, 5)}, 2);
  const nlohmann::json j = nlohmann::json::parse(summary_json(s));
  EXPECT_TRUE(j["median_sampson"].is_null());
  EXPECT_EQ(j["median_inlier_ratio"].get<double>(), 0.0);
}

TEST(ReportTest, StatsTotalsAreStageSums) {
  RunStats st;
  st.stages = {{"ingest", 0.25}, {"correspond", 1.5}, {"tracks", 0.125}, {"verify", 3.0},
               {"export", 0.0625}};
  st.cpu_seconds = 4.0;
  st.threads = 2;
  EXPECT_DOUBLE_EQ(st.total_seconds(), 4.9375);
  const nlohmann::json j = nlohmann::json::parse(stats_json(st));
  double sum = 0.0;
  for (const auto& [name, v] : j["stages"].items()) {
    EXPECT_GE(v.get<double>(), 0.0);
    sum += v.get<double>();
  }
  EXPECT_NEAR(j["total_seconds"].get<double>(), sum, 0.01 * sum);
  EXPECT_EQ(j["stages"].size(), 5u);
  EXPECT_GE(process_cpu_seconds(), 0.0);
}

}  // namespace
}  // namespace mvcorr
