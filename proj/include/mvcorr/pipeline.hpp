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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mvcorr/camera.hpp"
#include "mvcorr/correspond.hpp"
#include "mvcorr/export.hpp"
#include "mvcorr/mvdump.hpp"
#include "mvcorr/synth.hpp"
#include "mvcorr/tracks.hpp"
#include "mvcorr/verify.hpp"

namespace mvcorr {

// Every setting of a pipeline run. The JSON form uses the same flat keys as
// the command-line flags.
struct PipelineConfig {
  // Input: a dump file, or a synthetic spec when `synth` is set.
  std::string dump;
  std::string input_format = "auto";  // auto | json | binary | aom
  std::string synth;                  // "" | translation | homography | epipolar
  int frames = 10;
  int width = 640;
  int height = 480;
  int block = 16;
  double shift_x = 1.0;
  double shift_y = -2.0;
  double zoom = 1.01;        // homography: per-frame scale about the center
  double rotate_deg = 0.5;   // homography: per-frame in-plane rotation
  double tx = 0.1;           // epipolar: per-frame camera translation
  double ty = 0.0;
  double tz = 0.0;
  double rx_deg = 0.0;       // epipolar: per-frame rotation vector, degrees
  double ry_deg = 0.0;
  double rz_deg = 0.0;
  double min_depth = 3.0;
  double max_depth = 10.0;
  double noise = 0.0;
  double outliers = 0.0;
  double outlier_margin = 8.0;

  // Intrinsics; an unset principal point is the frame center.
  double fx = 1000.0;
  double fy = 1000.0;
  std::optional<double> cx;
  std::optional<double> cy;

  bool chain = true;
  double epsilon = 0.1;
  double tau = 1e-3;
  bool cosine_off = false;
  bool keep_pairs = false;

  double max_error = 4.0;
  double min_inlier_ratio = 0.25;
  int max_num_trials = 10000;
  int lo_refit_rounds = 2;
  double confidence = 0.99;
  int repeats = 3;
  double kappa = kSubstantiallyMore;
  double degenerate_overlap = 0.95;
  bool pooled_sampson = false;

  std::uint64_t seed = 0;
  int threads = 0;  // 0 = one per core
  std::string out = "out";
  bool colmap = false;
  std::vector<std::string> image_names;  // empty = frame_NNNNNN.png
};

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg);
// Keys absent from `j` keep their value in `base`; unknown keys are MALFORMED.
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});
PipelineConfig load_config_file(const std::filesystem::path& path, PipelineConfig base = {});

// Derived settings.
MotionSpec motion_spec(const PipelineConfig& cfg);
CameraIntrinsics intrinsics(const PipelineConfig& cfg, std::pair<int, int> frame_size);
CosineParams cosine_params(const PipelineConfig& cfg);
VerifyConfig verify_config(const PipelineConfig& cfg);

// Output file names under `cfg.out`.
namespace files {
inline constexpr const char* kDump = "dump.json";
inline constexpr const char* kGroundTruth = "ground_truth.json";
inline constexpr const char* kStore = "store.jsonl";
inline constexpr const char* kTracks = "tracks.jsonl";
inline constexpr const char* kAdjacency = "adjacency.pgm";
inline constexpr const char* kPairs = "pairs.csv";
inline constexpr const char* kSummary = "summary.json";
inline constexpr const char* kStats = "stats.json";
inline constexpr const char* kConfig = "config.json";
inline constexpr const char* kColmapDir = "colmap";
}  // namespace files

// Loads the configured dump (or generates the synthetic one). `truth`, when
// given, receives the ground truth of a synthetic input.
MVDumpSequence load_input(const PipelineConfig& cfg, std::vector<std::string>* warnings,
                          std::optional<GroundTruth>* truth = nullptr);

struct TrackStage {
  std::vector<Track> tracks;
  PairMatches matches;
};

TrackStage track_stage(const KeypointStore& store, const PipelineConfig& cfg);

struct RunOutcome {
  VerifyResult verify;
  RunStats stats;
};

// True when more than half of the pairs ended without a model.
bool no_model_dominated(const VerifySummary& summary);

// Full pipeline; writes every output under cfg.out.
RunOutcome run_pipeline(const PipelineConfig& cfg, std::vector<std::string>* warnings);

// Stage commands over the files in cfg.out (inputs may be overridden).
void stage_ingest(const PipelineConfig& cfg, std::vector<std::string>* warnings);
void stage_match(const PipelineConfig& cfg, const std::filesystem::path& dump_path);
void stage_tracks(const PipelineConfig& cfg, const std::filesystem::path& store_path);
VerifyResult stage_verify(const PipelineConfig& cfg, const std::filesystem::path& tracks_path);
ColmapFiles stage_export(const PipelineConfig& cfg, const std::filesystem::path& store_path,
                         const std::filesystem::path& tracks_path);

void write_config_echo(const PipelineConfig& cfg);

}  // namespace mvcorr
