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

#include "mvcorr/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <type_traits>

#include <Eigen/Geometry>

#include "mvcorr/error.hpp"
#include "mvcorr/parallel.hpp"

namespace mvcorr {
namespace {

template <typename Cfg, typename F>
void visit_fields(Cfg& c, F&& f) {
  f("dump", c.dump);
  f("input_format", c.input_format);
  f("synth", c.synth);
  f("frames", c.frames);
  f("width", c.width);
  f("height", c.height);
  f("block", c.block);
  f("shift_x", c.shift_x);
  f("shift_y", c.shift_y);
  f("zoom", c.zoom);
  f("rotate_deg", c.rotate_deg);
  f("tx", c.tx);
  f("ty", c.ty);
  f("tz", c.tz);
  f("rx_deg", c.rx_deg);
  f("ry_deg", c.ry_deg);
  f("rz_deg", c.rz_deg);
  f("min_depth", c.min_depth);
  f("max_depth", c.max_depth);
  f("noise", c.noise);
  f("outliers", c.outliers);
  f("outlier_margin", c.outlier_margin);
  f("fx", c.fx);
  f("fy", c.fy);
  f("cx", c.cx);
  f("cy", c.cy);
  f("chain", c.chain);
  f("epsilon", c.epsilon);
  f("tau", c.tau);
  f("cosine_off", c.cosine_off);
  f("keep_pairs", c.keep_pairs);
  f("max_error", c.max_error);
  f("min_inlier_ratio", c.min_inlier_ratio);
  f("max_num_trials", c.max_num_trials);
  f("lo_refit_rounds", c.lo_refit_rounds);
  f("confidence", c.confidence);
  f("repeats", c.repeats);
  f("kappa", c.kappa);
  f("degenerate_overlap", c.degenerate_overlap);
  f("pooled_sampson", c.pooled_sampson);
  f("seed", c.seed);
  f("threads", c.threads);
  f("out", c.out);
  f("colmap", c.colmap);
  f("image_names", c.image_names);
}

template <typename T>
struct is_optional : std::false_type {};
template <typename T>
struct is_optional<std::optional<T>> : std::true_type {};

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

std::filesystem::path out_path(const PipelineConfig& cfg, const char* name) {
  return std::filesystem::path(cfg.out) / name;
}

void write_stream_file(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  return in;
}

// Re-raises module errors with the file they came from.
template <typename Fn>
auto with_path(const std::filesystem::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

KeypointStore read_store(const std::filesystem::path& path) {
  return with_path(path, [&] {
    std::ifstream in = open_input(path);
    return read_store_jsonl(in);
  });
}

struct TrackFile {
  std::vector<Track> tracks;
  int num_frames = 0;
  std::pair<int, int> frame_size{0, 0};
};

TrackFile read_tracks(const std::filesystem::path& path) {
  return with_path(path, [&] {
    std::ifstream in = open_input(path);
    TrackFile f;
    f.tracks = read_tracks_jsonl(in, &f.num_frames, &f.frame_size);
    return f;
  });
}

void write_track_outputs(const PipelineConfig& cfg, const std::vector<Track>& tracks,
                         const PairMatches& matches, std::pair<int, int> frame_size) {
  write_stream_file(out_path(cfg, files::kTracks), [&](std::ostream& out) {
    write_tracks_jsonl(tracks, matches.num_frames, out, frame_size);
  });
  write_text_file(out_path(cfg, files::kAdjacency), adjacency_pgm(adjacency(matches)));
}

void write_verify_outputs(const PipelineConfig& cfg, const VerifyResult& result) {
  write_stream_file(out_path(cfg, files::kPairs),
                    [&](std::ostream& out) { write_pairs_csv(result.reports, out); });
  write_text_file(out_path(cfg, files::kSummary), summary_json(result.summary));
}

std::vector<std::string> image_names(const PipelineConfig& cfg, int num_frames) {
  if (cfg.image_names.empty()) return default_image_names(num_frames);
  if (static_cast<int>(cfg.image_names.size()) != num_frames) {
    throw std::invalid_argument("image_names has " + std::to_string(cfg.image_names.size()) +
                                " entries for " + std::to_string(num_frames) + " frames");
  }
  return cfg.image_names;
}

std::pair<int, int> first_frame_size(const MVDumpSequence& seq) {
  if (seq.frames.empty()) return {0, 0};
  return {seq.frames.front().meta.width, seq.frames.front().meta.height};
}

}  // namespace

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  visit_fields(cfg, [&](const char* name, const auto& value) {
    using T = std::decay_t<decltype(value)>;
    if constexpr (is_optional<T>::value) {
      j[name] = value ? nlohmann::ordered_json(*value) : nlohmann::ordered_json(nullptr);
    } else {
      j[name] = value;
    }
  });
  return j;
}

PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    visit_fields(base, [&](const char* name, auto& field) {
      if (found || key != name) return;
      found = true;
      using T = std::decay_t<decltype(field)>;
      try {
        if constexpr (is_optional<T>::value) {
          if (value.is_null()) {
            field.reset();
          } else {
            field = value.get<typename T::value_type>();
          }
        } else {
          field = value.get<T>();
        }
      } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument("config key '" + key + "' has the wrong type");
      }
    });
    if (!found) throw std::invalid_argument("unknown config key '" + key + "'");
  }
  return base;
}

PipelineConfig load_config_file(const std::filesystem::path& path, PipelineConfig base) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  try {
    return config_from_json(j, std::move(base));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

MotionSpec motion_spec(const PipelineConfig& cfg) {
  MotionSpec spec;
  if (cfg.synth == "translation") {
    spec.kind = MotionKind::kTranslation2d;
  } else if (cfg.synth == "homography") {
    spec.kind = MotionKind::kHomography;
  } else if (cfg.synth == "epipolar") {
    spec.kind = MotionKind::kEpipolar;
  } else {
    throw std::invalid_argument("unknown synthetic motion '" + cfg.synth +
                                "' (translation, homography, epipolar)");
  }
  spec.n_frames = cfg.frames;
  spec.width = cfg.width;
  spec.height = cfg.height;
  spec.block_size = cfg.block;
  spec.shift_px = {cfg.shift_x, cfg.shift_y};
  const double deg = std::numbers::pi / 180.0;
  const double c = std::cos(cfg.rotate_deg * deg) * cfg.zoom;
  const double s = std::sin(cfg.rotate_deg * deg) * cfg.zoom;
  const double ox = 0.5 * cfg.width;
  const double oy = 0.5 * cfg.height;
  spec.homography << c, -s, ox - c * ox + s * oy, s, c, oy - s * ox - c * oy, 0, 0, 1;
  const Eigen::Vector3d rv(cfg.rx_deg * deg, cfg.ry_deg * deg, cfg.rz_deg * deg);
  spec.rotation = rv.norm() > 0.0
                      ? Eigen::Matrix3d(Eigen::AngleAxisd(rv.norm(), rv.normalized()))
                      : Eigen::Matrix3d::Identity();
  spec.translation = {cfg.tx, cfg.ty, cfg.tz};
  spec.min_depth = cfg.min_depth;
  spec.max_depth = cfg.max_depth;
  spec.noise_sigma_px = cfg.noise;
  spec.outlier_fraction = cfg.outliers;
  spec.outlier_margin_px = cfg.outlier_margin;
  return spec;
}

CameraIntrinsics intrinsics(const PipelineConfig& cfg, std::pair<int, int> frame_size) {
  CameraIntrinsics k;
  k.fx = cfg.fx;
  k.fy = cfg.fy;
  k.cx = cfg.cx.value_or(0.5 * frame_size.first);
  k.cy = cfg.cy.value_or(0.5 * frame_size.second);
  if (!k.valid()) throw std::invalid_argument("focal lengths must be positive");
  return k;
}

CosineParams cosine_params(const PipelineConfig& cfg) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0) || !(cfg.tau > 0.0)) {
    throw std::invalid_argument("epsilon must lie in (0, 1] and tau must be positive");
  }
  return {cfg.epsilon, cfg.tau, cfg.cosine_off};
}

VerifyConfig verify_config(const PipelineConfig& cfg) {
  if (!(cfg.max_error > 0.0) || !(cfg.min_inlier_ratio > 0.0 && cfg.min_inlier_ratio <= 1.0) ||
      cfg.max_num_trials <= 0 || cfg.lo_refit_rounds < 0 ||
      !(cfg.confidence > 0.0 && cfg.confidence < 1.0) || cfg.repeats <= 0 ||
      !(cfg.kappa > 0.0) || !(cfg.degenerate_overlap > 0.0)) {
    throw std::invalid_argument("verification settings out of range");
  }
  VerifyConfig v;
  v.ransac.max_error_px = cfg.max_error;
  v.ransac.min_inlier_ratio = cfg.min_inlier_ratio;
  v.ransac.max_num_trials = cfg.max_num_trials;
  v.ransac.lo_refit_rounds = cfg.lo_refit_rounds;
  v.ransac.confidence = cfg.confidence;
  v.ransac.rng_seed = cfg.seed;
  v.repeats = cfg.repeats;
  v.kappa = cfg.kappa;
  v.degenerate_overlap = cfg.degenerate_overlap;
  v.pooled_sampson = cfg.pooled_sampson;
  v.threads = resolve_threads(cfg.threads);
  return v;
}

MVDumpSequence load_input(const PipelineConfig& cfg, std::vector<std::string>* warnings,
                          std::optional<GroundTruth>* truth) {
  if (!cfg.dump.empty()) {
    if (!cfg.synth.empty()) throw std::invalid_argument("give either a dump or a synth spec");
    const std::filesystem::path path(cfg.dump);
    return with_path(path, [&] {
      if (cfg.input_format == "auto") return load_dump_file(cfg.dump, warnings);
      const std::string bytes = read_text_file(path);
      if (cfg.input_format == "aom") return normalize_aom_inspect(bytes, warnings);
      if (cfg.input_format == "json") return parse_dump(bytes, DumpFormat::kJson, warnings);
      if (cfg.input_format == "binary") return parse_dump(bytes, DumpFormat::kBinary, warnings);
      throw std::invalid_argument("unknown input format '" + cfg.input_format + "'");
    });
  }
  if (cfg.synth.empty()) throw std::invalid_argument("no input: pass --dump or --synth");
  const MotionSpec spec = motion_spec(cfg);
  SyntheticSequence s = gen_sequence(spec, intrinsics(cfg, {spec.width, spec.height}), cfg.seed);
  if (truth) *truth = std::move(s.truth);
  return std::move(s.dump);
}

TrackStage track_stage(const KeypointStore& store, const PipelineConfig& cfg) {
  TrackStage t;
  t.tracks = filter_tracks(build_tracks(store), cosine_params(cfg), cfg.keep_pairs);
  t.matches = propagate_pairs(t.tracks, store.num_frames());
  return t;
}

bool no_model_dominated(const VerifySummary& summary) {
  return 2 * summary.n_none > summary.n_pairs;
}

void write_config_echo(const PipelineConfig& cfg) {
  std::filesystem::create_directories(cfg.out);
  write_text_file(out_path(cfg, files::kConfig), config_to_json(cfg).dump(2) + "\n");
}

namespace {

void write_dump_outputs(const PipelineConfig& cfg, const MVDumpSequence& seq,
                        const std::optional<GroundTruth>& truth) {
  write_text_file(out_path(cfg, files::kDump), write_dump(seq, DumpFormat::kJson));
  if (truth) write_text_file(out_path(cfg, files::kGroundTruth), ground_truth_json(*truth));
}

}  // namespace

RunOutcome run_pipeline(const PipelineConfig& cfg, std::vector<std::string>* warnings) {
  const VerifyConfig vcfg = verify_config(cfg);
  cosine_params(cfg);  // rejects bad gate settings before any work
  std::filesystem::create_directories(cfg.out);
  RunOutcome outcome;
  RunStats& stats = outcome.stats;
  stats.threads = vcfg.threads;
  Stopwatch clock;

  std::optional<GroundTruth> truth;
  const MVDumpSequence seq = load_input(cfg, warnings, &truth);
  write_dump_outputs(cfg, seq, truth);
  stats.stages.emplace_back("ingest", clock.lap());

  KeypointStore store = build_keypoint_store(seq, {cfg.chain});
  stats.stages.emplace_back("correspond", clock.lap());

  const TrackStage tracks = track_stage(store, cfg);
  stats.stages.emplace_back("tracks", clock.lap());

  const CameraIntrinsics k = intrinsics(cfg, first_frame_size(seq));
  const KeypointPositions positions = positions_from_store(store);
  outcome.verify = verify_all_pairs(tracks.matches, positions, k, vcfg);
  stats.stages.emplace_back("verify", clock.lap());

  write_stream_file(out_path(cfg, files::kStore),
                    [&](std::ostream& out) { write_store_jsonl(store, out); });
  write_track_outputs(cfg, tracks.tracks, tracks.matches, first_frame_size(seq));
  write_verify_outputs(cfg, outcome.verify);
  if (cfg.colmap) {
    export_colmap(positions, tracks.matches, image_names(cfg, store.num_frames()),
                  out_path(cfg, files::kColmapDir));
  }
  write_config_echo(cfg);
  stats.stages.emplace_back("export", clock.lap());

  stats.frames = seq.frames.size();
  stats.peak_keypoints = store.total_keypoints();
  stats.correspondences = store.correspondences().size();
  stats.tracks = tracks.tracks.size();
  stats.pair_matches = tracks.matches.total();
  stats.dropped_out_of_bounds = store.stats().dropped_out_of_bounds;
  stats.merged_duplicates = store.stats().merged_duplicates;
  stats.cpu_seconds = process_cpu_seconds();
  write_text_file(out_path(cfg, files::kStats), stats_json(stats));
  return outcome;
}

void stage_ingest(const PipelineConfig& cfg, std::vector<std::string>* warnings) {
  std::filesystem::create_directories(cfg.out);
  std::optional<GroundTruth> truth;
  const MVDumpSequence seq = load_input(cfg, warnings, &truth);
  write_dump_outputs(cfg, seq, truth);
  write_config_echo(cfg);
}

void stage_match(const PipelineConfig& cfg, const std::filesystem::path& dump_path) {
  std::filesystem::create_directories(cfg.out);
  const MVDumpSequence seq = with_path(dump_path, [&] { return load_dump_file(dump_path.string()); });
  const KeypointStore store = build_keypoint_store(seq, {cfg.chain});
  write_stream_file(out_path(cfg, files::kStore),
                    [&](std::ostream& out) { write_store_jsonl(store, out); });
  write_config_echo(cfg);
}

void stage_tracks(const PipelineConfig& cfg, const std::filesystem::path& store_path) {
  std::filesystem::create_directories(cfg.out);
  const KeypointStore store = read_store(store_path);
  const TrackStage tracks = track_stage(store, cfg);
  const std::pair<int, int> size =
      store.num_frames() > 0 ? store.frame_size(0) : std::pair<int, int>{0, 0};
  write_track_outputs(cfg, tracks.tracks, tracks.matches, size);
  write_config_echo(cfg);
}

VerifyResult stage_verify(const PipelineConfig& cfg, const std::filesystem::path& tracks_path) {
  const VerifyConfig vcfg = verify_config(cfg);
  std::filesystem::create_directories(cfg.out);
  const TrackFile f = read_tracks(tracks_path);
  const PairMatches matches = propagate_pairs(f.tracks, f.num_frames);
  const KeypointPositions positions = positions_from_tracks(f.tracks, f.num_frames);
  const VerifyResult result = verify_all_pairs(matches, positions, intrinsics(cfg, f.frame_size), vcfg);
  write_verify_outputs(cfg, result);
  write_config_echo(cfg);
  return result;
}

ColmapFiles stage_export(const PipelineConfig& cfg, const std::filesystem::path& store_path,
                         const std::filesystem::path& tracks_path) {
  const KeypointStore store = read_store(store_path);
  const TrackFile f = read_tracks(tracks_path);
  if (f.num_frames > store.num_frames()) {
    throw Error(ErrorCode::kInvariantViolation, "tracks refer to frames missing from the store");
  }
  const PairMatches matches = propagate_pairs(f.tracks, store.num_frames());
  const KeypointPositions positions = positions_from_store(store);
  for (const Track& t : f.tracks) {
    for (const Detection& d : t.detections) {
      if (d.keypoint >= positions.frames[static_cast<std::size_t>(d.frame)].size()) {
        throw Error(ErrorCode::kInvariantViolation,
                    tracks_path.string() + ": track keypoint missing from the store");
      }
    }
  }
  const ColmapFiles out = export_colmap(positions, matches, image_names(cfg, store.num_frames()),
                                        out_path(cfg, files::kColmapDir));
  write_config_echo(cfg);
  return out;
}

}  // namespace mvcorr
