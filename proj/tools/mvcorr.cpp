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

// mvcorr: motion-vector correspondences, tracks and two-view verification.

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mvcorr/error.hpp"
#include "mvcorr/pipeline.hpp"

namespace {

using mvcorr::PipelineConfig;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNoModel = 4;

// Returns the value of --config from argv, or an empty string.
std::string find_config_arg(int argc, char** argv) {
  for (int k = 1; k < argc; ++k) {
    const std::string a = argv[k];
    if (a == "--config" && k + 1 < argc) return argv[k + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

struct Optionals {
  double cx = 0.0;
  double cy = 0.0;
  CLI::Option* cx_opt = nullptr;
  CLI::Option* cy_opt = nullptr;
  std::string store;
  std::string tracks;
};

void add_common(CLI::App* app, PipelineConfig& cfg) {
  app->add_option("--config", "JSON config with the same keys as the flags; flags win");
  app->add_option("--out,-o", cfg.out, "Output directory");
  app->add_option("--seed", cfg.seed, "Random seed");
}

void add_input(CLI::App* app, PipelineConfig& cfg) {
  app->add_option("--dump", cfg.dump, "Motion-vector dump (JSON, binary, or aom inspect JSON)");
  app->add_option("--input-format", cfg.input_format, "auto, json, binary or aom")
      ->check(CLI::IsMember({"auto", "json", "binary", "aom"}));
}

void add_synth(CLI::App* app, PipelineConfig& cfg, const char* kind_flags) {
  app->add_option(kind_flags, cfg.synth, "Synthetic motion: translation, homography, epipolar")
      ->check(CLI::IsMember({"", "translation", "homography", "epipolar"}));
  app->add_option("--frames", cfg.frames, "Number of frames");
  app->add_option("--width", cfg.width, "Frame width");
  app->add_option("--height", cfg.height, "Frame height");
  app->add_option("--block", cfg.block, "Block size");
  app->add_option("--shift-x", cfg.shift_x, "translation: pixels per frame");
  app->add_option("--shift-y", cfg.shift_y, "translation: pixels per frame");
  app->add_option("--zoom", cfg.zoom, "homography: scale per frame");
  app->add_option("--rotate-deg", cfg.rotate_deg, "homography: rotation per frame");
  app->add_option("--tx", cfg.tx, "epipolar: translation per frame");
  app->add_option("--ty", cfg.ty, "epipolar: translation per frame");
  app->add_option("--tz", cfg.tz, "epipolar: translation per frame");
  app->add_option("--rx-deg", cfg.rx_deg, "epipolar: rotation vector per frame");
  app->add_option("--ry-deg", cfg.ry_deg, "epipolar: rotation vector per frame");
  app->add_option("--rz-deg", cfg.rz_deg, "epipolar: rotation vector per frame");
  app->add_option("--min-depth", cfg.min_depth, "epipolar: nearest scene depth");
  app->add_option("--max-depth", cfg.max_depth, "epipolar: farthest scene depth");
  app->add_option("--noise", cfg.noise, "Gaussian MV noise sigma in pixels");
  app->add_option("--outliers", cfg.outliers, "Fraction of random motion vectors");
  app->add_option("--outlier-margin", cfg.outlier_margin,
                  "Minimum distance of an outlier from the true model, pixels");
}

void add_intrinsics(CLI::App* app, PipelineConfig& cfg, Optionals& opt) {
  app->add_option("--fx", cfg.fx, "Focal length x");
  app->add_option("--fy", cfg.fy, "Focal length y");
  opt.cx_opt = app->add_option("--cx", opt.cx, "Principal point x (default: frame center)");
  opt.cy_opt = app->add_option("--cy", opt.cy, "Principal point y (default: frame center)");
}

void add_match(CLI::App* app, PipelineConfig& cfg) {
  app->add_flag("--chain,!--no-chain", cfg.chain,
                "Re-emit propagated keypoints through later motion vectors");
}

void add_tracks(CLI::App* app, PipelineConfig& cfg) {
  app->add_option("--epsilon", cfg.epsilon, "Cosine gate: pass when cos >= 1 - epsilon");
  app->add_option("--tau", cfg.tau, "Cosine gate: skip segments shorter than this (pixels)");
  app->add_flag("--cosine-off", cfg.cosine_off, "Disable the cosine gate");
  app->add_flag("--keep-pairs", cfg.keep_pairs, "Keep two-detection tracks");
}

void add_verify(CLI::App* app, PipelineConfig& cfg) {
  app->add_option("--max-error", cfg.max_error, "Inlier threshold in pixels");
  app->add_option("--min-inlier-ratio", cfg.min_inlier_ratio, "Minimum inlier ratio");
  app->add_option("--max-num-trials", cfg.max_num_trials, "RANSAC trial cap");
  app->add_option("--lo-refit-rounds", cfg.lo_refit_rounds, "Least-squares refits per best model");
  app->add_option("--confidence", cfg.confidence, "Adaptive stopping confidence");
  app->add_option("--repeats", cfg.repeats, "Independent runs per pair");
  app->add_option("--kappa", cfg.kappa, "H must explain kappa times more inliers than E");
  app->add_option("--degenerate-overlap", cfg.degenerate_overlap,
                  "Share of E inliers also fitting H beyond which E is discarded");
  app->add_flag("--pooled-sampson", cfg.pooled_sampson,
                "Also report the median over pooled inlier residuals");
  app->add_option("--threads,-j", cfg.threads, "Worker threads (0 = one per core)");
}

void add_export(CLI::App* app, PipelineConfig& cfg) {
  app->add_option("--image-names", cfg.image_names, "Image names, one per frame");
}

std::filesystem::path or_default(const std::string& given, const PipelineConfig& cfg,
                                 const char* name) {
  return given.empty() ? std::filesystem::path(cfg.out) / name : std::filesystem::path(given);
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

int report_verification(const mvcorr::VerifySummary& s) {
  std::cout << "pairs " << s.n_pairs << " (E " << s.n_e << ", H " << s.n_h << ", NONE "
            << s.n_none << "), median inlier ratio " << s.median_inlier_ratio
            << ", median residual " << s.median_sampson << "\n";
  if (mvcorr::no_model_dominated(s)) {
    std::cerr << "mvcorr: more than half of the pairs have no model\n";
    return kExitNoModel;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  PipelineConfig cfg;
  if (const char* env = std::getenv("MVCORR_THREADS"); env && *env) {
    try {
      cfg.threads = std::stoi(env);
    } catch (const std::exception&) {
      std::cerr << "mvcorr: MVCORR_THREADS is not an integer\n";
      return kExitUsage;
    }
  }
  try {
    const std::string config_path = find_config_arg(argc, argv);
    if (!config_path.empty()) cfg = mvcorr::load_config_file(config_path, cfg);
  } catch (const std::exception& e) {
    std::cerr << "mvcorr: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App app{"Motion-vector correspondences, tracks and two-view verification"};
  app.require_subcommand(1);
  Optionals opt;

  CLI::App* ingest = app.add_subcommand("ingest", "Validate a dump and write it as dump.json");
  add_common(ingest, cfg);
  add_input(ingest, cfg);

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic dump and ground truth");
  add_common(synth, cfg);
  add_synth(synth, cfg, "--kind,--synth");
  add_intrinsics(synth, cfg, opt);

  CLI::App* match = app.add_subcommand("match", "Build keypoints and correspondences");
  add_common(match, cfg);
  match->add_option("--dump", cfg.dump, "Dump to read (default: <out>/dump.json)");
  add_match(match, cfg);

  CLI::App* tracks = app.add_subcommand("tracks", "Build and filter tracks; adjacency image");
  add_common(tracks, cfg);
  tracks->add_option("--store", opt.store, "Correspondence store (default: <out>/store.jsonl)");
  add_tracks(tracks, cfg);

  CLI::App* verify = app.add_subcommand("verify", "Two-view verification of every pair");
  add_common(verify, cfg);
  verify->add_option("--tracks", opt.tracks, "Track file (default: <out>/tracks.jsonl)");
  add_intrinsics(verify, cfg, opt);
  add_verify(verify, cfg);

  CLI::App* exp = app.add_subcommand("export", "Write COLMAP text features and matches");
  add_common(exp, cfg);
  exp->add_option("--store", opt.store, "Correspondence store (default: <out>/store.jsonl)");
  exp->add_option("--tracks", opt.tracks, "Track file (default: <out>/tracks.jsonl)");
  add_export(exp, cfg);

  CLI::App* run = app.add_subcommand("run", "Full pipeline with run statistics");
  add_common(run, cfg);
  add_input(run, cfg);
  add_synth(run, cfg, "--synth,--kind");
  add_intrinsics(run, cfg, opt);
  add_match(run, cfg);
  add_tracks(run, cfg);
  add_verify(run, cfg);
  add_export(run, cfg);
  run->add_flag("--colmap", cfg.colmap, "Also write COLMAP files under <out>/colmap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (opt.cx_opt && opt.cx_opt->count() > 0) cfg.cx = opt.cx;
  if (opt.cy_opt && opt.cy_opt->count() > 0) cfg.cy = opt.cy;

  std::vector<std::string> warnings;
  try {
    if (ingest->parsed()) {
      if (cfg.dump.empty()) throw std::invalid_argument("ingest needs --dump");
      cfg.synth.clear();
      mvcorr::stage_ingest(cfg, &warnings);
    } else if (synth->parsed()) {
      if (cfg.synth.empty()) cfg.synth = "translation";
      cfg.dump.clear();
      mvcorr::stage_ingest(cfg, &warnings);
    } else if (match->parsed()) {
      mvcorr::stage_match(cfg, or_default(cfg.dump, cfg, mvcorr::files::kDump));
    } else if (tracks->parsed()) {
      mvcorr::stage_tracks(cfg, or_default(opt.store, cfg, mvcorr::files::kStore));
    } else if (verify->parsed()) {
      const auto result =
          mvcorr::stage_verify(cfg, or_default(opt.tracks, cfg, mvcorr::files::kTracks));
      print_warnings(warnings);
      return report_verification(result.summary);
    } else if (exp->parsed()) {
      mvcorr::stage_export(cfg, or_default(opt.store, cfg, mvcorr::files::kStore),
                           or_default(opt.tracks, cfg, mvcorr::files::kTracks));
    } else if (run->parsed()) {
      const auto outcome = mvcorr::run_pipeline(cfg, &warnings);
      print_warnings(warnings);
      std::cout << "total " << outcome.stats.total_seconds() << " s, cpu "
                << outcome.stats.cpu_seconds << " s\n";
      return report_verification(outcome.verify.summary);
    }
  } catch (const std::invalid_argument& e) {
    print_warnings(warnings);
    std::cerr << "mvcorr: " << e.what() << "\n";
    return kExitUsage;
  } catch (const mvcorr::Error& e) {
    print_warnings(warnings);
    std::cerr << "mvcorr: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    print_warnings(warnings);
    std::cerr << "mvcorr: " << e.what() << "\n";
    return kExitData;
  }
  print_warnings(warnings);
  return kExitOk;
}
