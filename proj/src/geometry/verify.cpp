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

#include "mvcorr/verify.hpp"

#include <algorithm>
#include <limits>

#include <Eigen/LU>

#include "mvcorr/median.hpp"
#include "mvcorr/parallel.hpp"

namespace mvcorr {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

PairReport report_from(int i, int j, ChosenModel model, const RansacResult& r, std::size_t n) {
  PairReport rep;
  rep.i = i;
  rep.j = j;
  rep.n_matches = n;
  rep.trials = r.trials;
  if (r.status != RansacStatus::kOk) return rep;
  rep.chosen = model;
  rep.n_inliers = r.n_inliers;
  rep.inlier_ratio = static_cast<double>(r.n_inliers) / static_cast<double>(n);
  rep.median_sampson = r.median_residual;
  return rep;
}

struct Run {
  PairReport report;
  const RansacResult* result = nullptr;
};

}  // namespace

std::uint64_t pair_seed(std::uint64_t seed, int i, int j, int repeat, int stream) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)));
  h = splitmix(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(j)));
  h = splitmix(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(repeat)));
  return splitmix(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(stream)));
}

PairVerdict verify_pair(int i, int j, std::span<const PointPair> matches,
                        const CameraIntrinsics& k, const VerifyConfig& cfg) {
  const std::size_t n = matches.size();
  const int repeats = std::max(cfg.repeats, 1);
  std::vector<RansacResult> results;
  results.reserve(2 * static_cast<std::size_t>(repeats));
  std::vector<Run> runs;
  for (int r = 0; r < repeats; ++r) {
    RansacConfig rc = cfg.ransac;
    rc.rng_seed = pair_seed(cfg.ransac.rng_seed, i, j, r, 0);
    results.push_back(lo_ransac(matches, ModelKind::kEssential, rc, k));
    const RansacResult& re = results.back();
    rc.rng_seed = pair_seed(cfg.ransac.rng_seed, i, j, r, 1);
    results.push_back(lo_ransac(matches, ModelKind::kHomography, rc, k));
    const RansacResult& rh = results.back();

    PairReport e = report_from(i, j, ChosenModel::kE, re, n);
    const PairReport h = report_from(i, j, ChosenModel::kH, rh, n);
    if (e.chosen != ChosenModel::kNone && h.chosen != ChosenModel::kNone) {
      std::size_t shared = 0;
      for (std::size_t m = 0; m < n; ++m) shared += re.inlier_mask[m] & rh.inlier_mask[m];
      if (static_cast<double>(shared) >= cfg.degenerate_overlap * static_cast<double>(re.n_inliers)) {
        e.chosen = ChosenModel::kNone;
      }
    }
    Run run;
    run.report = select_model(e, h, cfg.kappa);
    if (run.report.chosen == ChosenModel::kE) run.result = &re;
    if (run.report.chosen == ChosenModel::kH) run.result = &rh;
    runs.push_back(run);
  }
  std::stable_sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) {
    if (a.report.inlier_ratio != b.report.inlier_ratio) {
      return a.report.inlier_ratio < b.report.inlier_ratio;
    }
    return a.report.median_sampson > b.report.median_sampson;
  });
  const Run& chosen = runs[static_cast<std::size_t>(repeats / 2)];

  PairVerdict v;
  v.report = chosen.report;
  if (chosen.result) {
    v.inlier_mask = chosen.result->inlier_mask;
    if (cfg.pooled_sampson) {
      const ModelKind kind = chosen.result->kind;
      const Eigen::Matrix3d& m = chosen.result->model;
      const Eigen::Matrix3d m_inv =
          kind == ModelKind::kHomography ? Eigen::Matrix3d(m.inverse()) : Eigen::Matrix3d::Zero();
      for (std::size_t q = 0; q < n; ++q) {
        if (!v.inlier_mask[q]) continue;
        v.inlier_residuals.push_back(kind == ModelKind::kEssential
                                         ? sampson_error(m, matches[q].x, matches[q].xp)
                                         : homography_residual(m, m_inv, matches[q].x,
                                                               matches[q].xp));
      }
    }
  } else {
    v.inlier_mask.assign(n, 0);
  }
  return v;
}

std::vector<PointPair> pair_points(int i, int j, const MatchList& list,
                                   const KeypointPositions& positions,
                                   const CameraIntrinsics& k) {
  std::vector<PointPair> pts;
  pts.reserve(list.size());
  for (const auto& [id_i, id_j] : list) {
    pts.push_back({normalize(k, positions.at(j, id_j)), normalize(k, positions.at(i, id_i))});
  }
  return pts;
}

VerifyResult verify_all_pairs(const PairMatches& matches, const KeypointPositions& positions,
                              const CameraIntrinsics& k, const VerifyConfig& cfg) {
  std::vector<std::pair<int, int>> keys;
  std::vector<const MatchList*> lists;
  for (const auto& [key, list] : matches.pairs) {
    keys.push_back(key);
    lists.push_back(&list);
  }
  std::vector<PairVerdict> verdicts(keys.size());
  parallel_for(keys.size(), cfg.threads, [&](std::size_t q) {
    const auto [i, j] = keys[q];
    const std::vector<PointPair> pts = pair_points(i, j, *lists[q], positions, k);
    verdicts[q] = verify_pair(i, j, pts, k, cfg);
    verdicts[q].inlier_mask.clear();
    verdicts[q].inlier_mask.shrink_to_fit();
  });
  VerifyResult out;
  std::vector<double> pooled;
  out.reports.reserve(verdicts.size());
  for (PairVerdict& v : verdicts) {
    out.reports.push_back(v.report);
    pooled.insert(pooled.end(), v.inlier_residuals.begin(), v.inlier_residuals.end());
  }
  out.summary = compute_summary(out.reports, matches.num_frames,
                                cfg.pooled_sampson ? &pooled : nullptr);
  return out;
}

VerifySummary compute_summary(const std::vector<PairReport>& reports, int num_frames,
                              const std::vector<double>* pooled) {
  VerifySummary s;
  s.n_pairs = reports.size();
  std::size_t frames = static_cast<std::size_t>(std::max(num_frames, 0));
  for (const PairReport& r : reports) {
    frames = std::max(frames, static_cast<std::size_t>(std::max(r.i, r.j) + 1));
  }
  s.per_image_matches.assign(frames, 0);
  s.per_image_inliers.assign(frames, 0);
  std::vector<double> ratios;
  std::vector<double> residuals;
  for (const PairReport& r : reports) {
    switch (r.chosen) {
      case ChosenModel::kE:
        ++s.n_e;
        break;
      case ChosenModel::kH:
        ++s.n_h;
        break;
      case ChosenModel::kNone:
        ++s.n_none;
        break;
    }
    if (r.n_matches > 0) ratios.push_back(r.chosen == ChosenModel::kNone ? 0.0 : r.inlier_ratio);
    if (r.chosen != ChosenModel::kNone) residuals.push_back(r.median_sampson);
    for (int f : {r.i, r.j}) {
      s.per_image_matches[static_cast<std::size_t>(f)] += r.n_matches;
      s.per_image_inliers[static_cast<std::size_t>(f)] += r.n_inliers;
    }
  }
  s.median_inlier_ratio = ratios.empty() ? 0.0 : median_of(std::move(ratios));
  s.median_sampson = median_of(std::move(residuals));
  if (pooled) {
    s.has_pooled = true;
    s.pooled_median_sampson = median_of(*pooled);
  }
  return s;
}

}  // namespace mvcorr
