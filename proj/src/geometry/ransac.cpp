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

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "internal.hpp"
#include "mvcorr/error.hpp"
#include "mvcorr/geometry.hpp"
#include "mvcorr/median.hpp"

namespace mvcorr {

double normalized_threshold_sq(double max_error_px, const CameraIntrinsics& k) {
  const double t = max_error_px / k.mean_focal();
  return t * t;
}

int adaptive_trial_count(double inlier_ratio, int sample_size, double confidence,
                         int max_trials) {
  if (inlier_ratio >= 1.0) return 1;
  if (inlier_ratio <= 0.0) return max_trials;
  const double all_inlier = std::pow(inlier_ratio, sample_size);
  const double denom = std::log1p(-all_inlier);
  if (!(denom < 0.0)) return max_trials;
  const double n = std::ceil(std::log(1.0 - confidence) / denom);
  if (!(n < static_cast<double>(max_trials))) return max_trials;
  return std::max(1, static_cast<int>(n));
}

namespace {

struct Score {
  std::size_t count = 0;
  double sum = 0.0;
};

bool better(const Score& a, const Score& b) {
  return a.count > b.count || (a.count == b.count && a.sum < b.sum);
}

class Scorer {
 public:
  Scorer(std::span<const PointPair> matches, ModelKind kind, double threshold_sq)
      : matches_(matches), kind_(kind), threshold_sq_(threshold_sq) {}

  double residual(const Eigen::Matrix3d& m, const Eigen::Matrix3d& m_inv, std::size_t i) const {
    const PointPair& p = matches_[i];
    return kind_ == ModelKind::kEssential ? sampson_error(m, p.x, p.xp)
                                          : homography_residual(m, m_inv, p.x, p.xp);
  }

  Eigen::Matrix3d inverse(const Eigen::Matrix3d& m) const {
    return kind_ == ModelKind::kHomography ? Eigen::Matrix3d(m.inverse())
                                           : Eigen::Matrix3d::Zero();
  }

  Score score(const Eigen::Matrix3d& m) const {
    const Eigen::Matrix3d m_inv = inverse(m);
    Score s;
    for (std::size_t i = 0; i < matches_.size(); ++i) {
      const double r = residual(m, m_inv, i);
      if (r <= threshold_sq_) {
        ++s.count;
        s.sum += r;
      }
    }
    return s;
  }

  std::vector<PointPair> inliers(const Eigen::Matrix3d& m) const {
    const Eigen::Matrix3d m_inv = inverse(m);
    std::vector<PointPair> out;
    for (std::size_t i = 0; i < matches_.size(); ++i) {
      if (residual(m, m_inv, i) <= threshold_sq_) out.push_back(matches_[i]);
    }
    return out;
  }

 private:
  std::span<const PointPair> matches_;
  ModelKind kind_;
  double threshold_sq_;
};

// Every sample is a subset of the matches, so when the whole set is already
// degenerate for the minimal solver no trial can succeed.
bool all_samples_degenerate(std::span<const PointPair> matches, ModelKind kind) {
  if (kind == ModelKind::kEssential) {
    Eigen::Matrix<double, Eigen::Dynamic, 9> A(static_cast<Eigen::Index>(matches.size()), 9);
    for (std::size_t r = 0; r < matches.size(); ++r) {
      const Eigen::Vector2d& x = matches[r].x;
      const Eigen::Vector2d& xp = matches[r].xp;
      A.row(static_cast<Eigen::Index>(r)) << xp.x() * x.x(), xp.x() * x.y(), xp.x(),
          xp.y() * x.x(), xp.y() * x.y(), xp.y(), x.x(), x.y(), 1.0;
    }
    const internal::NullSpace ns = internal::null_space(A);
    return !(ns.sigma(4) > 1e-10 * ns.sigma(0));
  }
  for (const bool primed : {false, true}) {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const PointPair& p : matches) mean += primed ? p.xp : p.x;
    mean /= static_cast<double>(matches.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const PointPair& p : matches) {
      const Eigen::Vector2d d = (primed ? p.xp : p.x) - mean;
      cov += d * d.transpose();
    }
    const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).eigenvalues();
    if (!(ev(0) > 1e-20 * ev(1))) return true;
  }
  return false;
}

}  // namespace

RansacResult lo_ransac(std::span<const PointPair> matches, ModelKind kind,
                       const RansacConfig& cfg, const CameraIntrinsics& k) {
  RansacResult result;
  result.kind = kind;
  const int sample_size = kind == ModelKind::kEssential ? 5 : 4;
  const std::size_t refit_min = kind == ModelKind::kEssential ? 8 : 4;
  const std::size_t n = matches.size();
  result.inlier_mask.assign(n, 0);
  if (n < static_cast<std::size_t>(sample_size)) return result;
  if (all_samples_degenerate(matches, kind)) {
    result.status = RansacStatus::kNoModel;
    return result;
  }

  const double threshold_sq = normalized_threshold_sq(cfg.max_error_px, k);
  const Scorer scorer(matches, kind, threshold_sq);
  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  bool have_model = false;
  Eigen::Matrix3d best_model = Eigen::Matrix3d::Zero();
  Score best;
  int needed = cfg.max_num_trials;

  auto refit = [&](const std::vector<PointPair>& pts) -> Eigen::Matrix3d {
    return kind == ModelKind::kEssential ? eight_point_refit(pts).E : dlt_homography(pts).H;
  };

  auto local_optimize = [&]() {
    for (int round = 0; round < cfg.lo_refit_rounds; ++round) {
      const std::vector<PointPair> pts = scorer.inliers(best_model);
      if (pts.size() < refit_min) return;
      Eigen::Matrix3d m;
      try {
        m = refit(pts);
      } catch (const Error&) {
        return;
      }
      const Score s = scorer.score(m);
      if (s.count < best.count) return;
      best = s;
      best_model = m;
    }
  };

  std::vector<PointPair> sample(static_cast<std::size_t>(sample_size));
  std::vector<std::size_t> chosen(static_cast<std::size_t>(sample_size));
  int trials = 0;
  while (trials < needed) {
    ++trials;
    for (int s = 0; s < sample_size; ++s) {
      std::size_t idx;
      bool fresh;
      do {
        idx = pick(rng);
        fresh = true;
        for (int t = 0; t < s; ++t) fresh = fresh && chosen[static_cast<std::size_t>(t)] != idx;
      } while (!fresh);
      chosen[static_cast<std::size_t>(s)] = idx;
      sample[static_cast<std::size_t>(s)] = matches[idx];
    }
    std::vector<Eigen::Matrix3d> hypotheses;
    try {
      if (kind == ModelKind::kEssential) {
        for (const EssentialModel& e : five_point_essential(sample)) hypotheses.push_back(e.E);
      } else {
        hypotheses.push_back(dlt_homography(sample).H);
      }
    } catch (const Error&) {
      continue;
    }
    bool improved = false;
    for (const Eigen::Matrix3d& m : hypotheses) {
      const Score s = scorer.score(m);
      if (!have_model || better(s, best)) {
        have_model = true;
        best = s;
        best_model = m;
        improved = true;
      }
    }
    if (improved) {
      local_optimize();
      const double ratio = static_cast<double>(best.count) / static_cast<double>(n);
      needed = std::min(needed,
                        adaptive_trial_count(ratio, sample_size, cfg.confidence,
                                             cfg.max_num_trials));
    }
  }

  result.trials = trials;
  if (!have_model || best.count == 0) {
    result.status = RansacStatus::kNoModel;
    return result;
  }
  result.model = best_model;
  const Eigen::Matrix3d m_inv = scorer.inverse(best_model);
  std::vector<double> residuals;
  residuals.reserve(best.count);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = scorer.residual(best_model, m_inv, i);
    if (r <= threshold_sq) {
      result.inlier_mask[i] = 1;
      residuals.push_back(r);
    }
  }
  result.n_inliers = residuals.size();
  result.median_residual = median_of(std::move(residuals));
  const double ratio = static_cast<double>(result.n_inliers) / static_cast<double>(n);
  result.status = ratio < cfg.min_inlier_ratio ? RansacStatus::kNoModel : RansacStatus::kOk;
  return result;
}

}  // namespace mvcorr
