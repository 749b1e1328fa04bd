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

#include "mvcorr/synth.hpp"

#include <cmath>
#include <random>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "json.hpp"
#include "mvcorr/correspond.hpp"
#include "mvcorr/error.hpp"

namespace mvcorr {
namespace {

using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

constexpr int kMaxRedraws = 10000;

[[noreturn]] void degenerate(const std::string& msg) {
  throw Error(ErrorCode::kDegenerateSpec, msg);
}

Matrix3d skew(const Vector3d& v) {
  Matrix3d s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

void check_spec(const MotionSpec& spec, const CameraIntrinsics& k) {
  if (!k.valid()) degenerate("focal lengths must be positive");
  if (spec.n_frames < 1) degenerate("need at least one frame");
  if (spec.width <= 0 || spec.height <= 0 || spec.width % 4 || spec.height % 4) {
    degenerate("frame size must be positive multiples of 4");
  }
  const int bs = spec.block_size;
  if (bs != 4 && bs != 8 && bs != 16 && bs != 32 && bs != 64 && bs != 128) {
    degenerate("block size must be a power of two in 4..128");
  }
  if (spec.noise_sigma_px < 0.0) degenerate("noise sigma must be >= 0");
  if (!(spec.outlier_fraction >= 0.0 && spec.outlier_fraction < 1.0)) {
    degenerate("outlier fraction must be in [0, 1)");
  }
  switch (spec.kind) {
    case MotionKind::kTranslation2d:
      break;
    case MotionKind::kHomography:
      if (std::abs(spec.homography.determinant()) < 1e-12) degenerate("singular homography");
      break;
    case MotionKind::kEpipolar:
      if (spec.translation.norm() <= 0.0) degenerate("epipolar motion needs |t| > 0");
      if (!(spec.min_depth > 0.0 && spec.max_depth >= spec.min_depth)) {
        degenerate("depth range must be positive and ordered");
      }
      if ((spec.rotation.transpose() * spec.rotation - Matrix3d::Identity()).norm() > 1e-9) {
        degenerate("rotation is not orthonormal");
      }
      break;
  }
}

Matrix3d essential_step(const MotionSpec& spec) {
  return skew(spec.translation) * spec.rotation;
}

std::int16_t quantize(double v8) {
  const double r = std::round(v8);
  if (r < INT16_MIN || r > INT16_MAX) degenerate("motion vector exceeds 16-bit range");
  return static_cast<std::int16_t>(r);
}

class Generator {
 public:
  Generator(const MotionSpec& spec, const CameraIntrinsics& k, std::uint64_t seed)
      : spec_(spec), k_(k), rng_(seed), e_step_(essential_step(spec)) {}

  SyntheticSequence run() {
    SyntheticSequence out;
    out.truth.spec = spec_;
    out.truth.intrinsics = k_;
    out.dump.source = "mvcorr-synth";
    for (int n = 0; n < spec_.n_frames; ++n) {
      out.dump.frames.push_back(make_frame(n, n == 0 ? nullptr : &out.truth.pairs.emplace_back()));
    }
    return out;
  }

 private:
  // Exact target in frame n-1 of a point at pixel `c` of frame n.
  Vector2d true_target(const Vector2d& c) {
    switch (spec_.kind) {
      case MotionKind::kTranslation2d:
        return c + spec_.shift_px;
      case MotionKind::kHomography: {
        const Vector3d p = spec_.homography * c.homogeneous();
        if (std::abs(p.z()) < 1e-12) degenerate("homography maps a block center to infinity");
        return p.hnormalized();
      }
      case MotionKind::kEpipolar: {
        const double depth = depth_dist_(rng_);
        const Vector3d ray = normalize(k_, c).homogeneous();
        const Vector3d moved = spec_.rotation * (depth * ray) + spec_.translation;
        if (moved.z() <= 1e-9) degenerate("scene point behind the reference camera");
        return denormalize(k_, moved.hnormalized());
      }
    }
    return c;
  }

  // Distance in pixels between `target` and the model prediction for `c`.
  double model_distance_px(const Vector2d& c, const Vector2d& target, const Vector2d& exact) {
    if (spec_.kind == MotionKind::kEpipolar) {
      const double s = sampson_error(e_step_, normalize(k_, c), normalize(k_, target));
      return std::sqrt(s) * k_.mean_focal();
    }
    return (target - exact).norm();
  }

  DumpFrame make_frame(int n, GroundTruthPair* pair) {
    DumpFrame frame;
    frame.meta.index = n;
    frame.meta.width = spec_.width;
    frame.meta.height = spec_.height;
    frame.meta.type = n == 0 ? FrameType::kIntra : FrameType::kInter;
    if (n > 0) frame.meta.refs[0] = n - 1;
    if (pair) {
      pair->i = n - 1;
      pair->j = n;
    }
    const int bs = spec_.block_size;
    const double limit = std::max(spec_.width, spec_.height);
    for (int y0 = 0; y0 < spec_.height; y0 += bs) {
      for (int x0 = 0; x0 < spec_.width; x0 += bs) {
        BlockRecord b;
        b.x0 = x0;
        b.y0 = y0;
        b.w = bs;
        b.h = bs;
        if (n == 0) {
          b.mode = BlockMode::kIntra;
          frame.blocks.push_back(b);
          continue;
        }
        const Vector2d c = block_center(b, frame.meta);
        const Vector2d exact = true_target(c);
        const Vector2d d = exact - c;
        if (!(std::abs(d.x()) < limit && std::abs(d.y()) < limit)) {
          degenerate("displacement exceeds the frame size");
        }
        const bool outlier = spec_.outlier_fraction > 0.0 && unit_(rng_) < spec_.outlier_fraction;
        Vector2d target = exact;
        if (outlier) {
          const int range8 = static_cast<int>(std::lround(spec_.outlier_range_px * 8.0));
          std::uniform_int_distribution<int> mv8(-range8, range8);
          int attempt = 0;
          do {
            if (++attempt > kMaxRedraws) degenerate("cannot place an outlier outside the margin");
            b.dx8 = static_cast<std::int16_t>(mv8(rng_));
            b.dy8 = static_cast<std::int16_t>(mv8(rng_));
            target = c + scale_mv(b);
          } while ((b.dx8 == 0 && b.dy8 == 0) ||
                   model_distance_px(c, target, exact) < spec_.outlier_margin_px);
        } else {
          Vector2d noise = Vector2d::Zero();
          if (spec_.noise_sigma_px > 0.0) {
            std::normal_distribution<double> gauss(0.0, spec_.noise_sigma_px);
            noise.x() = gauss(rng_);
            noise.y() = gauss(rng_);
          }
          b.dx8 = quantize(8.0 * d.x() + std::round(8.0 * noise.x()));
          b.dy8 = quantize(8.0 * d.y() + std::round(8.0 * noise.y()));
        }
        if (b.dx8 == 0 && b.dy8 == 0) {
          b.mode = BlockMode::kSkip;
        } else {
          b.mode = BlockMode::kInter;
          b.ref_slot = 0;
          pair->matches.push_back({static_cast<int>(frame.blocks.size()), c, target, !outlier});
        }
        frame.blocks.push_back(b);
      }
    }
    return frame;
  }

  const MotionSpec& spec_;
  const CameraIntrinsics& k_;
  std::mt19937_64 rng_;
  Matrix3d e_step_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::uniform_real_distribution<double> depth_dist_{spec_.min_depth, spec_.max_depth};
};

const char* kind_name(MotionKind kind) {
  switch (kind) {
    case MotionKind::kTranslation2d: return "translation";
    case MotionKind::kHomography: return "homography";
    case MotionKind::kEpipolar: return "epipolar";
  }
  return "?";
}

nlohmann::json matrix_json(const Matrix3d& m) {
  nlohmann::json a = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  }
  return a;
}

}  // namespace

SyntheticSequence gen_sequence(const MotionSpec& spec, const CameraIntrinsics& k,
                               std::uint64_t seed) {
  check_spec(spec, k);
  return Generator(spec, k, seed).run();
}

TrueModel true_model(const MotionSpec& spec, const CameraIntrinsics& k, int i, int j) {
  const int steps = j - i;
  TrueModel out;
  if (spec.kind == MotionKind::kEpipolar) {
    Matrix3d r = Matrix3d::Identity();
    Vector3d t = Vector3d::Zero();
    for (int s = 0; s < steps; ++s) {
      // X_{n-s-1} = R (R_s X_n + t_s) + t
      r = spec.rotation * r;
      t = spec.rotation * t + spec.translation;
    }
    out.kind = ModelKind::kEssential;
    out.matrix = skew(t) * r;
    out.matrix /= out.matrix.norm();
    return out;
  }
  Matrix3d step = spec.homography;
  if (spec.kind == MotionKind::kTranslation2d) {
    step = Matrix3d::Identity();
    step(0, 2) = spec.shift_px.x();
    step(1, 2) = spec.shift_px.y();
  }
  Matrix3d h = Matrix3d::Identity();
  for (int s = 0; s < steps; ++s) h = step * h;
  const Matrix3d km = k.matrix();
  out.kind = ModelKind::kHomography;
  out.matrix = km.inverse() * h * km;
  out.matrix /= out.matrix(2, 2);
  return out;
}

std::string ground_truth_json(const GroundTruth& truth) {
  using nlohmann::json;
  const MotionSpec& s = truth.spec;
  json doc;
  doc["kind"] = kind_name(s.kind);
  doc["frames"] = s.n_frames;
  doc["width"] = s.width;
  doc["height"] = s.height;
  doc["block_size"] = s.block_size;
  doc["noise_sigma_px"] = s.noise_sigma_px;
  doc["outlier_fraction"] = s.outlier_fraction;
  doc["intrinsics"] = {{"fx", truth.intrinsics.fx}, {"fy", truth.intrinsics.fy},
                       {"cx", truth.intrinsics.cx}, {"cy", truth.intrinsics.cy}};
  json pairs = json::array();
  for (const GroundTruthPair& p : truth.pairs) {
    const TrueModel model = true_model(s, truth.intrinsics, p.i, p.j);
    json jp;
    jp["i"] = p.i;
    jp["j"] = p.j;
    jp["model"] = model.kind == ModelKind::kEssential ? "E" : "H";
    jp["matrix"] = matrix_json(model.matrix);
    json matches = json::array();
    for (const GroundTruthMatch& m : p.matches) {
      matches.push_back({m.block, m.src.x(), m.src.y(), m.dst.x(), m.dst.y(), m.inlier ? 1 : 0});
    }
    jp["matches"] = std::move(matches);
    pairs.push_back(std::move(jp));
  }
  doc["pairs"] = std::move(pairs);
  return doc.dump() + "\n";
}

}  // namespace mvcorr
