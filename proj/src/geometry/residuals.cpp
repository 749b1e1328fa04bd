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

#include <Eigen/Dense>

#include "mvcorr/geometry.hpp"

namespace mvcorr {

std::string_view chosen_model_name(ChosenModel m) {
  switch (m) {
    case ChosenModel::kE:
      return "E";
    case ChosenModel::kH:
      return "H";
    case ChosenModel::kNone:
      break;
  }
  return "NONE";
}

double sampson_error(const Eigen::Matrix3d& E, const Eigen::Vector2d& x,
                     const Eigen::Vector2d& xp) {
  const Eigen::Vector3d xh(x.x(), x.y(), 1.0);
  const Eigen::Vector3d xph(xp.x(), xp.y(), 1.0);
  const Eigen::Vector3d ex = E * xh;
  const Eigen::Vector3d etxp = E.transpose() * xph;
  const double num = xph.dot(ex);
  const double den = ex(0) * ex(0) + ex(1) * ex(1) + etxp(0) * etxp(0) + etxp(1) * etxp(1);
  if (den < 1e-18) return kInfiniteResidual;
  return num * num / den;
}

namespace {

constexpr double kMinHomogeneous = 1e-12;

bool transfer(const Eigen::Matrix3d& H, const Eigen::Vector2d& p, Eigen::Vector2d* out) {
  const Eigen::Vector3d q = H * Eigen::Vector3d(p.x(), p.y(), 1.0);
  if (!(std::abs(q(2)) >= kMinHomogeneous)) return false;
  *out = q.head<2>() / q(2);
  return true;
}

}  // namespace

double homography_residual(const Eigen::Matrix3d& H, const Eigen::Matrix3d& H_inv,
                           const Eigen::Vector2d& x, const Eigen::Vector2d& xp) {
  Eigen::Vector2d fwd, bwd;
  if (!transfer(H, x, &fwd) || !transfer(H_inv, xp, &bwd)) return kInfiniteResidual;
  return 0.5 * ((fwd - xp).squaredNorm() + (bwd - x).squaredNorm());
}

double homography_residual(const HomographyModel& model, const Eigen::Vector2d& x,
                           const Eigen::Vector2d& xp) {
  return homography_residual(model.H, model.H.inverse(), x, xp);
}

Eigen::Matrix3d project_to_essential(const Eigen::Matrix3d& M) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d s = svd.singularValues();
  const double sigma = 0.5 * (s(0) + s(1));
  Eigen::Matrix3d E = svd.matrixU() * Eigen::Vector3d(sigma, sigma, 0.0).asDiagonal() *
                      svd.matrixV().transpose();
  const double norm = E.norm();
  if (norm > 0.0) E /= norm;
  return E;
}

PairReport select_model(const PairReport& report_e, const PairReport& report_h, double kappa) {
  const bool e_ok = report_e.chosen != ChosenModel::kNone;
  const bool h_ok = report_h.chosen != ChosenModel::kNone;
  if (!e_ok && !h_ok) {
    PairReport none = report_e;
    none.chosen = ChosenModel::kNone;
    none.n_matches = std::max(report_e.n_matches, report_h.n_matches);
    none.n_inliers = 0;
    none.inlier_ratio = 0.0;
    none.median_sampson = 0.0;
    none.trials = report_e.trials + report_h.trials;
    return none;
  }
  if (!e_ok) return report_h;
  if (!h_ok) return report_e;
  const double ne = static_cast<double>(report_e.n_inliers);
  const double nh = static_cast<double>(report_h.n_inliers);
  if (nh > kappa * ne) return report_h;
  if (report_h.n_inliers == report_e.n_inliers &&
      report_h.median_sampson < report_e.median_sampson) {
    return report_h;
  }
  return report_e;
}

}  // namespace mvcorr
