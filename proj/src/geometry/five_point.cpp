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

#include <array>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "mvcorr/error.hpp"
#include "mvcorr/geometry.hpp"

namespace mvcorr {
namespace {

// Dense polynomial of total degree <= 3 in (x, y, z), indexed by exponents.
struct Poly3 {
  std::array<double, 64> c{};

  static constexpr int idx(int a, int b, int d) { return a * 16 + b * 4 + d; }

  static Poly3 linear(double x, double y, double z, double w) {
    Poly3 p;
    p.c[idx(1, 0, 0)] = x;
    p.c[idx(0, 1, 0)] = y;
    p.c[idx(0, 0, 1)] = z;
    p.c[idx(0, 0, 0)] = w;
    return p;
  }

  Poly3& operator+=(const Poly3& o) {
    for (int k = 0; k < 64; ++k) c[k] += o.c[k];
    return *this;
  }
  Poly3& operator-=(const Poly3& o) {
    for (int k = 0; k < 64; ++k) c[k] -= o.c[k];
    return *this;
  }
  Poly3 operator*(double s) const {
    Poly3 p = *this;
    for (double& v : p.c) v *= s;
    return p;
  }
};

double eval3(const Poly3& p, const Eigen::Vector3d& v, Eigen::Vector3d* grad) {
  double pw[3][4];
  for (int a = 0; a < 3; ++a) {
    pw[a][0] = 1.0;
    for (int e = 1; e < 4; ++e) pw[a][e] = pw[a][e - 1] * v(a);
  }
  double val = 0.0;
  grad->setZero();
  for (int a = 0; a <= 3; ++a) {
    for (int b = 0; a + b <= 3; ++b) {
      for (int d = 0; a + b + d <= 3; ++d) {
        const double c = p.c[Poly3::idx(a, b, d)];
        if (c == 0.0) continue;
        val += c * pw[0][a] * pw[1][b] * pw[2][d];
        if (a) (*grad)(0) += c * a * pw[0][a - 1] * pw[1][b] * pw[2][d];
        if (b) (*grad)(1) += c * b * pw[0][a] * pw[1][b - 1] * pw[2][d];
        if (d) (*grad)(2) += c * d * pw[0][a] * pw[1][b] * pw[2][d - 1];
      }
    }
  }
  return val;
}

// Gauss-Newton on the ten cubic constraints; keeps only improving steps.
Eigen::Vector3d polish(const std::array<Poly3, 10>& constraints, Eigen::Vector3d v) {
  auto residual = [&](const Eigen::Vector3d& at, Eigen::Matrix<double, 10, 3>* J) {
    Eigen::Matrix<double, 10, 1> r;
    Eigen::Vector3d g;
    for (int q = 0; q < 10; ++q) {
      r(q) = eval3(constraints[static_cast<std::size_t>(q)], at, &g);
      if (J) J->row(q) = g.transpose();
    }
    return r;
  };
  Eigen::Matrix<double, 10, 3> J;
  Eigen::Matrix<double, 10, 1> r = residual(v, &J);
  for (int it = 0; it < 5; ++it) {
    const Eigen::Vector3d step = J.colPivHouseholderQr().solve(-r);
    if (!step.allFinite()) break;
    const Eigen::Vector3d next = v + step;
    Eigen::Matrix<double, 10, 3> J_next;
    const Eigen::Matrix<double, 10, 1> r_next = residual(next, &J_next);
    if (!(r_next.squaredNorm() < r.squaredNorm())) break;
    v = next;
    r = r_next;
    J = J_next;
  }
  return v;
}

Poly3 operator-(Poly3 p, const Poly3& q) {
  p -= q;
  return p;
}

Poly3 operator*(const Poly3& p, const Poly3& q) {
  Poly3 r;
  for (int a1 = 0; a1 <= 3; ++a1) {
    for (int b1 = 0; a1 + b1 <= 3; ++b1) {
      for (int d1 = 0; a1 + b1 + d1 <= 3; ++d1) {
        const double v = p.c[Poly3::idx(a1, b1, d1)];
        if (v == 0.0) continue;
        for (int a2 = 0; a1 + b1 + d1 + a2 <= 3; ++a2) {
          for (int b2 = 0; a1 + b1 + d1 + a2 + b2 <= 3; ++b2) {
            for (int d2 = 0; a1 + b1 + d1 + a2 + b2 + d2 <= 3; ++d2) {
              r.c[Poly3::idx(a1 + a2, b1 + b2, d1 + d2)] += v * q.c[Poly3::idx(a2, b2, d2)];
            }
          }
        }
      }
    }
  }
  return r;
}

// Column order of the 10x20 constraint matrix: the ten cubic monomials are
// eliminated, leaving the quotient basis {x^2, xy, y^2, xz, yz, z^2, x, y, z, 1}.
constexpr std::array<std::array<int, 3>, 20> kMonomials = {{
    {3, 0, 0}, {2, 1, 0}, {1, 2, 0}, {0, 3, 0}, {2, 0, 1},
    {1, 1, 1}, {0, 2, 1}, {1, 0, 2}, {0, 1, 2}, {0, 0, 3},
    {2, 0, 0}, {1, 1, 0}, {0, 2, 0}, {1, 0, 1}, {0, 1, 1},
    {0, 0, 2}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, 0},
}};

// x times each basis monomial: >= 0 is a cubic (row of the reduced matrix),
// < 0 is basis entry -1 - k.
constexpr std::array<int, 10> kTimesX = {0, 1, 2, 4, 5, 7, -1 - 0, -1 - 1, -1 - 3, -1 - 6};

constexpr double kEpipolarTolerance = 1e-8;

}  // namespace

std::vector<EssentialModel> five_point_essential(std::span<const PointPair> sample) {
  if (sample.size() != 5) {
    throw Error(ErrorCode::kDegenerateSample, "five-point needs exactly 5 matches");
  }
  // Zero-padded to square; the null space is spanned by the last four columns of V.
  Eigen::Matrix<double, 9, 9> Q = Eigen::Matrix<double, 9, 9>::Zero();
  for (int r = 0; r < 5; ++r) {
    const Eigen::Vector2d& x = sample[r].x;
    const Eigen::Vector2d& xp = sample[r].xp;
    Q.row(r) << xp.x() * x.x(), xp.x() * x.y(), xp.x(), xp.y() * x.x(), xp.y() * x.y(), xp.y(),
        x.x(), x.y(), 1.0;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 9, 9>> svd(Q, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s(4) > 1e-10 * s(0))) {
    throw Error(ErrorCode::kDegenerateSample, "epipolar design matrix is rank deficient");
  }
  const Eigen::Matrix<double, 9, 9>& V = svd.matrixV();
  // E = x X + y Y + z Z + W over the four null-space vectors.
  std::array<std::array<Poly3, 3>, 3> E;
  for (int k = 0; k < 9; ++k) {
    E[k / 3][k % 3] = Poly3::linear(V(k, 5), V(k, 6), V(k, 7), V(k, 8));
  }

  std::array<std::array<Poly3, 3>, 3> EEt;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int k = 0; k < 3; ++k) EEt[a][b] += E[a][k] * E[b][k];
    }
  }
  Poly3 trace = EEt[0][0];
  trace += EEt[1][1];
  trace += EEt[2][2];
  const Poly3 half_trace = trace * 0.5;

  std::array<Poly3, 10> constraints;
  Poly3 det = E[0][0] * (E[1][1] * E[2][2] - E[1][2] * E[2][1]);
  det -= E[0][1] * (E[1][0] * E[2][2] - E[1][2] * E[2][0]);
  det += E[0][2] * (E[1][0] * E[2][1] - E[1][1] * E[2][0]);
  constraints[0] = det;
  // E E^T E - tr(E E^T) E / 2; the factor 2 of the usual form is dropped.
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      Poly3 p;
      for (int k = 0; k < 3; ++k) p += EEt[a][k] * E[k][b];
      p -= half_trace * E[a][b];
      constraints[1 + 3 * a + b] = p;
    }
  }

  Eigen::Matrix<double, 10, 20> M;
  for (int r = 0; r < 10; ++r) {
    for (int m = 0; m < 20; ++m) {
      const auto& e = kMonomials[static_cast<std::size_t>(m)];
      M(r, m) = constraints[static_cast<std::size_t>(r)].c[Poly3::idx(e[0], e[1], e[2])];
    }
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 10, 10>> lu(M.leftCols<10>());
  lu.setThreshold(1e-12);
  if (lu.rank() < 10) {
    throw Error(ErrorCode::kDegenerateSample, "elimination template is rank deficient");
  }
  const Eigen::Matrix<double, 10, 10> C = lu.solve(M.rightCols<10>());

  // Action matrix of multiplication by x on the quotient basis. Its right
  // eigenvectors are the basis monomials evaluated at each solution.
  Eigen::Matrix<double, 10, 10> action = Eigen::Matrix<double, 10, 10>::Zero();
  for (int r = 0; r < 10; ++r) {
    const int k = kTimesX[static_cast<std::size_t>(r)];
    if (k >= 0) {
      action.row(r) = -C.row(k);
    } else {
      action(r, -1 - k) = 1.0;
    }
  }
  Eigen::EigenSolver<Eigen::Matrix<double, 10, 10>> es(action);
  if (es.info() != Eigen::Success) return {};

  std::vector<EssentialModel> out;
  for (int k = 0; k < 10; ++k) {
    const std::complex<double> lambda = es.eigenvalues()(k);
    if (std::abs(lambda.imag()) > 1e-6 * (1.0 + std::abs(lambda.real()))) continue;
    const Eigen::Matrix<std::complex<double>, 10, 1> b = es.eigenvectors().col(k);
    if (std::abs(b(9)) < 1e-12 * b.norm()) continue;
    const Eigen::Vector3d guess((b(6) / b(9)).real(), (b(7) / b(9)).real(), (b(8) / b(9)).real());
    const Eigen::Vector3d v = polish(constraints, guess);
    const double x = v(0);
    const double y = v(1);
    Eigen::Matrix3d Em;
    for (int k = 0; k < 9; ++k) {
      Em(k / 3, k % 3) = x * V(k, 5) + y * V(k, 6) + v(2) * V(k, 7) + V(k, 8);
    }
    if (!Em.allFinite() || Em.norm() == 0.0) continue;
    const Eigen::Matrix3d Ep = project_to_essential(Em);
    bool ok = true;
    for (const PointPair& p : sample) {
      const double r = Eigen::Vector3d(p.xp.x(), p.xp.y(), 1.0).dot(
          Ep * Eigen::Vector3d(p.x.x(), p.x.y(), 1.0));
      if (!(std::abs(r) <= kEpipolarTolerance)) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back({Ep});
  }
  return out;
}

}  // namespace mvcorr
