/*
 * Copyright 2026 the dpgp authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DPGP_SPARSE_HPP
#define DPGP_SPARSE_HPP

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <vector>

#include "dpgp/kernels.hpp"
#include "dpgp/linalg.hpp"
#include "dpgp/rng.hpp"

namespace dpgp {

/// Pseudo-input (inducing) locations.
struct InducingSet {
  Eigen::MatrixXd Z;  // count x D

  [[nodiscard]] Eigen::Index count() const { return Z.rows(); }
};

namespace detail {

inline Eigen::Index nearest_row(const Eigen::MatrixXd& points, const Eigen::RowVectorXd& x,
                                double* dist_sq = nullptr) {
  Eigen::Index best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double d = (points.row(i) - x).squaredNorm();
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  if (dist_sq != nullptr) *dist_sq = bd;
  return best;
}

}  // namespace detail

/// Lloyd's algorithm with farthest-first seeding. Deterministic given the
/// seed; empty clusters are re-seeded at the point farthest from its
/// assigned centroid. The optional trace records the within-cluster sum of
/// squares after each update step.
inline InducingSet kmeans_place(const Eigen::MatrixXd& x, int m_count, SplitRng& rng,
                                int max_iterations = 100,
                                std::vector<double>* wcss_trace = nullptr) {
  const Eigen::Index n = x.rows();
  if (m_count < 1 || m_count > n) {
    throw std::invalid_argument("kmeans_place: need 1 <= m_count <= N");
  }
  Eigen::MatrixXd centers(m_count, x.cols());

  // farthest-first: random first pick, then repeatedly the point farthest
  // from the chosen set
  Eigen::VectorXd min_dist = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  Eigen::Index pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
  for (int c = 0; c < m_count; ++c) {
    centers.row(c) = x.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      min_dist[i] = std::min(min_dist[i], (x.row(i) - centers.row(c)).squaredNorm());
    }
    min_dist.maxCoeff(&pick);
  }

  std::vector<Eigen::Index> assign(static_cast<std::size_t>(n), 0);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index a = detail::nearest_row(centers, x.row(i));
      if (a != assign[static_cast<std::size_t>(i)]) {
        assign[static_cast<std::size_t>(i)] = a;
        changed = true;
      }
    }
    if (!changed && it > 0) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(m_count, x.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(m_count);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += x.row(i);
      counts[static_cast<int>(assign[static_cast<std::size_t>(i)])] += 1;
    }
    for (int c = 0; c < m_count; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / counts[c];
      } else {
        // re-seed at the point farthest from its current centroid
        Eigen::Index far = 0;
        double fd = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d = (x.row(i) - centers.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
          if (d > fd) {
            fd = d;
            far = i;
          }
        }
        centers.row(c) = x.row(far);
      }
    }
    if (wcss_trace != nullptr) {
      double wcss = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        double d = 0.0;
        detail::nearest_row(centers, x.row(i), &d);
        wcss += d;
      }
      wcss_trace->push_back(wcss);
    }
  }
  return InducingSet{std::move(centers)};
}

/// Input-only FITC factors: Q_MM = K_MM + K_MN (Lambda + s2 I)^-1 K_NM and
/// the Schur complements lambda_n = K_nn - k_n^T K_MM^-1 k_n.
struct FitcParts {
  Eigen::MatrixXd Q_MM;
  Eigen::VectorXd Lambda;  // length N, elementwise >= 0
  double sigma2 = 0.0;
};

/// Precomputed sparse-regression factors shared by the cloaking matrix and
/// the predictive variance.
struct FitcModel {
  InducingSet inducing;
  FitcParts parts;
  CholFactor k_mm_chol;
  CholFactor q_mm_chol;
  Eigen::MatrixXd k_mn;
  Eigen::VectorXd noise_diag_inv;  // (lambda_n + sigma2)^-1
};

inline FitcModel fitc_build(const Eigen::MatrixXd& x, const InducingSet& inducing,
                            const Kernel& kernel, double sigma2) {
  if (!(sigma2 > 0.0)) {
    throw std::invalid_argument("fitc_build: noise variance must be > 0");
  }
  FitcModel m;
  m.inducing = inducing;
  const Eigen::MatrixXd k_mm = kernel.cov(inducing.Z, inducing.Z);
  m.k_mm_chol = CholFactor::compute(k_mm);
  m.k_mn = kernel.cov(inducing.Z, x);

  const Eigen::VectorXd k_nn = kernel.diag(x);
  const double lambda_floor = -1e-8 * std::max(1.0, k_nn.maxCoeff());
  Eigen::VectorXd lambda = k_nn - m.k_mm_chol.inv_quad_columns(m.k_mn);
  if (lambda.minCoeff() < lambda_floor && m.k_mm_chol.jitter() == 0.0) {
    // a clean factorization of a near-singular K_MM can pass LLT yet give
    // poor Schur complements; one jittered retry settles it
    m.k_mm_chol = CholFactor::compute(k_mm, kBaseJitterRel);
    lambda = k_nn - m.k_mm_chol.inv_quad_columns(m.k_mn);
  }
  if (lambda.minCoeff() < lambda_floor) {
    throw NumericalError("fitc_build: negative Schur complement beyond tolerance");
  }
  lambda = lambda.cwiseMax(0.0);

  m.noise_diag_inv = (lambda.array() + sigma2).inverse();
  Eigen::MatrixXd q_mm =
      k_mm + m.k_mn * m.noise_diag_inv.asDiagonal() * m.k_mn.transpose();
  m.q_mm_chol = CholFactor::compute(q_mm);
  m.parts = FitcParts{std::move(q_mm), std::move(lambda), sigma2};
  return m;
}

/// Sparse cloaking matrix C = k_*m^T Q_MM^-1 K_MN (Lambda + s2 I)^-1, the
/// linear map from training outputs to FITC predictive means.
inline Eigen::MatrixXd fitc_cloaking_matrix(const FitcModel& model,
                                            const Eigen::MatrixXd& x_star,
                                            const Kernel& kernel) {
  const Eigen::MatrixXd k_star_m = kernel.cov(x_star, model.inducing.Z);
  const Eigen::MatrixXd t = model.q_mm_chol.solve(model.k_mn);  // M' x N
  return (k_star_m * t) * model.noise_diag_inv.asDiagonal();
}

/// FITC predictive variance K_** - k_*^T (K_MM^-1 - Q_MM^-1) k_* + s2.
/// Depends only on the inputs, never on y.
inline Eigen::VectorXd fitc_predict_var(const FitcModel& model,
                                        const Eigen::MatrixXd& x_star,
                                        const Kernel& kernel) {
  const Eigen::MatrixXd k_star_m = kernel.cov(x_star, model.inducing.Z);
  const Eigen::VectorXd k_ss = kernel.diag(x_star);
  const Eigen::VectorXd a = model.k_mm_chol.inv_quad_columns(k_star_m.transpose());
  const Eigen::VectorXd b = model.q_mm_chol.inv_quad_columns(k_star_m.transpose());
  Eigen::VectorXd var = k_ss - a + b;
  var.array() += model.parts.sigma2;
  const double floor = -1e-8 * std::max(1.0, k_ss.maxCoeff());
  if (var.minCoeff() < floor) {
    throw NumericalError("fitc_predict_var: negative variance beyond tolerance");
  }
  return var.cwiseMax(0.0);
}

/// Convenience overloads building the model in place.
inline std::pair<Eigen::MatrixXd, FitcParts> fitc_cloaking_matrix(
    const Eigen::MatrixXd& x, const Eigen::MatrixXd& x_star, const InducingSet& inducing,
    const Kernel& kernel, double sigma2) {
  const FitcModel model = fitc_build(x, inducing, kernel, sigma2);
  return {fitc_cloaking_matrix(model, x_star, kernel), model.parts};
}

/// Rank-M' low-rank surrogate K_NM K_MM^-1 K_MN shared by the SoR and DTC
/// approximations; used in place of K inside the classification update.
inline Eigen::MatrixXd sor_lowrank(const Eigen::MatrixXd& x, const InducingSet& inducing,
                                   const Kernel& kernel) {
  const Eigen::MatrixXd k_mm = kernel.cov(inducing.Z, inducing.Z);
  const CholFactor f = CholFactor::compute(k_mm);
  const Eigen::MatrixXd k_mn = kernel.cov(inducing.Z, x);
  Eigen::MatrixXd q = k_mn.transpose() * f.solve(k_mn);
  return 0.5 * (q + q.transpose().eval());
}

}  // namespace dpgp

#endif  // DPGP_SPARSE_HPP
