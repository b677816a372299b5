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

#ifndef DPGP_REGRESSION_HPP
#define DPGP_REGRESSION_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dpgp/cloaking.hpp"
#include "dpgp/kernels.hpp"
#include "dpgp/linalg.hpp"
#include "dpgp/rng.hpp"
#include "dpgp/sparse.hpp"

namespace dpgp {

enum class RegressionMode { kStandard, kSparse, kGibbs };

/// Parameters of the density-driven lengthscale function used in GIBBS mode.
struct LengthscaleParams {
  double n_target = 5.0;
  double max_lengthscale = 100.0;
  double kde_bandwidth = 0.0;        // <= 0: Silverman rule
  double neighbourhood_radius = -1;  // < 0: one bandwidth
};

/// A DP regression problem: public inputs X, private outputs y, test inputs,
/// hyperparameters, and the privacy budget. prior_mean is a public constant
/// subtracted from y before fitting and added back to predictions.
struct RegressionTask {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::MatrixXd X_star;
  HyperConfig theta;
  PrivacySpec privacy;
  RegressionMode mode = RegressionMode::kStandard;
  int inducing_count = 0;
  LengthscaleParams lengthscale_params;
  double prior_mean = 0.0;
  OptimizeOptions optimize;

  void validate() const {
    if (X.rows() < 1 || X_star.rows() < 1) {
      throw std::invalid_argument("RegressionTask: need N >= 1 and P >= 1");
    }
    if (y.size() != X.rows()) {
      throw std::invalid_argument("RegressionTask: y length does not match X");
    }
    if (X.cols() != X_star.cols()) {
      throw std::invalid_argument("RegressionTask: test input dimension mismatch");
    }
    require_finite(X, "RegressionTask.X");
    require_finite(y, "RegressionTask.y");
    require_finite(X_star, "RegressionTask.X_star");
    theta.validate();
    privacy.validate();
    if (mode == RegressionMode::kSparse &&
        (inducing_count < 1 || inducing_count > X.rows())) {
      throw std::invalid_argument("RegressionTask: need 1 <= inducing_count <= N");
    }
    if (!(theta.noise_variance > 0.0)) {
      throw std::invalid_argument("RegressionTask: noise variance must be > 0");
    }
  }

  [[nodiscard]] Kernel kernel() const {
    if (mode == RegressionMode::kGibbs) {
      LengthscaleFunction fn(X, lengthscale_params.n_target,
                             lengthscale_params.max_lengthscale,
                             lengthscale_params.kde_bandwidth,
                             lengthscale_params.neighbourhood_radius);
      return Kernel::gibbs(theta.kernel_variance, std::move(fn));
    }
    return Kernel::eq(theta);
  }
};

struct DPPrediction {
  Eigen::VectorXd dp_mean;
  Eigen::VectorXd clean_mean;   // non-DP, diagnostics only
  Eigen::VectorXd gp_variance;  // input-only, released without noise
  Eigen::VectorXd dp_noise_std;
  CloakingResult cloaking;
  Eigen::MatrixXd inducing_inputs;  // empty unless sparse
};

namespace detail {

inline DPPrediction finish_prediction(const RegressionTask& task, Eigen::MatrixXd c,
                                      Eigen::VectorXd gp_variance, SplitRng& rng,
                                      Eigen::MatrixXd inducing = {}) {
  DPPrediction out;
  out.cloaking = make_cloaking(std::move(c), task.privacy, task.optimize);
  out.clean_mean =
      (out.cloaking.C * (task.y.array() - task.prior_mean).matrix()).array() +
      task.prior_mean;
  const Eigen::VectorXd noise = dp_noise_sample(out.cloaking, rng);
  out.dp_mean = out.clean_mean + noise;
  out.gp_variance = std::move(gp_variance);
  out.dp_noise_std = dp_noise_std(out.cloaking);
  out.inducing_inputs = std::move(inducing);
  return out;
}

}  // namespace detail

/// Standard (or Gibbs-kernel) DP GP regression: C = K_*f (K_ff + s2 I)^-1,
/// noise covariance optimized over C's columns, calibrated Gaussian noise
/// added to the posterior mean.
inline DPPrediction dp_gp_regress(const RegressionTask& task, SplitRng& rng) {
  task.validate();
  if (task.mode == RegressionMode::kSparse) {
    throw std::invalid_argument("dp_gp_regress: task is in sparse mode");
  }
  const Kernel kernel = task.kernel();
  Eigen::MatrixXd k = kernel.cov(task.X, task.X);
  k.diagonal().array() += task.theta.noise_variance;
  const Eigen::MatrixXd k_star_f = kernel.cov(task.X_star, task.X);

  const CholFactor kf = CholFactor::compute(k);
  Eigen::MatrixXd c = kf.solve(k_star_f.transpose()).transpose();
  const Eigen::VectorXd var =
      (kernel.diag(task.X_star) - kf.inv_quad_columns(k_star_f.transpose())).cwiseMax(0.0);
  return detail::finish_prediction(task, std::move(c), var, rng);
}

/// Sparse (FITC) DP GP regression with k-means inducing inputs.
inline DPPrediction dp_sparse_regress(const RegressionTask& task, SplitRng& rng) {
  task.validate();
  if (task.mode != RegressionMode::kSparse) {
    throw std::invalid_argument("dp_sparse_regress: task not in sparse mode");
  }
  const Kernel kernel = Kernel::eq(task.theta);
  SplitRng kmeans_rng = rng.split(0x6b6d65616eULL);
  const InducingSet inducing = kmeans_place(task.X, task.inducing_count, kmeans_rng);
  const FitcModel model = fitc_build(task.X, inducing, kernel, task.theta.noise_variance);
  Eigen::MatrixXd c = fitc_cloaking_matrix(model, task.X_star, kernel);
  Eigen::VectorXd var = fitc_predict_var(model, task.X_star, kernel);
  return detail::finish_prediction(task, std::move(c), std::move(var), rng, inducing.Z);
}

inline DPPrediction dp_regress(const RegressionTask& task, SplitRng& rng) {
  return task.mode == RegressionMode::kSparse ? dp_sparse_regress(task, rng)
                                              : dp_gp_regress(task, rng);
}

struct CvSummary {
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
  Eigen::VectorXd per_fold;
};

/// kappa-fold cross-validated DP RMSE: per fold, fit on the remainder,
/// predict the held-out points, and average the RMSE over fresh noise draws
/// (noise_draws == 0 scores the clean predictions). Fold assignment comes
/// from a seeded shuffle; each fold and draw uses an independent RNG stream.
inline CvSummary rmse_cv(const RegressionTask& task_template, int folds, int noise_draws,
                         SplitRng& rng) {
  const Eigen::Index n = task_template.X.rows();
  if (folds < 2 || folds > n) {
    throw std::invalid_argument("rmse_cv: need 2 <= folds <= N");
  }
  SplitRng shuffle_rng = rng.split(0x73687566666c65ULL);
  const std::vector<int> perm = shuffle_rng.permutation(static_cast<int>(n));

  Eigen::VectorXd fold_rmse(folds);
  for (int k = 0; k < folds; ++k) {
    std::vector<int> test_idx, train_idx;
    for (Eigen::Index i = 0; i < n; ++i) {
      (static_cast<int>(i) % folds == k ? test_idx : train_idx)
          .push_back(perm[static_cast<std::size_t>(i)]);
    }
    if (train_idx.empty() || test_idx.empty()) {
      throw std::invalid_argument("rmse_cv: fold with no points");
    }

    RegressionTask fold_task = task_template;
    fold_task.X = task_template.X(train_idx, Eigen::all);
    fold_task.y = task_template.y(train_idx);
    fold_task.X_star = task_template.X(test_idx, Eigen::all);
    if (fold_task.mode == RegressionMode::kSparse) {
      fold_task.inducing_count =
          std::min<int>(fold_task.inducing_count, static_cast<int>(train_idx.size()));
    }
    SplitRng fold_rng = rng.split(static_cast<std::uint64_t>(k) + 1);
    const DPPrediction pred = dp_regress(fold_task, fold_rng);
    const Eigen::VectorXd truth = task_template.y(test_idx);

    if (noise_draws <= 0) {
      fold_rmse[k] = std::sqrt((pred.clean_mean - truth).squaredNorm() /
                               static_cast<double>(test_idx.size()));
    } else {
      double acc = 0.0;
      for (int d = 0; d < noise_draws; ++d) {
        SplitRng draw_rng = fold_rng.split(static_cast<std::uint64_t>(d) + 1000);
        const Eigen::VectorXd noisy =
            pred.clean_mean + dp_noise_sample(pred.cloaking, draw_rng);
        acc += std::sqrt((noisy - truth).squaredNorm() /
                         static_cast<double>(test_idx.size()));
      }
      fold_rmse[k] = acc / noise_draws;
    }
  }

  CvSummary out;
  out.per_fold = fold_rmse;
  out.mean_rmse = fold_rmse.mean();
  const double var = (fold_rmse.array() - out.mean_rmse).square().sum() /
                     std::max<double>(folds - 1, 1.0);
  out.std_rmse = std::sqrt(var);
  return out;
}

}  // namespace dpgp

#endif  // DPGP_REGRESSION_HPP
