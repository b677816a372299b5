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

#ifndef DPGP_CLASSIFICATION_HPP
#define DPGP_CLASSIFICATION_HPP

#include <Eigen/Dense>

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <utility>

#include "dpgp/cloaking.hpp"
#include "dpgp/kernels.hpp"
#include "dpgp/linalg.hpp"
#include "dpgp/rng.hpp"
#include "dpgp/sparse.hpp"

namespace dpgp {

inline Eigen::VectorXd logistic(const Eigen::VectorXd& f) {
  return (1.0 + (-f.array()).exp()).inverse();
}

/// Latent mode estimate with its link probabilities and Hessian diagonal;
/// pi = logistic(f_hat), W = pi (1 - pi).
struct LaplaceState {
  Eigen::VectorXd f_hat;
  Eigen::VectorXd pi;
  Eigen::VectorXd W_diag;

  static LaplaceState at(Eigen::VectorXd f) {
    LaplaceState s;
    s.pi = logistic(f);
    s.W_diag = s.pi.array() * (1.0 - s.pi.array());
    s.f_hat = std::move(f);
    return s;
  }
};

/// DP binary classification problem. Labels are +-1; one flip moves an
/// output by 2, so the data sensitivity is fixed at d = 2.
struct ClassifyTask {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;  // entries in {-1, +1}
  Eigen::MatrixXd X_star;
  HyperConfig theta;
  PrivacySpec privacy;
  int inducing_count = 0;  // 0: dense
  int newton_iterations = 1;
  OptimizeOptions optimize;

  void validate() const {
    if (X.rows() < 1) throw std::invalid_argument("ClassifyTask: need N >= 1");
    if (y.size() != X.rows()) throw std::invalid_argument("ClassifyTask: y length mismatch");
    if (X_star.rows() >= 1 && X_star.cols() != X.cols()) {
      throw std::invalid_argument("ClassifyTask: test input dimension mismatch");
    }
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y[i] != 1.0 && y[i] != -1.0) {
        throw std::invalid_argument("ClassifyTask: labels must be -1 or +1");
      }
    }
    theta.validate();
    privacy.validate();
    if (privacy.data_sensitivity != 2.0) {
      throw std::invalid_argument("ClassifyTask: label flips have sensitivity d = 2");
    }
    if (newton_iterations < 1) {
      throw std::invalid_argument("ClassifyTask: need at least one update");
    }
    if (inducing_count < 0 || inducing_count > X.rows()) {
      throw std::invalid_argument("ClassifyTask: need 0 <= inducing_count <= N");
    }
  }
};

/// C = 1/2 (K^-1 + W)^-1 computed in the stable form
/// C = 1/2 (K - K W^1/2 B^-1 W^1/2 K) with B = I + W^1/2 K W^1/2.
inline Eigen::MatrixXd laplace_cloaking_matrix(const Eigen::MatrixXd& k,
                                               const Eigen::VectorXd& w_diag) {
  if (k.rows() != k.cols() || w_diag.size() != k.rows()) {
    throw std::invalid_argument("laplace_cloaking_matrix: dimension mismatch");
  }
  if (w_diag.minCoeff() < 0.0) {
    throw std::invalid_argument("laplace_cloaking_matrix: W must be nonnegative");
  }
  const Eigen::VectorXd ws = w_diag.array().sqrt();
  Eigen::MatrixXd b = ws.asDiagonal() * k * ws.asDiagonal();
  b.diagonal().array() += 1.0;
  const CholFactor bf = CholFactor::compute(b, 0.0);
  const Eigen::MatrixXd kw = k * ws.asDiagonal();  // K W^1/2
  Eigen::MatrixXd c = 0.5 * (k - kw * bf.solve(kw.transpose()));
  return 0.5 * (c + c.transpose().eval());
}

struct LaplaceFit {
  LaplaceState state;
  CloakingResult cloaking;  // from the final update
  Eigen::MatrixXd K;        // prior covariance as used (low-rank + jitter when sparse)
  CholFactor K_chol;
  InducingSet inducing;     // empty when dense
  bool sparse = false;
};

namespace detail {

inline LaplaceFit laplace_fit_with_k(const ClassifyTask& task, Eigen::MatrixXd k,
                                     SplitRng& rng) {
  const int iters = task.newton_iterations;
  if (iters > 1) {
    std::cerr << "warning: splitting the privacy budget over " << iters
              << " update iterations adds noise per step and typically lowers"
                 " accuracy versus a single iteration\n";
  }
  PrivacySpec step_budget = task.privacy;
  if (!std::isinf(step_budget.epsilon)) step_budget.epsilon /= iters;
  step_budget.delta /= iters;

  LaplaceFit fit;
  fit.K = std::move(k);
  fit.K_chol = CholFactor::compute(fit.K, 0.0);

  Eigen::VectorXd f = Eigen::VectorXd::Zero(task.X.rows());
  for (int it = 0; it < iters; ++it) {
    const Eigen::VectorXd pi = logistic(f);
    const Eigen::VectorXd w = pi.array() * (1.0 - pi.array());
    const Eigen::MatrixXd c = laplace_cloaking_matrix(fit.K, w);
    fit.cloaking = make_cloaking(c, step_budget, task.optimize);
    SplitRng noise_rng = rng.split(static_cast<std::uint64_t>(it) + 0x6e6f697365ULL);
    const Eigen::VectorXd noise = dp_noise_sample(fit.cloaking, noise_rng);
    f = 2.0 * (fit.cloaking.C *
               (w.asDiagonal() * f + Eigen::VectorXd::Constant(f.size(), 0.5) - pi)) +
        fit.cloaking.C * task.y + noise;
  }
  fit.state = LaplaceState::at(std::move(f));
  return fit;
}

}  // namespace detail

/// One (by default) privatized Laplace update from f = 0: the only
/// y-dependent term C y is released through the cloaking mechanism with
/// d = 2; the remaining terms are computed exactly. With more than one
/// iteration the budget is split evenly per step.
inline LaplaceFit dp_laplace_fit(const ClassifyTask& task, SplitRng& rng) {
  task.validate();
  const Kernel kernel = Kernel::eq(task.theta);
  return detail::laplace_fit_with_k(task, kernel.cov(task.X, task.X), rng);
}

/// Sparse variant: K replaced by the rank-M' surrogate over k-means inducing
/// inputs, then the identical update pipeline.
inline LaplaceFit dp_sparse_laplace_fit(const ClassifyTask& task, SplitRng& rng) {
  task.validate();
  if (task.inducing_count < 1) {
    throw std::invalid_argument("dp_sparse_laplace_fit: inducing_count must be >= 1");
  }
  const Kernel kernel = Kernel::eq(task.theta);
  SplitRng kmeans_rng = rng.split(0x6b6d65616eULL);
  const InducingSet inducing = kmeans_place(task.X, task.inducing_count, kmeans_rng);
  Eigen::MatrixXd k = sor_lowrank(task.X, inducing, kernel);
  k.diagonal().array() += kBaseJitterRel * kernel.variance();
  LaplaceFit fit = detail::laplace_fit_with_k(task, std::move(k), rng);
  fit.inducing = inducing;
  fit.sparse = true;
  return fit;
}

/// Latent predictive mean k_*^T K^-1 f_hat and variance
/// k(x_*, x_*) - k_*^T (K + W^-1)^-1 k_*. The mean deliberately uses
/// K^-1 f_hat rather than the y-dependent likelihood gradient; the variance
/// never touches y. In sparse fits the cross covariances are the low-rank
/// ones, so inducing = training reduces exactly to the dense expressions.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> predict_latent(
    const Eigen::MatrixXd& x_star, const ClassifyTask& task, const LaplaceFit& fit) {
  const Kernel kernel = Kernel::eq(task.theta);
  Eigen::MatrixXd k_star;  // P x N
  if (fit.sparse) {
    const Eigen::MatrixXd k_mm = kernel.cov(fit.inducing.Z, fit.inducing.Z);
    const CholFactor f = CholFactor::compute(k_mm);
    const Eigen::MatrixXd k_star_m = kernel.cov(x_star, fit.inducing.Z);
    const Eigen::MatrixXd k_mn = kernel.cov(fit.inducing.Z, task.X);
    k_star = k_star_m * f.solve(k_mn);
  } else {
    k_star = kernel.cov(x_star, task.X);
  }

  const Eigen::VectorXd mean = k_star * fit.K_chol.solve(fit.state.f_hat);

  Eigen::MatrixXd a = fit.K;
  const double w_floor = 1e-12;
  a.diagonal() += fit.state.W_diag.cwiseMax(w_floor).cwiseInverse();
  const CholFactor af = CholFactor::compute(a, 0.0);
  Eigen::VectorXd var =
      kernel.diag(x_star) - af.inv_quad_columns(k_star.transpose());
  var = var.cwiseMax(0.0);
  return {mean, var};
}

/// Elementwise logistic squash of the latent mean; DP noise is not
/// propagated through the link.
inline Eigen::VectorXd predict_class_prob(const Eigen::VectorXd& latent_mean) {
  return logistic(latent_mean);
}

struct ClassifyOutput {
  LaplaceFit fit;
  Eigen::VectorXd latent_mean;
  Eigen::VectorXd latent_var;
  Eigen::VectorXd class_prob;
};

inline ClassifyOutput dp_classify(const ClassifyTask& task, SplitRng& rng) {
  ClassifyOutput out;
  out.fit = task.inducing_count > 0 ? dp_sparse_laplace_fit(task, rng)
                                    : dp_laplace_fit(task, rng);
  std::tie(out.latent_mean, out.latent_var) = predict_latent(task.X_star, task, out.fit);
  out.class_prob = predict_class_prob(out.latent_mean);
  return out;
}

}  // namespace dpgp

#endif  // DPGP_CLASSIFICATION_HPP
