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

#ifndef DPGP_CLOAKING_HPP
#define DPGP_CLOAKING_HPP

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dpgp/linalg.hpp"
#include "dpgp/rng.hpp"

namespace dpgp {

/// (epsilon, delta)-differential-privacy budget plus the assumed maximum
/// change d to one individual's private output, in output units.
struct PrivacySpec {
  double epsilon = 1.0;
  double delta = 0.01;
  double data_sensitivity = 1.0;  // d

  void validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("PrivacySpec: epsilon must be > 0");
    if (!(delta > 0.0 && delta < 1.0)) {
      throw std::invalid_argument("PrivacySpec: delta must be in (0, 1)");
    }
    if (!(data_sensitivity > 0.0)) {
      throw std::invalid_argument("PrivacySpec: data sensitivity must be > 0");
    }
  }
};

/// Minimal admissible Gaussian-mechanism constant sqrt(2 ln(2/delta)).
inline double c_delta(double delta) {
  if (!(delta > 0.0 && delta <= 2.0)) {
    throw std::invalid_argument("c_delta: delta must be in (0, 2]");
  }
  return std::sqrt(2.0 * std::log(2.0 / delta));
}

struct OptimizeOptions {
  int iterations = 200;
  double step_size = 1.0;     // fraction of the multiplicative gradient step
  double tolerance = 0.01;    // converged when max_j c_j^T M^-1 c_j <= 1 + tolerance
  double lambda_min = 1e-10;
  double max_step_factor = 4.0;
};

struct MOptimum {
  Eigen::VectorXd lambda;
  Eigen::MatrixXd M;
  double max_quad = 0.0;       // max_j c_j^T M^-1 c_j at return
  double grad_norm = 0.0;      // max |projected gradient| at return
  bool converged = false;
  int iterations_run = 0;
};

namespace detail {

inline Eigen::MatrixXd assemble_m(const Eigen::MatrixXd& c, const Eigen::VectorXd& lambda) {
  Eigen::MatrixXd m = c * lambda.asDiagonal() * c.transpose();
  m = 0.5 * (m + m.transpose().eval());
  double jitter = 1e-10 * m.trace() / static_cast<double>(m.rows());
  if (!(jitter > 0.0)) jitter = std::numeric_limits<double>::min();
  m.diagonal().array() += jitter;
  return m;
}

}  // namespace detail

/// Optimize the noise covariance M = sum_j lambda_j c_j c_j^T over the
/// columns of the cloaking matrix C, driving every c_j^T M^-1 c_j toward 1.
///
/// The gradient of log det M in lambda_j is Tr(M^-1 c_j c_j^T); each sweep
/// moves lambda_j along that gradient in log space (lambda scales by
/// 1 + step * (quad_j - 1), clamped), which keeps the update stable when many
/// columns are nearly parallel. Fixed points satisfy quad_j = 1 for every
/// active column; lambdas are floored at lambda_min.
inline MOptimum optimize_M(const Eigen::MatrixXd& c, const OptimizeOptions& opts = {}) {
  const Eigen::Index n = c.cols();
  if (n == 0 || c.colwise().norm().maxCoeff() == 0.0) {
    throw std::invalid_argument("optimize_M: C has no nonzero column");
  }
  require_finite(c, "optimize_M");

  MOptimum out;
  out.lambda = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd quad(n);
  for (int it = 0; it < opts.iterations; ++it) {
    const Eigen::MatrixXd m = detail::assemble_m(c, out.lambda);
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("optimize_M: M lost positive definiteness");
    }
    quad = llt.matrixL().solve(c).colwise().squaredNorm();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double grad = quad[j] - 1.0;
      const double factor = std::min(1.0 + opts.step_size * grad, opts.max_step_factor);
      out.lambda[j] = std::max(out.lambda[j] * factor, opts.lambda_min);
    }
    out.iterations_run = it + 1;
  }

  out.M = detail::assemble_m(c, out.lambda);
  const CholFactor mf = CholFactor::compute(out.M, 0.0);
  quad = mf.inv_quad_columns(c);
  out.max_quad = quad.maxCoeff();
  double gnorm = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double g = quad[j] - 1.0;
    // at the floor only an ascent direction counts as unconverged
    const double pg = (out.lambda[j] <= opts.lambda_min && g < 0.0) ? 0.0 : std::abs(g);
    gnorm = std::max(gnorm, pg);
  }
  out.grad_norm = gnorm;
  out.converged = out.max_quad <= 1.0 + opts.tolerance;
  return out;
}

/// C = K_*f K^-1 via factorization (K passed with any noise variance already
/// on its diagonal).
inline Eigen::MatrixXd cloaking_matrix(const Eigen::MatrixXd& k_star_f,
                                       const Eigen::MatrixXd& k) {
  if (k_star_f.cols() != k.rows()) {
    throw std::invalid_argument("cloaking_matrix: dimension mismatch");
  }
  const CholFactor kf = CholFactor::compute(k);
  return kf.solve(k_star_f.transpose()).transpose();
}

/// Mahalanobis bound Delta = d * max_j sqrt(c_j^T M^-1 c_j), the supremum of
/// the prediction shift over single-output perturbations of size d.
inline double delta_bound(const Eigen::MatrixXd& c, const CholFactor& m_chol, double d) {
  return d * std::sqrt(m_chol.inv_quad_columns(c).maxCoeff());
}

inline double delta_bound(const Eigen::MatrixXd& c, const Eigen::MatrixXd& m, double d) {
  return delta_bound(c, CholFactor::compute(m, 0.0), d);
}

/// Everything needed to release a DP prediction: the cloaking matrix, the
/// optimized noise covariance and its factor, the Eq-style sensitivity bound
/// Delta, and the resulting per-release noise scale c(delta) * Delta / eps.
struct CloakingResult {
  Eigen::MatrixXd C;
  Eigen::VectorXd lambda;
  Eigen::MatrixXd M;
  CholFactor M_chol;
  double Delta = 0.0;
  double noise_scale = 0.0;
  double max_quad = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
};

inline CloakingResult make_cloaking(Eigen::MatrixXd c, const PrivacySpec& privacy,
                                    const OptimizeOptions& opts = {}) {
  privacy.validate();
  CloakingResult out;
  MOptimum opt = optimize_M(c, opts);
  out.C = std::move(c);
  out.lambda = std::move(opt.lambda);
  out.M = std::move(opt.M);
  out.M_chol = CholFactor::compute(out.M, 0.0);
  out.max_quad = opt.max_quad;
  out.grad_norm = opt.grad_norm;
  out.converged = opt.converged;
  out.Delta = delta_bound(out.C, out.M_chol, privacy.data_sensitivity);
  out.noise_scale = std::isinf(privacy.epsilon)
                        ? 0.0
                        : c_delta(privacy.delta) * out.Delta / privacy.epsilon;
  return out;
}

/// One draw from N(0, (c(delta) Delta / eps)^2 M). Identical seeds give
/// identical draws.
inline Eigen::VectorXd dp_noise_sample(const CloakingResult& result,
                                       SplitRng& rng) {
  const Eigen::VectorXd z = rng.normal_vector(result.M.rows());
  return result.noise_scale * (result.M_chol.matrix_l() * z);
}

/// Per-output standard deviation of the added noise.
inline Eigen::VectorXd dp_noise_std(const CloakingResult& result) {
  return result.noise_scale * result.M.diagonal().array().sqrt().matrix();
}

}  // namespace dpgp

#endif  // DPGP_CLOAKING_HPP
