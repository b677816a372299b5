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

#ifndef DPGP_KERNELS_HPP
#define DPGP_KERNELS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "dpgp/linalg.hpp"

namespace dpgp {

/// One point on a hyperparameter grid: kernel lengthscale(s), kernel
/// variance, and Gaussian observation-noise variance.
struct HyperConfig {
  Eigen::VectorXd lengthscales;  // per dimension; a single value broadcasts
  double kernel_variance = 1.0;
  double noise_variance = 0.0;

  void validate() const {
    if (kernel_variance <= 0.0) {
      throw std::invalid_argument("HyperConfig: kernel_variance must be > 0");
    }
    if (noise_variance < 0.0) {
      throw std::invalid_argument("HyperConfig: noise_variance must be >= 0");
    }
    if (lengthscales.size() == 0 || (lengthscales.array() <= 0.0).any()) {
      throw std::invalid_argument("HyperConfig: lengthscales must be positive");
    }
  }

  /// Lengthscale for dimension d, broadcasting a single shared value.
  [[nodiscard]] double lengthscale(Eigen::Index d) const {
    return lengthscales.size() == 1 ? lengthscales[0] : lengthscales[d];
  }
};

/// Density-driven lengthscale l(x) = [m^-1 + rho(x)/n]^-1 where rho is a
/// Gaussian-KDE estimate of the training-input density. n is the target
/// number of points within half a lengthscale, m the upper bound on the
/// lengthscale. With a positive neighbourhood radius the density is replaced
/// by the smallest KDE value over a stencil spanning the Euclidean ball of
/// that radius, so dense regions extend support into adjacent sparse ones.
class LengthscaleFunction {
 public:
  LengthscaleFunction(Eigen::MatrixXd training_inputs, double n_target, double max_lengthscale,
                      double kde_bandwidth = 0.0, double neighbourhood_radius = -1.0)
      : inputs_(std::move(training_inputs)),
        n_target_(n_target),
        max_lengthscale_(max_lengthscale) {
    if (inputs_.rows() < 1) {
      throw std::invalid_argument("LengthscaleFunction: empty training inputs");
    }
    if (n_target_ <= 0.0 || max_lengthscale_ <= 0.0) {
      throw std::invalid_argument("LengthscaleFunction: n and m must be > 0");
    }
    bandwidth_ = kde_bandwidth > 0.0 ? kde_bandwidth : silverman_bandwidth(inputs_);
    radius_ = neighbourhood_radius >= 0.0 ? neighbourhood_radius : bandwidth_;
  }

  /// Gaussian KDE density estimate at x.
  [[nodiscard]] double density(const Eigen::RowVectorXd& x) const {
    const auto n = static_cast<double>(inputs_.rows());
    const auto dim = static_cast<double>(inputs_.cols());
    const double norm =
        n * std::pow(2.0 * std::numbers::pi, dim / 2.0) * std::pow(bandwidth_, dim);
    const Eigen::VectorXd sq =
        (inputs_.rowwise() - x).rowwise().squaredNorm();
    return (sq.array() / (-2.0 * bandwidth_ * bandwidth_)).exp().sum() / norm;
  }

  /// Minimum density over the neighbourhood ball: evaluated on a
  /// deterministic stencil of the centre plus axis-aligned points at the
  /// full radius. Radius zero reduces to the plain density.
  [[nodiscard]] double min_density(const Eigen::RowVectorXd& x) const {
    double rho = density(x);
    if (radius_ <= 0.0) return rho;
    Eigen::RowVectorXd probe = x;
    for (Eigen::Index d = 0; d < x.size(); ++d) {
      for (const double sign : {-1.0, 1.0}) {
        probe = x;
        probe[d] += sign * radius_;
        rho = std::min(rho, density(probe));
      }
    }
    return rho;
  }

  /// l(x); always in (0, m].
  [[nodiscard]] double operator()(const Eigen::RowVectorXd& x) const {
    return from_density(min_density(x));
  }

  [[nodiscard]] double from_density(double rho) const {
    return 1.0 / (1.0 / max_lengthscale_ + rho / n_target_);
  }

  [[nodiscard]] double bandwidth() const { return bandwidth_; }
  [[nodiscard]] double radius() const { return radius_; }
  [[nodiscard]] double max_lengthscale() const { return max_lengthscale_; }

  static double silverman_bandwidth(const Eigen::MatrixXd& inputs) {
    const auto n = static_cast<double>(inputs.rows());
    const auto dim = static_cast<double>(inputs.cols());
    const Eigen::RowVectorXd mean = inputs.colwise().mean();
    const double var =
        (inputs.rowwise() - mean).squaredNorm() / std::max(n - 1.0, 1.0) / dim;
    const double sigma = std::sqrt(std::max(var, 1e-12));
    return sigma * std::pow(4.0 / ((dim + 2.0) * n), 1.0 / (dim + 4.0));
  }

 private:
  Eigen::MatrixXd inputs_;
  double n_target_;
  double max_lengthscale_;
  double bandwidth_ = 0.0;
  double radius_ = 0.0;
};

enum class KernelFamily { kEq, kGibbs, kWeightedSum };

using WeightFn = std::function<double(const Eigen::RowVectorXd&)>;

/// Covariance function: stationary exponentiated quadratic (ARD), the
/// variable-lengthscale Gibbs form, or a weighted sum of two kernels whose
/// mixing proportion varies over the input space.
class Kernel {
 public:
  static Kernel eq(double variance, Eigen::VectorXd lengthscales) {
    if (variance <= 0.0) throw std::invalid_argument("Kernel: variance must be > 0");
    if (lengthscales.size() == 0 || (lengthscales.array() <= 0.0).any()) {
      throw std::invalid_argument("Kernel: lengthscales must be positive");
    }
    Kernel k;
    k.family_ = KernelFamily::kEq;
    k.variance_ = variance;
    k.lengthscales_ = std::move(lengthscales);
    return k;
  }

  static Kernel eq(const HyperConfig& theta) {
    theta.validate();
    return eq(theta.kernel_variance, theta.lengthscales);
  }

  static Kernel gibbs(double variance, LengthscaleFunction lengthscale_fn) {
    if (variance <= 0.0) throw std::invalid_argument("Kernel: variance must be > 0");
    Kernel k;
    k.family_ = KernelFamily::kGibbs;
    k.variance_ = variance;
    k.lengthscale_fn_ = std::make_shared<LengthscaleFunction>(std::move(lengthscale_fn));
    return k;
  }

  static Kernel weighted_sum(Kernel f, Kernel g, WeightFn weight) {
    Kernel k;
    k.family_ = KernelFamily::kWeightedSum;
    k.variance_ = 1.0;
    k.component_f_ = std::make_shared<Kernel>(std::move(f));
    k.component_g_ = std::make_shared<Kernel>(std::move(g));
    k.weight_ = std::move(weight);
    return k;
  }

  /// P x Q covariance matrix between the rows of x1 and x2.
  [[nodiscard]] Eigen::MatrixXd cov(const Eigen::MatrixXd& x1,
                                    const Eigen::MatrixXd& x2) const {
    if (x1.cols() != x2.cols()) {
      throw std::invalid_argument("Kernel::cov: input dimensions disagree");
    }
    switch (family_) {
      case KernelFamily::kEq:
        return eq_cov(x1, x2);
      case KernelFamily::kGibbs:
        return gibbs_cov(x1, x2);
      case KernelFamily::kWeightedSum:
        return weighted_sum_cov(x1, x2);
    }
    throw std::logic_error("Kernel::cov: unknown family");
  }

  /// k(x, x) for each row of x.
  [[nodiscard]] Eigen::VectorXd diag(const Eigen::MatrixXd& x) const {
    switch (family_) {
      case KernelFamily::kEq:
        return Eigen::VectorXd::Constant(x.rows(), variance_);
      case KernelFamily::kGibbs:
        // prefactor is 1 and exponent 0 at zero distance
        return Eigen::VectorXd::Constant(x.rows(), variance_);
      case KernelFamily::kWeightedSum: {
        Eigen::VectorXd out(x.rows());
        const Eigen::VectorXd df = component_f_->diag(x);
        const Eigen::VectorXd dg = component_g_->diag(x);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          const double w = checked_weight(x.row(i));
          out[i] = w * df[i] * w + (1.0 - w) * dg[i] * (1.0 - w);
        }
        return out;
      }
    }
    throw std::logic_error("Kernel::diag: unknown family");
  }

  [[nodiscard]] KernelFamily family() const { return family_; }
  [[nodiscard]] double variance() const { return variance_; }

 private:
  Kernel() = default;

  [[nodiscard]] Eigen::MatrixXd eq_cov(const Eigen::MatrixXd& x1,
                                       const Eigen::MatrixXd& x2) const {
    const Eigen::Index dim = x1.cols();
    if (lengthscales_.size() != 1 && lengthscales_.size() != dim) {
      throw std::invalid_argument("Kernel::cov: lengthscale count does not match input dimension");
    }
    Eigen::RowVectorXd inv_ls(dim);
    for (Eigen::Index d = 0; d < dim; ++d) {
      inv_ls[d] = 1.0 / (lengthscales_.size() == 1 ? lengthscales_[0] : lengthscales_[d]);
    }
    const Eigen::MatrixXd a = x1.array().rowwise() * inv_ls.array();
    const Eigen::MatrixXd b = x2.array().rowwise() * inv_ls.array();
    Eigen::MatrixXd sq = -2.0 * a * b.transpose();
    sq.colwise() += a.rowwise().squaredNorm();
    sq.rowwise() += b.rowwise().squaredNorm().transpose();
    return variance_ * (-0.5 * sq.array().max(0.0)).exp();
  }

  [[nodiscard]] Eigen::MatrixXd gibbs_cov(const Eigen::MatrixXd& x1,
                                          const Eigen::MatrixXd& x2) const {
    const auto& fn = *lengthscale_fn_;
    const Eigen::Index p = x1.rows();
    const Eigen::Index q = x2.rows();
    const auto dim = static_cast<double>(x1.cols());
    Eigen::VectorXd r1(p), r2(q);
    for (Eigen::Index i = 0; i < p; ++i) r1[i] = fn(x1.row(i));
    for (Eigen::Index j = 0; j < q; ++j) r2[j] = fn(x2.row(j));
    if ((r1.array() <= 0.0).any() || (r2.array() <= 0.0).any()) {
      throw NumericalError("Kernel::cov: lengthscale function returned a nonpositive value");
    }
    Eigen::MatrixXd out(p, q);
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = 0; j < q; ++j) {
        const double s = r1[i] * r1[i] + r2[j] * r2[j];
        const double pref = std::pow(2.0 * r1[i] * r2[j] / s, dim / 2.0);
        const double sq = (x1.row(i) - x2.row(j)).squaredNorm();
        out(i, j) = variance_ * pref * std::exp(-sq / s);
      }
    }
    return out;
  }

  [[nodiscard]] Eigen::MatrixXd weighted_sum_cov(const Eigen::MatrixXd& x1,
                                                 const Eigen::MatrixXd& x2) const {
    Eigen::VectorXd w1(x1.rows()), w2(x2.rows());
    for (Eigen::Index i = 0; i < x1.rows(); ++i) w1[i] = checked_weight(x1.row(i));
    for (Eigen::Index j = 0; j < x2.rows(); ++j) w2[j] = checked_weight(x2.row(j));
    const Eigen::MatrixXd kf = component_f_->cov(x1, x2);
    const Eigen::MatrixXd kg = component_g_->cov(x1, x2);
    return (w1 * w2.transpose()).cwiseProduct(kf) +
           ((1.0 - w1.array()).matrix() * (1.0 - w2.array()).matrix().transpose())
               .cwiseProduct(kg);
  }

  [[nodiscard]] double checked_weight(const Eigen::RowVectorXd& x) const {
    const double w = weight_(x);
    if (!(w >= 0.0 && w <= 1.0)) {
      throw std::invalid_argument("Kernel::cov: weight function outside [0, 1]");
    }
    return w;
  }

  KernelFamily family_ = KernelFamily::kEq;
  double variance_ = 1.0;
  Eigen::VectorXd lengthscales_;
  std::shared_ptr<LengthscaleFunction> lengthscale_fn_;
  std::shared_ptr<Kernel> component_f_;
  std::shared_ptr<Kernel> component_g_;
  WeightFn weight_;
};

}  // namespace dpgp

#endif  // DPGP_KERNELS_HPP
