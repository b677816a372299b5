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

#ifndef DPGP_LINALG_HPP
#define DPGP_LINALG_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace dpgp {

/// Thrown when a factorization or iterative routine fails numerically.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

constexpr double kBaseJitterRel = 1e-8;
constexpr double kMaxJitterRel = 1e-2;

/// Cholesky factor of a symmetric PSD matrix, stabilized by diagonal jitter
/// on demand: a clean factorization is attempted first, then jitter relative
/// to the mean diagonal escalates from kBaseJitterRel tenfold up to
/// kMaxJitterRel before giving up.
class CholFactor {
 public:
  CholFactor() = default;

  static CholFactor compute(const Eigen::MatrixXd& a, double base_rel_jitter = 0.0) {
    if (a.rows() != a.cols()) {
      throw std::invalid_argument("CholFactor: matrix must be square");
    }
    const double scale = a.diagonal().mean();
    const double unit = (scale > 0 && std::isfinite(scale)) ? scale : 1.0;
    double rel = base_rel_jitter;
    CholFactor f;
    for (;;) {
      Eigen::MatrixXd work = a;
      work.diagonal().array() += rel * unit;
      f.llt_.compute(work);
      if (f.llt_.info() == Eigen::Success &&
          f.llt_.matrixLLT().diagonal().minCoeff() > 0) {
        f.jitter_ = rel * unit;
        return f;
      }
      rel = (rel == 0.0) ? kBaseJitterRel : rel * 10.0;
      if (rel > kMaxJitterRel) break;
    }
    throw NumericalError("CholFactor: matrix not factorizable after jitter escalation");
  }

  template <typename Derived>
  [[nodiscard]] typename Derived::PlainObject solve(const Eigen::MatrixBase<Derived>& b) const {
    return llt_.solve(b.derived());
  }

  /// x^T A^-1 x via one triangular solve.
  [[nodiscard]] double inv_quad(const Eigen::VectorXd& x) const {
    return llt_.matrixL().solve(x).squaredNorm();
  }

  /// Columnwise b_j^T A^-1 b_j for every column of B.
  [[nodiscard]] Eigen::VectorXd inv_quad_columns(const Eigen::MatrixXd& b) const {
    return llt_.matrixL().solve(b).colwise().squaredNorm();
  }

  [[nodiscard]] double log_det() const {
    return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  }

  /// Lower-triangular factor L with A = L L^T (jitter included).
  [[nodiscard]] Eigen::MatrixXd matrix_l() const {
    return Eigen::MatrixXd(llt_.matrixL());
  }

  [[nodiscard]] double jitter() const { return jitter_; }
  [[nodiscard]] Eigen::Index rows() const { return llt_.rows(); }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_ = 0.0;
};

inline void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& m,
                           const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite entries");
  }
}

}  // namespace dpgp

#endif  // DPGP_LINALG_HPP
