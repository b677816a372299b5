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

#include <catch2/catch.hpp>

#include <cmath>
#include <limits>

#include "dpgp/classification.hpp"
#include "dpgp/data.hpp"

using dpgp::ClassifyTask;
using dpgp::dp_laplace_fit;
using dpgp::LaplaceFit;
using dpgp::laplace_cloaking_matrix;
using dpgp::LaplaceState;
using dpgp::logistic;
using dpgp::predict_class_prob;
using dpgp::predict_latent;
using dpgp::SplitRng;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd spread_inputs(Eigen::Index n, Eigen::Index d, SplitRng& rng) {
  const double side = 2.0 * std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d));
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = side * rng.uniform();
  }
  return x;
}

Eigen::VectorXd random_labels(Eigen::Index n, SplitRng& rng) {
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return y;
}

ClassifyTask stripes_task(int n, std::uint64_t seed) {
  SplitRng rng(seed);
  const dpgp::TabularDataset ds = dpgp::gen_stripes(n, 0.1, rng);
  ClassifyTask task;
  task.X = ds.X;
  task.y = ds.y;
  task.X_star = ds.X.topRows(4);
  task.theta.lengthscales = Eigen::VectorXd::Constant(1, 3.5);
  task.theta.kernel_variance = 1.0;
  task.privacy = dpgp::PrivacySpec{1.0, 0.01, 2.0};
  return task;
}

}  // namespace

TEST_CASE("laplace cloaking matrix", "[classification]") {
  SplitRng rng(3);
  const Eigen::MatrixXd x = spread_inputs(8, 1, rng);
  const dpgp::Kernel kern = dpgp::Kernel::eq(1.0, Eigen::VectorXd::Constant(1, 1.5));
  const Eigen::MatrixXd k = kern.cov(x, x);

  SECTION("zero W gives K over two") {
    const Eigen::MatrixXd c = laplace_cloaking_matrix(k, Eigen::VectorXd::Zero(8));
    REQUIRE((c - 0.5 * k).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("stable form agrees with the direct inverse") {
    Eigen::VectorXd w(8);
    for (int i = 0; i < 8; ++i) w[i] = 0.05 + 0.2 * rng.uniform();
    const Eigen::MatrixXd direct =
        0.5 * (k.inverse() + Eigen::MatrixXd(w.asDiagonal())).inverse();
    const Eigen::MatrixXd stable = laplace_cloaking_matrix(k, w);
    REQUIRE((stable - direct).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("zero initialization fixes pi and W", "[classification]") {
  const LaplaceState s = LaplaceState::at(Eigen::VectorXd::Zero(5));
  REQUIRE(s.pi == Eigen::VectorXd::Constant(5, 0.5));
  REQUIRE(s.W_diag == Eigen::VectorXd::Constant(5, 0.25));
}

TEST_CASE("scalar fit reproduces the hand computation", "[classification]") {
  // N = 1, k(x,x) = 1, y = +1, no noise: C = 1/2 (1 + 1/4)^-1 = 0.4 and the
  // update from zero gives f = 0.4
  ClassifyTask task;
  task.X = Eigen::MatrixXd::Zero(1, 1);
  task.y = Eigen::VectorXd::Ones(1);
  task.X_star = task.X;
  task.theta.lengthscales = Eigen::VectorXd::Constant(1, 1.0);
  task.theta.kernel_variance = 1.0;
  task.privacy = dpgp::PrivacySpec{kInf, 0.01, 2.0};
  SplitRng rng(5);
  const LaplaceFit fit = dp_laplace_fit(task, rng);
  REQUIRE(fit.cloaking.C(0, 0) == Approx(0.4).epsilon(1e-9));
  REQUIRE(fit.state.f_hat[0] == Approx(0.4).epsilon(1e-9));
  REQUIRE(std::abs(fit.state.f_hat[0] - 0.4) < 1e-12);
}

TEST_CASE("label flip negates the clean single update", "[classification]") {
  ClassifyTask task = stripes_task(30, 7);
  task.privacy.epsilon = kInf;
  SplitRng r1(9);
  const LaplaceFit a = dp_laplace_fit(task, r1);

  ClassifyTask flipped = task;
  flipped.y = -task.y;
  SplitRng r2(9);
  const LaplaceFit b = dp_laplace_fit(flipped, r2);
  REQUIRE((a.state.f_hat + b.state.f_hat).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("clean single update equals the direct Newton step", "[classification][property]") {
  SplitRng rng(11);
  for (int trial = 0; trial < 8; ++trial) {
    const auto n = static_cast<Eigen::Index>(3 + rng.uniform_index(10));
    ClassifyTask task;
    task.X = spread_inputs(n, 1 + static_cast<Eigen::Index>(rng.uniform_index(2)), rng);
    task.y = random_labels(n, rng);
    task.X_star = task.X.topRows(1);
    task.theta.lengthscales = Eigen::VectorXd::Constant(1, 1.0 + 2.0 * rng.uniform());
    task.theta.kernel_variance = 0.5 + rng.uniform();
    task.privacy = dpgp::PrivacySpec{kInf, 0.01, 2.0};

    SplitRng fit_rng(static_cast<std::uint64_t>(trial));
    const LaplaceFit fit = dp_laplace_fit(task, fit_rng);

    // direct oracle: f_new = (K^-1 + W)^-1 (W f + y/2 + 1/2 - pi) at f = 0
    const Eigen::MatrixXd k = fit.K;  // same jittered prior
    const Eigen::VectorXd pi0 = Eigen::VectorXd::Constant(n, 0.5);
    const Eigen::MatrixXd w = Eigen::MatrixXd::Identity(n, n) * 0.25;
    const Eigen::VectorXd grad = task.y / 2.0 + Eigen::VectorXd::Constant(n, 0.5) - pi0;
    const Eigen::VectorXd f_direct = (k.inverse() + w).inverse() * grad;
    REQUIRE((fit.state.f_hat - f_direct).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("two clean iterations equal two direct Newton steps", "[classification]") {
  ClassifyTask task = stripes_task(25, 13);
  task.privacy.epsilon = kInf;
  task.newton_iterations = 2;
  SplitRng rng(15);
  const LaplaceFit fit = dp_laplace_fit(task, rng);

  const Eigen::MatrixXd k = fit.K;
  const Eigen::Index n = task.y.size();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  for (int it = 0; it < 2; ++it) {
    const Eigen::VectorXd pi = logistic(f);
    const Eigen::MatrixXd w = (pi.array() * (1.0 - pi.array())).matrix().asDiagonal();
    const Eigen::VectorXd grad = task.y / 2.0 + Eigen::VectorXd::Constant(n, 0.5) - pi;
    f = (k.inverse() + w).inverse() * (w * f + grad);
  }
  REQUIRE((fit.state.f_hat - f).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("label-flip DP bound with sensitivity two", "[classification][property]") {
  ClassifyTask task = stripes_task(40, 17);
  SplitRng rng(19);
  const LaplaceFit fit = dp_laplace_fit(task, rng);
  const Eigen::Index n = task.y.size();
  const Eigen::MatrixXd l_inv =
      fit.cloaking.M_chol.matrix_l().triangularView<Eigen::Lower>().solve(
          Eigen::MatrixXd::Identity(n, n));
  for (Eigen::Index i = 0; i < n; ++i) {
    // flipping label i changes C y by exactly 2 c_i in magnitude
    const Eigen::VectorXd shift = 2.0 * fit.cloaking.C.col(i);
    REQUIRE((l_inv * shift).norm() <= fit.cloaking.Delta * (1.0 + 1e-6));
  }
}

TEST_CASE("noise on C y matches the calibrated covariance", "[classification]") {
  ClassifyTask task = stripes_task(12, 21);
  SplitRng rng(23);
  const LaplaceFit fit = dp_laplace_fit(task, rng);
  const Eigen::VectorXd clean = fit.cloaking.C * task.y;

  const int draws = 10000;
  SplitRng noise_rng(29);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(12, 12);
  for (int t = 0; t < draws; ++t) {
    const Eigen::VectorXd z = dpgp::dp_noise_sample(fit.cloaking, noise_rng);
    acc += z * z.transpose();
  }
  acc /= draws;
  const Eigen::MatrixXd target = fit.cloaking.noise_scale * fit.cloaking.noise_scale *
                                 fit.cloaking.M;
  REQUIRE((acc - target).norm() / target.norm() < 0.05);
  REQUIRE(clean.allFinite());
}

TEST_CASE("latent prediction", "[classification]") {
  ClassifyTask task = stripes_task(25, 31);
  task.privacy.epsilon = kInf;
  SplitRng rng(33);
  const LaplaceFit fit = dp_laplace_fit(task, rng);

  SECTION("test point at a training input selects that latent value") {
    auto [mean, var] = predict_latent(task.X.topRows(3), task, fit);
    for (int i = 0; i < 3; ++i) {
      REQUIRE(mean[i] == Approx(fit.state.f_hat[i]).margin(1e-5));
    }
  }

  SECTION("far test point reverts to the prior") {
    Eigen::MatrixXd far(1, 2);
    far << 1e4, 1e4;
    auto [mean, var] = predict_latent(far, task, fit);
    REQUIRE(std::abs(mean[0]) < 1e-10);
    REQUIRE(var[0] == Approx(task.theta.kernel_variance).epsilon(1e-9));
  }

  SECTION("variance matches the direct dense expression") {
    const Eigen::MatrixXd xs = task.X.topRows(5);
    auto [mean, var] = predict_latent(xs, task, fit);
    const dpgp::Kernel kern = dpgp::Kernel::eq(task.theta);
    const Eigen::MatrixXd kstar = kern.cov(xs, task.X);
    Eigen::MatrixXd a = fit.K;
    a.diagonal() += fit.state.W_diag.cwiseInverse();
    const Eigen::VectorXd direct =
        kern.diag(xs) - (kstar * a.inverse() * kstar.transpose()).diagonal();
    REQUIRE((var - direct).cwiseAbs().maxCoeff() < 1e-8);
  }

  SECTION("variance is independent of the labels with f held fixed") {
    ClassifyTask other = task;
    SplitRng lrng(35);
    other.y = random_labels(task.y.size(), lrng);
    auto [m1, v1] = predict_latent(task.X.topRows(5), task, fit);
    auto [m2, v2] = predict_latent(task.X.topRows(5), other, fit);
    REQUIRE(v1 == v2);
  }
}

TEST_CASE("class probabilities", "[classification]") {
  Eigen::VectorXd mean(3);
  mean << 0.0, 50.0, 2.0;
  const Eigen::VectorXd p = predict_class_prob(mean);
  REQUIRE(p[0] == 0.5);
  REQUIRE(p[1] == Approx(1.0).epsilon(1e-12));
  REQUIRE(p[2] == Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
  REQUIRE(p[2] == Approx(0.8808).margin(1e-4));

  SECTION("strictly inside (0,1) and monotone") {
    // +-30 keeps the logistic away from double saturation
    Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(101, -30.0, 30.0);
    const Eigen::VectorXd probs = predict_class_prob(grid);
    for (int i = 0; i < 101; ++i) {
      REQUIRE(probs[i] > 0.0);
      REQUIRE(probs[i] < 1.0);
      if (i > 0) REQUIRE(probs[i] > probs[i - 1]);
    }
  }
}

TEST_CASE("sparse classification with all inducing points matches dense", "[classification]") {
  ClassifyTask task = stripes_task(20, 37);
  task.privacy.epsilon = kInf;
  SplitRng r1(39);
  const LaplaceFit dense = dp_laplace_fit(task, r1);
  auto [dm, dv] = predict_latent(task.X_star, task, dense);

  ClassifyTask sparse = task;
  sparse.inducing_count = static_cast<int>(task.X.rows());
  SplitRng r2(39);
  const dpgp::ClassifyOutput out = dpgp::dp_classify(sparse, r2);
  REQUIRE((out.fit.state.f_hat - dense.state.f_hat).cwiseAbs().maxCoeff() < 1e-6);
  REQUIRE((out.latent_mean - dm).cwiseAbs().maxCoeff() < 1e-5);
  REQUIRE((out.latent_var - dv).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("classify task validation", "[classification]") {
  ClassifyTask task = stripes_task(10, 41);
  SplitRng rng(43);

  SECTION("labels outside +-1") {
    task.y[0] = 0.5;
    REQUIRE_THROWS_AS(dp_laplace_fit(task, rng), std::invalid_argument);
  }
  SECTION("sensitivity must be two") {
    task.privacy.data_sensitivity = 1.0;
    REQUIRE_THROWS_AS(dp_laplace_fit(task, rng), std::invalid_argument);
  }
  SECTION("at least one iteration") {
    task.newton_iterations = 0;
    REQUIRE_THROWS_AS(dp_laplace_fit(task, rng), std::invalid_argument);
  }
}
