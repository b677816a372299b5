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

#ifndef DPGP_HYPERSELECT_HPP
#define DPGP_HYPERSELECT_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dpgp/cloaking.hpp"
#include "dpgp/kernels.hpp"
#include "dpgp/rng.hpp"

namespace dpgp {

/// Test-index sets of a seeded kappa-fold split.
inline std::vector<std::vector<int>> make_folds(int n, int kappa, SplitRng& rng) {
  if (kappa < 2 || kappa > n) {
    throw std::invalid_argument("make_folds: need 2 <= kappa <= N");
  }
  const std::vector<int> perm = rng.permutation(n);
  std::vector<std::vector<int>> folds(static_cast<std::size_t>(kappa));
  for (int i = 0; i < n; ++i) {
    folds[static_cast<std::size_t>(i % kappa)].push_back(perm[static_cast<std::size_t>(i)]);
  }
  return folds;
}

/// Sensitivity bound 9 d^2 + d^2 * (sum of the kappa-1 largest fold
/// sensitivities alpha_k). The 9 d^2 term accounts for the single fold in
/// which the perturbed point sits in the test set (with errors clipped to
/// +-4d); the remaining folds contribute their training-side bounds.
inline double sensitivity_bound(const Eigen::VectorXd& alpha, double d) {
  if (alpha.size() < 2) {
    throw std::invalid_argument("sensitivity_bound: need kappa >= 2");
  }
  std::vector<double> a(alpha.data(), alpha.data() + alpha.size());
  std::sort(a.begin(), a.end(), std::greater<>());
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < a.size(); ++k) s += a[k];
  return 9.0 * d * d + d * d * s;
}

/// Sum of squared prediction errors with each error clipped to +-4d first.
inline double clipped_sse(const Eigen::VectorXd& errors, double d) {
  const double clip = 4.0 * d;
  return errors.array().min(clip).max(-clip).square().sum();
}

namespace detail {

struct PreparedFold {
  Eigen::VectorXd clean_error;  // prediction - truth, unclipped
  Eigen::MatrixXd noise_l;      // Cholesky factor of the optimized M
  double delta = 0.0;           // Mahalanobis bound with d applied
};

struct PreparedConfig {
  HyperConfig theta;
  Eigen::VectorXd alpha;  // per-fold max_j |c_jk|^2
  double delta_u = 0.0;
  std::vector<PreparedFold> folds;
};

/// Per-fold cloaking matrices, clean errors, fold sensitivities, and (when
/// noise is requested) the optimized noise factors. Everything here depends
/// only on inputs, hyperparameters and d, never on epsilon.
inline PreparedConfig prepare_config(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     const HyperConfig& theta,
                                     const std::vector<std::vector<int>>& folds,
                                     double d, double prior_mean, bool with_noise_model,
                                     const OptimizeOptions& opts) {
  theta.validate();
  const Kernel kernel = Kernel::eq(theta);
  const int kappa = static_cast<int>(folds.size());
  PreparedConfig out;
  out.theta = theta;
  out.alpha.resize(kappa);
  out.folds.resize(static_cast<std::size_t>(kappa));

  const Eigen::Index n = x.rows();
  for (int k = 0; k < kappa; ++k) {
    std::vector<int> train_idx;
    std::vector<char> in_test(static_cast<std::size_t>(n), 0);
    for (int i : folds[static_cast<std::size_t>(k)]) in_test[static_cast<std::size_t>(i)] = 1;
    for (int i = 0; i < n; ++i) {
      if (!in_test[static_cast<std::size_t>(i)]) train_idx.push_back(i);
    }
    const auto& test_idx = folds[static_cast<std::size_t>(k)];
    if (train_idx.empty() || test_idx.empty()) {
      throw std::invalid_argument("prepare_config: empty fold");
    }

    const Eigen::MatrixXd x_train = x(train_idx, Eigen::all);
    const Eigen::MatrixXd x_test = x(test_idx, Eigen::all);
    Eigen::MatrixXd k_train = kernel.cov(x_train, x_train);
    k_train.diagonal().array() += theta.noise_variance;
    const CholFactor kf = CholFactor::compute(k_train);
    const Eigen::MatrixXd k_star = kernel.cov(x_test, x_train);
    const Eigen::MatrixXd c = kf.solve(k_star.transpose()).transpose();

    out.alpha[k] = c.colwise().squaredNorm().maxCoeff();

    PreparedFold& fold = out.folds[static_cast<std::size_t>(k)];
    const Eigen::VectorXd pred =
        (c * (y(train_idx).array() - prior_mean).matrix()).array() + prior_mean;
    fold.clean_error = pred - y(test_idx);
    if (with_noise_model) {
      const MOptimum opt = optimize_M(c, opts);
      const CholFactor mf = CholFactor::compute(opt.M, 0.0);
      fold.noise_l = mf.matrix_l();
      fold.delta = delta_bound(c, mf, d);
    }
  }
  out.delta_u = sensitivity_bound(out.alpha, d);
  return out;
}

/// Cross-validated SSE with per-point errors clipped to +-4d; when draws > 0
/// each fold's contribution is averaged over that many DP-noise draws.
inline double sse_for(const PreparedConfig& cfg, double d, double epsilon, double delta,
                      int noise_draws, SplitRng& rng) {
  double sse = 0.0;
  for (std::size_t k = 0; k < cfg.folds.size(); ++k) {
    const PreparedFold& fold = cfg.folds[k];
    if (noise_draws <= 0) {
      sse += clipped_sse(fold.clean_error, d);
      continue;
    }
    if (fold.noise_l.size() == 0) {
      throw std::logic_error("sse_for: config prepared without noise model");
    }
    const double scale =
        std::isinf(epsilon) ? 0.0 : c_delta(delta) * fold.delta / epsilon;
    SplitRng fold_rng = rng.split(k + 1);
    double acc = 0.0;
    for (int t = 0; t < noise_draws; ++t) {
      const Eigen::VectorXd z = fold_rng.normal_vector(fold.clean_error.size());
      acc += clipped_sse(fold.clean_error + scale * (fold.noise_l * z), d);
    }
    sse += acc / noise_draws;
  }
  return sse;
}

}  // namespace detail

struct SseOptions {
  int kappa = 5;
  int noise_draws = 100;
  double prior_mean = 0.0;
  OptimizeOptions optimize;
};

/// Cross-validated sum-of-squared-errors utility for one configuration,
/// together with the per-fold sensitivities alpha_k = max_j |c_jk|^2.
/// Predictions for each held-out fold come from a cloaking matrix built on
/// the remaining folds; errors are clipped to +-4d before squaring, and with
/// noise_draws > 0 the SSE includes (averages over) calibrated DP noise.
inline std::pair<double, Eigen::VectorXd> cross_val_sse(
    const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const HyperConfig& theta,
    const PrivacySpec& privacy, const SseOptions& options,
    const std::vector<std::vector<int>>& folds, SplitRng& rng) {
  privacy.validate();
  const detail::PreparedConfig cfg =
      detail::prepare_config(x, y, theta, folds, privacy.data_sensitivity,
                             options.prior_mean, options.noise_draws > 0, options.optimize);
  SplitRng noise_rng = rng.split(0x6e6f697365ULL);
  const double sse = detail::sse_for(cfg, privacy.data_sensitivity, privacy.epsilon,
                                     privacy.delta, options.noise_draws, noise_rng);
  if (!std::isfinite(sse)) throw NumericalError("cross_val_sse: non-finite SSE");
  return {sse, cfg.alpha};
}

inline std::pair<double, Eigen::VectorXd> cross_val_sse(
    const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const HyperConfig& theta,
    const PrivacySpec& privacy, const SseOptions& options, SplitRng& rng) {
  SplitRng fold_rng = rng.split(0x666f6c6473ULL);
  const auto folds = make_folds(static_cast<int>(x.rows()), options.kappa, fold_rng);
  return cross_val_sse(x, y, theta, privacy, options, folds, rng);
}

/// Exponential-mechanism selection probabilities over non-excluded configs:
/// p_i proportional to exp(eps * (-sse_i) / (2 * Delta_u)) with Delta_u the
/// largest sensitivity bound among the non-excluded configs, normalized via
/// log-sum-exp. Excluded configs get probability zero.
inline Eigen::VectorXd exp_mechanism_probabilities(const Eigen::VectorXd& sse,
                                                   const Eigen::VectorXd& delta_u,
                                                   const std::vector<bool>& excluded,
                                                   double epsilon_select,
                                                   double* global_delta_u = nullptr) {
  const Eigen::Index n = sse.size();
  if (delta_u.size() != n || static_cast<Eigen::Index>(excluded.size()) != n) {
    throw std::invalid_argument("exp_mechanism_probabilities: size mismatch");
  }
  double du = 0.0;
  bool any = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!excluded[static_cast<std::size_t>(i)]) {
      du = std::max(du, delta_u[i]);
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("exp_mechanism_probabilities: all configs excluded");
  if (global_delta_u != nullptr) *global_delta_u = du;

  if (std::isinf(epsilon_select)) {
    // the mechanism degenerates to the argmax of the utility
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!excluded[static_cast<std::size_t>(i)]) best = std::min(best, sse[i]);
    }
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    double ties = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!excluded[static_cast<std::size_t>(i)] && sse[i] == best) {
        p[i] = 1.0;
        ties += 1.0;
      }
    }
    return p / ties;
  }

  Eigen::VectorXd logit = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  double max_logit = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (excluded[static_cast<std::size_t>(i)]) continue;
    logit[i] = epsilon_select * (-sse[i]) / (2.0 * du);
    max_logit = std::max(max_logit, logit[i]);
  }
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  double z = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (excluded[static_cast<std::size_t>(i)]) continue;
    p[i] = std::exp(logit[i] - max_logit);
    z += p[i];
  }
  return p / z;
}

/// Inverse-CDF draw from a probability vector.
inline int sample_index(const Eigen::VectorXd& probabilities, SplitRng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  int last = 0;
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] <= 0.0) continue;
    acc += probabilities[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;
}

/// Sensitivity-threshold exclusion: configs whose own bound exceeds
/// multiplier times the grid median are dropped before the mechanism. Legal
/// because the bounds depend only on inputs and d.
inline std::vector<bool> exclude_by_threshold(const Eigen::VectorXd& delta_u,
                                              double multiplier,
                                              double* threshold_out = nullptr) {
  std::vector<double> v(delta_u.data(), delta_u.data() + delta_u.size());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const double median = (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  const double threshold = multiplier * median;
  if (threshold_out != nullptr) *threshold_out = threshold;
  std::vector<bool> excluded(n);
  for (std::size_t i = 0; i < n; ++i) excluded[i] = delta_u[static_cast<Eigen::Index>(i)] > threshold;
  return excluded;
}

inline double expected_rmse(const Eigen::VectorXd& probabilities,
                            const Eigen::VectorXd& rmse_per_config) {
  if (probabilities.size() != rmse_per_config.size()) {
    throw std::invalid_argument("expected_rmse: size mismatch");
  }
  return probabilities.dot(rmse_per_config);
}

struct ConfigGrid {
  std::vector<double> lengthscales;
  std::vector<double> noise_variances;
  std::vector<double> kernel_variances;

  [[nodiscard]] std::vector<HyperConfig> expand() const {
    std::vector<HyperConfig> configs;
    for (double ls : lengthscales) {
      for (double nv : noise_variances) {
        for (double kv : kernel_variances) {
          HyperConfig t;
          t.lengthscales = Eigen::VectorXd::Constant(1, ls);
          t.noise_variance = nv;
          t.kernel_variance = kv;
          configs.push_back(t);
        }
      }
    }
    return configs;
  }
};

struct SelectionEntry {
  HyperConfig theta;
  double sse = 0.0;
  Eigen::VectorXd alpha;
  double delta_u = 0.0;
  double probability = 0.0;
  bool excluded = false;
  double rmse = 0.0;
};

struct SelectionResult {
  std::vector<SelectionEntry> entries;
  double global_delta_u = 0.0;
  double threshold = 0.0;
  int chosen = -1;
  double expected_rmse = 0.0;
  double mean_rmse = 0.0;
};

struct SelectHypersOptions {
  int kappa = 5;
  double epsilon_select = 1.0;
  int noise_draws = 100;
  double threshold_multiplier = 2.0;
  double eval_fraction = 0.5;   // held-out half used for per-config RMSE
  int rmse_noise_draws = 10;
  double prior_mean = 0.0;
  OptimizeOptions optimize;
};

/// Full selection pipeline: split the data into a selection half and an
/// evaluation half, score every grid configuration by DP-noise-inclusive
/// cross-validated SSE on the selection half, exclude high-sensitivity
/// configs, run the exponential mechanism, and report per-config RMSEs on
/// the evaluation half together with the probability-weighted expectation.
inline SelectionResult select_hypers(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     const ConfigGrid& grid, const PrivacySpec& privacy,
                                     const SelectHypersOptions& options, SplitRng& rng) {
  privacy.validate();
  const std::vector<HyperConfig> configs = grid.expand();
  if (configs.empty()) throw std::invalid_argument("select_hypers: empty grid");

  const int n = static_cast<int>(x.rows());
  SplitRng split_rng = rng.split(0x73706c6974ULL);
  const std::vector<int> perm = split_rng.permutation(n);
  const int n_select = std::max(
      options.kappa, static_cast<int>(std::lround((1.0 - options.eval_fraction) * n)));
  std::vector<int> sel_idx(perm.begin(), perm.begin() + n_select);
  std::vector<int> eval_idx(perm.begin() + n_select, perm.end());
  if (eval_idx.empty()) throw std::invalid_argument("select_hypers: evaluation half empty");

  const Eigen::MatrixXd x_sel = x(sel_idx, Eigen::all);
  const Eigen::VectorXd y_sel = y(sel_idx);
  const Eigen::MatrixXd x_eval = x(eval_idx, Eigen::all);
  const Eigen::VectorXd y_eval = y(eval_idx);

  SplitRng fold_rng = rng.split(0x666f6c6473ULL);
  const auto folds = make_folds(n_select, options.kappa, fold_rng);

  SelectionResult out;
  out.entries.resize(configs.size());
  Eigen::VectorXd sse(configs.size()), delta_u(configs.size()), rmse(configs.size());

  for (std::size_t i = 0; i < configs.size(); ++i) {
    const detail::PreparedConfig cfg = detail::prepare_config(
        x_sel, y_sel, configs[i], folds, privacy.data_sensitivity, options.prior_mean,
        options.noise_draws > 0, options.optimize);
    SplitRng noise_rng = rng.split(0x737365ULL + i);
    sse[static_cast<Eigen::Index>(i)] =
        detail::sse_for(cfg, privacy.data_sensitivity, privacy.epsilon, privacy.delta,
                        options.noise_draws, noise_rng);
    delta_u[static_cast<Eigen::Index>(i)] = cfg.delta_u;
    out.entries[i].theta = configs[i];
    out.entries[i].sse = sse[static_cast<Eigen::Index>(i)];
    out.entries[i].alpha = cfg.alpha;
    out.entries[i].delta_u = cfg.delta_u;

    // RMSE this configuration would achieve: fit on the selection half,
    // predict the evaluation half, average over DP noise draws.
    const Kernel kernel = Kernel::eq(configs[i]);
    Eigen::MatrixXd k_train = kernel.cov(x_sel, x_sel);
    k_train.diagonal().array() += configs[i].noise_variance;
    const CholFactor kf = CholFactor::compute(k_train);
    const Eigen::MatrixXd k_star = kernel.cov(x_eval, x_sel);
    const Eigen::MatrixXd c = kf.solve(k_star.transpose()).transpose();
    const Eigen::VectorXd pred =
        (c * (y_sel.array() - options.prior_mean).matrix()).array() + options.prior_mean;
    const int draws = std::max(options.rmse_noise_draws, 1);
    CloakingResult cloak = make_cloaking(c, privacy, options.optimize);
    SplitRng rmse_rng = rng.split(0x726d7365ULL + i);
    double acc = 0.0;
    for (int t = 0; t < draws; ++t) {
      const Eigen::VectorXd noisy = pred + dp_noise_sample(cloak, rmse_rng);
      acc += std::sqrt((noisy - y_eval).squaredNorm() / static_cast<double>(y_eval.size()));
    }
    rmse[static_cast<Eigen::Index>(i)] = acc / draws;
    out.entries[i].rmse = rmse[static_cast<Eigen::Index>(i)];
  }

  const std::vector<bool> excluded =
      exclude_by_threshold(delta_u, options.threshold_multiplier, &out.threshold);
  const Eigen::VectorXd p = exp_mechanism_probabilities(
      sse, delta_u, excluded, options.epsilon_select, &out.global_delta_u);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    out.entries[i].probability = p[static_cast<Eigen::Index>(i)];
    out.entries[i].excluded = excluded[i];
  }
  SplitRng choice_rng = rng.split(0x63686f696365ULL);
  out.chosen = sample_index(p, choice_rng);
  out.expected_rmse = expected_rmse(p, rmse);
  out.mean_rmse = rmse.mean();
  return out;
}

struct SweepPoint {
  double epsilon = 0.0;
  std::map<double, double> lengthscale_probability;
  double mean_log_lengthscale = 0.0;
};

/// For each epsilon, recompute DP-noise-inclusive SSEs and selection
/// probabilities (the same budget drives both the simulated regression noise
/// and the mechanism), then marginalize over the non-lengthscale parameters.
inline std::vector<SweepPoint> epsilon_sweep(const Eigen::MatrixXd& x,
                                             const Eigen::VectorXd& y,
                                             const ConfigGrid& grid, double d, double delta,
                                             const std::vector<double>& epsilon_list,
                                             const SseOptions& options,
                                             double threshold_multiplier, SplitRng& rng) {
  const std::vector<HyperConfig> configs = grid.expand();
  if (configs.empty()) throw std::invalid_argument("epsilon_sweep: empty grid");
  SplitRng fold_rng = rng.split(0x666f6c6473ULL);
  const auto folds = make_folds(static_cast<int>(x.rows()), options.kappa, fold_rng);

  std::vector<detail::PreparedConfig> prepared;
  prepared.reserve(configs.size());
  Eigen::VectorXd delta_u(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    prepared.push_back(detail::prepare_config(x, y, configs[i], folds, d,
                                              options.prior_mean, options.noise_draws > 0,
                                              options.optimize));
    delta_u[static_cast<Eigen::Index>(i)] = prepared.back().delta_u;
  }
  const std::vector<bool> excluded = exclude_by_threshold(delta_u, threshold_multiplier);

  std::vector<SweepPoint> out;
  for (std::size_t e = 0; e < epsilon_list.size(); ++e) {
    const double eps = epsilon_list[e];
    Eigen::VectorXd sse(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
      SplitRng noise_rng = rng.split(0x1000 * (e + 1) + i);
      sse[static_cast<Eigen::Index>(i)] =
          detail::sse_for(prepared[i], d, eps, delta, options.noise_draws, noise_rng);
    }
    const Eigen::VectorXd p = exp_mechanism_probabilities(sse, delta_u, excluded, eps);
    SweepPoint point;
    point.epsilon = eps;
    double mean_log = 0.0;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      const double ls = configs[i].lengthscales[0];
      point.lengthscale_probability[ls] += p[static_cast<Eigen::Index>(i)];
      mean_log += p[static_cast<Eigen::Index>(i)] * std::log(ls);
    }
    point.mean_log_lengthscale = mean_log;
    out.push_back(std::move(point));
  }
  return out;
}

}  // namespace dpgp

#endif  // DPGP_HYPERSELECT_HPP
