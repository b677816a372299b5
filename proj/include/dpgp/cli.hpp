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

#ifndef DPGP_CLI_HPP
#define DPGP_CLI_HPP

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "dpgp/dpgp.hpp"

namespace dpgp::cli {

using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

inline json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json mat_to_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

struct Dataset {
  TabularDataset tab;
  ImageDataset train_images;
  ImageDataset test_images;
  bool is_image = false;
};

inline void require_file(const std::string& key_desc, const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw std::invalid_argument(key_desc + ": file not found: " + path);
  }
}

inline Dataset load_dataset(const json& spec, SplitRng& rng) {
  Dataset out;
  const std::string type = spec.at("type").get<std::string>();
  if (type == "csv") {
    const std::string path = spec.at("path").get<std::string>();
    require_file("dataset.path", path);
    out.tab = load_csv(path, spec.at("output_column").get<std::string>());
  } else if (type == "kung_like") {
    out.tab = gen_kung_like(spec.value("n", 140), rng, spec.value("with_weight", false));
  } else if (type == "stripes") {
    out.tab = gen_stripes(spec.value("n", 200), spec.value("flip_prob", 0.1), rng);
  } else if (type == "mnist") {
    const std::string images = spec.at("images").get<std::string>();
    const std::string labels = spec.at("labels").get<std::string>();
    require_file("dataset.images", images);
    require_file("dataset.labels", labels);
    std::tie(out.train_images, out.test_images) = load_mnist_binary(
        images, labels, spec.value("n_train", 256), spec.value("n_test", 100), rng);
    out.is_image = true;
  } else {
    throw std::invalid_argument("dataset.type must be csv, kung_like, stripes, or mnist");
  }
  if (!out.is_image && spec.contains("balance")) {
    out.tab = stratified_sample(out.tab, spec.at("balance").get<int>(), rng);
  }
  return out;
}

/// Map a {0,1}-coded label column onto {-1,+1}; +-1 passes through.
inline Eigen::VectorXd binary_labels(const Eigen::VectorXd& y) {
  Eigen::VectorXd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] == 1.0) {
      out[i] = 1.0;
    } else if (y[i] == -1.0 || y[i] == 0.0) {
      out[i] = -1.0;
    } else {
      throw std::invalid_argument("labels must be coded {-1,+1} or {0,1}");
    }
  }
  return out;
}

inline HyperConfig hyper_from_json(const json& cfg) {
  HyperConfig theta;
  const json& kernel = cfg.at("kernel");
  theta.kernel_variance = kernel.value("variance", 1.0);
  if (kernel.contains("lengthscales")) {
    const auto ls = kernel.at("lengthscales").get<std::vector<double>>();
    theta.lengthscales = Eigen::Map<const Eigen::VectorXd>(ls.data(),
                                                           static_cast<Eigen::Index>(ls.size()));
  } else {
    theta.lengthscales = Eigen::VectorXd::Constant(1, kernel.value("lengthscale", 1.0));
  }
  theta.noise_variance = cfg.value("noise_variance", 1.0);
  return theta;
}

inline PrivacySpec privacy_from_json(const json& cfg, double default_sensitivity) {
  PrivacySpec p;
  const json& priv = cfg.at("privacy");
  p.epsilon = priv.value("epsilon", 1.0);
  p.delta = priv.value("delta", 0.01);
  p.data_sensitivity = priv.value("sensitivity", default_sensitivity);
  return p;
}

/// Test inputs: an explicit CSV of feature columns, a per-dimension grid
/// over the training bounding box, or the training inputs themselves.
inline Eigen::MatrixXd test_inputs_from_json(const json& cfg, const Eigen::MatrixXd& x) {
  if (!cfg.contains("test")) {
    return x;
  }
  const json& t = cfg.at("test");
  if (t.contains("csv")) {
    const std::string path = t.at("csv").get<std::string>();
    require_file("test.csv", path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string field;
      std::vector<double> row;
      while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
      rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("test.csv: no rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows[i].size(); ++j) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
    }
    if (m.cols() != x.cols()) throw std::invalid_argument("test.csv: dimension mismatch");
    return m;
  }
  if (t.contains("train") && t.at("train").get<bool>()) {
    return x;
  }
  const int per_dim = t.value("grid", 50);
  const Eigen::Index dim = x.cols();
  if (dim > 2) {
    throw std::invalid_argument("test.grid supports at most 2 input dimensions");
  }
  const Eigen::RowVectorXd lo = x.colwise().minCoeff();
  const Eigen::RowVectorXd hi = x.colwise().maxCoeff();
  if (dim == 1) {
    Eigen::MatrixXd m(per_dim, 1);
    m.col(0) = Eigen::VectorXd::LinSpaced(per_dim, lo[0], hi[0]);
    return m;
  }
  Eigen::MatrixXd m(per_dim * per_dim, 2);
  const Eigen::VectorXd g0 = Eigen::VectorXd::LinSpaced(per_dim, lo[0], hi[0]);
  const Eigen::VectorXd g1 = Eigen::VectorXd::LinSpaced(per_dim, lo[1], hi[1]);
  Eigen::Index r = 0;
  for (int i = 0; i < per_dim; ++i) {
    for (int j = 0; j < per_dim; ++j) {
      m(r, 0) = g0[i];
      m(r, 1) = g1[j];
      ++r;
    }
  }
  return m;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << text;
}

inline json optimizer_diag(const CloakingResult& c) {
  json d;
  d["max_quad"] = c.max_quad;
  d["grad_norm"] = c.grad_norm;
  d["converged"] = c.converged;
  return d;
}

inline int run_regress(const json& cfg) {
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  SplitRng rng(seed);
  SplitRng data_rng = rng.split(0x64617461ULL);
  const Dataset data = load_dataset(cfg.at("dataset"), data_rng);
  if (data.is_image) throw std::invalid_argument("regress: image datasets not supported");
  const bool privacy_mode = cfg.value("privacy_mode", true);

  RegressionTask task;
  task.X = data.tab.X;
  task.y = data.tab.y;
  task.X_star = test_inputs_from_json(cfg, data.tab.X);
  task.theta = hyper_from_json(cfg);
  task.privacy = privacy_from_json(cfg, 1.0);
  task.prior_mean = cfg.value("prior_mean", 0.0);

  const std::string family = cfg.at("kernel").value("family", "eq");
  if (cfg.contains("sparse")) {
    task.mode = RegressionMode::kSparse;
    task.inducing_count = cfg.at("sparse").get<int>();
    if (family != "eq") {
      throw std::invalid_argument("regress: sparse mode uses the eq kernel");
    }
  } else if (family == "gibbs") {
    task.mode = RegressionMode::kGibbs;
    const json& kernel = cfg.at("kernel");
    task.lengthscale_params.n_target = kernel.value("n", 5.0);
    task.lengthscale_params.max_lengthscale = kernel.value("m", 100.0);
    task.lengthscale_params.kde_bandwidth = kernel.value("kde_bandwidth", 0.0);
    task.lengthscale_params.neighbourhood_radius = kernel.value("neighbourhood_radius", -1.0);
  } else if (family != "eq") {
    throw std::invalid_argument("kernel.family must be eq or gibbs");
  }

  SplitRng task_rng = rng.split(0x7461736bULL);
  const DPPrediction pred = dp_regress(task, task_rng);

  json out;
  out["command"] = "regress";
  out["seed"] = seed;
  out["config"] = cfg;
  out["epsilon"] = task.privacy.epsilon;
  out["delta_dp"] = task.privacy.delta;
  out["sensitivity"] = task.privacy.data_sensitivity;
  out["delta"] = pred.cloaking.Delta;
  out["noise_scale"] = pred.cloaking.noise_scale;
  out["optimizer"] = optimizer_diag(pred.cloaking);
  out["test_inputs"] = mat_to_json(task.X_star);
  out["dp_mean"] = vec_to_json(pred.dp_mean);
  out["gp_variance"] = vec_to_json(pred.gp_variance);
  out["dp_noise_std"] = vec_to_json(pred.dp_noise_std);
  if (task.mode == RegressionMode::kSparse) {
    out["inducing_inputs"] = mat_to_json(pred.inducing_inputs);
  }
  if (!privacy_mode) {
    out["clean_mean"] = vec_to_json(pred.clean_mean);
  }
  write_text(cfg.value("out", "results.json"), out.dump(2) + "\n");

  if (cfg.contains("plotdata")) {
    std::ostringstream csv;
    csv << std::setprecision(17);
    for (Eigen::Index d = 0; d < task.X_star.cols(); ++d) csv << "x" << d << ",";
    csv << "dp_mean,gp_variance,dp_noise_std";
    if (!privacy_mode) csv << ",clean_mean";
    csv << "\n";
    for (Eigen::Index i = 0; i < task.X_star.rows(); ++i) {
      for (Eigen::Index d = 0; d < task.X_star.cols(); ++d) csv << task.X_star(i, d) << ",";
      csv << pred.dp_mean[i] << "," << pred.gp_variance[i] << "," << pred.dp_noise_std[i];
      if (!privacy_mode) csv << "," << pred.clean_mean[i];
      csv << "\n";
    }
    write_text(cfg.at("plotdata").get<std::string>(), csv.str());
  }
  return kExitOk;
}

inline int run_classify(const json& cfg) {
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  SplitRng rng(seed);
  SplitRng data_rng = rng.split(0x64617461ULL);
  const Dataset data = load_dataset(cfg.at("dataset"), data_rng);

  ClassifyTask task;
  if (data.is_image) {
    task.X = data.train_images.images;
    task.y = data.train_images.labels;
    task.X_star = data.test_images.images;
  } else {
    task.X = data.tab.X;
    task.y = binary_labels(data.tab.y);
    task.X_star = test_inputs_from_json(cfg, data.tab.X);
  }
  task.theta = hyper_from_json(cfg);
  task.theta.noise_variance = 0.0;  // no Gaussian likelihood in classification
  task.privacy = privacy_from_json(cfg, 2.0);
  task.newton_iterations = cfg.value("newton_iterations", 1);
  if (cfg.contains("sparse")) task.inducing_count = cfg.at("sparse").get<int>();

  SplitRng task_rng = rng.split(0x7461736bULL);
  const ClassifyOutput res = dp_classify(task, task_rng);

  json out;
  out["command"] = "classify";
  out["seed"] = seed;
  out["config"] = cfg;
  out["epsilon"] = task.privacy.epsilon;
  out["delta_dp"] = task.privacy.delta;
  out["sensitivity"] = task.privacy.data_sensitivity;
  out["delta"] = res.fit.cloaking.Delta;
  out["noise_scale"] = res.fit.cloaking.noise_scale;
  out["optimizer"] = optimizer_diag(res.fit.cloaking);
  out["latent_mean"] = vec_to_json(res.latent_mean);
  out["latent_var"] = vec_to_json(res.latent_var);
  out["class_prob"] = vec_to_json(res.class_prob);
  if (task.inducing_count > 0) out["inducing_inputs"] = mat_to_json(res.fit.inducing.Z);
  write_text(cfg.value("out", "results.json"), out.dump(2) + "\n");

  if (cfg.contains("plotdata") && !data.is_image) {
    std::ostringstream csv;
    csv << std::setprecision(17);
    for (Eigen::Index d = 0; d < task.X_star.cols(); ++d) csv << "x" << d << ",";
    csv << "latent_mean,latent_var,class_prob\n";
    for (Eigen::Index i = 0; i < task.X_star.rows(); ++i) {
      for (Eigen::Index d = 0; d < task.X_star.cols(); ++d) csv << task.X_star(i, d) << ",";
      csv << res.latent_mean[i] << "," << res.latent_var[i] << "," << res.class_prob[i] << "\n";
    }
    write_text(cfg.at("plotdata").get<std::string>(), csv.str());
  }
  return kExitOk;
}

inline int run_select_hypers(const json& cfg) {
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  SplitRng rng(seed);
  SplitRng data_rng = rng.split(0x64617461ULL);
  const Dataset data = load_dataset(cfg.at("dataset"), data_rng);
  if (data.is_image) throw std::invalid_argument("select-hypers: image datasets not supported");

  const json& grid_cfg = cfg.at("grid");
  ConfigGrid grid;
  grid.lengthscales = grid_cfg.at("lengthscales").get<std::vector<double>>();
  grid.noise_variances = grid_cfg.at("noise_variances").get<std::vector<double>>();
  grid.kernel_variances = grid_cfg.at("kernel_variances").get<std::vector<double>>();

  SelectHypersOptions options;
  options.kappa = cfg.value("folds", 5);
  options.epsilon_select = cfg.value("epsilon_select", 1.0);
  options.noise_draws = cfg.value("noise_draws", 100);
  options.threshold_multiplier = cfg.value("threshold_multiplier", 2.0);
  options.eval_fraction = cfg.value("eval_fraction", 0.5);
  options.rmse_noise_draws = cfg.value("rmse_noise_draws", 10);
  options.prior_mean = cfg.value("prior_mean", 0.0);

  const PrivacySpec privacy = privacy_from_json(cfg, 1.0);
  SplitRng task_rng = rng.split(0x7461736bULL);
  const SelectionResult result =
      select_hypers(data.tab.X, data.tab.y, grid, privacy, options, task_rng);

  std::ostringstream csv;
  csv << std::setprecision(17);
  csv << "lengthscale,noise_variance,kernel_variance,probability,rmse,sse,delta_u,excluded\n";
  for (const auto& e : result.entries) {
    csv << e.theta.lengthscales[0] << "," << e.theta.noise_variance << ","
        << e.theta.kernel_variance << "," << e.probability << "," << e.rmse << "," << e.sse
        << "," << e.delta_u << "," << (e.excluded ? 1 : 0) << "\n";
  }
  const std::string table_path = cfg.value("table", "table.csv");
  write_text(table_path, csv.str());

  const auto& chosen = result.entries[static_cast<std::size_t>(result.chosen)];
  json out;
  out["command"] = "select-hypers";
  out["seed"] = seed;
  out["config"] = cfg;
  out["epsilon_select"] = options.epsilon_select;
  out["n_configs"] = result.entries.size();
  out["chosen_index"] = result.chosen;
  out["chosen"] = {{"lengthscale", chosen.theta.lengthscales[0]},
                   {"noise_variance", chosen.theta.noise_variance},
                   {"kernel_variance", chosen.theta.kernel_variance},
                   {"probability", chosen.probability}};
  out["expected_rmse"] = result.expected_rmse;
  out["mean_rmse"] = result.mean_rmse;
  out["global_delta_u"] = result.global_delta_u;
  out["sensitivity_threshold"] = result.threshold;
  out["table"] = table_path;
  write_text(cfg.value("out", "results.json"), out.dump(2) + "\n");
  return kExitOk;
}

inline int run_bench(const json& cfg) {
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  SplitRng rng(seed);
  SplitRng data_rng = rng.split(0x64617461ULL);
  const Dataset data = load_dataset(cfg.at("dataset"), data_rng);
  const std::string kind = cfg.value("bench", "rmse_cv");

  std::ostringstream csv;
  csv << std::setprecision(17);
  if (kind == "rmse_cv") {
    if (data.is_image) throw std::invalid_argument("bench rmse_cv: needs tabular data");
    RegressionTask base;
    base.X = data.tab.X;
    base.y = data.tab.y;
    base.X_star = data.tab.X.topRows(1);
    base.theta = hyper_from_json(cfg);
    base.privacy = privacy_from_json(cfg, 1.0);
    base.prior_mean = cfg.value("prior_mean", 0.0);
    const int folds = cfg.value("folds", 14);
    const int draws = cfg.value("noise_draws", 25);
    const auto methods = cfg.value("methods", std::vector<std::string>{"standard", "sparse"});

    csv << "method,folds,noise_draws,epsilon,delta_dp,sensitivity,mean_rmse,std_rmse\n";
    int stream = 0;
    for (const auto& method : methods) {
      RegressionTask task = base;
      if (method == "sparse") {
        task.mode = RegressionMode::kSparse;
        task.inducing_count = cfg.value("sparse", 5);
      } else if (method == "gibbs") {
        task.mode = RegressionMode::kGibbs;
        const json& kernel = cfg.at("kernel");
        task.lengthscale_params.n_target = kernel.value("n", 5.0);
        task.lengthscale_params.max_lengthscale = kernel.value("m", 100.0);
        task.lengthscale_params.kde_bandwidth = kernel.value("kde_bandwidth", 0.0);
        task.lengthscale_params.neighbourhood_radius =
            kernel.value("neighbourhood_radius", -1.0);
      } else if (method != "standard") {
        throw std::invalid_argument("bench: unknown method " + method);
      }
      SplitRng method_rng = rng.split(0x626e6368ULL + static_cast<std::uint64_t>(stream++));
      const CvSummary summary = rmse_cv(task, folds, draws, method_rng);
      csv << method << "," << folds << "," << draws << "," << task.privacy.epsilon << ","
          << task.privacy.delta << "," << task.privacy.data_sensitivity << ","
          << summary.mean_rmse << "," << summary.std_rmse << "\n";
    }
  } else if (kind == "inducing_sweep") {
    Eigen::MatrixXd x_train, x_test;
    Eigen::VectorXd y_train, y_test;
    if (data.is_image) {
      x_train = data.train_images.images;
      y_train = data.train_images.labels;
      x_test = data.test_images.images;
      y_test = data.test_images.labels;
    } else {
      // temporal split: first part train, remainder test
      const Eigen::Index n = data.tab.X.rows();
      const Eigen::Index n_train = cfg.value("n_train", static_cast<int>(2 * n / 3));
      x_train = data.tab.X.topRows(n_train);
      y_train = binary_labels(data.tab.y.head(n_train));
      x_test = data.tab.X.bottomRows(n - n_train);
      y_test = binary_labels(data.tab.y.tail(n - n_train));
    }
    std::vector<int> counts;
    if (cfg.contains("counts")) {
      counts = cfg.at("counts").get<std::vector<int>>();
    } else {
      // exponentially spaced counts, 4..200 by default
      const int num = cfg.value("count_steps", 16);
      const double lo = cfg.value("count_min", 4), hi = cfg.value("count_max", 200);
      for (int i = 0; i < num; ++i) {
        const double t = num == 1 ? 0.0 : static_cast<double>(i) / (num - 1);
        const int c = static_cast<int>(std::lround(lo * std::pow(hi / lo, t)));
        if (counts.empty() || counts.back() != c) counts.push_back(c);
      }
    }
    const auto lengthscales = cfg.at("lengthscales").get<std::vector<double>>();
    const bool with_dp = cfg.value("dp", true);
    const bool with_clean = cfg.value("non_dp", true);
    const int draws = cfg.value("draws", 25);
    const PrivacySpec privacy = privacy_from_json(cfg, 2.0);

    csv << "inducing_count,lengthscale,dp,accuracy\n";
    int stream = 0;
    for (const int m_count : counts) {
      for (const double ls : lengthscales) {
        ClassifyTask task;
        task.X = x_train;
        task.y = y_train;
        task.X_star = x_test;
        task.theta.lengthscales = Eigen::VectorXd::Constant(1, ls);
        task.theta.kernel_variance = cfg.at("kernel").value("variance", 1.0);
        task.privacy = privacy;
        task.inducing_count = std::min<int>(m_count, static_cast<int>(x_train.rows()));
        auto accuracy = [&](const Eigen::VectorXd& prob) {
          double hits = 0;
          for (Eigen::Index i = 0; i < y_test.size(); ++i) {
            const double pred = prob[i] >= 0.5 ? 1.0 : -1.0;
            if (pred == y_test[i]) hits += 1.0;
          }
          return hits / static_cast<double>(y_test.size());
        };
        if (with_clean) {
          ClassifyTask clean = task;
          clean.privacy.epsilon = std::numeric_limits<double>::infinity();
          SplitRng run_rng = rng.split(0xace0ULL + static_cast<std::uint64_t>(stream++));
          const ClassifyOutput res = dp_classify(clean, run_rng);
          csv << m_count << "," << ls << ",0," << accuracy(res.class_prob) << "\n";
        }
        if (with_dp) {
          SplitRng run_rng = rng.split(0xace0ULL + static_cast<std::uint64_t>(stream++));
          const ClassifyOutput base = dp_classify(task, run_rng);
          double acc = 0.0;
          // single update from f = 0: the deterministic part is exactly C y
          const Eigen::VectorXd clean_part = base.fit.cloaking.C * task.y;
          for (int t = 0; t < draws; ++t) {
            SplitRng draw_rng = run_rng.split(static_cast<std::uint64_t>(t) + 77);
            Eigen::VectorXd f = clean_part + dp_noise_sample(base.fit.cloaking, draw_rng);
            ClassifyTask probe = task;
            LaplaceFit fit = base.fit;
            fit.state = LaplaceState::at(f);
            auto [mean, var] = predict_latent(task.X_star, probe, fit);
            acc += accuracy(predict_class_prob(mean));
          }
          csv << m_count << "," << ls << ",1," << acc / draws << "\n";
        }
      }
    }
  } else if (kind == "epsilon_sweep") {
    if (data.is_image) throw std::invalid_argument("bench epsilon_sweep: needs tabular data");
    const json& grid_cfg = cfg.at("grid");
    ConfigGrid grid;
    grid.lengthscales = grid_cfg.at("lengthscales").get<std::vector<double>>();
    grid.noise_variances = grid_cfg.at("noise_variances").get<std::vector<double>>();
    grid.kernel_variances = grid_cfg.at("kernel_variances").get<std::vector<double>>();
    const auto eps_list = cfg.at("epsilons").get<std::vector<double>>();
    SseOptions options;
    options.kappa = cfg.value("folds", 5);
    options.noise_draws = cfg.value("noise_draws", 100);
    options.prior_mean = cfg.value("prior_mean", 0.0);
    const PrivacySpec privacy = privacy_from_json(cfg, 1.0);
    SplitRng sweep_rng = rng.split(0x73776565ULL);
    const auto sweep = epsilon_sweep(data.tab.X, data.tab.y, grid, privacy.data_sensitivity,
                                     privacy.delta, eps_list, options,
                                     cfg.value("threshold_multiplier", 2.0), sweep_rng);
    csv << "epsilon,lengthscale,probability,mean_log_lengthscale\n";
    for (const auto& point : sweep) {
      for (const auto& [ls, p] : point.lengthscale_probability) {
        csv << point.epsilon << "," << ls << "," << p << "," << point.mean_log_lengthscale
            << "\n";
      }
    }
  } else {
    throw std::invalid_argument("bench must be rmse_cv, inducing_sweep, or epsilon_sweep");
  }
  write_text(cfg.value("out", "bench.csv"), csv.str());

  json out;
  out["command"] = "bench";
  out["bench"] = kind;
  out["seed"] = seed;
  out["config"] = cfg;
  out["table"] = cfg.value("out", "bench.csv");
  write_text(cfg.value("summary", "results.json"), out.dump(2) + "\n");
  return kExitOk;
}

inline void validate_common(const json& cfg) {
  if (!cfg.contains("command")) throw std::invalid_argument("config: missing command");
  const bool privacy_mode = cfg.value("privacy_mode", true);
  if (privacy_mode && !cfg.contains("seed")) {
    throw std::invalid_argument("config: seed is mandatory in privacy mode");
  }
  if (!cfg.contains("seed")) {
    throw std::invalid_argument("config: seed is required for reproducible runs");
  }
  if (!cfg.contains("dataset")) throw std::invalid_argument("config: missing dataset");
}

/// Execute one batch experiment described by a JSON config. Artifacts embed
/// the resolved config and seed; identical configs and seeds produce
/// byte-identical outputs.
inline int run(const json& cfg) {
  try {
    validate_common(cfg);
    const std::string command = cfg.at("command").get<std::string>();
    if (command == "regress") return run_regress(cfg);
    if (command == "classify") return run_classify(cfg);
    if (command == "select-hypers") return run_select_hypers(cfg);
    if (command == "bench") return run_bench(cfg);
    throw std::invalid_argument("config: unknown command " + command);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace dpgp::cli

#endif  // DPGP_CLI_HPP
