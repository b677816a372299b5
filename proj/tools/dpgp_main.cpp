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

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "dpgp/cli.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<double> sensitivity;
  std::optional<int> sparse;
  std::optional<bool> privacy_mode;
  std::optional<int> iterations;
};

void add_common_options(CLI::App* cmd, Overrides* ov) {
  cmd->add_option("--config", ov->config_path, "JSON experiment config")->required();
  cmd->add_option("--seed", ov->seed, "master seed (overrides config)");
  cmd->add_option("--out", ov->out, "results JSON path");
  cmd->add_option("--epsilon", ov->epsilon, "DP epsilon");
  cmd->add_option("--delta", ov->delta, "DP delta");
  cmd->add_option("--sensitivity", ov->sensitivity, "data sensitivity d");
  cmd->add_option("--sparse", ov->sparse, "number of inducing inputs");
  cmd->add_flag("--privacy-mode,!--no-privacy-mode", ov->privacy_mode,
                "suppress non-DP diagnostics in outputs (default on)");
}

int execute(const std::string& command, const Overrides& ov) {
  std::ifstream in(ov.config_path);
  if (!in) {
    std::cerr << "validation error: cannot open config " << ov.config_path << "\n";
    return dpgp::cli::kExitValidation;
  }
  dpgp::cli::json cfg;
  try {
    cfg = dpgp::cli::json::parse(in);
  } catch (const dpgp::cli::json::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return dpgp::cli::kExitValidation;
  }
  cfg["command"] = command;
  if (ov.seed) cfg["seed"] = *ov.seed;
  if (ov.out) cfg["out"] = *ov.out;
  if (ov.epsilon) cfg["privacy"]["epsilon"] = *ov.epsilon;
  if (ov.delta) cfg["privacy"]["delta"] = *ov.delta;
  if (ov.sensitivity) cfg["privacy"]["sensitivity"] = *ov.sensitivity;
  if (ov.sparse) cfg["sparse"] = *ov.sparse;
  if (ov.privacy_mode) cfg["privacy_mode"] = *ov.privacy_mode;
  if (ov.iterations) cfg["newton_iterations"] = *ov.iterations;
  return dpgp::cli::run(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentially private Gaussian process toolkit"};
  app.require_subcommand(1);

  Overrides regress_ov, classify_ov, select_ov, bench_ov;
  CLI::App* regress = app.add_subcommand("regress", "DP GP regression");
  add_common_options(regress, &regress_ov);
  CLI::App* classify = app.add_subcommand("classify", "DP GP binary classification");
  add_common_options(classify, &classify_ov);
  classify->add_option("--iterations", classify_ov.iterations,
                       "Laplace update iterations (budget is split when > 1)");
  CLI::App* select = app.add_subcommand("select-hypers",
                                        "DP hyperparameter selection (exponential mechanism)");
  add_common_options(select, &select_ov);
  CLI::App* bench = app.add_subcommand("bench", "cross-validation / sweep benchmarks");
  add_common_options(bench, &bench_ov);

  CLI11_PARSE(app, argc, argv);

  if (regress->parsed()) return execute("regress", regress_ov);
  if (classify->parsed()) return execute("classify", classify_ov);
  if (select->parsed()) return execute("select-hypers", select_ov);
  if (bench->parsed()) return execute("bench", bench_ov);
  return dpgp::cli::kExitValidation;
}
