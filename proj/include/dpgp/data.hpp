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

#ifndef DPGP_DATA_HPP
#define DPGP_DATA_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dpgp/rng.hpp"

namespace dpgp {

struct TabularDataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> feature_names;
  std::string output_name;
  int skipped_rows = 0;
};

/// 15x15 images flattened row-major, pixel values in [0, 255]; labels -1/+1.
struct ImageDataset {
  Eigen::MatrixXd images;
  Eigen::VectorXd labels;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline bool parse_double(const std::string& s, double* out) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size() || !std::isfinite(v)) return false;
    *out = v;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace detail

/// Parse a headered CSV into features plus the named output column. Rows
/// with missing or unparseable values are dropped and counted.
inline TabularDataset load_csv(const std::string& path, const std::string& output_column) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("load_csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = detail::split_csv_line(line);
  int out_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == output_column) out_col = static_cast<int>(i);
  }
  if (out_col < 0) {
    throw std::invalid_argument("load_csv: column '" + output_column + "' not in " + path);
  }

  TabularDataset ds;
  ds.output_name = output_column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (static_cast<int>(i) != out_col) ds.feature_names.push_back(header[i]);
  }

  std::vector<std::vector<double>> rows;
  std::vector<double> outputs;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      ++ds.skipped_rows;
      continue;
    }
    std::vector<double> row;
    double out_val = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      double v = 0.0;
      if (!detail::parse_double(fields[i], &v)) {
        ok = false;
        break;
      }
      if (static_cast<int>(i) == out_col) {
        out_val = v;
      } else {
        row.push_back(v);
      }
    }
    if (!ok) {
      ++ds.skipped_rows;
      continue;
    }
    rows.push_back(std::move(row));
    outputs.push_back(out_val);
  }
  if (rows.empty()) throw std::invalid_argument("load_csv: no usable rows in " + path);
  if (ds.skipped_rows > 0) {
    std::cerr << "load_csv: skipped " << ds.skipped_rows << " row(s) with missing values in "
              << path << "\n";
  }

  ds.X.resize(static_cast<Eigen::Index>(rows.size()),
              static_cast<Eigen::Index>(rows.front().size()));
  ds.y.resize(static_cast<Eigen::Index>(outputs.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    ds.y[static_cast<Eigen::Index>(i)] = outputs[i];
  }
  return ds;
}

/// Write with full round-trip precision so X and y survive bitwise.
inline void write_csv(const std::string& path, const TabularDataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("write_csv: cannot open " + path);
  out << std::setprecision(17);
  for (const auto& name : ds.feature_names) out << name << ',';
  out << ds.output_name << '\n';
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.X.cols(); ++j) out << ds.X(i, j) << ',';
    out << ds.y[i] << '\n';
  }
}

/// Area-weighted box resample; constant images stay constant and values stay
/// within the source range.
inline Eigen::MatrixXd area_downsample(const Eigen::MatrixXd& img, int out_rows, int out_cols) {
  const auto in_rows = static_cast<double>(img.rows());
  const auto in_cols = static_cast<double>(img.cols());
  Eigen::MatrixXd out(out_rows, out_cols);
  const double sr = in_rows / out_rows;
  const double sc = in_cols / out_cols;
  for (int r = 0; r < out_rows; ++r) {
    const double r0 = r * sr, r1 = (r + 1) * sr;
    for (int c = 0; c < out_cols; ++c) {
      const double c0 = c * sc, c1 = (c + 1) * sc;
      double acc = 0.0;
      for (int i = static_cast<int>(std::floor(r0)); i < static_cast<int>(std::ceil(r1)); ++i) {
        const double wr = std::min<double>(i + 1, r1) - std::max<double>(i, r0);
        for (int j = static_cast<int>(std::floor(c0)); j < static_cast<int>(std::ceil(c1)); ++j) {
          const double wc = std::min<double>(j + 1, c1) - std::max<double>(j, c0);
          acc += wr * wc * img(i, j);
        }
      }
      out(r, c) = acc / (sr * sc);
    }
  }
  return out;
}

namespace detail {

inline std::uint32_t read_be_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::invalid_argument("idx: truncated header");
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace detail

/// Load an IDX image/label pair, downsample 28x28 -> 15x15, relabel digits
/// {0..4} -> -1 and {5..9} -> +1, and sample n_train + n_test records
/// without replacement.
inline std::pair<ImageDataset, ImageDataset> load_mnist_binary(
    const std::string& images_path, const std::string& labels_path, int n_train, int n_test,
    SplitRng& rng, int out_side = 15) {
  std::ifstream imgf(images_path, std::ios::binary);
  if (!imgf) throw std::invalid_argument("load_mnist_binary: cannot open " + images_path);
  std::ifstream labf(labels_path, std::ios::binary);
  if (!labf) throw std::invalid_argument("load_mnist_binary: cannot open " + labels_path);

  if (detail::read_be_u32(imgf) != 0x00000803u) {
    throw std::invalid_argument("load_mnist_binary: bad image magic in " + images_path);
  }
  const std::uint32_t n_images = detail::read_be_u32(imgf);
  const std::uint32_t rows = detail::read_be_u32(imgf);
  const std::uint32_t cols = detail::read_be_u32(imgf);

  if (detail::read_be_u32(labf) != 0x00000801u) {
    throw std::invalid_argument("load_mnist_binary: bad label magic in " + labels_path);
  }
  const std::uint32_t n_labels = detail::read_be_u32(labf);
  if (n_labels != n_images) {
    throw std::invalid_argument("load_mnist_binary: image/label count mismatch");
  }
  const int want = n_train + n_test;
  if (static_cast<int>(n_images) < want) {
    throw std::invalid_argument("load_mnist_binary: not enough records");
  }

  // sample record indices without replacement via a partial shuffle
  std::vector<int> order = rng.permutation(static_cast<int>(n_images));
  std::vector<int> picked(order.begin(), order.begin() + want);
  std::vector<int> sorted = picked;
  std::sort(sorted.begin(), sorted.end());
  std::map<int, int> slot;  // record index -> position in `picked`
  for (int i = 0; i < want; ++i) slot[picked[static_cast<std::size_t>(i)]] = i;

  const std::size_t px = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> buf(px);
  Eigen::MatrixXd images(want, out_side * out_side);
  Eigen::VectorXd labels(want);

  const std::streamoff img_base = 16, lab_base = 8;
  for (int rec : sorted) {
    imgf.seekg(img_base + static_cast<std::streamoff>(rec) * static_cast<std::streamoff>(px));
    imgf.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(px));
    labf.seekg(lab_base + rec);
    const int digit = labf.get();
    if (!imgf || digit < 0) throw std::invalid_argument("load_mnist_binary: truncated data");

    Eigen::MatrixXd img(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) img(r, c) = buf[r * cols + c];
    }
    const Eigen::MatrixXd small = area_downsample(img, out_side, out_side);
    const int pos = slot[rec];
    for (int r = 0; r < out_side; ++r) {
      for (int c = 0; c < out_side; ++c) images(pos, r * out_side + c) = small(r, c);
    }
    labels[pos] = digit <= 4 ? -1.0 : 1.0;
  }

  ImageDataset train{images.topRows(n_train), labels.head(n_train)};
  ImageDataset test{images.bottomRows(n_test), labels.tail(n_test)};
  return {std::move(train), std::move(test)};
}

inline double stripe_class(double x1, double x2) {
  return std::sin(2.0 * std::numbers::pi * (x1 + x2) / 9.0) >= 0.0 ? 1.0 : -1.0;
}

/// Two-dimensional noisy diagonal class stripes on [0, 10]^2 with sampling
/// density highest at the bottom of the domain. The class is the sign of a
/// sine along the diagonal (stripe period 9, matching a 3.5 lengthscale),
/// flipped with probability noise_flip_prob.
inline TabularDataset gen_stripes(int n, double noise_flip_prob, SplitRng& rng) {
  if (n < 1) throw std::invalid_argument("gen_stripes: need n >= 1");
  TabularDataset ds;
  ds.feature_names = {"x1", "x2"};
  ds.output_name = "class";
  ds.X.resize(n, 2);
  ds.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x1 = 10.0 * rng.uniform();
    const double x2 = 10.0 * (1.0 - std::sqrt(rng.uniform()));  // density falls with height
    ds.X(i, 0) = x1;
    ds.X(i, 1) = x2;
    double label = stripe_class(x1, x2);
    if (rng.uniform() < noise_flip_prob) label = -label;
    ds.y[i] = label;
  }
  return ds;
}

/// Synthetic stand-in for a heights-versus-age survey: a dense young cluster
/// (ages 0-30) plus a sparse elderly tail (60-90), heights on a saturating
/// growth curve with noise, clamped into [50, 150] so a 100-unit output
/// bound is valid by construction. with_weight adds a second feature
/// correlated with height.
inline TabularDataset gen_kung_like(int n, SplitRng& rng, bool with_weight = false) {
  if (n < 10) throw std::invalid_argument("gen_kung_like: need n >= 10");
  TabularDataset ds;
  ds.feature_names = with_weight ? std::vector<std::string>{"age", "weight"}
                                 : std::vector<std::string>{"age"};
  ds.output_name = "height";
  ds.X.resize(n, with_weight ? 2 : 1);
  ds.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const bool dense = rng.uniform() < 0.85;
    const double age = dense ? 30.0 * rng.uniform() : 60.0 + 30.0 * rng.uniform();
    double height = 150.0 - 100.0 * std::exp(-age / 7.0) + 4.0 * rng.normal();
    height = std::clamp(height, 50.0, 150.0);
    ds.X(i, 0) = age;
    if (with_weight) {
      const double weight = 5.0 + 0.4 * (height - 50.0) + 2.0 * rng.normal();
      ds.X(i, 1) = std::max(weight, 3.0);
    }
    ds.y[i] = height;
  }
  return ds;
}

/// Stratified subsample balancing (rounded first-feature bucket x label)
/// cells; draws uniformly within each cell, cycling over cells until n
/// points are taken.
inline TabularDataset stratified_sample(const TabularDataset& ds, int n, SplitRng& rng) {
  if (n < 1 || n > ds.X.rows()) {
    throw std::invalid_argument("stratified_sample: need 1 <= n <= N");
  }
  std::map<std::pair<long, int>, std::vector<int>> cells;
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
    const long bucket = std::lround(ds.X(i, 0));
    const int label = ds.y[i] > 0 ? 1 : 0;
    cells[{bucket, label}].push_back(static_cast<int>(i));
  }
  for (auto& [key, idx] : cells) {
    // shuffle within the cell
    for (std::size_t i = idx.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_index(i));
      std::swap(idx[i - 1], idx[j]);
    }
  }
  std::vector<int> chosen;
  std::size_t round = 0;
  while (static_cast<int>(chosen.size()) < n) {
    bool any = false;
    for (auto& [key, idx] : cells) {
      if (round < idx.size()) {
        chosen.push_back(idx[round]);
        any = true;
        if (static_cast<int>(chosen.size()) == n) break;
      }
    }
    if (!any) break;
    ++round;
  }
  TabularDataset out;
  out.feature_names = ds.feature_names;
  out.output_name = ds.output_name;
  out.X = ds.X(chosen, Eigen::all);
  out.y = ds.y(chosen);
  return out;
}

}  // namespace dpgp

#endif  // DPGP_DATA_HPP
