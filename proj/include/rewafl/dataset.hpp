// Copyright 2026 The rewafl-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rewafl/errors.hpp"
#include "rewafl/rng.hpp"

namespace rewafl {

/// Dense labeled samples, features stored row-major.
struct Dataset {
  std::size_t dims = 0;
  int classes = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }

  std::span<const double> row(std::size_t i) const noexcept {
    return {features.data() + i * dims, dims};
  }

  std::vector<std::size_t> label_histogram() const {
    std::vector<std::size_t> h(static_cast<std::size_t>(classes), 0);
    for (int y : labels) ++h[static_cast<std::size_t>(y)];
    return h;
  }

  void validate() const {
    if (labels.empty()) throw Error("dataset is empty");
    if (features.size() != labels.size() * dims) {
      throw Error("dataset feature matrix does not match n x d");
    }
    for (int y : labels) {
      if (y < 0 || y >= classes) throw Error("dataset label out of range");
    }
    for (double v : features) {
      if (!std::isfinite(v)) throw Error("dataset feature is not finite");
    }
  }
};

/// Isotropic Gaussian clusters around unit-norm random centers; the label is
/// the cluster index and labels cycle so every class gets n / classes or one
/// more samples.
inline Dataset generate_synthetic(int classes, std::size_t dims, std::size_t n,
                                  double cluster_spread, std::uint64_t seed) {
  if (classes < 2 || dims < 1 || n < static_cast<std::size_t>(classes)) {
    throw Error("generate_synthetic needs classes >= 2, dims >= 1, n >= classes");
  }
  Engine rng = make_engine(seed, 0, 0, StreamTag::dataset);
  std::normal_distribution<double> unit(0.0, 1.0);

  std::vector<double> centers(static_cast<std::size_t>(classes) * dims);
  for (int c = 0; c < classes; ++c) {
    double norm2 = 0.0;
    auto* center = centers.data() + static_cast<std::size_t>(c) * dims;
    do {
      norm2 = 0.0;
      for (std::size_t j = 0; j < dims; ++j) {
        center[j] = unit(rng);
        norm2 += center[j] * center[j];
      }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t j = 0; j < dims; ++j) center[j] *= inv;
  }

  Dataset ds;
  ds.dims = dims;
  ds.classes = classes;
  ds.features.resize(n * dims);
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(classes));
    ds.labels[i] = c;
    const auto* center = centers.data() + static_cast<std::size_t>(c) * dims;
    for (std::size_t j = 0; j < dims; ++j) {
      const double noise = unit(rng);
      ds.features[i * dims + j] = center[j] + cluster_spread * noise;
    }
  }
  return ds;
}

inline Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.dims = ds.dims;
  out.classes = ds.classes;
  out.features.reserve(indices.size() * ds.dims);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    auto r = ds.row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

/// Deterministic shuffle-and-split into (train, holdout).
inline std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, std::size_t holdout,
                                                 std::uint64_t seed) {
  if (holdout >= ds.size()) throw Error("holdout must be smaller than the dataset");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Engine rng = make_engine(seed, 1, 0, StreamTag::dataset);
  std::shuffle(order.begin(), order.end(), rng);
  std::span<const std::size_t> all(order);
  auto train_idx = std::vector<std::size_t>(all.begin() + static_cast<std::ptrdiff_t>(holdout), all.end());
  auto test_idx = std::vector<std::size_t>(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(holdout));
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {subset(ds, train_idx), subset(ds, test_idx)};
}

// ---------------------------------------------------------------------------
// IDX files (big-endian): images 0x00000803 n rows cols <bytes>, labels
// 0x00000801 n <bytes>.

namespace detail {

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxParseError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                               const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) {
    throw IdxTruncatedError(path.string() + ": truncated header");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace detail

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Read an IDX image/label pair. Pixels are scaled to [0, 1]; the class
/// count is max label + 1.
inline Dataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
  const auto images = detail::read_file(images_path);
  const auto labels = detail::read_file(labels_path);

  const auto image_magic = detail::read_be32(images, 0, images_path);
  if (image_magic != kIdxImagesMagic) {
    throw IdxBadMagicError(images_path.string() + ": bad magic for IDX images");
  }
  const auto label_magic = detail::read_be32(labels, 0, labels_path);
  if (label_magic != kIdxLabelsMagic) {
    throw IdxBadMagicError(labels_path.string() + ": bad magic for IDX labels");
  }

  const std::size_t n_images = detail::read_be32(images, 4, images_path);
  const std::size_t rows = detail::read_be32(images, 8, images_path);
  const std::size_t cols = detail::read_be32(images, 12, images_path);
  const std::size_t n_labels = detail::read_be32(labels, 4, labels_path);

  const std::size_t dims = rows * cols;
  if (images.size() < 16 + n_images * dims) {
    throw IdxTruncatedError(images_path.string() + ": truncated pixel data");
  }
  if (labels.size() < 8 + n_labels) {
    throw IdxTruncatedError(labels_path.string() + ": truncated label data");
  }
  if (n_images != n_labels) {
    throw IdxCountMismatchError("IDX count mismatch: " + std::to_string(n_images) +
                                " images vs " + std::to_string(n_labels) + " labels");
  }
  if (n_images == 0) throw IdxParseError("IDX files contain no samples");

  Dataset ds;
  ds.dims = dims;
  ds.features.resize(n_images * dims);
  for (std::size_t i = 0; i < ds.features.size(); ++i) {
    ds.features[i] = static_cast<double>(images[16 + i]) / 255.0;
  }
  ds.labels.resize(n_labels);
  int max_label = 0;
  for (std::size_t i = 0; i < n_labels; ++i) {
    ds.labels[i] = labels[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.classes = std::max(2, max_label + 1);
  return ds;
}

// ---------------------------------------------------------------------------
// Label-skew partitioning.

/// Per-device sample indices into a shared Dataset.
struct Partition {
  std::vector<std::vector<std::size_t>> assignments;

  std::size_t devices() const noexcept { return assignments.size(); }
};

/// Assign `quota` samples to each device. Device d's dominant label is
/// d mod C. round(lambda * quota) samples come from the dominant label and the
/// rest are drawn uniformly from the remaining samples of the other labels.
/// lambda == 0 means plain i.i.d. draws from the whole pool.
///
/// `quota == 0` selects n / num_devices.
inline Partition partition_label_skew(const Dataset& ds, std::size_t num_devices,
                                      double lambda, std::uint64_t seed,
                                      std::size_t quota = 0) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error("lambda must lie in [0, 1]");
  }
  if (num_devices == 0 || num_devices > ds.size()) {
    throw Error("num_devices must be in [1, n]");
  }
  if (ds.classes < 2) throw Error("label-skew partition needs at least two classes");
  if (quota == 0) quota = ds.size() / num_devices;
  if (quota == 0) throw InfeasiblePartitionError("per-device quota is zero");

  const auto classes = static_cast<std::size_t>(ds.classes);
  Engine rng = make_engine(seed, 0, 0, StreamTag::partition);

  std::vector<std::deque<std::size_t>> pools(classes);
  {
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) pools[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }

  // Uniform draw from the union of the pools whose label is not `excluded`:
  // pick a label with probability proportional to what it has left.
  auto draw_from = [&](std::size_t excluded, bool exclude) -> std::size_t {
    std::size_t total = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      if (!(exclude && c == excluded)) total += pools[c].size();
    }
    if (total == 0) {
      throw InfeasiblePartitionError("not enough samples left outside label " +
                                     std::to_string(excluded));
    }
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);
    std::size_t r = pick(rng);
    for (std::size_t c = 0; c < classes; ++c) {
      if (exclude && c == excluded) continue;
      if (r < pools[c].size()) {
        const std::size_t idx = pools[c].front();
        pools[c].pop_front();
        return idx;
      }
      r -= pools[c].size();
    }
    throw InfeasiblePartitionError("unreachable pool state");
  };

  const auto dominant_count =
      static_cast<std::size_t>(std::llround(lambda * static_cast<double>(quota)));

  Partition part;
  part.assignments.resize(num_devices);
  for (std::size_t d = 0; d < num_devices; ++d) {
    auto& mine = part.assignments[d];
    mine.reserve(quota);
    const std::size_t dominant = d % classes;
    if (lambda == 0.0) {
      for (std::size_t k = 0; k < quota; ++k) mine.push_back(draw_from(0, false));
    } else {
      auto& pool = pools[dominant];
      if (pool.size() < dominant_count) {
        throw InfeasiblePartitionError(
            "label " + std::to_string(dominant) + " has " + std::to_string(pool.size()) +
            " samples left, device " + std::to_string(d) + " needs " +
            std::to_string(dominant_count));
      }
      for (std::size_t k = 0; k < dominant_count; ++k) {
        mine.push_back(pool.front());
        pool.pop_front();
      }
      for (std::size_t k = dominant_count; k < quota; ++k) {
        mine.push_back(draw_from(dominant, true));
      }
    }
    std::sort(mine.begin(), mine.end());
  }
  return part;
}

}  // namespace rewafl
