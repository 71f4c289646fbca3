// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFWOOD_BATCHING_HPP
#define LEAFWOOD_BATCHING_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "leafwood/point_cloud.hpp"

namespace leafwood {

inline constexpr std::size_t kDefaultBatchSize = 3000;

/// normalized = (p - shift) / scale
struct NormalizationTransform {
  Vec3 shift{};
  double scale = 1.0;
  bool degenerate = false;  // all points coincident; scale fell back to 1
};

struct NormalizedComponent {
  std::vector<Vec3> coords;
  NormalizationTransform transform;
};

/// Shifts the per-axis minimum to the origin and divides every axis by the
/// single longest extent, so all coordinates land in [0, 1].
NormalizedComponent normalize_component(std::span<const Vec3> points);
Vec3 denormalize(const Vec3& p, const NormalizationTransform& t);

/// Fixed-size block of network inputs. Row r is inputs[r*width, (r+1)*width):
/// normalized x, y, z followed by the standardized features.
struct Batch {
  std::int64_t component_id = 0;
  std::size_t width = 0;
  std::vector<double> inputs;
  std::vector<int> labels;            // -1 when unknown
  std::vector<std::size_t> sources;   // point index in the source cloud

  std::size_t rows() const { return sources.size(); }
  std::span<const double> row(std::size_t r) const { return {inputs.data() + r * width, width}; }
};

/// One component's points in geodesic order, ready for batching.
struct ComponentRows {
  std::int64_t component_id = 0;
  std::size_t feature_width = 0;
  std::vector<std::size_t> sources;
  std::vector<Vec3> coords;        // normalized
  std::vector<double> features;    // sources.size() x feature_width
  std::vector<int> labels;
};

/// ceil(n / batch_size) batches. Full batches take rows in order; the last
/// partial batch is topped up by sampling the whole component uniformly with
/// replacement, from a stream derived from (seed, component_id).
std::vector<Batch> make_batches(const ComponentRows& rows, std::size_t batch_size, std::uint64_t seed);

struct BatchOptions {
  std::size_t batch_size = kDefaultBatchSize;
  std::uint64_t seed = 7;
  bool include_residual = false;
};

struct BatchedCloud {
  std::vector<Batch> batches;
  std::map<std::int64_t, NormalizationTransform> transforms;
};

/// Batches a cloud carrying component_id, gd and feat_* columns (the output
/// of the gvd and features stages). Points within a component are taken in
/// ascending (gd, point index) order. Points flagged residual are skipped
/// unless options.include_residual.
BatchedCloud batch_cloud(const PointCloud& cloud, const BatchOptions& options);

/// Names of the feat_* columns of `cloud`, in column order.
std::vector<std::string> feature_columns(const PointCloud& cloud);

void write_batch_csv(const Batch& batch, const std::vector<std::string>& feature_names, const std::string& path);
Batch read_batch_csv(const std::string& path);

/// Writes one CSV per batch plus transforms.csv into `dir` (created if needed).
void write_batches(const BatchedCloud& batched, const std::vector<std::string>& feature_names, const std::string& dir);

/// Reads every batch_*.csv in `dir`, sorted by file name.
std::vector<Batch> read_batches(const std::string& dir);

}  // namespace leafwood

#endif  // LEAFWOOD_BATCHING_HPP
