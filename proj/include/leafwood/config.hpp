// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFWOOD_CONFIG_HPP
#define LEAFWOOD_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "leafwood/batching.hpp"
#include "leafwood/classifier.hpp"
#include "leafwood/features.hpp"
#include "leafwood/gvd.hpp"
#include "leafwood/labeling.hpp"
#include "leafwood/synth.hpp"
#include "leafwood/voxel.hpp"

namespace leafwood {

struct IngestSettings {
  double min_intensity_db = -20.0;
  std::optional<double> max_deviation;  // no default: the operator must choose
  double precision = 0.001;
};

struct VoxelSettings {
  double size = 0.6;
  int connectivity = 26;
};

/// Every tunable of the pipeline with its default. Sections mirror the
/// subcommands; JSON keys are the field names below.
struct PipelineConfig {
  std::uint64_t seed = 7;
  unsigned threads = 1;
  IngestSettings ingest;
  VoxelSettings voxel;
  GvdConfig gvd;
  NeighborhoodSpec features;
  LinearityDenominator linearity_denominator = LinearityDenominator::lambda3;
  std::size_t transfer_k = 5;
  bool transfer_drop_unknown = true;
  SplitCounts split{221, 20, 40};
  std::size_t batch_size = kDefaultBatchSize;
  bool batch_include_residual = false;
  TrainConfig train;
  LossKind loss;
  ForestParams synth;

  /// Throws ValidationError naming the field ("gvd.tau", "train.learning_rate", ...).
  void validate() const;

  std::string to_json() const;
  /// Applies the keys present in `text` on top of this config. Unknown keys
  /// and wrongly typed values raise ValidationError.
  void merge_json(const std::string& text);
  void merge_file(const std::string& path);
  void save(const std::string& path) const;
};

}  // namespace leafwood

#endif  // LEAFWOOD_CONFIG_HPP
