// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFWOOD_LABELING_HPP
#define LEAFWOOD_LABELING_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "leafwood/point_cloud.hpp"
#include "leafwood/spatial.hpp"

namespace leafwood {

struct LabelTransferConfig {
  std::size_t k = 5;
  bool drop_unknown = true;
  unsigned threads = 1;
};

/// Majority label among `neighbors` (ordered nearest first). A tie between
/// classes goes to the tied class that appears first in the list.
Label vote(std::span<const Neighbor> neighbors, std::span<const Label> reference_labels);

/// Labels every target point by majority vote of its k nearest reference
/// points and copies tree_id from the single nearest one. Points voted
/// unknown are removed when cfg.drop_unknown is set.
///
/// Throws ValidationError if a reference point has no label, the reference
/// is empty, or k exceeds the reference size.
PointCloud knn_transfer(const PointCloud& target, const PointCloud& reference, const LabelTransferConfig& cfg);

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
  std::size_t total() const { return train + val + test; }
};

enum class Split { train, val, test };

struct TreeSplits {
  PointCloud train;
  PointCloud val;
  PointCloud test;
  std::map<std::int64_t, Split> assignment;
};

/// Assigns whole trees to train/val/test by a seeded shuffle of the sorted
/// distinct tree ids. The number of distinct trees must equal counts.total()
/// unless `allow_unassigned` is set, in which case surplus trees are left out.
TreeSplits split_by_tree(const PointCloud& cloud, const SplitCounts& counts, std::uint64_t seed,
                         bool allow_unassigned = false);

/// Applies an explicit tree -> split assignment. Points of unlisted trees are dropped.
TreeSplits split_by_assignment(const PointCloud& cloud, const std::map<std::int64_t, Split>& assignment);

/// Reads a `tree_id,split` file (split is train, val or test), the format
/// written by the split stage. Throws ParseError on bad rows or duplicates.
std::map<std::int64_t, Split> read_split_assignment(const std::string& path);

}  // namespace leafwood

#endif  // LEAFWOOD_LABELING_HPP
