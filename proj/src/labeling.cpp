// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafwood/labeling.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "leafwood/csv.hpp"
#include "leafwood/error.hpp"
#include "leafwood/parallel.hpp"
#include "leafwood/rng.hpp"

namespace leafwood {

Label vote(std::span<const Neighbor> neighbors, std::span<const Label> reference_labels) {
  if (neighbors.empty()) throw ValidationError("neighbors", "cannot vote without neighbors");
  std::array<std::size_t, 3> counts{};  // unknown, leaf, wood
  for (const Neighbor& n : neighbors) ++counts[static_cast<std::size_t>(to_int(reference_labels[n.index]) + 1)];
  const std::size_t best = *std::max_element(counts.begin(), counts.end());
  for (const Neighbor& n : neighbors) {
    const Label l = reference_labels[n.index];
    if (counts[static_cast<std::size_t>(to_int(l) + 1)] == best) return l;
  }
  return Label::unknown;  // unreachable
}

PointCloud knn_transfer(const PointCloud& target, const PointCloud& reference, const LabelTransferConfig& cfg) {
  if (reference.empty()) throw ValidationError("reference", "reference cloud is empty");
  if (cfg.k == 0) throw ValidationError("transfer.k", "must be >= 1");
  if (cfg.k > reference.size()) {
    throw ValidationError("transfer.k", "k=" + std::to_string(cfg.k) + " exceeds reference size " +
                                            std::to_string(reference.size()));
  }
  std::vector<Label> labels(reference.size());
  for (std::size_t n = 0; n < reference.size(); ++n) {
    if (!reference.points[n].label) {
      throw ValidationError("reference", "reference point " + std::to_string(n) + " has no label");
    }
    labels[n] = *reference.points[n].label;
  }

  const KdTree tree(coordinates(reference));
  PointCloud out = target;
  parallel_for(target.size(), cfg.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const auto nearest = tree.knn(target.points[t].xyz(), cfg.k);
      Point& p = out.points[t];
      p.label = vote(nearest, labels);
      p.tree_id = reference.points[nearest.front().index].tree_id;
    }
  });

  if (!cfg.drop_unknown) return out;
  std::vector<std::size_t> keep;
  keep.reserve(out.size());
  for (std::size_t n = 0; n < out.size(); ++n) {
    if (out.points[n].label != Label::unknown) keep.push_back(n);
  }
  return out.select(keep);
}

TreeSplits split_by_assignment(const PointCloud& cloud, const std::map<std::int64_t, Split>& assignment) {
  std::vector<std::size_t> idx[3];
  for (std::size_t n = 0; n < cloud.size(); ++n) {
    const auto& id = cloud.points[n].tree_id;
    if (!id) throw ValidationError("tree_id", "point " + std::to_string(n) + " has no tree_id");
    auto it = assignment.find(*id);
    if (it == assignment.end()) continue;
    idx[static_cast<int>(it->second)].push_back(n);
  }
  TreeSplits out;
  out.train = cloud.select(idx[0]);
  out.val = cloud.select(idx[1]);
  out.test = cloud.select(idx[2]);
  out.assignment = assignment;
  return out;
}

TreeSplits split_by_tree(const PointCloud& cloud, const SplitCounts& counts, std::uint64_t seed,
                         bool allow_unassigned) {
  std::set<std::int64_t> distinct;
  for (std::size_t n = 0; n < cloud.size(); ++n) {
    const auto& id = cloud.points[n].tree_id;
    if (!id) throw ValidationError("tree_id", "point " + std::to_string(n) + " has no tree_id");
    distinct.insert(*id);
  }
  if (distinct.size() < counts.total()) {
    throw ValidationError("split.counts", "requested " + std::to_string(counts.total()) +
                                              " trees but only " + std::to_string(distinct.size()) +
                                              " are available");
  }
  if (distinct.size() > counts.total() && !allow_unassigned) {
    throw ValidationError("split.counts", std::to_string(distinct.size() - counts.total()) +
                                              " of " + std::to_string(distinct.size()) +
                                              " available trees would be left unassigned");
  }
  std::vector<std::int64_t> ids(distinct.begin(), distinct.end());
  Rng rng(seed);
  shuffle(std::span<std::int64_t>(ids), rng);

  std::map<std::int64_t, Split> assignment;
  for (std::size_t n = 0; n < counts.total(); ++n) {
    const Split s = n < counts.train ? Split::train : n < counts.train + counts.val ? Split::val : Split::test;
    assignment[ids[n]] = s;
  }
  return split_by_assignment(cloud, assignment);
}

std::map<std::int64_t, Split> read_split_assignment(const std::string& path) {
  const csv::Table table = csv::read_table(path);
  const std::size_t tree_col = table.require("tree_id", path);
  const std::size_t split_col = table.require("split", path);
  std::map<std::int64_t, Split> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    if (row.size() != table.header.size()) throw ParseError(path, line, "wrong number of fields");
    const auto tree = csv::parse_integer(csv::trim(row[tree_col]));
    if (!tree || *tree < 0) throw ParseError(path, line, "invalid tree_id '" + row[tree_col] + "'");
    const std::string_view name = csv::trim(row[split_col]);
    Split split;
    if (name == "train") {
      split = Split::train;
    } else if (name == "val") {
      split = Split::val;
    } else if (name == "test") {
      split = Split::test;
    } else {
      throw ParseError(path, line, "unknown split '" + std::string(name) + "'");
    }
    if (!out.emplace(*tree, split).second) {
      throw ParseError(path, line, "tree " + std::to_string(*tree) + " listed twice");
    }
  }
  return out;
}

}  // namespace leafwood
