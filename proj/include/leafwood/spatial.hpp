// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFWOOD_SPATIAL_HPP
#define LEAFWOOD_SPATIAL_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "leafwood/point_cloud.hpp"

namespace leafwood {

/// Exact fixed-radius search over a uniform hash grid.
///
/// Queries with r <= cell_size inspect the 27 surrounding cells; larger radii
/// widen the scan accordingly, so results are exact for any r.
class RadiusIndex {
 public:
  RadiusIndex(std::span<const Vec3> points, double cell_size);

  /// Indices within Euclidean distance <= r of q, ascending.
  std::vector<std::size_t> query(const Vec3& q, double r) const;
  void query(const Vec3& q, double r, std::vector<std::size_t>& out) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Key {
    std::int64_t i, j, k;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& key) const;
  };
  Key key_of(const Vec3& p) const;

  std::vector<Vec3> points_;
  double cell_size_;
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> cells_;
};

struct Neighbor {
  std::size_t index;
  double distance2;
};

/// Static 3-d tree for exact k-nearest-neighbor queries.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  /// The k nearest points ordered by (squared distance, index). Exact ties at
  /// the k-th position resolve to the smaller index.
  std::vector<Neighbor> knn(const Vec3& q, std::size_t k) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::size_t begin, end;  // range in order_
    int axis;                // -1 for leaves
    double split;
    std::int32_t left, right;
  };
  std::int32_t build(std::size_t begin, std::size_t end);
  void search(std::int32_t node, const Vec3& q, std::size_t k, std::vector<Neighbor>& heap) const;

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace leafwood

#endif  // LEAFWOOD_SPATIAL_HPP
