// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafwood/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "leafwood/error.hpp"

namespace leafwood {

std::size_t RadiusIndex::KeyHash::operator()(const Key& key) const {
  std::uint64_t h = static_cast<std::uint64_t>(key.i);
  h = h * 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(key.j);
  h = h * 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(key.k);
  return static_cast<std::size_t>(h ^ (h >> 31));
}

RadiusIndex::Key RadiusIndex::key_of(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p[0] / cell_size_)),
          static_cast<std::int64_t>(std::floor(p[1] / cell_size_)),
          static_cast<std::int64_t>(std::floor(p[2] / cell_size_))};
}

RadiusIndex::RadiusIndex(std::span<const Vec3> points, double cell_size)
    : points_(points.begin(), points.end()), cell_size_(cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw ValidationError("cell_size", "must be a positive finite number");
  }
  for (std::size_t n = 0; n < points_.size(); ++n) cells_[key_of(points_[n])].push_back(n);
}

std::vector<std::size_t> RadiusIndex::query(const Vec3& q, double r) const {
  std::vector<std::size_t> out;
  query(q, r, out);
  return out;
}

void RadiusIndex::query(const Vec3& q, double r, std::vector<std::size_t>& out) const {
  out.clear();
  const double r2 = r * r;
  const Key lo = key_of({q[0] - r, q[1] - r, q[2] - r});
  const Key hi = key_of({q[0] + r, q[1] + r, q[2] + r});
  for (std::int64_t i = lo.i; i <= hi.i; ++i) {
    for (std::int64_t j = lo.j; j <= hi.j; ++j) {
      for (std::int64_t k = lo.k; k <= hi.k; ++k) {
        auto it = cells_.find(Key{i, j, k});
        if (it == cells_.end()) continue;
        for (std::size_t n : it->second) {
          const Vec3& p = points_[n];
          const double dx = p[0] - q[0];
          const double dy = p[1] - q[1];
          const double dz = p[2] - q[2];
          if (dx * dx + dy * dy + dz * dz <= r2) out.push_back(n);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
}

namespace {

constexpr std::size_t kLeafSize = 16;

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance2 < b.distance2 || (a.distance2 == b.distance2 && a.index < b.index);
}

}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (!points_.empty()) build(0, points_.size());
}

std::int32_t KdTree::build(std::size_t begin, std::size_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, 0.0, -1, -1});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (std::size_t n = begin; n < end; ++n) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], points_[order_[n]][a]);
      hi[a] = std::max(hi[a], points_[order_[n]][a]);
    }
  }
  int axis = 0;
  for (int a = 1; a < 3; ++a) {
    if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
  }
  if (hi[axis] == lo[axis]) return id;  // all coincident: keep as leaf

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].axis = axis;
  nodes_[static_cast<std::size_t>(id)].split = split;
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

void KdTree::search(std::int32_t node_id, const Vec3& q, std::size_t k, std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.axis < 0) {
    for (std::size_t n = node.begin; n < node.end; ++n) {
      const std::size_t idx = order_[n];
      const Vec3& p = points_[idx];
      const double dx = p[0] - q[0];
      const double dy = p[1] - q[1];
      const double dz = p[2] - q[2];
      const Neighbor cand{idx, dx * dx + dy * dy + dz * dz};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }
  // Left subtree holds coordinates <= split, right subtree >= split.
  const double diff = q[static_cast<std::size_t>(node.axis)] - node.split;
  const std::int32_t near = diff <= 0.0 ? node.left : node.right;
  const std::int32_t far = diff <= 0.0 ? node.right : node.left;
  search(near, q, k, heap);
  // Visit on equality too: an equally distant point may carry a smaller index.
  if (heap.size() < k || diff * diff <= heap.front().distance2) search(far, q, k, heap);
}

std::vector<Neighbor> KdTree::knn(const Vec3& q, std::size_t k) const {
  std::vector<Neighbor> heap;
  k = std::min(k, points_.size());
  if (k == 0) return heap;
  heap.reserve(k + 1);
  search(0, q, k, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

}  // namespace leafwood
