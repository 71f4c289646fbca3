// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafwood/gvd.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <unordered_set>

#include "leafwood/error.hpp"

namespace leafwood {

namespace {

struct LowestFirst {
  bool operator()(const VoxelIndex& a, const VoxelIndex& b) const {
    if (a.k != b.k) return a.k < b.k;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  }
};

}  // namespace

void GvdConfig::validate() const {
  if (tau < 1) throw ValidationError("gvd.tau", "must be >= 1, got " + std::to_string(tau));
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ValidationError("gvd.gamma", "must be a positive finite number");
  }
}

std::optional<int> Component::gd_of(const VoxelIndex& v) const {
  for (std::size_t n = 0; n < voxels.size(); ++n) {
    if (voxels[n] == v) return voxel_gd[n];
  }
  return std::nullopt;
}

std::size_t Decomposition::total_points() const {
  std::size_t total = 0;
  for (const auto& c : components) total += c.point_indices.size();
  for (const auto& c : residuals) total += c.point_indices.size();
  return total;
}

VoxelIndex select_seed(std::span<const VoxelIndex> unvisited) {
  if (unvisited.empty()) throw ValidationError("unvisited", "cannot select a seed from an empty set");
  return *std::min_element(unvisited.begin(), unvisited.end(), LowestFirst{});
}

Decomposition decompose(const VoxelGrid& grid, const GvdConfig& cfg) {
  cfg.validate();
  if (grid.cell_count() == 0) throw ValidationError("grid", "cannot decompose an empty grid");

  const Connectivity conn = grid.connectivity();
  const auto offsets = neighbor_offsets(conn);

  std::set<VoxelIndex, LowestFirst> unvisited;
  for (const auto& entry : grid.cells()) unvisited.insert(entry.first);

  Decomposition out;
  std::int64_t next_id = 1;
  std::deque<VoxelIndex> queue;
  std::unordered_set<VoxelIndex, VoxelIndexHash> rejected;

  while (!unvisited.empty()) {
    Component comp;
    comp.id = next_id++;
    comp.seed = *unvisited.begin();
    unvisited.erase(unvisited.begin());
    comp.voxels.push_back(comp.seed);
    comp.voxel_gd.push_back(0);

    queue.clear();
    rejected.clear();
    queue.push_back(comp.seed);
    while (!queue.empty()) {
      const VoxelIndex v = queue.front();
      queue.pop_front();
      for (const VoxelIndex& o : offsets) {
        const VoxelIndex n{v.i + o.i, v.j + o.j, v.k + o.k};
        if (!unvisited.contains(n) || rejected.contains(n)) continue;
        // The test is against the seed, so a rejection holds for the whole growth.
        const int gd = d_gv(comp.seed, n, conn);
        if (gd >= cfg.tau || ier(comp.seed, n, conn) >= cfg.gamma) {
          rejected.insert(n);
          continue;
        }
        unvisited.erase(n);
        comp.voxels.push_back(n);
        comp.voxel_gd.push_back(gd);
        queue.push_back(n);
      }
    }

    for (std::size_t n = 0; n < comp.voxels.size(); ++n) {
      const auto* members = grid.find(comp.voxels[n]);
      comp.point_indices.insert(comp.point_indices.end(), members->begin(), members->end());
      comp.point_gd.insert(comp.point_gd.end(), members->size(), comp.voxel_gd[n]);
    }

    const bool small = comp.voxels.size() < cfg.min_voxels || comp.point_indices.size() < cfg.min_points;
    (small ? out.residuals : out.components).push_back(std::move(comp));
  }
  return out;
}

std::vector<std::size_t> sort_component_points(const Component& c) {
  // Counting sort over gd buckets; each bucket lists point indices ascending.
  int max_gd = 0;
  for (int gd : c.point_gd) max_gd = std::max(max_gd, gd);
  std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(max_gd) + 1);
  for (std::size_t n = 0; n < c.point_indices.size(); ++n) {
    buckets[static_cast<std::size_t>(c.point_gd[n])].push_back(c.point_indices[n]);
  }
  std::vector<std::size_t> out;
  out.reserve(c.point_indices.size());
  for (auto& bucket : buckets) {
    std::sort(bucket.begin(), bucket.end());
    out.insert(out.end(), bucket.begin(), bucket.end());
  }
  return out;
}

void annotate_components(PointCloud& cloud, const Decomposition& dec) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> component(cloud.size(), nan);
  std::vector<double> gd(cloud.size(), nan);
  std::vector<double> residual(cloud.size(), nan);
  auto assign = [&](const std::vector<Component>& list, double is_residual) {
    for (const Component& c : list) {
      for (std::size_t n = 0; n < c.point_indices.size(); ++n) {
        const std::size_t p = c.point_indices[n];
        if (p >= cloud.size()) throw ValidationError("cloud", "decomposition refers to point " + std::to_string(p));
        component[p] = static_cast<double>(c.id);
        gd[p] = c.point_gd[n];
        residual[p] = is_residual;
      }
    }
  };
  assign(dec.components, 0.0);
  assign(dec.residuals, 1.0);
  cloud.set_column("component_id", std::move(component));
  cloud.set_column("gd", std::move(gd));
  cloud.set_column("residual", std::move(residual));
}

}  // namespace leafwood
