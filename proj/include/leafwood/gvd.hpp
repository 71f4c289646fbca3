// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFWOOD_GVD_HPP
#define LEAFWOOD_GVD_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "leafwood/voxel.hpp"

namespace leafwood {

struct GvdConfig {
  int tau = 10;        // exclusive bound on d_gv(seed, voxel)
  double gamma = 1.5;  // exclusive bound on ier(seed, voxel)
  std::size_t min_voxels = 3;
  std::size_t min_points = 100;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// One partition cell: voxels grown from a seed, in admission order.
struct Component {
  std::int64_t id = 0;
  VoxelIndex seed;
  std::vector<VoxelIndex> voxels;       // voxels[0] == seed
  std::vector<int> voxel_gd;            // d_gv(seed, voxels[n]); voxel_gd[0] == 0
  std::vector<std::size_t> point_indices;
  std::vector<int> point_gd;            // aligned with point_indices

  std::optional<int> gd_of(const VoxelIndex& v) const;
};

struct Decomposition {
  std::vector<Component> components;  // accepted
  std::vector<Component> residuals;   // below min_voxels or min_points

  std::size_t total_points() const;
};

/// Lowest voxel on the vertical axis: minimum k, ties by i then j.
VoxelIndex select_seed(std::span<const VoxelIndex> unvisited);

/// Partitions every occupied voxel of `grid` into components.
///
/// Repeatedly seeds at the lowest unvisited voxel and grows breadth-first over
/// the grid's neighborhood system. A candidate is admitted only when both
/// d_gv(seed, candidate) < tau and ier(seed, candidate) < gamma; rejected
/// candidates stay unvisited and growth does not pass through them. Component
/// ids count from 1 in creation order across accepted and residual components.
Decomposition decompose(const VoxelGrid& grid, const GvdConfig& cfg);

/// Component points ordered by ascending d_gv of their voxel, ties by point index.
std::vector<std::size_t> sort_component_points(const Component& c);

/// Adds component_id, gd and residual (0/1) columns to the cloud the grid was
/// built from. Points outside every component get NaN.
void annotate_components(PointCloud& cloud, const Decomposition& dec);

}  // namespace leafwood

#endif  // LEAFWOOD_GVD_HPP
