// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFWOOD_VOXEL_HPP
#define LEAFWOOD_VOXEL_HPP

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "leafwood/point_cloud.hpp"

namespace leafwood {

struct VoxelIndex {
  std::int32_t i = 0;
  std::int32_t j = 0;
  std::int32_t k = 0;

  auto operator<=>(const VoxelIndex&) const = default;
};

struct VoxelIndexHash {
  std::size_t operator()(const VoxelIndex& v) const {
    std::uint64_t h = static_cast<std::uint32_t>(v.i);
    h = h * 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint32_t>(v.j);
    h = h * 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint32_t>(v.k);
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

/// Neighborhood system on the voxel lattice: face (6), face+edge (18) or
/// face+edge+corner (26) adjacency.
enum class Connectivity { six = 6, eighteen = 18, twenty_six = 26 };

Connectivity connectivity_from_int(int n);

bool adjacent(const VoxelIndex& a, const VoxelIndex& b, Connectivity c = Connectivity::twenty_six);

/// Neighbor offsets in lexicographic (di, dj, dk) order.
std::span<const VoxelIndex> neighbor_offsets(Connectivity c);

/// Voxel-space distance: 0 for the same voxel, 1 for adjacent voxels,
/// otherwise the Manhattan distance between the integer indices.
int d_gv(const VoxelIndex& a, const VoxelIndex& b, Connectivity c = Connectivity::twenty_six);

/// d_gv divided by the Euclidean distance between the integer indices.
/// Throws ValidationError when a == b.
double ier(const VoxelIndex& a, const VoxelIndex& b, Connectivity c = Connectivity::twenty_six);

/// Sparse occupancy grid. Every stored cell holds at least one point index
/// and every point index of the source cloud is stored in exactly one cell.
/// Immutable once built.
class VoxelGrid {
 public:
  using Cells = std::unordered_map<VoxelIndex, std::vector<std::size_t>, VoxelIndexHash>;

  VoxelGrid(double voxel_size, Vec3 origin, Cells cells, Connectivity connectivity = Connectivity::twenty_six);

  double voxel_size() const { return voxel_size_; }
  const Vec3& origin() const { return origin_; }
  Connectivity connectivity() const { return connectivity_; }

  std::size_t cell_count() const { return cells_.size(); }
  std::size_t point_count() const { return point_count_; }

  /// Points of an occupied voxel, or nullptr.
  const std::vector<std::size_t>* find(const VoxelIndex& v) const;
  bool occupied(const VoxelIndex& v) const { return find(v) != nullptr; }

  /// Occupied voxels in ascending (i, j, k) order.
  std::vector<VoxelIndex> occupied_voxels() const;

  const Cells& cells() const { return cells_; }

  /// Debug dump: i,j,k,point_count in ascending index order.
  void write_csv(const std::string& path) const;

 private:
  double voxel_size_;
  Vec3 origin_;
  Cells cells_;
  Connectivity connectivity_;
  std::size_t point_count_ = 0;
};

/// Index of the voxel holding `p`: floor((p - origin) / s) per axis.
VoxelIndex voxel_of(const Vec3& p, const Vec3& origin, double voxel_size);

/// Voxelizes with the origin at the axis-wise coordinate minimum.
VoxelGrid voxelize(const PointCloud& cloud, double voxel_size,
                   Connectivity connectivity = Connectivity::twenty_six);

}  // namespace leafwood

#endif  // LEAFWOOD_VOXEL_HPP
