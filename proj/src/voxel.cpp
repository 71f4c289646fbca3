// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafwood/voxel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>

#include "leafwood/error.hpp"

namespace leafwood {

namespace {

template <int Limit>
std::vector<VoxelIndex> make_offsets() {
  std::vector<VoxelIndex> out;
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      for (int dk = -1; dk <= 1; ++dk) {
        const int manhattan = std::abs(di) + std::abs(dj) + std::abs(dk);
        if (manhattan == 0 || manhattan > Limit) continue;
        out.push_back({di, dj, dk});
      }
    }
  }
  return out;
}

}  // namespace

Connectivity connectivity_from_int(int n) {
  switch (n) {
    case 6: return Connectivity::six;
    case 18: return Connectivity::eighteen;
    case 26: return Connectivity::twenty_six;
    default: throw ValidationError("connectivity", "must be 6, 18 or 26, got " + std::to_string(n));
  }
}

std::span<const VoxelIndex> neighbor_offsets(Connectivity c) {
  static const std::vector<VoxelIndex> six = make_offsets<1>();
  static const std::vector<VoxelIndex> eighteen = make_offsets<2>();
  static const std::vector<VoxelIndex> twenty_six = make_offsets<3>();
  switch (c) {
    case Connectivity::six: return six;
    case Connectivity::eighteen: return eighteen;
    case Connectivity::twenty_six: break;
  }
  return twenty_six;
}

bool adjacent(const VoxelIndex& a, const VoxelIndex& b, Connectivity c) {
  const long di = std::labs(static_cast<long>(a.i) - b.i);
  const long dj = std::labs(static_cast<long>(a.j) - b.j);
  const long dk = std::labs(static_cast<long>(a.k) - b.k);
  if (std::max({di, dj, dk}) != 1) return false;
  const long manhattan = di + dj + dk;
  switch (c) {
    case Connectivity::six: return manhattan == 1;
    case Connectivity::eighteen: return manhattan <= 2;
    case Connectivity::twenty_six: return true;
  }
  return false;
}

int d_gv(const VoxelIndex& a, const VoxelIndex& b, Connectivity c) {
  if (a == b) return 0;
  if (adjacent(a, b, c)) return 1;
  const long manhattan = std::labs(static_cast<long>(a.i) - b.i) +
                         std::labs(static_cast<long>(a.j) - b.j) +
                         std::labs(static_cast<long>(a.k) - b.k);
  return static_cast<int>(std::min<long>(manhattan, std::numeric_limits<int>::max()));
}

double ier(const VoxelIndex& a, const VoxelIndex& b, Connectivity c) {
  if (a == b) throw ValidationError("ier", "ratio undefined for identical voxels");
  const double di = static_cast<double>(a.i) - b.i;
  const double dj = static_cast<double>(a.j) - b.j;
  const double dk = static_cast<double>(a.k) - b.k;
  return d_gv(a, b, c) / std::sqrt(di * di + dj * dj + dk * dk);
}

VoxelGrid::VoxelGrid(double voxel_size, Vec3 origin, Cells cells, Connectivity connectivity)
    : voxel_size_(voxel_size), origin_(origin), cells_(std::move(cells)), connectivity_(connectivity) {
  if (!(voxel_size_ > 0.0)) throw ValidationError("voxel_size", "must be positive");
  for (const auto& [index, members] : cells_) {
    if (members.empty()) throw ValidationError("cells", "stored voxel without points");
    point_count_ += members.size();
  }
}

const std::vector<std::size_t>* VoxelGrid::find(const VoxelIndex& v) const {
  auto it = cells_.find(v);
  return it == cells_.end() ? nullptr : &it->second;
}

std::vector<VoxelIndex> VoxelGrid::occupied_voxels() const {
  std::vector<VoxelIndex> out;
  out.reserve(cells_.size());
  for (const auto& entry : cells_) out.push_back(entry.first);
  std::sort(out.begin(), out.end());
  return out;
}

void VoxelGrid::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "i,j,k,point_count\n";
  for (const VoxelIndex& v : occupied_voxels()) {
    out << v.i << ',' << v.j << ',' << v.k << ',' << cells_.at(v).size() << '\n';
  }
}

VoxelIndex voxel_of(const Vec3& p, const Vec3& origin, double voxel_size) {
  std::array<std::int32_t, 3> idx{};
  for (int a = 0; a < 3; ++a) {
    const double f = std::floor((p[a] - origin[a]) / voxel_size);
    if (!(std::abs(f) < static_cast<double>(std::numeric_limits<std::int32_t>::max()))) {
      throw ValidationError("voxel_size", "voxel index out of range; voxel size too small for the extent");
    }
    idx[a] = static_cast<std::int32_t>(f);
  }
  return {idx[0], idx[1], idx[2]};
}

VoxelGrid voxelize(const PointCloud& cloud, double voxel_size, Connectivity connectivity) {
  if (cloud.empty()) throw ValidationError("cloud", "cannot voxelize an empty cloud");
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
    throw ValidationError("voxel_size", "must be a positive finite number");
  }
  Vec3 origin = cloud.points.front().xyz();
  for (const Point& p : cloud.points) {
    origin[0] = std::min(origin[0], p.x);
    origin[1] = std::min(origin[1], p.y);
    origin[2] = std::min(origin[2], p.z);
  }
  VoxelGrid::Cells cells;
  for (std::size_t n = 0; n < cloud.size(); ++n) {
    cells[voxel_of(cloud.points[n].xyz(), origin, voxel_size)].push_back(n);
  }
  return VoxelGrid(voxel_size, origin, std::move(cells), connectivity);
}

}  // namespace leafwood
