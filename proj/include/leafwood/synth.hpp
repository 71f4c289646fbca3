// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFWOOD_SYNTH_HPP
#define LEAFWOOD_SYNTH_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "leafwood/point_cloud.hpp"

namespace leafwood {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Synthetic stand: cylinder trunks with a few branches below ellipsoid crowns.
/// Lengths in metres.
struct ForestParams {
  std::size_t trees = 50;
  Range trunk_height{8.0, 14.0};
  Range trunk_radius{0.10, 0.25};
  std::size_t branches = 6;
  Range crown_radius_xy{2.0, 3.5};
  Range crown_radius_z{2.0, 4.0};
  std::size_t points_per_tree = 20000;
  double wood_fraction = 0.05;
  double noise = 0.01;      // Gaussian jitter sigma
  double spacing = 10.0;    // distance between neighbouring stems on the planting grid
  std::uint64_t seed = 7;

  /// Throws ValidationError naming the offending "synth.*" field.
  void validate() const;
};

enum class TreePart : std::uint8_t { trunk, branch, crown };

struct Forest {
  PointCloud cloud;             // labeled, tree_id from 1
  std::vector<TreePart> parts;  // aligned with cloud.points
};

Forest generate_forest(const ForestParams& params, unsigned threads = 1);

inline PointCloud generate(const ForestParams& params, unsigned threads = 1) {
  return generate_forest(params, threads).cloud;
}

}  // namespace leafwood

#endif  // LEAFWOOD_SYNTH_HPP
