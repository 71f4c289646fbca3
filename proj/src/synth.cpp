// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafwood/synth.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "leafwood/error.hpp"
#include "leafwood/parallel.hpp"
#include "leafwood/rng.hpp"

namespace leafwood {

namespace {

void check_range(const Range& r, const char* field) {
  if (!(r.lo > 0.0) || !(r.hi >= r.lo) || !std::isfinite(r.hi)) {
    throw ValidationError(field, "range must satisfy 0 < lo <= hi");
  }
}

double draw(Rng& rng, const Range& r) { return r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi); }

struct Cylinder {
  Vec3 base;
  Vec3 axis;  // unit
  double length;
  double radius;

  double area() const { return 2.0 * std::numbers::pi * radius * length; }
};

// Two unit vectors completing `axis` to an orthonormal frame.
void frame(const Vec3& a, Vec3& u, Vec3& v) {
  const Vec3 helper = std::abs(a[2]) < 0.9 ? Vec3{0.0, 0.0, 1.0} : Vec3{1.0, 0.0, 0.0};
  u = {a[1] * helper[2] - a[2] * helper[1], a[2] * helper[0] - a[0] * helper[2], a[0] * helper[1] - a[1] * helper[0]};
  const double n = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
  for (double& x : u) x /= n;
  v = {a[1] * u[2] - a[2] * u[1], a[2] * u[0] - a[0] * u[2], a[0] * u[1] - a[1] * u[0]};
}

Vec3 on_cylinder(const Cylinder& c, Rng& rng) {
  Vec3 u;
  Vec3 v;
  frame(c.axis, u, v);
  const double t = rng.uniform() * c.length;
  const double theta = rng.uniform() * 2.0 * std::numbers::pi;
  const double cu = c.radius * std::cos(theta);
  const double cv = c.radius * std::sin(theta);
  Vec3 p;
  for (int d = 0; d < 3; ++d) p[d] = c.base[d] + t * c.axis[d] + cu * u[d] + cv * v[d];
  return p;
}

void generate_tree(const ForestParams& params, std::int64_t tree_id, const Vec3& stem, Forest& out,
                   std::size_t offset) {
  Rng rng(Rng::derive(params.seed, static_cast<std::uint64_t>(tree_id)));
  const double height = draw(rng, params.trunk_height);
  const double radius = draw(rng, params.trunk_radius);
  const double crown_xy = draw(rng, params.crown_radius_xy);
  const double crown_z = draw(rng, params.crown_radius_z);

  std::vector<Cylinder> wood{{stem, {0.0, 0.0, 1.0}, height, radius}};
  for (std::size_t b = 0; b < params.branches; ++b) {
    const double start = height * rng.uniform(0.85, 1.0);
    const double azimuth = rng.uniform() * 2.0 * std::numbers::pi;
    const double elevation = rng.uniform(0.5, 1.0);  // radians above horizontal
    const Vec3 axis{std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
                    std::sin(elevation)};
    const double length = rng.uniform(0.5, 0.9) * std::min(crown_xy, crown_z);
    wood.push_back({{stem[0], stem[1], stem[2] + start}, axis, length, 0.4 * radius});
  }

  // Exact wood count, shared between cylinders by surface area (largest remainder).
  const std::size_t n = params.points_per_tree;
  const auto n_wood = static_cast<std::size_t>(std::llround(static_cast<double>(n) * params.wood_fraction));
  double total_area = 0.0;
  for (const Cylinder& c : wood) total_area += c.area();
  std::vector<std::size_t> share(wood.size());
  std::vector<double> remainder(wood.size());
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < wood.size(); ++c) {
    const double exact = static_cast<double>(n_wood) * wood[c].area() / total_area;
    share[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - static_cast<double>(share[c]);
    assigned += share[c];
  }
  for (; assigned < n_wood; ++assigned) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < wood.size(); ++c) {
      if (remainder[c] > remainder[best]) best = c;
    }
    ++share[best];
    remainder[best] = -1.0;
  }

  std::size_t row = offset;
  auto emit = [&](Vec3 p, Label label, TreePart part) {
    Point& pt = out.cloud.points[row];
    pt.x = p[0] + params.noise * rng.normal();
    pt.y = p[1] + params.noise * rng.normal();
    pt.z = p[2] + params.noise * rng.normal();
    pt.label = label;
    pt.tree_id = tree_id;
    out.parts[row] = part;
    ++row;
  };
  for (std::size_t c = 0; c < wood.size(); ++c) {
    for (std::size_t s = 0; s < share[c]; ++s) {
      emit(on_cylinder(wood[c], rng), Label::wood, c == 0 ? TreePart::trunk : TreePart::branch);
    }
  }
  const Vec3 centre{stem[0], stem[1], stem[2] + height + crown_z};
  for (std::size_t s = n_wood; s < n; ++s) {
    double x;
    double y;
    double z;
    do {
      x = rng.uniform(-1.0, 1.0);
      y = rng.uniform(-1.0, 1.0);
      z = rng.uniform(-1.0, 1.0);
    } while (x * x + y * y + z * z > 1.0);
    emit({centre[0] + crown_xy * x, centre[1] + crown_xy * y, centre[2] + crown_z * z}, Label::leaf, TreePart::crown);
  }
}

}  // namespace

void ForestParams::validate() const {
  if (trees == 0) throw ValidationError("synth.trees", "must be >= 1");
  check_range(trunk_height, "synth.trunk_height");
  check_range(trunk_radius, "synth.trunk_radius");
  check_range(crown_radius_xy, "synth.crown_radius_xy");
  check_range(crown_radius_z, "synth.crown_radius_z");
  if (points_per_tree == 0) throw ValidationError("synth.points_per_tree", "must be >= 1");
  if (!(wood_fraction > 0.0 && wood_fraction < 1.0)) {
    throw ValidationError("synth.wood_fraction", "must lie strictly between 0 and 1");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ValidationError("synth.noise", "must be >= 0");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw ValidationError("synth.spacing", "must be > 0");
}

Forest generate_forest(const ForestParams& params, unsigned threads) {
  params.validate();
  Forest out;
  const std::size_t total = params.trees * params.points_per_tree;
  out.cloud.points.resize(total);
  out.parts.resize(total);

  // Square planting grid with a small per-stem offset.
  const auto columns = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(params.trees))));
  std::vector<Vec3> stems(params.trees);
  Rng layout(Rng::derive(params.seed, 0));
  for (std::size_t t = 0; t < params.trees; ++t) {
    const double jitter = 0.1 * params.spacing;
    stems[t] = {static_cast<double>(t % columns) * params.spacing + layout.uniform(-jitter, jitter),
                static_cast<double>(t / columns) * params.spacing + layout.uniform(-jitter, jitter), 0.0};
  }
  parallel_for(params.trees, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      generate_tree(params, static_cast<std::int64_t>(t + 1), stems[t], out, t * params.points_per_tree);
    }
  });
  return out;
}

}  // namespace leafwood
