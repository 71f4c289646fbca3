// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafwood/batching.hpp"

#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "leafwood/error.hpp"
#include "test_util.hpp"

using namespace leafwood;

namespace {

ComponentRows component_rows(std::size_t n, std::int64_t id, std::size_t width = 2) {
  ComponentRows rows;
  rows.component_id = id;
  rows.feature_width = width;
  for (std::size_t i = 0; i < n; ++i) {
    rows.sources.push_back(1000 + i);
    rows.coords.push_back({0.001 * static_cast<double>(i), 0.0, 0.0});
    for (std::size_t w = 0; w < width; ++w) rows.features.push_back(static_cast<double>(i) + 0.1 * w);
    rows.labels.push_back(static_cast<int>(i % 2));
  }
  return rows;
}

// Three components with shuffled gd; extra column "tag" identifies points.
PointCloud component_cloud() {
  PointCloud cloud = testutil::random_cloud(60, 4, 0.0, 3.0);
  std::vector<double> comp(60), gd(60), residual(60), f0(60), f1(60);
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<int> g(0, 5);
  for (std::size_t n = 0; n < 60; ++n) {
    comp[n] = static_cast<double>(n % 3 + 1);
    gd[n] = g(gen);
    residual[n] = comp[n] == 3 ? 1.0 : 0.0;
    f0[n] = static_cast<double>(n);
    f1[n] = -static_cast<double>(n);
    cloud.points[n].label = n % 4 == 0 ? Label::wood : Label::leaf;
  }
  cloud.set_column("component_id", comp);
  cloud.set_column("gd", gd);
  cloud.set_column("residual", residual);
  cloud.set_column("feat_a", f0);
  cloud.set_column("feat_b", f1);
  return cloud;
}

}  // namespace

TEST_CASE("normalize_component divides by the longest extent") {
  const std::vector<Vec3> pts{{2, 0, 5}, {4, 10, 8}, {3, 5, 6}};
  const NormalizedComponent n = normalize_component(pts);
  CHECK(n.transform.scale == 10.0);
  CHECK(n.coords[1] == Vec3{0.2, 1.0, 0.3});
  CHECK(n.coords[0] == Vec3{0.0, 0.0, 0.0});
  CHECK_FALSE(n.transform.degenerate);
}

TEST_CASE("normalize_component degenerate and unit cube") {
  const std::vector<Vec3> single{{7, -3, 2}};
  const NormalizedComponent s = normalize_component(single);
  CHECK(s.coords[0] == Vec3{0, 0, 0});
  CHECK(s.transform.degenerate);
  CHECK(s.transform.scale == 1.0);

  std::vector<Vec3> cube;
  for (int c = 0; c < 8; ++c) cube.push_back({12.5 + (c & 1), -4.0 + ((c >> 1) & 1), 100.0 + ((c >> 2) & 1)});
  const NormalizedComponent u = normalize_component(cube);
  for (int c = 0; c < 8; ++c) {
    CHECK(u.coords[c] == Vec3{double(c & 1), double((c >> 1) & 1), double((c >> 2) & 1)});
  }
  CHECK_THROWS_AS(normalize_component(std::span<const Vec3>{}), ValidationError);
}

TEST_CASE("denormalize inverts normalization") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const PointCloud cloud = testutil::random_cloud(200, seed, -50.0, 80.0);
    const auto pts = coordinates(cloud);
    const NormalizedComponent n = normalize_component(pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (int a = 0; a < 3; ++a) {
        CHECK(n.coords[i][a] >= 0.0);
        CHECK(n.coords[i][a] <= 1.0);
      }
      const Vec3 back = denormalize(n.coords[i], n.transform);
      for (int a = 0; a < 3; ++a) CHECK(std::abs(back[a] - pts[i][a]) <= 1e-9);
    }
  }
}

TEST_CASE("make_batches sizes and padding") {
  SUBCASE("4500 rows") {
    const auto batches = make_batches(component_rows(4500, 1), 3000, 7);
    REQUIRE(batches.size() == 2);
    CHECK(batches[0].rows() == 3000);
    CHECK(batches[1].rows() == 3000);
    for (std::size_t r = 0; r < 1500; ++r) CHECK(batches[1].sources[r] == 1000 + 3000 + r);
    CHECK(batches[0].width == 5);
  }
  SUBCASE("exact fit") {
    const auto batches = make_batches(component_rows(3000, 1), 3000, 7);
    REQUIRE(batches.size() == 1);
    std::set<std::size_t> distinct(batches[0].sources.begin(), batches[0].sources.end());
    CHECK(distinct.size() == 3000);
  }
  SUBCASE("small component is padded reproducibly") {
    const auto a = make_batches(component_rows(10, 4), 3000, 7);
    const auto b = make_batches(component_rows(10, 4), 3000, 7);
    REQUIRE(a.size() == 1);
    CHECK(a[0].rows() == 3000);
    CHECK(a[0].sources == b[0].sources);
    CHECK(a[0].inputs == b[0].inputs);
    const auto c = make_batches(component_rows(10, 4), 3000, 8);
    CHECK(c[0].sources != a[0].sources);
  }
  SUBCASE("rows carry their own features and labels") {
    const auto batches = make_batches(component_rows(25, 2, 3), 8, 1);
    for (const Batch& b : batches) {
      for (std::size_t r = 0; r < b.rows(); ++r) {
        const std::size_t i = b.sources[r] - 1000;
        CHECK(b.row(r)[0] == 0.001 * static_cast<double>(i));
        CHECK(b.row(r)[3] == static_cast<double>(i));
        CHECK(b.labels[r] == static_cast<int>(i % 2));
      }
    }
  }
  CHECK_THROWS_AS(make_batches(component_rows(0, 1), 3000, 7), ValidationError);
}

TEST_CASE("batch_cloud orders rows by gd and skips residuals") {
  const PointCloud cloud = component_cloud();
  BatchOptions opts;
  opts.batch_size = 30;
  const BatchedCloud batched = batch_cloud(cloud, opts);
  REQUIRE(batched.batches.size() == 2);
  CHECK(batched.transforms.size() == 2);
  std::set<std::size_t> covered;
  for (const Batch& b : batched.batches) {
    CHECK(b.width == 5);
    // First 20 rows are the component's points, sorted by (gd, index).
    for (std::size_t r = 0; r < 20; ++r) {
      covered.insert(b.sources[r]);
      CHECK(cloud.column("component_id")[b.sources[r]] == static_cast<double>(b.component_id));
      CHECK(b.row(r)[3] == static_cast<double>(b.sources[r]));
      if (r > 0) {
        const double g0 = cloud.column("gd")[b.sources[r - 1]];
        const double g1 = cloud.column("gd")[b.sources[r]];
        CHECK((g0 < g1 || (g0 == g1 && b.sources[r - 1] < b.sources[r])));
      }
    }
  }
  CHECK(covered.size() == 40);

  opts.include_residual = true;
  const BatchedCloud with_residual = batch_cloud(cloud, opts);
  CHECK(with_residual.batches.size() == 3);
}

TEST_CASE("component batches do not depend on the other components") {
  const PointCloud cloud = component_cloud();
  BatchOptions opts;
  opts.batch_size = 32;
  const BatchedCloud full = batch_cloud(cloud, opts);
  std::vector<std::size_t> only_two;
  for (std::size_t n = 0; n < cloud.size(); ++n) {
    if (cloud.column("component_id")[n] == 2.0) only_two.push_back(n);
  }
  const BatchedCloud part = batch_cloud(cloud.select(only_two), opts);
  REQUIRE(part.batches.size() == 1);
  const Batch& a = full.batches[1];
  const Batch& b = part.batches[0];
  REQUIRE(a.component_id == 2);
  CHECK(a.inputs == b.inputs);
  for (std::size_t r = 0; r < a.rows(); ++r) CHECK(a.sources[r] == only_two[b.sources[r]]);
}

TEST_CASE("batch_cloud requires component columns") {
  PointCloud cloud = testutil::random_cloud(5, 1);
  CHECK_THROWS_AS(batch_cloud(cloud, {}), SchemaError);
}

TEST_CASE("batch files round-trip") {
  testutil::TempDir dir("batch");
  const PointCloud cloud = component_cloud();
  BatchOptions opts;
  opts.batch_size = 16;
  const BatchedCloud batched = batch_cloud(cloud, opts);
  write_batches(batched, feature_columns(cloud), dir.file("out"));
  const auto back = read_batches(dir.file("out"));
  REQUIRE(back.size() == batched.batches.size());
  for (std::size_t b = 0; b < back.size(); ++b) {
    CHECK(back[b].component_id == batched.batches[b].component_id);
    CHECK(back[b].sources == batched.batches[b].sources);
    CHECK(back[b].labels == batched.batches[b].labels);
    CHECK(back[b].inputs == batched.batches[b].inputs);
  }
  CHECK(std::filesystem::exists(dir.file("out/transforms.csv")));
  CHECK_THROWS_AS(read_batches(dir.file("nowhere")), IoError);
}
