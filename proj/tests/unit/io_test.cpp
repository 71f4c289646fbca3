// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafwood/io.hpp"

#include <cmath>
#include <random>
#include <set>
#include <tuple>

#include "doctest.h"
#include "leafwood/error.hpp"
#include "test_util.hpp"

using namespace leafwood;
using testutil::TempDir;
using testutil::write_text;

TEST_CASE("parse_csv reads coordinates only") {
  TempDir dir("io");
  write_text(dir.file("a.csv"), "x,y,z\n0,0,0\n1,2,3\n-1.5,2.25,1e-3\n");
  const PointCloud cloud = io::parse_csv(dir.file("a.csv"));
  REQUIRE(cloud.size() == 3);
  CHECK(cloud.points[2].x == -1.5);
  CHECK(cloud.points[2].z == 1e-3);
  CHECK_FALSE(cloud.any_label());
  CHECK_FALSE(cloud.any_intensity());
}

TEST_CASE("parse_csv keeps labels and accepts columns in any order") {
  TempDir dir("io");
  write_text(dir.file("a.csv"), "label,z,X,y,tree_id\n-1,0,0,0,3\n0,1,1,1,3\n1,2,2,2,4\n");
  const PointCloud cloud = io::parse_csv(dir.file("a.csv"));
  REQUIRE(cloud.size() == 3);
  CHECK(cloud.points[0].label == Label::unknown);
  CHECK(cloud.points[1].label == Label::leaf);
  CHECK(cloud.points[2].label == Label::wood);
  CHECK(cloud.points[2].x == 2.0);
  CHECK(cloud.points[2].tree_id == 4);
}

TEST_CASE("parse_csv error paths") {
  TempDir dir("io");
  SUBCASE("non-numeric coordinate names the line") {
    write_text(dir.file("bad.csv"), "x,y,z\n0,0,0\n1.0,2.0,abc\n");
    try {
      io::parse_csv(dir.file("bad.csv"));
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
      CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
  }
  SUBCASE("missing required column") {
    write_text(dir.file("nz.csv"), "x,y\n0,0\n");
    CHECK_THROWS_AS(io::parse_csv(dir.file("nz.csv")), SchemaError);
  }
  SUBCASE("label outside {-1,0,1}") {
    write_text(dir.file("l.csv"), "x,y,z,label\n0,0,0,2\n");
    CHECK_THROWS_AS(io::parse_csv(dir.file("l.csv")), ParseError);
  }
  SUBCASE("negative tree id") {
    write_text(dir.file("t.csv"), "x,y,z,tree_id\n0,0,0,-4\n");
    CHECK_THROWS_AS(io::parse_csv(dir.file("t.csv")), ParseError);
  }
  SUBCASE("infinite coordinate") {
    write_text(dir.file("i.csv"), "x,y,z\n0,inf,0\n");
    CHECK_THROWS_AS(io::parse_csv(dir.file("i.csv")), ParseError);
  }
  SUBCASE("wrong field count") {
    write_text(dir.file("w.csv"), "x,y,z\n0,0\n");
    CHECK_THROWS_AS(io::parse_csv(dir.file("w.csv")), ParseError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(io::parse_csv(dir.file("none.csv")), IoError); }
}

TEST_CASE("parse_csv column map and empty optional cells") {
  TempDir dir("io");
  write_text(dir.file("a.csv"), "E,N,H,class,reflectance\n1,2,3,,-12.5\n4,5,6,1,\n");
  io::ColumnMap map;
  map.aliases = {{"E", "x"}, {"N", "y"}, {"H", "z"}, {"class", "label"}, {"reflectance", "intensity"}};
  const PointCloud cloud = io::parse_csv(dir.file("a.csv"), map);
  REQUIRE(cloud.size() == 2);
  CHECK(cloud.points[0].y == 2.0);
  CHECK_FALSE(cloud.points[0].label.has_value());
  CHECK(cloud.points[0].intensity == -12.5);
  CHECK(cloud.points[1].label == Label::wood);
  CHECK_FALSE(cloud.points[1].intensity.has_value());
}

TEST_CASE("write_csv then parse_csv round-trips arbitrary clouds") {
  TempDir dir("io");
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> coord(-500.0, 500.0);
    std::uniform_int_distribution<int> label(-1, 1);
    std::uniform_int_distribution<std::int64_t> tree(0, 1'000'000);
    PointCloud cloud;
    for (int n = 0; n < 100; ++n) {
      Point p;
      p.x = coord(gen);
      p.y = coord(gen);
      p.z = coord(gen);
      if (n % 3) p.intensity = coord(gen) / 10.0;
      p.label = *label_from_int(label(gen));
      p.tree_id = tree(gen);
      cloud.points.push_back(p);
    }
    const std::string path = dir.file("rt" + std::to_string(seed) + ".csv");
    io::write_csv(cloud, path);
    const PointCloud back = io::parse_csv(path);
    REQUIRE(back.size() == cloud.size());
    for (std::size_t n = 0; n < cloud.size(); ++n) {
      CHECK(std::abs(back.points[n].x - cloud.points[n].x) <= 1e-6);
      CHECK(std::abs(back.points[n].y - cloud.points[n].y) <= 1e-6);
      CHECK(std::abs(back.points[n].z - cloud.points[n].z) <= 1e-6);
      CHECK(back.points[n].label == cloud.points[n].label);
      CHECK(back.points[n].tree_id == cloud.points[n].tree_id);
      CHECK(back.points[n].intensity.has_value() == cloud.points[n].intensity.has_value());
    }
  }
}

TEST_CASE("write_csv edge cases") {
  TempDir dir("io");
  SUBCASE("empty cloud gives a header-only file") {
    io::write_csv(PointCloud{}, dir.file("e.csv"));
    CHECK(testutil::read_text(dir.file("e.csv")) == "x,y,z\n");
    CHECK(io::parse_csv(dir.file("e.csv")).empty());
  }
  SUBCASE("extra column is written and read back") {
    PointCloud cloud = testutil::random_cloud(5, 3);
    cloud.set_column("p_wood", {0.1, 0.2, 0.3, 0.4, 0.5});
    io::write_csv(cloud, dir.file("p.csv"));
    const PointCloud back = io::parse_csv(dir.file("p.csv"));
    REQUIRE(back.has_column("p_wood"));
    CHECK(back.column("p_wood")[3] == 0.4);
  }
  SUBCASE("unwritable path") {
    CHECK_THROWS_AS(io::write_csv(PointCloud{}, dir.file("missing/dir/x.csv")), IoError);
  }
}

TEST_CASE("read_ply maps vertex properties by name") {
  TempDir dir("io");
  write_text(dir.file("a.ply"),
             "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n"
             "property int label\nelement face 0\nproperty list uchar int vertex_indices\nend_header\n"
             "1 2 3 1\n4 5 6 0\n");
  const PointCloud cloud = io::read_cloud(dir.file("a.ply"));
  REQUIRE(cloud.size() == 2);
  CHECK(cloud.points[1].z == 6.0);
  CHECK(cloud.points[0].label == Label::wood);

  write_text(dir.file("b.ply"), "ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n");
  CHECK_THROWS(io::read_ply(dir.file("b.ply")));
}

namespace {

PointCloud with_intensities(std::initializer_list<double> values) {
  PointCloud cloud;
  for (double v : values) {
    Point p;
    p.intensity = v;
    p.z = v;
    cloud.points.push_back(p);
  }
  return cloud;
}

}  // namespace

TEST_CASE("filter_quality keeps the boundary and filters only on present fields") {
  const PointCloud kept = io::filter_quality(with_intensities({-25.0, -20.0, -10.0}), -20.0, INFINITY);
  REQUIRE(kept.size() == 2);
  CHECK(kept.points[0].intensity == -20.0);
  CHECK(kept.points[1].intensity == -10.0);

  const PointCloud plain = testutil::random_cloud(20, 9);
  CHECK(io::filter_quality(plain, -20.0, 0.5).size() == 20);

  CHECK(io::filter_quality(with_intensities({-40.0, -30.0}), -20.0, INFINITY).empty());

  PointCloud dev = with_intensities({-5.0, -5.0, -5.0});
  dev.points[0].deviation = 3.0;
  dev.points[1].deviation = 10.0;
  const PointCloud d = io::filter_quality(dev, -20.0, 5.0);
  REQUIRE(d.size() == 2);
  CHECK(d.points[0].deviation == 3.0);
  CHECK_FALSE(d.points[1].deviation.has_value());
}

TEST_CASE("filter_quality output is an order-preserving subsequence") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> db(-40.0, 0.0);
  PointCloud cloud;
  for (int n = 0; n < 500; ++n) {
    Point p;
    p.x = n;
    if (n % 7) p.intensity = db(gen);
    if (n % 5) p.deviation = db(gen) / -4.0;
    cloud.points.push_back(p);
  }
  cloud.set_column("id", [&] {
    std::vector<double> ids(cloud.size());
    for (std::size_t n = 0; n < ids.size(); ++n) ids[n] = static_cast<double>(n);
    return ids;
  }());
  const PointCloud out = io::filter_quality(cloud, -20.0, 6.0);
  double previous = -1.0;
  for (std::size_t n = 0; n < out.size(); ++n) {
    const double id = out.column("id")[n];
    CHECK(id > previous);
    CHECK(out.points[n].x == id);
    previous = id;
    const Point& p = out.points[n];
    CHECK((!p.intensity || *p.intensity >= -20.0));
    CHECK((!p.deviation || *p.deviation <= 6.0));
  }
}

TEST_CASE("subsample_precision") {
  SUBCASE("near-coincident points collapse to the first") {
    PointCloud cloud;
    cloud.points.resize(2);
    cloud.points[0].x = 1.0000;
    cloud.points[1].x = 1.0004;
    cloud.points[0].label = Label::leaf;
    cloud.points[1].label = Label::wood;
    const PointCloud out = io::subsample_precision(cloud, 0.001);
    REQUIRE(out.size() == 1);
    CHECK(out.points[0].label == Label::leaf);
    CHECK(out.points[0].x == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("well separated points survive") {
    PointCloud cloud;
    for (int n = 0; n < 50; ++n) {
      Point p;
      p.x = 0.002 * n;
      p.y = 0.0031 * n;
      cloud.points.push_back(p);
    }
    CHECK(io::subsample_precision(cloud, 0.001).size() == 50);
  }
  SUBCASE("survivor count equals distinct quantized cells") {
    const PointCloud cloud = testutil::random_cloud(10000, 21);
    std::set<std::tuple<long long, long long, long long>> cells;
    for (const Point& p : cloud.points) {
      cells.emplace(std::llround(p.x / 0.001), std::llround(p.y / 0.001), std::llround(p.z / 0.001));
    }
    CHECK(io::subsample_precision(cloud, 0.001).size() == cells.size());
  }
  SUBCASE("idempotent") {
    const PointCloud cloud = testutil::random_cloud(3000, 5, 0.0, 0.05);
    const PointCloud once = io::subsample_precision(cloud, 0.002);
    const PointCloud twice = io::subsample_precision(once, 0.002);
    REQUIRE(once.size() == twice.size());
    for (std::size_t n = 0; n < once.size(); ++n) {
      CHECK(once.points[n].x == twice.points[n].x);
      CHECK(once.points[n].y == twice.points[n].y);
      CHECK(once.points[n].z == twice.points[n].z);
    }
  }
  SUBCASE("precision must be positive") {
    CHECK_THROWS_AS(io::subsample_precision(testutil::random_cloud(3, 1), 0.0), ValidationError);
  }
}
