// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafwood/batching.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "leafwood/csv.hpp"
#include "leafwood/error.hpp"
#include "leafwood/rng.hpp"

namespace leafwood {

namespace fs = std::filesystem;

NormalizedComponent normalize_component(std::span<const Vec3> points) {
  if (points.empty()) throw ValidationError("points", "cannot normalize an empty component");
  Vec3 lo = points.front();
  Vec3 hi = lo;
  for (const Vec3& p : points) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  NormalizedComponent out;
  out.transform.shift = lo;
  const double extent = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
  if (extent > 0.0) {
    out.transform.scale = extent;
  } else {
    out.transform.scale = 1.0;
    out.transform.degenerate = true;
  }
  out.coords.reserve(points.size());
  for (const Vec3& p : points) {
    Vec3 q{};
    for (int a = 0; a < 3; ++a) q[a] = std::clamp((p[a] - lo[a]) / out.transform.scale, 0.0, 1.0);
    out.coords.push_back(q);
  }
  return out;
}

Vec3 denormalize(const Vec3& p, const NormalizationTransform& t) {
  return {p[0] * t.scale + t.shift[0], p[1] * t.scale + t.shift[1], p[2] * t.scale + t.shift[2]};
}

namespace {

void append_row(const ComponentRows& rows, std::size_t n, Batch& batch) {
  batch.inputs.insert(batch.inputs.end(), rows.coords[n].begin(), rows.coords[n].end());
  const auto first = rows.features.begin() + static_cast<std::ptrdiff_t>(n * rows.feature_width);
  batch.inputs.insert(batch.inputs.end(), first, first + static_cast<std::ptrdiff_t>(rows.feature_width));
  batch.labels.push_back(rows.labels[n]);
  batch.sources.push_back(rows.sources[n]);
}

}  // namespace

std::vector<Batch> make_batches(const ComponentRows& rows, std::size_t batch_size, std::uint64_t seed) {
  const std::size_t n = rows.sources.size();
  if (n == 0) throw ValidationError("component", "cannot batch an empty component");
  if (batch_size == 0) throw ValidationError("batch.size", "must be >= 1");
  if (rows.coords.size() != n || rows.labels.size() != n || rows.features.size() != n * rows.feature_width) {
    throw ValidationError("component", "row arrays have inconsistent lengths");
  }

  std::vector<Batch> out;
  const std::size_t count = (n + batch_size - 1) / batch_size;
  Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(rows.component_id)));
  for (std::size_t b = 0; b < count; ++b) {
    Batch batch;
    batch.component_id = rows.component_id;
    batch.width = 3 + rows.feature_width;
    batch.inputs.reserve(batch_size * batch.width);
    const std::size_t begin = b * batch_size;
    const std::size_t end = std::min(n, begin + batch_size);
    for (std::size_t r = begin; r < end; ++r) append_row(rows, r, batch);
    while (batch.rows() < batch_size) append_row(rows, rng.below(n), batch);
    out.push_back(std::move(batch));
  }
  return out;
}

std::vector<std::string> feature_columns(const PointCloud& cloud) {
  std::vector<std::string> out;
  for (const auto& name : cloud.column_names()) {
    if (name.rfind("feat_", 0) == 0) out.push_back(name);
  }
  return out;
}

BatchedCloud batch_cloud(const PointCloud& cloud, const BatchOptions& options) {
  const auto& component = cloud.column("component_id");
  const auto& gd = cloud.column("gd");
  const std::vector<double>* residual = cloud.has_column("residual") ? &cloud.column("residual") : nullptr;
  const auto names = feature_columns(cloud);
  std::vector<const std::vector<double>*> feats;
  for (const auto& name : names) feats.push_back(&cloud.column(name));

  // component id -> point indices, ascending
  std::map<std::int64_t, std::vector<std::size_t>> members;
  for (std::size_t n = 0; n < cloud.size(); ++n) {
    if (std::isnan(component[n])) throw ValidationError("component_id", "point " + std::to_string(n) + " has no component");
    if (residual && (*residual)[n] != 0.0 && !options.include_residual) continue;
    members[static_cast<std::int64_t>(component[n])].push_back(n);
  }

  BatchedCloud out;
  for (auto& [id, indices] : members) {
    std::stable_sort(indices.begin(), indices.end(), [&](std::size_t a, std::size_t b) { return gd[a] < gd[b]; });

    std::vector<Vec3> xyz;
    xyz.reserve(indices.size());
    for (std::size_t n : indices) xyz.push_back(cloud.points[n].xyz());
    NormalizedComponent norm = normalize_component(xyz);

    ComponentRows rows;
    rows.component_id = id;
    rows.feature_width = names.size();
    rows.sources = indices;
    rows.coords = std::move(norm.coords);
    rows.features.reserve(indices.size() * names.size());
    for (std::size_t n : indices) {
      for (const auto* col : feats) rows.features.push_back((*col)[n]);
      const auto& label = cloud.points[n].label;
      rows.labels.push_back(label ? to_int(*label) : -1);
    }
    out.transforms[id] = norm.transform;
    auto batches = make_batches(rows, options.batch_size, options.seed);
    std::move(batches.begin(), batches.end(), std::back_inserter(out.batches));
  }
  return out;
}

void write_batch_csv(const Batch& batch, const std::vector<std::string>& feature_names, const std::string& path) {
  if (batch.width != 3 + feature_names.size()) {
    throw ValidationError("batch", "width does not match the feature names");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "component_id,source,nx,ny,nz";
  for (const auto& name : feature_names) out << ',' << name;
  out << ",label\n";
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    out << batch.component_id << ',' << batch.sources[r];
    for (double v : batch.row(r)) out << ',' << csv::format_number(v);
    out << ',' << batch.labels[r] << '\n';
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

Batch read_batch_csv(const std::string& path) {
  const csv::Table table = csv::read_table(path);
  const std::size_t comp_col = table.require("component_id", path);
  const std::size_t src_col = table.require("source", path);
  const std::size_t label_col = table.require("label", path);
  std::vector<std::size_t> value_cols{table.require("nx", path), table.require("ny", path), table.require("nz", path)};
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c].rfind("feat_", 0) == 0) value_cols.push_back(c);
  }
  Batch batch;
  batch.width = value_cols.size();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto comp = csv::parse_integer(row[comp_col]);
    auto src = csv::parse_integer(row[src_col]);
    auto label = csv::parse_integer(row[label_col]);
    if (!comp || !src || *src < 0 || !label || !label_from_int(*label)) {
      throw ParseError(path, table.line_numbers[r], "invalid component_id/source/label");
    }
    if (r == 0) batch.component_id = *comp;
    for (std::size_t c : value_cols) {
      auto v = csv::parse_number(row[c]);
      if (!v) throw ParseError(path, table.line_numbers[r], "invalid value in column '" + table.header[c] + "'");
      batch.inputs.push_back(*v);
    }
    batch.sources.push_back(static_cast<std::size_t>(*src));
    batch.labels.push_back(static_cast<int>(*label));
  }
  return batch;
}

void write_batches(const BatchedCloud& batched, const std::vector<std::string>& feature_names, const std::string& dir) {
  fs::create_directories(dir);
  std::map<std::int64_t, int> per_component;
  for (const Batch& batch : batched.batches) {
    char name[64];
    std::snprintf(name, sizeof(name), "batch_%08lld_%04d.csv", static_cast<long long>(batch.component_id),
                  per_component[batch.component_id]++);
    write_batch_csv(batch, feature_names, (fs::path(dir) / name).string());
  }
  std::ofstream out(fs::path(dir) / "transforms.csv");
  if (!out) throw IoError("cannot write transforms.csv in '" + dir + "'");
  out << "component_id,shift_x,shift_y,shift_z,scale,degenerate\n";
  for (const auto& [id, t] : batched.transforms) {
    out << id << ',' << csv::format_number(t.shift[0]) << ',' << csv::format_number(t.shift[1]) << ','
        << csv::format_number(t.shift[2]) << ',' << csv::format_number(t.scale) << ',' << (t.degenerate ? 1 : 0)
        << '\n';
  }
}

std::vector<Batch> read_batches(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("batch directory '" + dir + "' does not exist");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("batch_", 0) == 0 && entry.path().extension() == ".csv") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Batch> out;
  for (const auto& f : files) out.push_back(read_batch_csv(f));
  return out;
}

}  // namespace leafwood
