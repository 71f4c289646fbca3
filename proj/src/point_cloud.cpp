// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafwood/point_cloud.hpp"

#include <algorithm>

#include "leafwood/error.hpp"

namespace leafwood {

std::optional<Label> label_from_int(long long value) {
  switch (value) {
    case -1: return Label::unknown;
    case 0: return Label::leaf;
    case 1: return Label::wood;
    default: return std::nullopt;
  }
}

std::size_t PointCloud::find(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  return static_cast<std::size_t>(it - names_.begin());
}

bool PointCloud::has_column(std::string_view name) const { return find(name) < names_.size(); }

const std::vector<double>& PointCloud::column(std::string_view name) const {
  const std::size_t i = find(name);
  if (i == names_.size()) throw SchemaError("missing column '" + std::string(name) + "'");
  return columns_[i];
}

std::vector<double>& PointCloud::column(std::string_view name) {
  const std::size_t i = find(name);
  if (i == names_.size()) throw SchemaError("missing column '" + std::string(name) + "'");
  return columns_[i];
}

void PointCloud::set_column(const std::string& name, std::vector<double> values) {
  if (values.size() != points.size()) {
    throw ValidationError(name, "column has " + std::to_string(values.size()) +
                                    " values for " + std::to_string(points.size()) + " points");
  }
  const std::size_t i = find(name);
  if (i < names_.size()) {
    columns_[i] = std::move(values);
  } else {
    names_.push_back(name);
    columns_.push_back(std::move(values));
  }
}

void PointCloud::drop_column(std::string_view name) {
  const std::size_t i = find(name);
  if (i == names_.size()) return;
  names_.erase(names_.begin() + static_cast<std::ptrdiff_t>(i));
  columns_.erase(columns_.begin() + static_cast<std::ptrdiff_t>(i));
}

PointCloud PointCloud::select(std::span<const std::size_t> indices) const {
  PointCloud out;
  out.points.reserve(indices.size());
  for (std::size_t i : indices) out.points.push_back(points.at(i));
  out.names_ = names_;
  out.columns_.resize(columns_.size());
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    out.columns_[c].reserve(indices.size());
    for (std::size_t i : indices) out.columns_[c].push_back(columns_[c][i]);
  }
  return out;
}

bool PointCloud::any_intensity() const {
  return std::any_of(points.begin(), points.end(), [](const Point& p) { return p.intensity.has_value(); });
}
bool PointCloud::any_deviation() const {
  return std::any_of(points.begin(), points.end(), [](const Point& p) { return p.deviation.has_value(); });
}
bool PointCloud::any_label() const {
  return std::any_of(points.begin(), points.end(), [](const Point& p) { return p.label.has_value(); });
}
bool PointCloud::any_tree_id() const {
  return std::any_of(points.begin(), points.end(), [](const Point& p) { return p.tree_id.has_value(); });
}

std::vector<Vec3> coordinates(const PointCloud& cloud) {
  std::vector<Vec3> out;
  out.reserve(cloud.size());
  for (const Point& p : cloud.points) out.push_back(p.xyz());
  return out;
}

}  // namespace leafwood
