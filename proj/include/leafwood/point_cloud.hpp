// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFWOOD_POINT_CLOUD_HPP
#define LEAFWOOD_POINT_CLOUD_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace leafwood {

using Vec3 = std::array<double, 3>;

enum class Label : std::int8_t { unknown = -1, leaf = 0, wood = 1 };

/// Returns the label for -1/0/1, nullopt for anything else.
std::optional<Label> label_from_int(long long value);
inline int to_int(Label label) { return static_cast<int>(label); }

struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  std::optional<double> intensity;  // dB
  std::optional<double> deviation;
  std::optional<Label> label;
  std::optional<std::int64_t> tree_id;

  Vec3 xyz() const { return {x, y, z}; }
};

/// Ordered points plus named numeric columns that travel with them between
/// pipeline stages (component ids, features, probabilities).
///
/// Point i is identified by its position; every extra column has exactly
/// size() entries.
class PointCloud {
 public:
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  bool has_column(std::string_view name) const;
  const std::vector<double>& column(std::string_view name) const;
  std::vector<double>& column(std::string_view name);
  const std::vector<std::string>& column_names() const { return names_; }

  /// Adds or replaces a column. values.size() must equal size().
  void set_column(const std::string& name, std::vector<double> values);
  void drop_column(std::string_view name);

  /// Sub-cloud holding the given points (in the given order) and their extras.
  PointCloud select(std::span<const std::size_t> indices) const;

  bool any_intensity() const;
  bool any_deviation() const;
  bool any_label() const;
  bool any_tree_id() const;

 private:
  std::size_t find(std::string_view name) const;

  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
};

std::vector<Vec3> coordinates(const PointCloud& cloud);

}  // namespace leafwood

#endif  // LEAFWOOD_POINT_CLOUD_HPP
