// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFWOOD_IO_HPP
#define LEAFWOOD_IO_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "leafwood/point_cloud.hpp"

namespace leafwood::io {

/// Maps header names found in a file onto the canonical field names
/// x, y, z, intensity, deviation, label, tree_id. Headers that are neither
/// canonical nor mapped are loaded as extra numeric columns.
struct ColumnMap {
  std::map<std::string, std::string> aliases;
};

/// Reads a comma-separated file with a header row.
///
/// Required columns: x, y, z. Optional: intensity, deviation, label, tree_id;
/// an empty cell leaves the field absent. Throws SchemaError when a required
/// column is missing and ParseError (with the 1-based line) on a malformed row.
PointCloud parse_csv(const std::string& path, const ColumnMap& column_map = {});

/// Writes `cloud` as CSV. When `columns` is empty every populated field and
/// every extra column is written; otherwise exactly the named columns, in order.
/// Doubles are written in shortest round-trip form.
void write_csv(const PointCloud& cloud, const std::string& path,
               const std::vector<std::string>& columns = {});

/// ASCII PLY import; vertex properties are matched by name like CSV headers.
PointCloud read_ply(const std::string& path, const ColumnMap& column_map = {});

/// Dispatches on extension: .ply -> read_ply, anything else -> parse_csv.
PointCloud read_cloud(const std::string& path, const ColumnMap& column_map = {});

/// Keeps points with intensity >= min_intensity_db and deviation <= max_deviation.
/// A point missing a field is not judged on that field.
PointCloud filter_quality(const PointCloud& cloud, double min_intensity_db, double max_deviation);

/// Snaps coordinates to multiples of `precision` and keeps the first point
/// (input order) of every snapped position.
PointCloud subsample_precision(const PointCloud& cloud, double precision);

}  // namespace leafwood::io

#endif  // LEAFWOOD_IO_HPP
