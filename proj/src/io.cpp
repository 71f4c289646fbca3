// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafwood/io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "leafwood/csv.hpp"
#include "leafwood/error.hpp"

namespace leafwood::io {

namespace {

enum class Field { x, y, z, intensity, deviation, label, tree_id, extra };

Field field_of(const std::string& name) {
  if (name == "x") return Field::x;
  if (name == "y") return Field::y;
  if (name == "z") return Field::z;
  if (name == "intensity") return Field::intensity;
  if (name == "deviation") return Field::deviation;
  if (name == "label") return Field::label;
  if (name == "tree_id") return Field::tree_id;
  return Field::extra;
}

std::string canonical(const std::string& header, const ColumnMap& map) {
  auto it = map.aliases.find(header);
  if (it != map.aliases.end()) return it->second;
  std::string lower = header;
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (field_of(lower) != Field::extra) return lower;
  return header;
}

// Turns a header into a per-column plan and the extra-column names.
struct Layout {
  std::vector<Field> fields;
  std::vector<std::string> names;
  std::vector<std::size_t> extra_slot;  // per column: index into extras or npos
  std::vector<std::string> extra_names;
};

Layout plan(const std::vector<std::string>& header, const ColumnMap& map, const std::string& source) {
  Layout layout;
  bool seen[7] = {false, false, false, false, false, false, false};
  for (const std::string& h : header) {
    const std::string name = canonical(h, map);
    const Field f = field_of(name);
    layout.fields.push_back(f);
    layout.names.push_back(name);
    if (f == Field::extra) {
      layout.extra_slot.push_back(layout.extra_names.size());
      layout.extra_names.push_back(name);
    } else {
      const auto slot = static_cast<std::size_t>(f);
      if (seen[slot]) throw SchemaError(source + ": duplicate column '" + name + "'");
      seen[slot] = true;
      layout.extra_slot.push_back(std::string::npos);
    }
  }
  for (const char* required : {"x", "y", "z"}) {
    if (!seen[static_cast<std::size_t>(field_of(required))]) {
      throw SchemaError(source + ": missing required column '" + required + "'");
    }
  }
  return layout;
}

// Fills one point from already-split fields.
void fill_point(const Layout& layout, const std::vector<std::string_view>& values,
                const std::string& source, std::size_t line_no, Point& point,
                std::vector<std::vector<double>>& extras) {
  if (values.size() != layout.fields.size()) {
    throw ParseError(source, line_no,
                     "expected " + std::to_string(layout.fields.size()) + " fields, found " +
                         std::to_string(values.size()));
  }
  for (std::size_t c = 0; c < values.size(); ++c) {
    const std::string_view text = values[c];
    const Field f = layout.fields[c];
    auto bad = [&](const std::string& what) {
      return ParseError(source, line_no,
                        "column '" + layout.names[c] + "': " + what + " '" + std::string(text) + "'");
    };
    switch (f) {
      case Field::x:
      case Field::y:
      case Field::z: {
        auto v = csv::parse_number(text);
        if (!v || !std::isfinite(*v)) throw bad("non-numeric or non-finite coordinate");
        (f == Field::x ? point.x : f == Field::y ? point.y : point.z) = *v;
        break;
      }
      case Field::intensity:
      case Field::deviation: {
        if (text.empty()) break;
        auto v = csv::parse_number(text);
        if (!v || std::isnan(*v)) throw bad("invalid number");
        (f == Field::intensity ? point.intensity : point.deviation) = *v;
        break;
      }
      case Field::label: {
        if (text.empty()) break;
        auto v = csv::parse_integer(text);
        auto label = v ? label_from_int(*v) : std::nullopt;
        if (!label) throw bad("label must be -1, 0 or 1, got");
        point.label = label;
        break;
      }
      case Field::tree_id: {
        if (text.empty()) break;
        auto v = csv::parse_integer(text);
        if (!v || *v < 0) throw bad("tree_id must be a non-negative integer, got");
        point.tree_id = *v;
        break;
      }
      case Field::extra: {
        if (text.empty()) {
          extras[layout.extra_slot[c]].push_back(std::numeric_limits<double>::quiet_NaN());
          break;
        }
        auto v = csv::parse_number(text);
        if (!v) throw bad("invalid number");
        extras[layout.extra_slot[c]].push_back(*v);
        break;
      }
    }
  }
}

PointCloud finish(std::vector<Point> points, const Layout& layout,
                  std::vector<std::vector<double>> extras) {
  PointCloud cloud;
  cloud.points = std::move(points);
  for (std::size_t e = 0; e < layout.extra_names.size(); ++e) {
    cloud.set_column(layout.extra_names[e], std::move(extras[e]));
  }
  return cloud;
}

}  // namespace

PointCloud parse_csv(const std::string& path, const ColumnMap& column_map) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  std::string line;
  std::size_t line_no = 0;
  std::optional<Layout> layout;
  std::vector<Point> points;
  std::vector<std::vector<double>> extras;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = csv::trim(line);
    if (view.empty()) continue;
    auto values = csv::split(view);
    if (!layout) {
      std::vector<std::string> header(values.begin(), values.end());
      layout = plan(header, column_map, path);
      extras.resize(layout->extra_names.size());
      continue;
    }
    Point p;
    fill_point(*layout, values, path, line_no, p, extras);
    points.push_back(p);
  }
  if (!layout) throw SchemaError(path + ": empty file, expected a header row with x,y,z");
  return finish(std::move(points), *layout, std::move(extras));
}

void write_csv(const PointCloud& cloud, const std::string& path, const std::vector<std::string>& columns) {
  std::vector<std::string> names = columns;
  if (names.empty()) {
    names = {"x", "y", "z"};
    if (cloud.any_intensity()) names.emplace_back("intensity");
    if (cloud.any_deviation()) names.emplace_back("deviation");
    if (cloud.any_label()) names.emplace_back("label");
    if (cloud.any_tree_id()) names.emplace_back("tree_id");
    for (const auto& extra : cloud.column_names()) names.push_back(extra);
  }
  std::vector<Field> fields;
  std::vector<const std::vector<double>*> extra_columns;
  for (const auto& name : names) {
    const Field f = field_of(name);
    fields.push_back(f);
    extra_columns.push_back(f == Field::extra ? &cloud.column(name) : nullptr);
  }

  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << csv::join(names) << '\n';
  std::string row;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    row.clear();
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c) row.push_back(',');
      switch (fields[c]) {
        case Field::x: row += csv::format_number(p.x); break;
        case Field::y: row += csv::format_number(p.y); break;
        case Field::z: row += csv::format_number(p.z); break;
        case Field::intensity:
          if (p.intensity) row += csv::format_number(*p.intensity);
          break;
        case Field::deviation:
          if (p.deviation) row += csv::format_number(*p.deviation);
          break;
        case Field::label:
          if (p.label) row += std::to_string(to_int(*p.label));
          break;
        case Field::tree_id:
          if (p.tree_id) row += std::to_string(*p.tree_id);
          break;
        case Field::extra: {
          const double v = (*extra_columns[c])[i];
          if (!std::isnan(v)) row += csv::format_number(v);
          break;
        }
      }
    }
    out << row << '\n';
  }
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

PointCloud read_ply(const std::string& path, const ColumnMap& column_map) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  };
  if (!next_line() || csv::trim(line) != "ply") throw ParseError(path, 1, "not a PLY file");

  std::size_t vertex_count = 0;
  std::vector<std::string> props;
  std::string current_element;
  bool ascii = false;
  bool vertex_first = false;
  bool seen_element = false;
  while (true) {
    if (!next_line()) throw ParseError(path, line_no, "unterminated PLY header");
    std::istringstream words{std::string(csv::trim(line))};
    std::string keyword;
    words >> keyword;
    if (keyword == "end_header") break;
    if (keyword == "format") {
      std::string fmt;
      words >> fmt;
      ascii = fmt == "ascii";
    } else if (keyword == "element") {
      words >> current_element;
      if (!seen_element) vertex_first = current_element == "vertex";
      seen_element = true;
      if (current_element == "vertex") words >> vertex_count;
    } else if (keyword == "property" && current_element == "vertex") {
      std::string type;
      std::string name;
      words >> type;
      if (type == "list") throw SchemaError(path + ": list properties on vertices are not supported");
      words >> name;
      props.push_back(name);
    }
  }
  if (!ascii) throw SchemaError(path + ": only ASCII PLY is supported");
  if (!vertex_first) throw SchemaError(path + ": vertex element must come first");

  const Layout layout = plan(props, column_map, path);
  std::vector<Point> points;
  points.reserve(vertex_count);
  std::vector<std::vector<double>> extras(layout.extra_names.size());
  std::vector<std::string> tokens;
  while (points.size() < vertex_count) {
    if (!next_line()) throw ParseError(path, line_no, "expected " + std::to_string(vertex_count) + " vertices");
    const std::string_view view = csv::trim(line);
    if (view.empty()) continue;
    tokens.clear();
    std::istringstream words{std::string(view)};
    for (std::string t; words >> t;) tokens.push_back(t);
    std::vector<std::string_view> values(tokens.begin(), tokens.end());
    Point p;
    fill_point(layout, values, path, line_no, p, extras);
    points.push_back(p);
  }
  return finish(std::move(points), layout, std::move(extras));
}

PointCloud read_cloud(const std::string& path, const ColumnMap& column_map) {
  const auto dot = path.find_last_of('.');
  if (dot != std::string::npos) {
    std::string ext = path.substr(dot + 1);
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == "ply") return read_ply(path, column_map);
  }
  return parse_csv(path, column_map);
}

PointCloud filter_quality(const PointCloud& cloud, double min_intensity_db, double max_deviation) {
  std::vector<std::size_t> keep;
  keep.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    if (p.intensity && *p.intensity < min_intensity_db) continue;
    if (p.deviation && *p.deviation > max_deviation) continue;
    keep.push_back(i);
  }
  return cloud.select(keep);
}

namespace {

struct CellKey {
  long long i, j, k;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& c) const {
    std::size_t h = std::hash<long long>{}(c.i);
    h ^= std::hash<long long>{}(c.j) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<long long>{}(c.k) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

}  // namespace

PointCloud subsample_precision(const PointCloud& cloud, double precision) {
  if (!(precision > 0.0) || !std::isfinite(precision)) {
    throw ValidationError("precision", "must be a positive finite number");
  }
  std::unordered_set<CellKey, CellKeyHash> seen;
  seen.reserve(cloud.size());
  std::vector<std::size_t> keep;
  std::vector<CellKey> keys;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    const CellKey key{std::llround(p.x / precision), std::llround(p.y / precision),
                      std::llround(p.z / precision)};
    if (seen.insert(key).second) {
      keep.push_back(i);
      keys.push_back(key);
    }
  }
  PointCloud out = cloud.select(keep);
  for (std::size_t n = 0; n < out.size(); ++n) {
    out.points[n].x = static_cast<double>(keys[n].i) * precision;
    out.points[n].y = static_cast<double>(keys[n].j) * precision;
    out.points[n].z = static_cast<double>(keys[n].k) * precision;
  }
  return out;
}

}  // namespace leafwood::io
