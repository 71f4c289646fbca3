// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFWOOD_CSV_HPP
#define LEAFWOOD_CSV_HPP

// Low-level text helpers shared by every file format in the toolkit.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace leafwood::csv {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_number(double value);

std::optional<double> parse_number(std::string_view text);
std::optional<long long> parse_integer(std::string_view text);

std::string_view trim(std::string_view text);

/// Splits on `sep` and trims each field. No quoting: the formats written here
/// never contain separators inside fields.
std::vector<std::string_view> split(std::string_view line, char sep = ',');

std::string join(const std::vector<std::string>& fields, char sep = ',');

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  /// Index of a header column, or nullopt.
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t require(std::string_view name, const std::string& source) const;
};

/// Reads a header + rows file. Lines starting with '#' and blank lines are
/// skipped. Throws IoError / ParseError.
Table read_table(const std::string& path);

}  // namespace leafwood::csv

#endif  // LEAFWOOD_CSV_HPP
