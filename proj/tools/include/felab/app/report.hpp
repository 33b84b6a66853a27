// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench
//
// Artifact writers: comma-separated tables, minimal SVG 1.1 charts and
// content hashes for run manifests.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace felab::app {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws DataError when absent.
  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;
  friend bool operator==(const CsvTable&, const CsvTable&) = default;
};

/// Shortest string that parses back to exactly `v`; "inf"/"-inf"/"nan" for
/// non-finite values.
std::string format_number(double v);
double parse_number(std::string_view s);

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(std::string_view text);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LineChart {
  std::string title, x_label, y_label;
  std::vector<Series> series;
};

struct BarChart {
  std::string title, y_label;
  std::vector<std::string> categories;
  /// One group member per series; NaN values are left out.
  std::vector<Series> series;  // y holds one value per category, x unused
};

std::string render_svg(const LineChart& chart);
std::string render_svg(const BarChart& chart);

/// Creates parent directories; throws DataError naming the path on failure.
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string hash_file(const std::filesystem::path& path);

}  // namespace felab::app
