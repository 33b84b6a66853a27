// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include "felab/app/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "felab/errors.hpp"

namespace felab::app {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

struct Range {
  double lo, hi, step;
};

Range nice_range(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = std::max(1.0, std::abs(lo) * 0.1);
    lo -= pad;
    hi += pad;
  }
  const double raw = (hi - lo) / 5;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  return {std::floor(lo / step) * step, std::ceil(hi / step) * step, step};
}

void finite_extent(const std::vector<double>& v, double& lo, double& hi) {
  for (double x : v)
    if (std::isfinite(x)) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
}

void frame(std::ostringstream& os, const std::string& title) {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << fmt(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(title)
     << "</text>\n";
}

void y_axis(std::ostringstream& os, const Range& r, const std::string& label) {
  const double h = kHeight - kTop - kBottom, w = kWidth - kLeft - kRight;
  for (double v = r.lo; v <= r.hi + r.step * 1e-6; v += r.step) {
    const double y = kTop + h * (1 - (v - r.lo) / (r.hi - r.lo));
    os << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(kLeft + w) << "\" y2=\""
       << fmt(y) << "\" stroke=\"#e0e0e0\"/>\n"
       << "<text x=\"" << fmt(kLeft - 6) << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\">" << tick_label(v)
       << "</text>\n";
  }
  os << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
     << "\" fill=\"none\" stroke=\"black\"/>\n"
     << "<text transform=\"translate(18," << fmt(kTop + h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape_xml(label) << "</text>\n";
}

void legend(std::ostringstream& os, const std::vector<Series>& series) {
  double y = kTop + 10;
  for (std::size_t i = 0; i < series.size(); ++i, y += 18) {
    const double x = kWidth - kRight + 12;
    os << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y - 9) << "\" width=\"12\" height=\"10\" fill=\""
       << kPalette[i % std::size(kPalette)] << "\"/>\n"
       << "<text x=\"" << fmt(x + 18) << "\" y=\"" << fmt(y) << "\">" << escape_xml(series[i].name) << "</text>\n";
  }
}

void write_cell(std::string& out, const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) {
    out += cell;
    return;
  }
  out += '"';
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw DataError("table has no column '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::string_view name) const {
  return parse_number(rows.at(row).at(column(name)));
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError("not a number: '" + std::string(s) + "'");
  return v;
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      write_cell(out, cells[i]);
    }
    out += '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) {
    if (r.size() != table.header.size()) throw DataError("table row width does not match header");
    line(r);
  }
  return out;
}

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (c == '\n') {
      row.push_back(std::move(cell));
      cell.clear();
      lines.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      cell += c;
      any = true;
    }
  }
  if (quoted) throw DataError("unterminated quoted CSV field");
  if (any) {
    row.push_back(std::move(cell));
    lines.push_back(std::move(row));
  }
  if (lines.empty()) throw DataError("empty CSV document");
  CsvTable t;
  t.header = std::move(lines.front());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].size() != t.header.size())
      throw DataError("CSV line " + std::to_string(i + 1) + " has " + std::to_string(lines[i].size()) +
                      " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(lines[i]));
  }
  return t;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) { write_text(path, to_csv(table)); }

CsvTable read_csv(const std::filesystem::path& path) {
  try {
    return parse_csv(read_text(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string render_svg(const LineChart& chart) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& s : chart.series) {
    finite_extent(s.x, xlo, xhi);
    finite_extent(s.y, ylo, yhi);
  }
  if (!std::isfinite(xlo)) xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  const Range xr = nice_range(xlo, xhi), yr = nice_range(ylo, yhi);
  const double h = kHeight - kTop - kBottom, w = kWidth - kLeft - kRight;
  auto px = [&](double x) { return kLeft + w * (x - xr.lo) / (xr.hi - xr.lo); };
  auto py = [&](double y) { return kTop + h * (1 - (y - yr.lo) / (yr.hi - yr.lo)); };

  std::ostringstream os;
  frame(os, chart.title);
  y_axis(os, yr, chart.y_label);
  for (double v = xr.lo; v <= xr.hi + xr.step * 1e-6; v += xr.step)
    os << "<text x=\"" << fmt(px(v)) << "\" y=\"" << fmt(kTop + h + 16) << "\" text-anchor=\"middle\">"
       << tick_label(v) << "</text>\n";
  os << "<text x=\"" << fmt(kLeft + w / 2) << "\" y=\"" << fmt(kHeight - 18) << "\" text-anchor=\"middle\">"
     << escape_xml(chart.x_label) << "</text>\n";
  for (std::size_t i = 0; i < chart.series.size(); ++i) {
    const auto& s = chart.series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    std::string points;
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      points += (points.empty() ? "" : " ") + fmt(px(s.x[k])) + "," + fmt(py(s.y[k]));
      os << "<circle cx=\"" << fmt(px(s.x[k])) << "\" cy=\"" << fmt(py(s.y[k])) << "\" r=\"3\" fill=\"" << color
         << "\"/>\n";
    }
    os << "<polyline points=\"" << points << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
  }
  legend(os, chart.series);
  os << "</svg>\n";
  return os.str();
}

std::string render_svg(const BarChart& chart) {
  double lo = 0, hi = 0;
  for (const auto& s : chart.series) finite_extent(s.y, lo, hi);
  const Range yr = nice_range(lo, hi);
  const double h = kHeight - kTop - kBottom, w = kWidth - kLeft - kRight;
  auto py = [&](double y) { return kTop + h * (1 - (y - yr.lo) / (yr.hi - yr.lo)); };

  std::ostringstream os;
  frame(os, chart.title);
  y_axis(os, yr, chart.y_label);
  const std::size_t groups = std::max<std::size_t>(chart.categories.size(), 1);
  const double slot = w / static_cast<double>(groups);
  const double bar = 0.8 * slot / static_cast<double>(std::max<std::size_t>(chart.series.size(), 1));
  for (std::size_t g = 0; g < chart.categories.size(); ++g) {
    const double x0 = kLeft + slot * static_cast<double>(g) + 0.1 * slot;
    for (std::size_t i = 0; i < chart.series.size(); ++i) {
      if (g >= chart.series[i].y.size() || !std::isfinite(chart.series[i].y[g])) continue;
      const double v = chart.series[i].y[g];
      const double top = py(std::max(v, 0.0)), bottom = py(std::min(v, 0.0));
      os << "<rect x=\"" << fmt(x0 + bar * static_cast<double>(i)) << "\" y=\"" << fmt(top) << "\" width=\""
         << fmt(bar) << "\" height=\"" << fmt(bottom - top) << "\" fill=\"" << kPalette[i % std::size(kPalette)]
         << "\"/>\n";
    }
    os << "<text x=\"" << fmt(x0 + 0.4 * slot) << "\" y=\"" << fmt(kTop + h + 16) << "\" text-anchor=\"middle\">"
       << escape_xml(chart.categories[g]) << "</text>\n";
  }
  legend(os, chart.series);
  os << "</svg>\n";
  return os.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw DataError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw DataError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(is), {}};
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string hash_file(const std::filesystem::path& path) { return fnv1a_hex(read_text(path)); }

}  // namespace felab::app
