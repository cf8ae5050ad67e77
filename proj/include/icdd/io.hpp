/**
 * @file io.hpp
 * @brief CSV and legacy-VTK output with fixed number formatting.
 */
#pragma once

#include <cstdint>
#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "icdd/errors.hpp"
#include "icdd/fem.hpp"

namespace icdd {

inline constexpr const char* library_version = "1.0.0";

/// Scientific notation with 9 significant digits, so equal inputs give equal bytes.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8e", v);
  return buf;
}

/// Comma-separated table with a header row.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : columns_(header.size()) {
    write_row(header);
  }

  CsvTable& row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw InputError("CSV row has the wrong number of columns");
    write_row(cells);
    return *this;
  }

  CsvTable& row(std::initializer_list<double> values) {
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(format_number(v));
    return row(cells);
  }

  std::string str() const { return out_.str(); }

 private:
  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

  std::size_t columns_;
  std::ostringstream out_;
};

/// One row per node: x, y, u1, u2, p.
inline std::string field_csv(const NodalField& f) {
  CsvTable t({"x", "y", "u1", "u2", "p"});
  for (int n = 0; n < f.space->num_nodes(); ++n) {
    const Vec2 c = f.space->coords(n);
    t.row({c[0], c[1], f.u1[n], f.u2[n], f.p[n]});
  }
  return t.str();
}

/// Unstructured grid of lattice sub-quads with velocity and pressure as point data.
inline void write_vtk_field(std::ostream& os, const NodalField& f, const std::string& title) {
  const FeSpace& sp = *f.space;
  const int k = sp.order();
  const int ne = sp.mesh().num_elements() * k * k;
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << sp.num_nodes() << " double\n";
  for (int n = 0; n < sp.num_nodes(); ++n) {
    const Vec2 c = sp.coords(n);
    os << format_number(c[0]) << ' ' << format_number(c[1]) << " 0\n";
  }
  os << "CELLS " << ne << ' ' << 5 * ne << '\n';
  for (int e = 0; e < sp.mesh().num_elements(); ++e) {
    const int* v = sp.element_nodes(e);
    const auto at = [&](int a, int b) { return v[b * (k + 1) + a]; };
    for (int b = 0; b < k; ++b) {
      for (int a = 0; a < k; ++a) {
        os << "4 " << at(a, b) << ' ' << at(a + 1, b) << ' ' << at(a + 1, b + 1) << ' ' << at(a, b + 1) << '\n';
      }
    }
  }
  os << "CELL_TYPES " << ne << '\n';
  for (int e = 0; e < ne; ++e) os << "9\n";
  os << "POINT_DATA " << sp.num_nodes() << "\nVECTORS velocity double\n";
  for (int n = 0; n < sp.num_nodes(); ++n) {
    os << format_number(f.u1[n]) << ' ' << format_number(f.u2[n]) << " 0\n";
  }
  os << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (int n = 0; n < sp.num_nodes(); ++n) os << format_number(f.p[n]) << '\n';
}

inline std::string field_vtk(const NodalField& f, const std::string& title) {
  std::ostringstream os;
  write_vtk_field(os, f, title);
  return os.str();
}

/// 64-bit FNV-1a hash, printed as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace icdd
