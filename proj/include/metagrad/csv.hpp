#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "metagrad/error.hpp"

namespace metagrad {

// Floats in result tables carry 9 significant digits.
inline std::string csv_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

namespace detail {

// Numeric-aware cell comparison so "25" sorts after "5" in key columns.
inline bool cell_less(const std::string& a, const std::string& b) {
  char* end_a = nullptr;
  char* end_b = nullptr;
  const double na = std::strtod(a.c_str(), &end_a);
  const double nb = std::strtod(b.c_str(), &end_b);
  const bool a_num = !a.empty() && end_a == a.c_str() + a.size();
  const bool b_num = !b.empty() && end_b == b.c_str() + b.size();
  if (a_num && b_num) return na < nb;
  if (a_num != b_num) return a_num;  // numbers before words
  return a < b;
}

}  // namespace detail

// Writes header + rows, sorting rows by the first key_columns cells. Every row
// must match the header width; empty tables are refused.
inline void write_results(const std::string& path, const std::vector<std::string>& header,
                          std::vector<std::vector<std::string>> rows,
                          std::size_t key_columns) {
  if (header.empty()) throw ValueError("write_results: empty header");
  if (rows.empty()) throw ValueError("write_results: no records for '" + path + "'");
  if (key_columns > header.size())
    throw ValueError("write_results: more key columns than columns");
  for (const auto& row : rows)
    if (row.size() != header.size())
      throw ValueError("write_results: row width " + std::to_string(row.size()) +
                       " does not match header width " + std::to_string(header.size()));

  std::stable_sort(rows.begin(), rows.end(),
                   [&](const std::vector<std::string>& a, const std::vector<std::string>& b) {
                     for (std::size_t c = 0; c < key_columns; ++c) {
                       if (a[c] == b[c]) continue;
                       return detail::cell_less(a[c], b[c]);
                     }
                     return false;
                   });

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  for (std::size_t c = 0; c < header.size(); ++c)
    f << (c ? "," : "") << header[c];
  f << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      f << (c ? "," : "") << row[c];
    f << "\n";
  }
  if (!f) throw IoError("write failed for '" + path + "'");
}

}  // namespace metagrad
