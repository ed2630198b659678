#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sl/common.hpp"
#include "sl/dataset.hpp"

namespace sl {

// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& cell : out) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    cell.erase(0, b);
  }
  return out;
}

inline double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw Error("csv: non-numeric cell '" + cell + "' at data row " + std::to_string(row) +
                ", column '" + col + "'");
  return v;
}

}  // namespace detail

// Comma-separated, one header row, '.' decimal separator, numeric cells only.
inline Dataset load_csv(const std::string& path, const std::string& outcome_column,
                        OutcomeKind outcome_kind,
                        std::vector<std::string>* feature_names = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error("csv: cannot open file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw Error("csv: file '" + path + "' is empty");
  const std::vector<std::string> header = detail::split_csv_line(line);

  std::size_t outcome_idx = header.size();
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == outcome_column) outcome_idx = j;
  if (outcome_idx == header.size())
    throw Error("csv: outcome column '" + outcome_column + "' not found in '" + path + "'");

  if (feature_names) {
    feature_names->clear();
    for (std::size_t j = 0; j < header.size(); ++j)
      if (j != outcome_idx) feature_names->push_back(header[j]);
  }

  std::vector<std::vector<double>> columns(header.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw Error("csv: data row " + std::to_string(row) + " has " +
                  std::to_string(cells.size()) + " cells, expected " +
                  std::to_string(header.size()));
    for (std::size_t j = 0; j < cells.size(); ++j)
      columns[j].push_back(detail::parse_cell(cells[j], row, header[j]));
  }
  if (row == 0) throw Error("csv: file '" + path + "' has no data rows");

  const std::size_t n = row;
  if (outcome_kind == OutcomeKind::Binary)
    for (std::size_t i = 0; i < n; ++i)
      if (columns[outcome_idx][i] != 0.0 && columns[outcome_idx][i] != 1.0)
        throw Error("csv: binary outcome value " + format_double(columns[outcome_idx][i]) +
                    " at data row " + std::to_string(i + 1) + " is not 0 or 1");

  Matrix x(n, header.size() - 1);
  std::size_t k = 0;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j == outcome_idx) continue;
    std::copy(columns[j].begin(), columns[j].end(), x.col(k));
    ++k;
  }
  return make_dataset(std::move(x), std::move(columns[outcome_idx]), outcome_kind);
}

inline void write_csv(const std::string& path, const Dataset& d,
                      const std::vector<std::string>* feature_names = nullptr,
                      const std::string& outcome_column = "y") {
  if (feature_names)
    require(feature_names->size() == d.n_cols(), "write_csv: feature name count mismatch");
  std::ofstream out(path);
  if (!out) throw Error("csv: cannot write file '" + path + "'");
  for (std::size_t j = 0; j < d.n_cols(); ++j) {
    if (j) out << ',';
    if (feature_names)
      out << (*feature_names)[j];
    else
      out << 'x' << (j + 1);
  }
  out << (d.n_cols() ? "," : "") << outcome_column << '\n';
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    for (std::size_t j = 0; j < d.n_cols(); ++j) out << format_double(d.x(i, j)) << ',';
    out << format_double(d.y[i]) << '\n';
  }
  if (!out) throw Error("csv: write to '" + path + "' failed");
}

}  // namespace sl
