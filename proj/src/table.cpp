// Copyright 2026  The lprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "lprobe/table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lprobe/error.hpp"
#include "lprobe/util.hpp"

namespace lprobe {

std::size_t Table::Column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  Fail(ErrorCode::kParse, "table has no column '" + std::string(name) + "'");
}

void Table::AddRow(std::vector<std::string> row) {
  if (row.size() != columns.size())
    Fail(ErrorCode::kInternal, "row width does not match table header");
  rows.push_back(std::move(row));
}

Table ReadTsv(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path);
  Table table;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = SplitString(line, '\t');
    if (table.columns.empty()) {
      table.columns = std::move(cells);
      continue;
    }
    if (cells.size() != table.columns.size())
      Fail(ErrorCode::kParse, path + ":" + std::to_string(number) + ": expected " +
                                  std::to_string(table.columns.size()) + " cells");
    table.rows.push_back(std::move(cells));
  }
  if (table.columns.empty()) Fail(ErrorCode::kParse, path + ": empty table");
  return table;
}

std::string FormatTsv(const Table &table) {
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string> &cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].find_first_of("\t\n\r") != std::string::npos)
        Fail(ErrorCode::kInternal, "table cell contains a tab or newline");
      if (i > 0) out << '\t';
      out << cells[i];
    }
    out << '\n';
  };
  emit(table.columns);
  for (const auto &row : table.rows) emit(row);
  return out.str();
}

void WriteText(const std::string &text, const std::string &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
  out << text;
  if (!out) Fail(ErrorCode::kIo, "write failed for " + path);
}

void WriteTsv(const Table &table, const std::string &path) { WriteText(FormatTsv(table), path); }

double ParseDouble(std::string_view cell) {
  if (cell == "nan" || cell == "NA") return std::nan("");
  double v = 0.0;
  auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || end != cell.data() + cell.size())
    Fail(ErrorCode::kParse, "not a number: '" + std::string(cell) + "'");
  return v;
}

long long ParseInt(std::string_view cell) {
  long long v = 0;
  auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || end != cell.data() + cell.size())
    Fail(ErrorCode::kParse, "not an integer: '" + std::string(cell) + "'");
  return v;
}

}  // namespace lprobe
