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

#ifndef LPROBE_TABLE_HPP_
#define LPROBE_TABLE_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace lprobe {

// Tab-separated table with a header row. Cells may not hold tabs or
// newlines.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  // Index of a column; kParse if absent.
  std::size_t Column(std::string_view name) const;
  void AddRow(std::vector<std::string> row);
};

Table ReadTsv(const std::string &path);
std::string FormatTsv(const Table &table);
void WriteTsv(const Table &table, const std::string &path);
void WriteText(const std::string &text, const std::string &path);

double ParseDouble(std::string_view cell);  // "nan" and "NA" give NaN
long long ParseInt(std::string_view cell);

}  // namespace lprobe

#endif  // LPROBE_TABLE_HPP_
