// Copyright 2026 The polval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef POLVAL_CSV_HPP_
#define POLVAL_CSV_HPP_

// Minimal RFC 4180 reader/writer: UTF-8, comma separated, header row,
// '.' decimal point.

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace polval::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line per row

  // Index of a header column, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
};

// Throws DataError on ragged rows or unterminated quotes.
Table read(std::istream& in);
Table read_file(const std::string& path);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest representation that parses back to the same double.
std::string format_double(double v);
// Strict parse of a whole cell; nullopt for an empty cell. Throws DataError
// (with row/column) for anything else that is not a finite number.
std::optional<double> parse_double(std::string_view cell, std::size_t line,
                                   std::string_view column);

}  // namespace polval::csv

#endif  // POLVAL_CSV_HPP_
