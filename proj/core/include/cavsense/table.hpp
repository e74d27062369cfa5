// Copyright 2026 The cavsense Authors
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

#ifndef CAVSENSE_TABLE_HPP
#define CAVSENSE_TABLE_HPP

#include <string>
#include <utility>
#include <vector>

namespace cavsense {

/// Plot-ready numeric table with an ordered metadata block.
class ResultTable {
 public:
  ResultTable() = default;
  ResultTable(std::string name, std::vector<std::string> columns);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  const std::vector<std::pair<std::string, std::string>>& metadata() const { return metadata_; }

  /// Rejects rows of the wrong width or with a non-finite value.
  void add_row(std::vector<double> row);
  void add_metadata(std::string key, std::string value);
  /// Metadata value for `key`; throws if absent.
  const std::string& meta(const std::string& key) const;
  /// Column index for `name`; throws if absent.
  size_t column(const std::string& name) const;

 private:
  std::string name_;
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
  std::vector<std::pair<std::string, std::string>> metadata_;
};

enum class OutputFormat { csv, json };

OutputFormat parse_output_format(const std::string& s);

/// '#'-prefixed "key = value" metadata lines, a header row, then rows with
/// 17 significant digits, '\n' line endings.
std::string to_csv(const ResultTable& table);
/// {"metadata": {...}, "columns": [...], "rows": [[...], ...]}.
std::string to_json(const ResultTable& table);

ResultTable parse_csv(const std::string& text);
ResultTable parse_json(const std::string& text);

/// Writes the table to `path`; I/O failures raise Error naming the path.
void emit(const ResultTable& table, OutputFormat format, const std::string& path);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

}  // namespace cavsense

#endif  // CAVSENSE_TABLE_HPP
