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

#include "cavsense/table.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cavsense/common.hpp"
#include "json.hpp"

namespace cavsense {

using nlohmann::json;

ResultTable::ResultTable(std::string name, std::vector<std::string> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {}

void ResultTable::add_row(std::vector<double> row) {
  if (row.size() != columns_.size()) {
    throw Error("table " + name_ + ": row has " + std::to_string(row.size()) + " values, expected " +
                std::to_string(columns_.size()));
  }
  for (size_t i = 0; i < row.size(); ++i) {
    if (!std::isfinite(row[i])) {
      throw Error("table " + name_ + ": non-finite value in column " + columns_[i] + " of row " +
                  std::to_string(rows_.size()));
    }
  }
  rows_.push_back(std::move(row));
}

void ResultTable::add_metadata(std::string key, std::string value) {
  metadata_.emplace_back(std::move(key), std::move(value));
}

const std::string& ResultTable::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata_) {
    if (k == key) return v;
  }
  throw Error("table " + name_ + ": no metadata key " + key);
}

size_t ResultTable::column(const std::string& name) const {
  for (size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i] == name) return i;
  }
  throw Error("table " + name_ + ": no column " + name);
}

OutputFormat parse_output_format(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw ValidationError("format: expected csv or json, got '" + s + "'");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_csv(const ResultTable& table) {
  std::string out;
  out += "# table = " + table.name() + "\n";
  for (const auto& [k, v] : table.metadata()) out += "# " + k + " = " + v + "\n";
  for (size_t i = 0; i < table.columns().size(); ++i) {
    if (i) out += ',';
    out += table.columns()[i];
  }
  out += '\n';
  for (const auto& row : table.rows()) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string to_json(const ResultTable& table) {
  json meta = json::object();
  meta["table"] = table.name();
  for (const auto& [k, v] : table.metadata()) meta[k] = v;
  json doc = {{"metadata", meta}, {"columns", table.columns()}, {"rows", table.rows()}};
  return doc.dump(2) + "\n";
}

ResultTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string name;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  bool have_header = false;
  ResultTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) continue;
      std::string key = line.substr(2, eq - 2);
      std::string value = line.substr(eq + 3);
      if (key == "table") {
        name = value;
      } else {
        meta.emplace_back(std::move(key), std::move(value));
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!have_header) {
      columns = cells;
      have_header = true;
      table = ResultTable(name, columns);
      for (auto& [k, v] : meta) table.add_metadata(k, v);
      continue;
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      size_t used = 0;
      const double v = std::stod(c, &used);
      if (used != c.size()) throw ValidationError("csv: malformed number '" + c + "'");
      row.push_back(v);
    }
    table.add_row(std::move(row));
  }
  if (!have_header) throw ValidationError("csv: missing header row");
  return table;
}

ResultTable parse_json(const std::string& text) {
  const json doc = json::parse(text);
  const json& meta = doc.at("metadata");
  ResultTable table(meta.value("table", std::string()), doc.at("columns").get<std::vector<std::string>>());
  for (const auto& [k, v] : meta.items()) {
    if (k != "table") table.add_metadata(k, v.get<std::string>());
  }
  for (const auto& row : doc.at("rows")) table.add_row(row.get<std::vector<double>>());
  return table;
}

void emit(const ResultTable& table, OutputFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file " + path);
  out << (format == OutputFormat::csv ? to_csv(table) : to_json(table));
  out.flush();
  if (!out) throw Error("write failed for output file " + path);
}

}  // namespace cavsense
