#include "stereo/csv.hpp"

#include <algorithm>
#include <charconv>

#include "stereo/errors.hpp"

namespace stereo {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

CsvTable CsvTable::parse(std::istream& in) {
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_csv_line(line);
    if (t.header_.empty()) {
      t.header_ = std::move(fields);
      continue;
    }
    if (fields.size() != t.header_.size())
      throw ConfigError("CSV row " + std::to_string(t.rows_.size() + 2) + " has " + std::to_string(fields.size()) +
                        " fields, header has " + std::to_string(t.header_.size()));
    t.rows_.push_back(std::move(fields));
  }
  if (t.header_.empty()) throw ConfigError("CSV input is empty");
  return t;
}

bool CsvTable::has_column(const std::string& name) const {
  return std::find(header_.begin(), header_.end(), name) != header_.end();
}

std::vector<double> CsvTable::numeric_column(const std::string& name) const {
  const auto it = std::find(header_.begin(), header_.end(), name);
  if (it == header_.end()) throw ConfigError("CSV has no column '" + name + "'");
  const auto col = static_cast<std::size_t>(it - header_.begin());
  std::vector<double> out;
  out.reserve(rows_.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const std::string& cell = rows_[r][col];
    const auto b = cell.find_first_not_of(' ');
    const auto e = cell.find_last_not_of(' ');
    double v = 0.0;
    const char* first = cell.data() + (b == std::string::npos ? cell.size() : b);
    const char* last = cell.data() + (e == std::string::npos ? cell.size() : e + 1);
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || first == last)
      throw ConfigError("CSV column '" + name + "' row " + std::to_string(r + 2) + " is not numeric: '" + cell + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace stereo
