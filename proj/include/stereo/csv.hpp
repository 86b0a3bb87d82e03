#pragma once

#include <istream>
#include <map>
#include <string>
#include <vector>

namespace stereo {

/// Numeric CSV table with a header row. Quoted fields are supported; every
/// data cell in a requested column must parse as a number.
class CsvTable {
 public:
  static CsvTable parse(std::istream& in);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t row_count() const { return rows_.size(); }
  bool has_column(const std::string& name) const;
  std::vector<double> numeric_column(const std::string& name) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace stereo
