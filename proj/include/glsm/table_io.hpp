#pragma once

#include <string>
#include <vector>

namespace glsm {

// Numeric table with named columns, stored row-major.
class Table {
 public:
  Table() = default;
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return cols() == 0 ? 0 : values_.size() / cols(); }
  std::size_t cols() const { return header_.size(); }
  double at(std::size_t i, std::size_t j) const { return values_[i * cols() + j]; }
  const std::vector<double>& values() const { return values_; }

  void add_row(const std::vector<double>& row);
  // Index of a named column; throws DataError if absent.
  std::size_t column(const std::string& name) const;

 private:
  std::vector<std::string> header_;
  std::vector<double> values_;
};

// Reads comma- or whitespace-separated numbers. A first line that does not
// parse as numbers is taken as the header; otherwise columns are named c0..
Table read_table(const std::string& path);

// Comma-separated, one header line, 17 significant digits.
void write_table(const std::string& path, const Table& t);

// Formats with 17 significant digits.
std::string format_double(double v);

}  // namespace glsm
