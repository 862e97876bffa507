#pragma once

#include <string>
#include <vector>

namespace ccmkt::csv {

// Fixed-point rendering so repeated runs emit identical bytes.
std::string format(double v, int decimals);

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }
  std::string str() const;
  void write(const std::string& path) const;
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  const std::vector<std::string>& header() const { return header_; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Parses a CSV file previously written by Table (no quoting or escapes).
std::vector<std::vector<std::string>> read_rows(const std::string& path);

}  // namespace ccmkt::csv
