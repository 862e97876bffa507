#include "ccmkt/csvio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ccmkt/errors.hpp"

namespace ccmkt::csv {

std::string format(double v, int decimals) {
  if (std::abs(v) < 0.5 * std::pow(10.0, -decimals)) v = 0.0;  // avoid "-0.00"
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string Table::str() const {
  std::string out;
  for (size_t k = 0; k < header_.size(); ++k) {
    if (k) out += ",";
    out += header_[k];
  }
  out += "\n";
  for (const auto& row : rows_) {
    for (size_t k = 0; k < row.size(); ++k) {
      if (k) out += ",";
      out += row[k];
    }
    out += "\n";
  }
  return out;
}

void Table::write(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot write file: " + path);
  f << str();
}

std::vector<std::vector<std::string>> read_rows(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot read file: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace ccmkt::csv
