#include "invfilter/csv.hpp"

#include <charconv>
#include <cmath>

#include "invfilter/errors.hpp"

namespace invfilter {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
  if (!out_) throw ConfigError("cannot write " + path);
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) {
    throw DimensionError("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                         std::to_string(columns_));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

void CsvWriter::row(std::vector<std::string> prefix, const std::vector<double>& numbers) {
  for (double x : numbers) prefix.push_back(format_number(x));
  row(prefix);
}

}  // namespace invfilter
