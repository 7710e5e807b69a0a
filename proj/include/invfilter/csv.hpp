/**
 * @file csv.hpp
 * @brief Minimal deterministic CSV output: header row, '.' decimal separator,
 * shortest round-trip number formatting, LF line endings.
 */
#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace invfilter {

/// Shortest decimal text that parses back to exactly `x`; "nan"/"inf" for
/// non-finite values.
std::string format_number(double x);

inline std::string format_cell(double x) { return format_number(x); }
inline std::string format_cell(int x) { return std::to_string(x); }
inline std::string format_cell(long x) { return std::to_string(x); }
inline std::string format_cell(long long x) { return std::to_string(x); }
inline std::string format_cell(unsigned x) { return std::to_string(x); }
inline std::string format_cell(unsigned long x) { return std::to_string(x); }
inline std::string format_cell(unsigned long long x) { return std::to_string(x); }
inline std::string format_cell(std::string_view s) { return std::string(s); }
inline std::string format_cell(const char* s) { return std::string(s); }

class CsvWriter {
 public:
  /// Throws ConfigError if the file cannot be created.
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& cells);

  template <typename... T>
  void values(const T&... v) {
    row(std::vector<std::string>{format_cell(v)...});
  }

  /// Leading cells followed by a numeric block.
  void row(std::vector<std::string> prefix, const std::vector<double>& numbers);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace invfilter
