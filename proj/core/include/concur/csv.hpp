#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace concur {

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(const std::string& line);

// Header-driven CSV reader that tracks 1-based physical line numbers.
class CsvReader {
public:
  explicit CsvReader(std::istream& in);

  const std::vector<std::string>& header() const noexcept { return header_; }
  // Column index of `name`, or nullopt.
  std::optional<std::size_t> find(const std::string& name) const;
  // Column index of `name`; ParseError on the header line if absent.
  std::size_t require(const std::string& name) const;
  // Next non-blank record; false at end of input. Field count must match the header.
  bool next(std::vector<std::string>& fields);
  std::size_t line() const noexcept { return line_; }

private:
  std::istream& in_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
};

// Strict number parsing; ParseError naming `line` on failure.
double parse_double(const std::string& field, std::size_t line, const std::string& what);
long long parse_int(const std::string& field, std::size_t line, const std::string& what);

std::string csv_escape(const std::string& field);

// Shortest round-trip decimal form of a finite double; "NA" for NaN.
std::string format_double(double v);

} // namespace concur
