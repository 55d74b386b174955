#include "concur/csv.hpp"

#include <charconv>
#include <cmath>

#include "concur/errors.hpp"

namespace concur {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

} // namespace

CsvReader::CsvReader(std::istream& in) : in_(in) {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_;
    if (trim(text).empty()) continue;
    for (auto& h : split_csv_line(text)) header_.push_back(trim(h));
    return;
  }
  throw ParseError(line_ == 0 ? 1 : line_, "missing CSV header");
}

std::optional<std::size_t> CsvReader::find(const std::string& name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t CsvReader::require(const std::string& name) const {
  if (auto i = find(name)) return *i;
  throw ParseError(1, "missing column '" + name + "'");
}

bool CsvReader::next(std::vector<std::string>& fields) {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_;
    if (trim(text).empty()) continue;
    fields = split_csv_line(text);
    for (auto& f : fields) f = trim(f);
    if (fields.size() != header_.size()) {
      throw ParseError(line_, "expected " + std::to_string(header_.size()) + " fields, found " +
                                  std::to_string(fields.size()));
    }
    return true;
  }
  return false;
}

double parse_double(const std::string& field, std::size_t line, const std::string& what) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ParseError(line, "invalid " + what + " '" + field + "'");
  }
  return v;
}

long long parse_int(const std::string& field, std::size_t line, const std::string& what) {
  long long v = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw ParseError(line, "invalid " + what + " '" + field + "'");
  }
  return v;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

} // namespace concur
