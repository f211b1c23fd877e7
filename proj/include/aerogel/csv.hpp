#pragma once

// Plain CSV output. Floating-point values are printed with 17 significant
// digits so every written number round-trips exactly.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace aerogel {

inline std::string format_double(double x) {
  if (std::isnan(x))
    return "nan";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

//! Builds one CSV row field by field.
class CsvRow {
public:
  CsvRow &operator<<(double x) { return field(format_double(x)); }
  CsvRow &operator<<(std::int64_t x) { return field(std::to_string(x)); }
  CsvRow &operator<<(std::uint64_t x) { return field(std::to_string(x)); }
  CsvRow &operator<<(int x) { return field(std::to_string(x)); }
  CsvRow &operator<<(unsigned x) { return field(std::to_string(x)); }
  CsvRow &operator<<(bool x) { return field(x ? "1" : "0"); }
  CsvRow &operator<<(std::string_view s) { return field(std::string(s)); }
  CsvRow &operator<<(const char *s) { return field(s); }

  const std::string &str() const noexcept { return line_; }

private:
  CsvRow &field(const std::string &s) {
    if (!first_)
      line_ += ',';
    line_ += s;
    first_ = false;
    return *this;
  }
  std::string line_;
  bool first_ = true;
};

inline std::string csv_header(std::initializer_list<std::string_view> names) {
  CsvRow row;
  for (auto n : names)
    row << n;
  return row.str();
}

//! Splits one CSV line on commas (no quoting in our formats).
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
    out.back().pop_back();
  return out;
}

inline double parse_double(const std::string &s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception &) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  if (used != s.size())
    throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

} // namespace aerogel
