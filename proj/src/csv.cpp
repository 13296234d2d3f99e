#include "audit/csv.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "audit/error.hpp"

namespace audit::csv {

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw SchemaError("missing column '" + name + "'");
}

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

Table read_file(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  Table table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      table.header = split_line(line, delimiter);
      first = false;
      continue;
    }
    if (line.empty()) continue;
    table.rows.push_back(split_line(line, delimiter));
  }
  if (first) throw ParseError("'" + path.string() + "' is empty (no header row)");
  return table;
}

double parse_double(const std::string& field, const std::string& context) {
  if (field.empty()) throw ParseError(context + ": missing value");
  double value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(context + ": not a number: '" + field + "'");
  }
  if (!std::isfinite(value)) {
    throw ParseError(context + ": non-finite value: '" + field + "'");
  }
  return value;
}

std::int64_t parse_int(const std::string& field, const std::string& context) {
  if (field.empty()) throw ParseError(context + ": missing value");
  std::int64_t value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(context + ": not an integer: '" + field + "'");
  }
  return value;
}

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

}  // namespace

std::int64_t parse_timestamp(const std::string& field, const std::string& context) {
  if (field.empty()) throw ParseError(context + ": missing timestamp");
  if (is_iso_date(field)) {
    std::int64_t y = std::stoll(field.substr(0, 4));
    unsigned m = static_cast<unsigned>(std::stoul(field.substr(5, 2)));
    unsigned d = static_cast<unsigned>(std::stoul(field.substr(8, 2)));
    if (m < 1 || m > 12 || d < 1 || d > 31) {
      throw ParseError(context + ": invalid date '" + field + "'");
    }
    return days_from_civil(y, m, d) * 86400;
  }
  return parse_int(field, context);
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw IoError("double formatting failed");
  return std::string(buf.data(), ptr);
}

std::string escape(const std::string& field, char delimiter) {
  bool needs_quote = field.find(delimiter) != std::string::npos ||
                     field.find('"') != std::string::npos ||
                     field.find('\n') != std::string::npos;
  if (!needs_quote) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace audit::csv
