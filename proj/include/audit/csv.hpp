#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace audit::csv {

// Minimal CSV support: header row, configurable delimiter, double-quoted
// fields with "" escapes. No embedded newlines inside quoted fields.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column, or throws SchemaError naming the column.
  std::size_t column(const std::string& name) const;
};

std::vector<std::string> split_line(const std::string& line, char delimiter);

Table read_file(const std::filesystem::path& path, char delimiter = ',');

// Locale-independent numeric parsing; throws ParseError with `context`
// on failure (empty cells count as missing values).
double parse_double(const std::string& field, const std::string& context);
std::int64_t parse_int(const std::string& field, const std::string& context);

// Timestamp field: integer epoch seconds or ISO-8601 date (YYYY-MM-DD,
// mapped to midnight UTC).
std::int64_t parse_timestamp(const std::string& field, const std::string& context);

// Shortest representation that round-trips the double exactly.
std::string format_double(double v);

std::string escape(const std::string& field, char delimiter = ',');

}  // namespace audit::csv
