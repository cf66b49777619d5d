#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace fairtrain::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Position of `name` in the header, or throws ParseError.
  std::size_t column(const std::string& name) const;
};

/// Reads comma-separated text with a header row. Double-quoted fields may
/// contain commas and doubled quotes. Every row must have as many fields as
/// the header.
Table read(std::istream& in);
Table read_file(const std::string& path);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace fairtrain::csv
