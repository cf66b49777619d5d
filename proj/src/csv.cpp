#include "fairtrain/csv.hpp"

#include "fairtrain/types.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

namespace fairtrain::csv {

namespace {

// Splits one logical record; returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t row) {
  fields.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == line.size()) {
      if (quoted) {
        // Quoted field spanning a newline.
        std::string more;
        if (!std::getline(in, more)) throw ParseError(row, "unterminated quoted field");
        if (!more.empty() && more.back() == '\r') more.pop_back();
        field += '\n';
        line = std::move(more);
        i = 0;
        continue;
      }
      fields.push_back(std::move(field));
      return true;
    }
    const char ch = line[i++];
    if (quoted) {
      if (ch == '"') {
        if (i < line.size() && line[i] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"' && field.empty()) {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += ch;
    }
  }
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return c;
  }
  throw ParseError(0, "missing column '" + name + "'");
}

Table read(std::istream& in) {
  Table table;
  std::vector<std::string> fields;
  if (!read_record(in, table.header, 0)) throw ParseError(0, "empty input, expected a header row");
  if (!table.header.empty() && table.header[0].rfind("\xEF\xBB\xBF", 0) == 0) table.header[0].erase(0, 3);
  std::size_t row = 1;
  while (read_record(in, fields, row)) {
    if (fields.size() == 1 && fields[0].empty()) {
      ++row;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw ParseError(row, "expected " + std::to_string(table.header.size()) + " fields, found " +
                                std::to_string(fields.size()));
    }
    table.rows.push_back(fields);
    ++row;
  }
  return table;
}

Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read(in);
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\n") != std::string::npos) {
      out << '"';
      for (char ch : f) {
        if (ch == '"') out << '"';
        out << ch;
      }
      out << '"';
    } else {
      out << f;
    }
  }
  out << '\n';
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace fairtrain::csv
