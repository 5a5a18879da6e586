#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace hcace {

using CsvRow = std::vector<std::string>;

// Header plus data rows, all fields as raw strings.
struct CsvTable {
  CsvRow header;
  std::vector<CsvRow> rows;

  // Index of a header column; throws DataError when absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

// RFC 4180 reader: quoted fields may hold commas, quotes ("" escapes one),
// and line breaks; records end at LF or CRLF; a UTF-8 BOM is skipped.
// Throws DataError on an unterminated quoted field or an empty file.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

// Writes with minimal quoting (only fields containing a comma, quote, or
// line break are quoted) and LF record ends.
void write_csv(std::ostream& out, const CsvTable& table);

// Writes to a temporary sibling and renames into place, so a failed write
// never leaves a partial file at `path`.
void write_csv_file(const std::string& path, const CsvTable& table);

std::string csv_escape(const std::string& field);

// Canonical decimal form: up to 17 significant digits, round-trips exactly.
std::string format_double(double value);

// Writes `text` via the same temporary-then-rename discipline.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace hcace
