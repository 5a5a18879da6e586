#include "hcace/csv.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "hcace/errors.hpp"

namespace hcace {

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return j;
  throw DataError("column '" + name + "' not found");
}

bool CsvTable::has_column(const std::string& name) const {
  for (const auto& h : header)
    if (h == name) return true;
  return false;
}

CsvTable read_csv(std::istream& in) {
  std::string text(std::istreambuf_iterator<char>(in), {});
  std::size_t pos = 0;
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) pos = 3;

  std::vector<CsvRow> records;
  CsvRow row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;  // row has content beyond a bare newline
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    // A bare newline yields one empty field; treat it as a blank line.
    if (row.size() != 1 || !row.front().empty()) records.push_back(std::move(row));
    row.clear();
    field_started = false;
  };
  while (pos < text.size()) {
    char c = text[pos];
    if (in_quotes) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field.push_back('"');
          ++pos;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      ++pos;
      continue;
    }
    switch (c) {
      case '"':
        // A quote elsewhere than the field start is kept literally.
        if (field.empty()) {
          in_quotes = true;
        } else {
          field.push_back(c);
        }
        field_started = true;
        ++pos;
        break;
      case ',':
        end_field();
        field_started = true;
        ++pos;
        break;
      case '\r':
        if (pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
        end_row();
        ++pos;
        break;
      case '\n':
        end_row();
        ++pos;
        break;
      default:
        field.push_back(c);
        field_started = true;
        ++pos;
        break;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field at end of input");
  if (field_started || !field.empty() || !row.empty()) end_row();

  if (records.empty()) throw DataError("empty CSV input");
  CsvTable table;
  table.header = std::move(records.front());
  table.rows.assign(std::make_move_iterator(records.begin() + 1),
                    std::make_move_iterator(records.end()));
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_csv(in);
}

std::string csv_escape(const std::string& field) {
  bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv(std::ostream& out, const CsvTable& table) {
  auto write_row = [&out](const CsvRow& row) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) out.put(',');
      out << csv_escape(row[j]);
    }
    out.put('\n');
  };
  write_row(table.header);
  for (const CsvRow& row : table.rows) write_row(row);
}

namespace {

void commit_file(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      throw DataError("failed writing '" + tmp + "'");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw DataError("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

}  // namespace

void write_csv_file(const std::string& path, const CsvTable& table) {
  std::ostringstream buffer;
  write_csv(buffer, table);
  commit_file(path, buffer.str());
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  commit_file(path, text);
}

}  // namespace hcace
