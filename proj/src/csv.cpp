#include "photostyle/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "photostyle/error.hpp"

namespace photostyle {

std::size_t Table::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw SchemaError("table has no column '" + std::string(name) + "'");
}

const std::string& Table::cell(std::size_t row, std::string_view column) const {
  return rows.at(row).at(column_index(column));
}

void Table::add_row(std::vector<std::string> row) {
  if (row.size() != columns.size()) {
    throw SchemaError("row has " + std::to_string(row.size()) + " fields, table has " +
                      std::to_string(columns.size()) + " columns");
  }
  rows.push_back(std::move(row));
}

namespace {

void write_field(std::string& out, const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) {
    out += f;
    return;
  }
  out += '"';
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

void write_row(std::string& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    write_field(out, row[i]);
  }
  out += '\n';
}

}  // namespace

std::string format_csv(const Table& table) {
  std::string out;
  write_row(out, table.columns);
  for (const auto& row : table.rows) write_row(out, row);
  return out;
}

Table parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  int line = 1;
  std::size_t i = 0;
  if (text.starts_with("\xEF\xBB\xBF")) i = 3;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    records.push_back(std::move(row));
    row.clear();
  };

  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty()) {
          throw ParseError("csv line " + std::to_string(line) + ": stray quote inside unquoted field");
        }
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        [[fallthrough]];
      case '\n':
        if (row.empty() && !field_started) {  // blank line
          ++line;
          break;
        }
        end_row();
        ++line;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw ParseError("csv line " + std::to_string(line) + ": unterminated quoted field");
  if (field_started || !row.empty()) end_row();

  Table t;
  if (records.empty()) return t;
  t.columns = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.columns.size()) {
      throw ParseError("csv record " + std::to_string(r + 1) + " has " +
                       std::to_string(records[r].size()) + " fields, header has " +
                       std::to_string(t.columns.size()));
    }
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

void persist_table(const Table& table, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_csv(table);
  if (!out) throw IoError("write failed for " + path.string());
}

Table conform_table(Table table, const std::vector<std::string>& expected) {
  if (expected.empty()) return table;
  std::vector<std::string> missing, extra;
  for (const auto& e : expected) {
    if (std::find(table.columns.begin(), table.columns.end(), e) == table.columns.end()) missing.push_back(e);
  }
  for (const auto& c : table.columns) {
    if (std::find(expected.begin(), expected.end(), c) == expected.end()) extra.push_back(c);
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "schema mismatch:";
    for (const auto& m : missing) msg += " missing column '" + m + "'";
    for (const auto& x : extra) msg += " extra column '" + x + "'";
    throw SchemaError(msg);
  }
  if (table.columns == expected) return table;
  std::vector<std::size_t> order;
  for (const auto& e : expected) order.push_back(table.column_index(e));
  Table out;
  out.columns = expected;
  for (const auto& row : table.rows) {
    std::vector<std::string> r;
    for (auto i : order) r.push_back(row[i]);
    out.rows.push_back(std::move(r));
  }
  return out;
}

Table load_table(const std::filesystem::path& path, const std::vector<std::string>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return conform_table(parse_csv(ss.str()), expected);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

double parse_real(std::string_view text, std::string_view what) {
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ParseError("expected a number for " + std::string(what) + ", got '" + s + "'");
  }
  return v;
}

long parse_int(std::string_view text, std::string_view what) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError("expected an integer for " + std::string(what) + ", got '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace photostyle
