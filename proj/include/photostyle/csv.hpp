#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace photostyle {

// In-memory CSV table: a header row plus string cells.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(std::string_view name) const;  // throws SchemaError
  const std::string& cell(std::size_t row, std::string_view column) const;
  void add_row(std::vector<std::string> row);

  friend bool operator==(const Table&, const Table&) = default;
};

// RFC 4180: fields containing separators, quotes or line breaks are quoted,
// embedded quotes doubled. Rows end with "\n".
std::string format_csv(const Table& table);
Table parse_csv(std::string_view text);

void persist_table(const Table& table, const std::filesystem::path& path);

// With expected_columns, the file must carry exactly that column set; the
// result is reordered to match. Throws SchemaError naming missing/extra columns.
Table load_table(const std::filesystem::path& path,
                 const std::vector<std::string>& expected_columns = {});
Table conform_table(Table table, const std::vector<std::string>& expected_columns);

// Shortest round-trippable decimal form ("%.17g"-equivalent, trimmed).
std::string format_real(double v);
double parse_real(std::string_view text, std::string_view what);
long parse_int(std::string_view text, std::string_view what);

}  // namespace photostyle
