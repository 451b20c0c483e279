#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace fbcrs::cli {

// Empty, real, integer, text or flag. Non-finite reals render as an empty
// CSV field and as JSON null.
using Cell = std::variant<std::monostate, double, std::int64_t, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
// RFC-4180 quoting: fields containing ',', '"', CR or LF are quoted.
std::string csv_field(const std::string& text);
std::string cell_text(const Cell& cell);
void write_csv(const Table& table, std::ostream& out);
nlohmann::json table_rows_json(const Table& table);

enum class Format { kCsv, kJson };

Format parse_format(const std::string& text);

struct Report {
  std::string command;
  nlohmann::json summary = nlohmann::json::object();
  Table table;
  std::vector<std::string> warnings;
  // 0 ok, 2 invariant violation detected.
  int exit_code = 0;

  void flag_violation(const std::string& what);
};

// CSV renders the table only. JSON renders one object: "command", the
// summary fields at top level, then "rows" and "warnings".
void render(const Report& report, Format format, std::ostream& out);

}  // namespace fbcrs::cli
