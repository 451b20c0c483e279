#include "fbcrs/cli/report.h"

#include <charconv>
#include <cmath>

#include "fbcrs/error.h"

namespace fbcrs::cli {

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw std::logic_error("table row width does not match the header");
  }
  rows.push_back(std::move(row));
}

std::string format_double(double v) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string cell_text(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else {
          return v;
        }
      },
      cell);
}

void write_csv(const Table& table, std::ostream& out) {
  for (std::size_t k = 0; k < table.columns.size(); ++k) {
    out << (k ? "," : "") << csv_field(table.columns[k]);
  }
  out << "\r\n";
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      out << (k ? "," : "") << csv_field(cell_text(row[k]));
    }
    out << "\r\n";
  }
}

nlohmann::json table_rows_json(const Table& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t k = 0; k < row.size(); ++k) {
      const std::string& key = table.columns[k];
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
              obj[key] = nullptr;
            } else if constexpr (std::is_same_v<T, double>) {
              obj[key] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
            } else {
              obj[key] = v;
            }
          },
          row[k]);
    }
    rows.push_back(std::move(obj));
  }
  return rows;
}

Format parse_format(const std::string& text) {
  if (text == "csv") return Format::kCsv;
  if (text == "json") return Format::kJson;
  throw InputError("unknown format '" + text + "'");
}

void Report::flag_violation(const std::string& what) {
  warnings.push_back(what);
  exit_code = 2;
}

void render(const Report& report, Format format, std::ostream& out) {
  if (format == Format::kCsv) {
    write_csv(report.table, out);
    return;
  }
  nlohmann::json doc = {{"command", report.command}};
  for (const auto& [key, value] : report.summary.items()) doc[key] = value;
  doc["rows"] = table_rows_json(report.table);
  doc["warnings"] = report.warnings;
  out << doc.dump(2) << "\n";
}

}  // namespace fbcrs::cli
