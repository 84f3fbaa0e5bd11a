#pragma once

// Tabular reports emitted by the command-line tool, as CSV or JSON.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mvt {

// monostate renders as an empty CSV field / JSON null.
using Cell = std::variant<std::monostate, std::string, std::int64_t, double, bool>;

enum class ReportFormat { Csv, Json };

struct ReportTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    // Throws std::invalid_argument when the row width differs from the column count.
    void add_row(std::vector<Cell> row);
};

// RFC 4180 quoting: fields with a comma, quote, CR or LF are wrapped in
// double quotes and inner quotes are doubled.
std::string csv_escape(std::string_view field);

void write_csv(const ReportTable& table, std::ostream& out);

// An array of objects, one per row, keys in column order.
void write_json(const ReportTable& table, std::ostream& out);

void write_report(const ReportTable& table, ReportFormat format, std::ostream& out);

}  // namespace mvt
