#include "mvtraffic/report.hpp"

#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "mvtraffic/numfmt.hpp"

namespace mvt {

void ReportTable::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size())
        throw std::invalid_argument("report row has " + std::to_string(row.size()) + " cells, table has " +
                                    std::to_string(columns.size()) + " columns");
    rows.push_back(std::move(row));
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

namespace {

struct CsvCell {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(const std::string& s) const { return csv_escape(s); }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
};

struct JsonCell {
    nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
    nlohmann::ordered_json operator()(const std::string& s) const { return s; }
    nlohmann::ordered_json operator()(std::int64_t v) const { return v; }
    nlohmann::ordered_json operator()(double v) const { return v; }
    nlohmann::ordered_json operator()(bool v) const { return v; }
};

}  // namespace

void write_csv(const ReportTable& table, std::ostream& out) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << csv_escape(table.columns[i]);
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << std::visit(CsvCell{}, row[i]);
        out << '\n';
    }
}

void write_json(const ReportTable& table, std::ostream& out) {
    auto doc = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i) obj[table.columns[i]] = std::visit(JsonCell{}, row[i]);
        doc.push_back(std::move(obj));
    }
    out << doc.dump(2) << '\n';
}

void write_report(const ReportTable& table, ReportFormat format, std::ostream& out) {
    if (format == ReportFormat::Json)
        write_json(table, out);
    else
        write_csv(table, out);
}

}  // namespace mvt
