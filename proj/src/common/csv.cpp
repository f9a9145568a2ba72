#include "hypobench/common/csv.hpp"

#include <charconv>
#include <cmath>

#include "hypobench/common/errors.hpp"

namespace hypobench {

namespace {

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            return fields;
        }
        fields.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

}  // namespace

CsvTable CsvTable::parse(const std::string& text) {
    CsvTable table;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool have_header = false;
    if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) pos = 3;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        auto fields = split(line);
        if (!have_header) {
            table.header_ = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header_.size()) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(table.header_.size()) + " fields, found " +
                             std::to_string(fields.size()));
        }
        table.rows_.push_back(std::move(fields));
        table.lines_.push_back(line_no);
    }
    if (!have_header) throw SchemaError("missing CSV header");
    return table;
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (header_[i] == name) return i;
    }
    throw SchemaError("missing column '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::size_t column) const {
    const std::string& s = rows_[row][column];
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
        throw ParseError("row " + std::to_string(lines_[row]) + ", column '" + header_[column] + "': '" + s +
                         "' is not a finite number");
    }
    return value;
}

std::int64_t CsvTable::integer(std::size_t row, std::size_t column) const {
    const std::string& s = rows_[row][column];
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError("row " + std::to_string(lines_[row]) + ", column '" + header_[column] + "': '" + s +
                         "' is not an integer");
    }
    return value;
}

void append_csv_row(std::string& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += fields[i];
    }
    out += '\n';
}

}  // namespace hypobench
