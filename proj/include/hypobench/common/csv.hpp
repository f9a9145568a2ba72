#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hypobench {

/// Minimal comma-separated table: a required header line, then one record
/// per line. No quoting; fields may not contain commas. Blank lines are
/// skipped and a trailing '\r' is tolerated.
class CsvTable {
   public:
    static CsvTable parse(const std::string& text);

    const std::vector<std::string>& header() const { return header_; }
    std::size_t rows() const { return rows_.size(); }

    /// Index of a header column. Throws SchemaError naming the column.
    std::size_t column(std::string_view name) const;

    const std::string& field(std::size_t row, std::size_t column) const { return rows_[row][column]; }

    /// 1-based line number of a data row in the source text.
    std::size_t line(std::size_t row) const { return lines_[row]; }

    /// Typed field access. Throw ParseError quoting the row and column.
    double number(std::size_t row, std::size_t column) const;
    std::int64_t integer(std::size_t row, std::size_t column) const;

   private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::size_t> lines_;
};

/// Appends `fields` joined by commas plus a newline.
void append_csv_row(std::string& out, const std::vector<std::string>& fields);

}  // namespace hypobench
