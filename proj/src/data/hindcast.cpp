#include "hypobench/data/hindcast.hpp"

#include <algorithm>
#include <set>

#include "hypobench/common/csv.hpp"
#include "hypobench/common/errors.hpp"
#include "hypobench/common/io.hpp"

namespace hypobench::data {

HindcastSet make_hindcast_set(std::vector<HindcastRecord> records) {
    std::sort(records.begin(), records.end(), [](const HindcastRecord& a, const HindcastRecord& b) {
        return a.cell_id != b.cell_id ? a.cell_id < b.cell_id : a.date < b.date;
    });
    std::set<Date> dates;
    int max_depth = -1;
    std::size_t cells = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const bool new_cell = i == 0 || records[i - 1].cell_id != r.cell_id;
        if (new_cell) {
            ++cells;
        } else {
            const auto& prev = records[i - 1];
            if (prev.date == r.date) {
                throw IntegrityError("duplicate record for (" + format_date(r.date) + ", cell " +
                                     std::to_string(r.cell_id) + ")");
            }
            if (prev.depth_bin != r.depth_bin) {
                throw IntegrityError("cell " + std::to_string(r.cell_id) + " changes depth bin on " +
                                     format_date(r.date));
            }
        }
        if (r.depth_bin < 0) throw DomainError("cell " + std::to_string(r.cell_id) + " has a negative depth bin");
        if (r.pea < 0.0 || r.soc < 0.0 || r.dcp_temp < 0.0 || r.do_bottom < 0.0) {
            throw DomainError("negative driver or oxygen value for (" + format_date(r.date) + ", cell " +
                              std::to_string(r.cell_id) + ")");
        }
        if (r.land && (r.pea != 0.0 || r.soc != 0.0 || r.dcp_temp != 0.0 || r.do_bottom != 0.0)) {
            throw IntegrityError("land record with non-zero values for (" + format_date(r.date) + ", cell " +
                                 std::to_string(r.cell_id) + ")");
        }
        dates.insert(r.date);
        max_depth = std::max(max_depth, r.depth_bin);
    }
    HindcastSet set;
    set.records = std::move(records);
    set.cells = cells;
    set.days = dates.size();
    set.depth_bins = static_cast<std::size_t>(max_depth + 1);
    return set;
}

std::string hindcast_to_csv(const HindcastSet& set) {
    std::string out;
    out.reserve(96 * (set.records.size() + 1));
    std::vector<std::string> fields(std::begin(kHindcastColumns), std::end(kHindcastColumns));
    append_csv_row(out, fields);
    for (const auto& r : set.records) {
        fields = {format_date(r.date),      std::to_string(r.cell_id), std::to_string(r.depth_bin),
                  format_double(r.lon),     format_double(r.lat),      format_double(r.pea),
                  format_double(r.soc),     format_double(r.dcp_temp), format_double(r.do_bottom),
                  r.land ? "1" : "0"};
        append_csv_row(out, fields);
    }
    return out;
}

HindcastSet hindcast_from_csv(const std::string& text) {
    const CsvTable table = CsvTable::parse(text);
    std::size_t col[std::size(kHindcastColumns)];
    for (std::size_t i = 0; i < std::size(kHindcastColumns); ++i) col[i] = table.column(kHindcastColumns[i]);

    std::vector<HindcastRecord> records(table.rows());
    for (std::size_t row = 0; row < table.rows(); ++row) {
        HindcastRecord& r = records[row];
        try {
            r.date = parse_date(table.field(row, col[0]));
        } catch (const ParseError& e) {
            throw ParseError("row " + std::to_string(table.line(row)) + ", column 'date': " + e.what());
        }
        r.cell_id = table.integer(row, col[1]);
        const auto depth = table.integer(row, col[2]);
        if (depth < 0 || depth > 1'000'000) {
            throw ParseError("row " + std::to_string(table.line(row)) + ", column 'depth_bin': out of range");
        }
        r.depth_bin = static_cast<int>(depth);
        r.lon = table.number(row, col[3]);
        r.lat = table.number(row, col[4]);
        r.pea = table.number(row, col[5]);
        r.soc = table.number(row, col[6]);
        r.dcp_temp = table.number(row, col[7]);
        r.do_bottom = table.number(row, col[8]);
        const std::string& land = table.field(row, col[9]);
        if (land != "0" && land != "1") {
            throw ParseError("row " + std::to_string(table.line(row)) + ", column 'land': expected 0 or 1, found '" +
                             land + "'");
        }
        r.land = land == "1";
    }
    return make_hindcast_set(std::move(records));
}

void write_hindcast(const std::filesystem::path& path, const HindcastSet& set) {
    write_file_atomic(path, hindcast_to_csv(set));
}

HindcastSet load_hindcast(const std::filesystem::path& path) { return hindcast_from_csv(read_file(path)); }

}  // namespace hypobench::data
