#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hypobench/common/date.hpp"

namespace hypobench::data {

/// One grid cell on one day.
struct HindcastRecord {
    Date date{};
    std::int64_t cell_id = 0;
    int depth_bin = 0;
    double lon = 0.0;
    double lat = 0.0;
    double pea = 0.0;       // J/m^3
    double soc = 0.0;       // mmol O2 / m^2 / day
    double dcp_temp = 0.0;  // 1/day
    double do_bottom = 0.0; // mg/L
    bool land = false;

    bool operator==(const HindcastRecord&) const = default;
};

/// Records kept in canonical order: by cell_id, then date.
struct HindcastSet {
    std::vector<HindcastRecord> records;
    std::size_t cells = 0;
    std::size_t days = 0;
    std::size_t depth_bins = 0;

    bool operator==(const HindcastSet&) const = default;
};

/// Sorts the records canonically, recomputes the counts and checks the set
/// invariants. Throws IntegrityError on a duplicate (date, cell_id), on a cell
/// whose depth bin changes, or on a land record with non-zero drivers, and
/// DomainError on a negative driver.
HindcastSet make_hindcast_set(std::vector<HindcastRecord> records);

/// Column order of the CSV format.
inline constexpr const char* kHindcastColumns[] = {"date", "cell_id", "depth_bin", "lon",       "lat",
                                                   "pea",  "soc",     "dcp_temp",  "do_bottom", "land"};

std::string hindcast_to_csv(const HindcastSet& set);
HindcastSet hindcast_from_csv(const std::string& text);

void write_hindcast(const std::filesystem::path& path, const HindcastSet& set);
HindcastSet load_hindcast(const std::filesystem::path& path);

}  // namespace hypobench::data
