#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace hypobench {

using Date = std::chrono::sys_days;

/// Parses an ISO-8601 calendar date `YYYY-MM-DD`. Throws ParseError.
Date parse_date(std::string_view text);

std::string format_date(Date d);

Date make_date(int year, unsigned month, unsigned day);

/// 0-based day of year (Jan 1 is 0).
int day_of_year(Date d);

int days_in_year(Date d);

unsigned month_of(Date d);

int year_of(Date d);

/// Inclusive calendar range.
struct DateRange {
    Date first;
    Date last;

    bool contains(Date d) const { return d >= first && d <= last; }
    int days() const { return static_cast<int>((last - first).count()) + 1; }
    bool overlaps(const DateRange& other) const { return first <= other.last && other.first <= last; }
    bool operator==(const DateRange&) const = default;
};

/// Parses `YYYY-MM-DD..YYYY-MM-DD`.
DateRange parse_date_range(std::string_view text);

std::string format_date_range(const DateRange& r);

}  // namespace hypobench
