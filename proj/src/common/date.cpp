#include "hypobench/common/date.hpp"

#include <charconv>
#include <cstdio>

#include "hypobench/common/errors.hpp"

namespace hypobench {

namespace {

int parse_int(std::string_view text, std::string_view whole) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError("malformed date '" + std::string(whole) + "'");
    }
    return value;
}

}  // namespace

Date parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw ParseError("malformed date '" + std::string(text) + "', expected YYYY-MM-DD");
    }
    const int y = parse_int(text.substr(0, 4), text);
    const int m = parse_int(text.substr(5, 2), text);
    const int d = parse_int(text.substr(8, 2), text);
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw ParseError("invalid calendar date '" + std::string(text) + "'");
    return Date{ymd};
}

std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

Date make_date(int year, unsigned month, unsigned day) {
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!ymd.ok()) throw DomainError("invalid calendar date");
    return Date{ymd};
}

int day_of_year(Date d) {
    const std::chrono::year_month_day ymd{d};
    const Date jan1{ymd.year() / std::chrono::January / 1};
    return static_cast<int>((d - jan1).count());
}

int days_in_year(Date d) { return std::chrono::year_month_day{d}.year().is_leap() ? 366 : 365; }

unsigned month_of(Date d) { return static_cast<unsigned>(std::chrono::year_month_day{d}.month()); }

int year_of(Date d) { return static_cast<int>(std::chrono::year_month_day{d}.year()); }

DateRange parse_date_range(std::string_view text) {
    const auto sep = text.find("..");
    if (sep == std::string_view::npos) {
        const Date only = parse_date(text);
        return {only, only};
    }
    DateRange r{parse_date(text.substr(0, sep)), parse_date(text.substr(sep + 2))};
    if (r.last < r.first) throw ParseError("date range '" + std::string(text) + "' ends before it starts");
    return r;
}

std::string format_date_range(const DateRange& r) { return format_date(r.first) + ".." + format_date(r.last); }

}  // namespace hypobench
