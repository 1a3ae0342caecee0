#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "loadcast/error.hpp"

namespace loadcast {

/// Calendar date on the naive local grid (no timezone), days since 1970-01-01.
struct Date {
    std::int64_t days = 0;

    friend auto operator<=>(const Date&, const Date&) = default;
};

/// One point on the naive hourly grid: hours since 1970-01-01T00:00.
struct HourStamp {
    std::int64_t hours = 0;

    Date date() const {
        // floor division, stamps may predate the epoch in principle
        std::int64_t d = hours >= 0 ? hours / 24 : (hours - 23) / 24;
        return Date{d};
    }
    int hour_of_day() const {
        int h = static_cast<int>(hours - date().days * 24);
        return h;
    }

    friend auto operator<=>(const HourStamp&, const HourStamp&) = default;
};

inline HourStamp start_of_day(Date d) { return HourStamp{d.days * 24}; }

inline Date make_date(int year, unsigned month, unsigned day) {
    using namespace std::chrono;
    year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!ymd.ok())
        throw DataError("invalid calendar date " + std::to_string(year) + "-" +
                        std::to_string(month) + "-" + std::to_string(day));
    return Date{sys_days{ymd}.time_since_epoch().count()};
}

/// Day-of-week code used throughout: 0 = Monday ... 6 = Sunday.
inline int day_of_week(Date d) {
    using namespace std::chrono;
    weekday wd{sys_days{days{d.days}}};
    return static_cast<int>(wd.iso_encoding()) - 1;
}

inline std::string format_date(Date d) {
    using namespace std::chrono;
    year_month_day ymd{sys_days{days{d.days}}};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

/// "YYYY-MM-DDTHH:00" (hour resolution, minutes always zero).
inline std::string format_hour(HourStamp t) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%sT%02d:00", format_date(t.date()).c_str(), t.hour_of_day());
    return buf;
}

namespace detail {
inline bool parse_int(std::string_view s, size_t pos, size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (size_t i = pos; i < pos + len; ++i) {
        char c = s[i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}
} // namespace detail

/// Parses "YYYY-MM-DD". Throws DataError on malformed input.
inline Date parse_date(std::string_view s) {
    int y, m, d;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !detail::parse_int(s, 0, 4, y) ||
        !detail::parse_int(s, 5, 2, m) || !detail::parse_int(s, 8, 2, d))
        throw DataError("malformed date '" + std::string(s) + "', expected YYYY-MM-DD");
    return make_date(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

/// Parses "YYYY-MM-DDTHH:MM[:SS]" at hour resolution; minutes/seconds must be zero.
inline HourStamp parse_hour(std::string_view s) {
    if (s.size() < 16 || (s[10] != 'T' && s[10] != ' '))
        throw DataError("malformed timestamp '" + std::string(s) + "', expected YYYY-MM-DDTHH:00");
    Date d = parse_date(s.substr(0, 10));
    int hh, mm;
    if (!detail::parse_int(s, 11, 2, hh) || s[13] != ':' || !detail::parse_int(s, 14, 2, mm))
        throw DataError("malformed timestamp '" + std::string(s) + "'");
    if (hh > 23 || mm != 0)
        throw DataError("timestamp '" + std::string(s) + "' is not on the hourly grid");
    if (s.size() > 16 && s.substr(16) != ":00")
        throw DataError("timestamp '" + std::string(s) + "' is not on the hourly grid");
    return HourStamp{d.days * 24 + hh};
}

} // namespace loadcast
