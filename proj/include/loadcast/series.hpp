#pragma once

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "loadcast/error.hpp"
#include "loadcast/hours.hpp"

namespace loadcast {

/// Contiguous hourly load observations starting at 00:00 of some day,
/// with the holiday calendar that applies to them. Length is always a
/// whole number of days and index j corresponds to start + j hours.
struct LoadSeries {
    HourStamp start;
    std::vector<double> values; // MW
    std::set<Date> holidays;

    std::size_t size() const { return values.size(); }
    HourStamp stamp_at(std::size_t j) const {
        return HourStamp{start.hours + static_cast<std::int64_t>(j)};
    }
    bool is_holiday(Date d) const { return holidays.count(d) != 0; }

    /// Index of 00:00 of d, which may lie outside the stored range.
    std::int64_t index_of(HourStamp t) const { return t.hours - start.hours; }
};

inline void validate_series(const LoadSeries& s) {
    if (s.start.hour_of_day() != 0)
        throw DataError("series must begin at 00:00, got " + format_hour(s.start));
    if (s.values.empty() || s.values.size() % 24 != 0)
        throw DataError("series length must be a positive multiple of 24, got " +
                        std::to_string(s.values.size()));
    for (std::size_t j = 0; j < s.values.size(); ++j) {
        const double v = s.values[j];
        if (!std::isfinite(v))
            throw DataError("non-finite load at " + format_hour(s.stamp_at(j)));
        if (v < 0.0)
            throw DataError("negative load " + std::to_string(v) + " at " +
                            format_hour(s.stamp_at(j)));
    }
}

/// Min-max normalization fitted on the training range only.
struct Scaler {
    double min_value = 0.0;
    double max_value = 1.0;

    double apply(double x) const { return (x - min_value) / (max_value - min_value); }
    double invert(double y) const { return y * (max_value - min_value) + min_value; }
};

/// Fits the scaler on values[first, last). Test data must not leak into the
/// extremes, so callers pass the training range explicitly.
inline Scaler fit_scaler(const LoadSeries& series, std::size_t first, std::size_t last) {
    if (first >= last || last > series.values.size())
        throw DataError("fit_scaler: empty or out-of-range training range");
    double lo = series.values[first], hi = series.values[first];
    for (std::size_t j = first + 1; j < last; ++j) {
        lo = std::min(lo, series.values[j]);
        hi = std::max(hi, series.values[j]);
    }
    if (!(hi > lo)) throw DataError("fit_scaler: constant series, min equals max");
    return Scaler{lo, hi};
}

/// One sliding-window instance: 168 history hours and the following
/// 24-hour target day. Indexing follows the 24-hour stride, so window i
/// (1-based) covers source hours 24(i-1) .. 24(i-1)+191.
struct RawWindow {
    std::size_t index = 0; // 1-based window number i
    std::vector<double> history; // 168 values, MW
    std::vector<double> target; // 24 values, MW
    HourStamp target_start; // 00:00 of the target day
};

inline std::vector<RawWindow> make_windows(const LoadSeries& series, std::size_t width = 168,
                                           std::size_t stride = 24, std::size_t horizon = 24) {
    const std::size_t n = series.values.size();
    if (n < width + horizon)
        throw DataError("series too short for windowing: need at least " +
                        std::to_string(width + horizon) + " hours, have " + std::to_string(n));
    const std::size_t count = (n - width - horizon) / stride + 1;
    std::vector<RawWindow> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t base = i * stride;
        RawWindow w;
        w.index = i + 1;
        w.history.assign(series.values.begin() + base, series.values.begin() + base + width);
        w.target.assign(series.values.begin() + base + width,
                        series.values.begin() + base + width + horizon);
        w.target_start = series.stamp_at(base + width);
        out.push_back(std::move(w));
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV + holiday file I/O.
// Input CSV: header "timestamp,load_mw", ISO-8601 hour-resolution timestamps,
// strictly increasing. Holiday file: one YYYY-MM-DD per line, '#' comments.
// ---------------------------------------------------------------------------

namespace detail {
inline double parse_load(const std::string& s, const std::string& stamp) {
    const char* b = s.data();
    const char* e = b + s.size();
    double v{};
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e)
        throw DataError("malformed load value '" + s + "' at " + stamp);
    return v;
}

inline std::string trim(std::string s) {
    const char* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}
} // namespace detail

inline std::set<Date> load_holiday_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open holiday file " + path);
    std::set<Date> out;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        out.insert(parse_date(line));
    }
    return out;
}

/// Reads and validates an hourly load CSV. Interior gaps of at most three
/// consecutive missing hours are filled by linear interpolation (the count
/// is reported through interpolated_hours when given); anything longer, or
/// hours missing before the first row on its own day, is an error. The tail
/// is trimmed to whole days.
inline LoadSeries load_csv(const std::string& path, const std::string& holiday_path,
                           std::size_t* interpolated_hours = nullptr) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != "timestamp,load_mw")
        throw DataError(path + ": expected header 'timestamp,load_mw'");

    LoadSeries s;
    std::size_t interpolated = 0;
    HourStamp prev{};
    bool first_row = true;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::trim(line);
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected 'timestamp,load'");
        HourStamp t = parse_hour(line.substr(0, comma));
        double v = detail::parse_load(line.substr(comma + 1), format_hour(t));
        if (!std::isfinite(v)) throw DataError("non-finite load at " + format_hour(t));
        if (v < 0.0)
            throw DataError("negative load " + detail::format_double(v) + " at " + format_hour(t));

        if (first_row) {
            // The grid is anchored at 00:00 of the first row's day; a late
            // first row has no left neighbour to interpolate from.
            HourStamp anchor = start_of_day(t.date());
            if (t != anchor) {
                std::int64_t missing = t.hours - anchor.hours;
                throw DataError(path + ": " + std::to_string(missing) + "-hour gap before " +
                                format_hour(t) + " (series must start at " + format_hour(anchor) +
                                ")");
            }
            s.start = t;
            first_row = false;
        } else {
            if (t == prev) throw DataError("duplicate timestamp " + format_hour(t));
            if (t < prev)
                throw DataError("timestamps not increasing at " + format_hour(t));
            const std::int64_t gap = t.hours - prev.hours - 1;
            if (gap > 3)
                throw DataError(path + ": " + std::to_string(gap) + "-hour gap starting at " +
                                format_hour(HourStamp{prev.hours + 1}));
            if (gap > 0) {
                const double lo = s.values.back();
                for (std::int64_t g = 1; g <= gap; ++g)
                    s.values.push_back(lo + (v - lo) * static_cast<double>(g) /
                                                static_cast<double>(gap + 1));
                interpolated += static_cast<std::size_t>(gap);
            }
        }
        s.values.push_back(v);
        prev = t;
    }
    if (s.values.empty()) throw DataError(path + ": no data rows");
    s.values.resize(s.values.size() - s.values.size() % 24); // drop the trailing partial day
    if (!holiday_path.empty()) s.holidays = load_holiday_file(holiday_path);
    validate_series(s);
    if (interpolated_hours) *interpolated_hours = interpolated;
    return s;
}

/// Writes the series in the exact format load_csv reads; values use
/// shortest round-trip formatting so export/ingest is bit-exact.
inline void save_csv(const LoadSeries& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "timestamp,load_mw\n";
    for (std::size_t j = 0; j < s.values.size(); ++j)
        out << format_hour(s.stamp_at(j)) << ',' << detail::format_double(s.values[j]) << '\n';
}

inline void save_holiday_file(const std::set<Date>& holidays, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (Date d : holidays) out << format_date(d) << '\n';
}

} // namespace loadcast
