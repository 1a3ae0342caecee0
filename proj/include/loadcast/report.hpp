#pragma once

#include <filesystem>
#include <fstream>

#include "loadcast/backtest.hpp"
#include "loadcast/svg.hpp"

namespace loadcast {

// Report emission: a full JSON document, an hourly CSV
// (date,hour,actual_mw,forecast_mw), and the SVG plots. The JSON loader
// recomputes the aggregates from the stored hourly values and rejects a
// document that disagrees with its own summary.

inline nlohmann::json report_to_json(const ForecastReport& r) {
    using nlohmann::json;
    json days = json::array();
    for (const DayRecord& d : r.days)
        days.push_back({{"date", format_date(d.date)},
                        {"actual", d.actual},
                        {"forecast", d.forecast},
                        {"mae", d.daily.mae},
                        {"mape", d.daily.mape},
                        {"rmse", d.daily.rmse}});
    json corr = json::array();
    for (const CorrectionEntry& c : r.corrections)
        corr.push_back({{"date", format_date(c.date)},
                        {"mode", c.mode},
                        {"pre_recent_loss", c.pre_recent_loss},
                        {"post_recent_loss", c.post_recent_loss}});
    return {{"aggregate", {{"mae", r.aggregate.mae}, {"mape", r.aggregate.mape},
                           {"rmse", r.aggregate.rmse}}},
            {"hours", r.hours},
            {"mape_excluded", r.mape_excluded},
            {"days", days},
            {"corrections", corr},
            {"config", r.config_snapshot}};
}

namespace detail {
inline bool close9(double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}
} // namespace detail

inline ForecastReport report_from_json(const nlohmann::json& j) {
    ForecastReport r;
    r.aggregate.mae = j.at("aggregate").at("mae").get<double>();
    r.aggregate.mape = j.at("aggregate").at("mape").get<double>();
    r.aggregate.rmse = j.at("aggregate").at("rmse").get<double>();
    r.hours = j.at("hours").get<std::size_t>();
    r.mape_excluded = j.at("mape_excluded").get<std::size_t>();
    for (const nlohmann::json& d : j.at("days")) {
        DayRecord rec;
        rec.date = parse_date(d.at("date").get_ref<const std::string&>());
        rec.actual = d.at("actual").get<std::vector<double>>();
        rec.forecast = d.at("forecast").get<std::vector<double>>();
        rec.daily = {d.at("mae").get<double>(), d.at("mape").get<double>(),
                     d.at("rmse").get<double>()};
        r.days.push_back(std::move(rec));
    }
    for (const nlohmann::json& c : j.at("corrections"))
        r.corrections.push_back({parse_date(c.at("date").get_ref<const std::string&>()),
                                 c.at("mode").get<std::string>(),
                                 c.at("pre_recent_loss").get<double>(),
                                 c.at("post_recent_loss").get<double>()});
    if (j.contains("config")) r.config_snapshot = j.at("config");

    // self-consistency: the summary must be reproducible from the hours
    std::vector<double> actual, forecast;
    for (const DayRecord& d : r.days) {
        actual.insert(actual.end(), d.actual.begin(), d.actual.end());
        forecast.insert(forecast.end(), d.forecast.begin(), d.forecast.end());
    }
    MetricsResult agg = metrics(actual, forecast);
    if (!detail::close9(agg.triple.mae, r.aggregate.mae) ||
        !detail::close9(agg.triple.mape, r.aggregate.mape) ||
        !detail::close9(agg.triple.rmse, r.aggregate.rmse) || agg.count != r.hours)
        throw FormatError("report: stored aggregate metrics do not match the stored hours");
    return r;
}

inline void save_report_json(const ForecastReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << report_to_json(r).dump(1) << '\n';
}

inline ForecastReport load_report_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open report " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("report " + path + ": malformed JSON: " + e.what());
    }
    try {
        return report_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("report " + path + ": " + e.what());
    }
}

inline void save_report_csv(const ForecastReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "date,hour,actual_mw,forecast_mw\n";
    for (const DayRecord& d : r.days)
        for (std::size_t h = 0; h < d.actual.size(); ++h)
            out << format_date(d.date) << ',' << h << ',' << detail::format_double(d.actual[h])
                << ',' << detail::format_double(d.forecast[h]) << '\n';
}

/// Recomputes the aggregate metrics from a forecast CSV (the `metrics`
/// subcommand's input).
inline MetricsResult metrics_from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != "date,hour,actual_mw,forecast_mw")
        throw DataError(path + ": expected header 'date,hour,actual_mw,forecast_mw'");
    std::vector<double> actual, forecast;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::trim(line);
        if (line.empty()) continue;
        std::array<std::string, 4> cells;
        std::size_t pos = 0;
        for (int c = 0; c < 4; ++c) {
            const std::size_t comma = line.find(',', pos);
            if (c < 3 && comma == std::string::npos)
                throw DataError(path + ":" + std::to_string(line_no) + ": expected 4 columns");
            cells[static_cast<std::size_t>(c)] =
                line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            pos = comma + 1;
        }
        const std::string where = path + ":" + std::to_string(line_no);
        actual.push_back(detail::parse_load(cells[2], where));
        forecast.push_back(detail::parse_load(cells[3], where));
    }
    if (actual.empty()) throw DataError(path + ": no data rows");
    return metrics(actual, forecast);
}

/// One labelled row of a comparison table (ablation variants, sweep points).
struct SummaryRow {
    std::string label;
    MetricTriple m;
};

inline void save_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "label,mae_mw,mape_pct,rmse_mw\n";
    for (const SummaryRow& r : rows)
        out << r.label << ',' << detail::format_double(r.m.mae) << ','
            << detail::format_double(r.m.mape) << ',' << detail::format_double(r.m.rmse) << '\n';
}

/// Writes report.json, forecast.csv, and the two standard plots into dir.
inline void write_report_bundle(const ForecastReport& r, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    save_report_json(r, (base / "report.json").string());
    save_report_csv(r, (base / "forecast.csv").string());

    std::vector<double> actual, forecast;
    for (const DayRecord& d : r.days) {
        actual.insert(actual.end(), d.actual.begin(), d.actual.end());
        forecast.insert(forecast.end(), d.forecast.begin(), d.forecast.end());
    }
    svg_overlay("Day-ahead forecast vs actual load [MW]", "actual", actual, "forecast", forecast,
                (base / "overlay.svg").string());
    std::vector<std::string> labels;
    std::vector<double> daily_mape;
    for (const DayRecord& d : r.days) {
        labels.push_back(format_date(d.date));
        daily_mape.push_back(d.daily.mape);
    }
    svg_bar_chart("Daily MAPE [%]", labels, daily_mape, "MAPE [%]",
                  (base / "daily_mape.svg").string());
}

} // namespace loadcast
