#pragma once

#include <functional>

#include <json.hpp>

#include "loadcast/checkpoint.hpp"
#include "loadcast/metrics.hpp"

namespace loadcast {

struct DayRecord {
    Date date;
    std::vector<double> actual; // MW
    std::vector<double> forecast; // MW
    MetricTriple daily;
};

struct CorrectionEntry {
    Date date; // last day whose data the correction saw
    std::string mode;
    double pre_recent_loss = 0.0; // normalized loss on the most recent week
    double post_recent_loss = 0.0;
};

struct ForecastReport {
    std::vector<DayRecord> days;
    MetricTriple aggregate;
    std::size_t hours = 0;
    std::size_t mape_excluded = 0;
    std::vector<CorrectionEntry> corrections;
    nlohmann::json config_snapshot;
};

struct BacktestHooks {
    /// Observes the half-open value-index range read to build each day's
    /// input; tests use it to prove there is no lookahead.
    std::function<void(Date day, std::size_t first, std::size_t end)> on_history_access;
    /// Replaces the model's MW forecast when set (oracle stubs in tests).
    std::function<std::vector<double>(const WindowSample&, Date)> forecast_override;
};

namespace detail {
inline std::vector<WindowSample> assemble_recent(const LoadSeries& series, std::size_t first,
                                                 std::size_t end, const Checkpoint& cp) {
    LoadSeries slice;
    slice.start = series.stamp_at(first);
    slice.values.assign(series.values.begin() + static_cast<std::ptrdiff_t>(first),
                        series.values.begin() + static_cast<std::ptrdiff_t>(end));
    slice.holidays = series.holidays;
    std::vector<WindowSample> out;
    for (const RawWindow& w : make_windows(slice, cp.dims.seq_len, 24, cp.dims.out_len))
        out.push_back(assemble_sample(w, cp.scaler, series.holidays,
                                      cp.features.sim ? &cp.clusters : nullptr, cp.features));
    return out;
}
} // namespace detail

/// Rolling day-ahead evaluation. Every test day is forecast from the
/// preceding seq_len hours of actual observations, never from prior
/// forecasts; after each cadence_days block of days the checkpoint is
/// corrected on the trailing history_days of data, affecting subsequent
/// days only.
inline ForecastReport backtest(const Checkpoint& cp, const LoadSeries& series, Date test_start,
                               const CorrectionPolicy& policy,
                               const BacktestHooks* hooks = nullptr) {
    policy.validate();
    const std::int64_t first_idx = series.index_of(start_of_day(test_start));
    if (first_idx < static_cast<std::int64_t>(cp.dims.seq_len))
        throw DataError("backtest: first test day " + format_date(test_start) + " has only " +
                        std::to_string(std::max<std::int64_t>(first_idx, 0)) +
                        " hours of history, needs " + std::to_string(cp.dims.seq_len));
    if (first_idx + 24 > static_cast<std::int64_t>(series.size()))
        throw DataError("backtest: no test data after " + format_date(test_start));
    const std::size_t idx0 = static_cast<std::size_t>(first_idx);
    const std::size_t n_days = (series.size() - idx0) / 24;

    Checkpoint work = cp;
    Tape tape;
    ForecastReport report;
    report.days.reserve(n_days);
    std::vector<double> all_actual, all_forecast;
    all_actual.reserve(n_days * 24);
    all_forecast.reserve(n_days * 24);

    for (std::size_t day = 0; day < n_days; ++day) {
        const std::size_t base = idx0 + day * 24;
        RawWindow raw;
        raw.index = day + 1;
        raw.history.assign(series.values.begin() + static_cast<std::ptrdiff_t>(base - cp.dims.seq_len),
                           series.values.begin() + static_cast<std::ptrdiff_t>(base));
        raw.target.assign(series.values.begin() + static_cast<std::ptrdiff_t>(base),
                          series.values.begin() + static_cast<std::ptrdiff_t>(base + 24));
        raw.target_start = series.stamp_at(base);
        if (hooks && hooks->on_history_access)
            hooks->on_history_access(raw.target_start.date(), base - cp.dims.seq_len, base);

        WindowSample sample = assemble_sample(raw, work.scaler, series.holidays,
                                              work.features.sim ? &work.clusters : nullptr,
                                              work.features);
        DayRecord rec;
        rec.date = raw.target_start.date();
        rec.actual = raw.target;
        if (hooks && hooks->forecast_override) {
            rec.forecast = hooks->forecast_override(sample, rec.date);
        } else {
            ParamVars pv = register_params(tape, work.params);
            const WindowSample* one[] = {&sample};
            Var out = forward_graph(tape, work.dims, pv, one);
            const Tensor& y = tape.value(out);
            rec.forecast.resize(y.size());
            for (std::size_t h = 0; h < y.size(); ++h)
                rec.forecast[h] = work.scaler.invert(y[h]);
            tape.reset();
        }
        rec.daily = metrics(rec.actual, rec.forecast).triple;
        all_actual.insert(all_actual.end(), rec.actual.begin(), rec.actual.end());
        all_forecast.insert(all_forecast.end(), rec.forecast.begin(), rec.forecast.end());
        report.days.push_back(std::move(rec));

        const bool cadence_hit = (day + 1) % static_cast<std::size_t>(policy.cadence_days) == 0;
        if (policy.mode != CorrectionPolicy::Mode::None && cadence_hit) {
            const std::size_t end = base + 24;
            const std::size_t span = static_cast<std::size_t>(policy.history_days) * 24;
            const std::size_t first = end > span ? end - span : 0;
            if (end - first >= work.dims.seq_len + work.dims.out_len) {
                std::vector<WindowSample> recent = detail::assemble_recent(series, first, end, work);
                std::vector<const WindowSample*> week;
                for (std::size_t i = recent.size() - std::min<std::size_t>(7, recent.size());
                     i < recent.size(); ++i)
                    week.push_back(&recent[i]);
                CorrectionEntry entry;
                entry.date = report.days.back().date;
                entry.mode = to_string(policy.mode);
                entry.pre_recent_loss = batch_loss(week, work.dims, work.params, &tape);
                work = correct_online(work, recent, policy);
                entry.post_recent_loss = batch_loss(week, work.dims, work.params, &tape);
                report.corrections.push_back(std::move(entry));
            }
        }
    }

    MetricsResult agg = metrics(all_actual, all_forecast);
    report.aggregate = agg.triple;
    report.hours = agg.count;
    report.mape_excluded = agg.mape_excluded;
    if (report.aggregate.rmse < report.aggregate.mae)
        throw NumericError("backtest: RMSE fell below MAE, metric computation is broken");

    report.config_snapshot = {{"policy",
                               {{"mode", to_string(policy.mode)},
                                {"cadence_days", policy.cadence_days},
                                {"history_days", policy.history_days}}},
                              {"test_start", format_date(test_start)},
                              {"seed", cp.train_config.seed},
                              {"lambda_perturb", cp.train_config.lambda_perturb},
                              {"n_clusters", cp.clusters.n_clusters()},
                              {"hidden", cp.dims.hidden},
                              {"embed_dim", cp.dims.embed_dim}};
    return report;
}

/// Seasonal-naive baseline: each hour repeats the load observed exactly one
/// week earlier. The standard sanity floor for strongly periodic series.
inline MetricsResult seasonal_naive_metrics(const LoadSeries& series, Date test_start) {
    const std::int64_t first = series.index_of(start_of_day(test_start));
    if (first < 168) throw DataError("seasonal_naive_metrics: needs 168 hours of history");
    std::vector<double> actual(series.values.begin() + first, series.values.end());
    const std::size_t n = actual.size() - actual.size() % 24;
    actual.resize(n);
    std::vector<double> forecast(n);
    for (std::size_t i = 0; i < n; ++i)
        forecast[i] = series.values[static_cast<std::size_t>(first) + i - 168];
    return metrics(actual, std::span<const double>(forecast));
}

} // namespace loadcast
