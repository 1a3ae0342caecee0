#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include "loadcast/series.hpp"

namespace loadcast {

/// Parameters of the synthetic hourly generator used for desk-scale runs:
/// daily and weekly periodicity, a slow linear trend, holiday dips, optional
/// step change, and Gaussian noise.
struct SynthConfig {
    int years = 3;
    Date start_date = make_date(2019, 1, 1);
    double base_load = 1000.0; // MW
    double daily_amplitude = 150.0; // MW
    double weekly_amplitude = 80.0; // MW
    double trend_slope = 20.0; // MW per year
    double holiday_dip_fraction = 0.12; // in [0, 1)
    double noise_std_fraction = 0.015; // of base_load, < 0.2
    int holidays_per_year = 10; // Jan 1 plus seeded random dates
    std::optional<Date> level_shift_date;
    double level_shift_mw = 0.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (years < 1) throw ConfigError("synth.years must be >= 1");
        if (base_load <= 0.0) throw ConfigError("synth.base_load must be positive");
        if (daily_amplitude < 0.0) throw ConfigError("synth.daily_amplitude must be >= 0");
        if (weekly_amplitude < 0.0) throw ConfigError("synth.weekly_amplitude must be >= 0");
        if (holiday_dip_fraction < 0.0 || holiday_dip_fraction >= 1.0)
            throw ConfigError("synth.holiday_dip_fraction must be in [0, 1)");
        if (noise_std_fraction < 0.0 || noise_std_fraction >= 0.2)
            throw ConfigError("synth.noise_std_fraction must be in [0, 0.2)");
        if (holidays_per_year < 0) throw ConfigError("synth.holidays_per_year must be >= 0");
    }
};

namespace detail {
/// Holiday dates depend only on (seed, span), never on the noise stream, so
/// noisy and noiseless series from the same config share one calendar.
inline std::set<Date> synth_holidays(const SynthConfig& cfg, Date end) {
    std::set<Date> out;
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    using namespace std::chrono;
    year_month_day first{sys_days{days{cfg.start_date.days}}};
    for (int y = 0; y < cfg.years + 1; ++y) {
        year yr = first.year() + years{y};
        Date jan1 = make_date(static_cast<int>(yr), 1, 1);
        if (jan1 >= cfg.start_date && jan1 < end && cfg.holidays_per_year > 0) out.insert(jan1);
        Date year_start = jan1;
        Date year_end = make_date(static_cast<int>(yr) + 1, 1, 1);
        std::int64_t span = year_end.days - year_start.days;
        std::uniform_int_distribution<std::int64_t> pick(0, span - 1);
        int placed = 0;
        int guard = 0;
        while (placed < cfg.holidays_per_year - 1 && guard++ < 1000) {
            Date d{year_start.days + pick(rng)};
            if (d < cfg.start_date || d >= end || out.count(d)) continue;
            out.insert(d);
            ++placed;
        }
    }
    return out;
}
} // namespace detail

/// Noise-free value of the generator at one hour; this is the oracle signal
/// the noisy series is built around.
inline double synth_signal_at(const SynthConfig& cfg, HourStamp t, const std::set<Date>& holidays,
                              Date start_date) {
    const double hours_elapsed = static_cast<double>(t.hours - start_date.days * 24);
    const int hod = t.hour_of_day();
    const int dow = day_of_week(t.date());
    // daily shape peaks near 09:00
    const double daily =
        cfg.daily_amplitude *
        std::sin(2.0 * std::numbers::pi * (static_cast<double>(hod) - 3.0) / 24.0);
    const double weekly = cfg.weekly_amplitude * (dow < 5 ? 1.0 : -1.0);
    const double trend = cfg.trend_slope * hours_elapsed / (365.25 * 24.0);
    double v = cfg.base_load + daily + weekly + trend;
    if (cfg.level_shift_date && t.date() >= *cfg.level_shift_date) v += cfg.level_shift_mw;
    if (holidays.count(t.date())) v *= 1.0 - cfg.holiday_dip_fraction;
    return v;
}

/// Deterministic under a fixed seed; bit-identical across runs.
inline LoadSeries synth_generate(const SynthConfig& cfg, bool with_noise = true) {
    cfg.validate();
    using namespace std::chrono;
    year_month_day first{sys_days{days{cfg.start_date.days}}};
    year_month_day last = first + years{cfg.years};
    Date end{sys_days{last}.time_since_epoch().count()};
    const std::int64_t n_hours = (end.days - cfg.start_date.days) * 24;

    LoadSeries s;
    s.start = start_of_day(cfg.start_date);
    s.holidays = detail::synth_holidays(cfg, end);
    s.values.resize(static_cast<std::size_t>(n_hours));

    std::mt19937_64 noise_rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, cfg.noise_std_fraction * cfg.base_load);
    for (std::int64_t j = 0; j < n_hours; ++j) {
        HourStamp t = s.stamp_at(static_cast<std::size_t>(j));
        double v = synth_signal_at(cfg, t, s.holidays, cfg.start_date);
        if (with_noise && cfg.noise_std_fraction > 0.0) v += noise(noise_rng);
        s.values[static_cast<std::size_t>(j)] = std::max(v, 0.0);
    }
    validate_series(s);
    return s;
}

/// The generator with the noise stream switched off: what an ideal forecaster
/// would produce. Holiday calendar and every other term are unchanged.
inline LoadSeries synth_noiseless(const SynthConfig& cfg) { return synth_generate(cfg, false); }

} // namespace loadcast
