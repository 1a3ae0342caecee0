#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "loadcast/error.hpp"

namespace loadcast {

/// The three error indicators, in physical units: MAE and RMSE in MW,
/// MAPE in percent.
struct MetricTriple {
    double mae = 0.0;
    double mape = 0.0;
    double rmse = 0.0;
};

struct MetricsResult {
    MetricTriple triple;
    std::size_t count = 0; // hours measured
    std::size_t mape_excluded = 0; // hours left out of MAPE (|actual| < 1e-6 MW)
};

/// MAE, MAPE, RMSE between actuals and forecasts. Hours whose actual
/// magnitude is below 1e-6 MW are excluded from MAPE and counted; if every
/// hour is excluded the MAPE is NaN. RMSE >= MAE always holds.
inline MetricsResult metrics(std::span<const double> actual, std::span<const double> forecast) {
    if (actual.size() != forecast.size() || actual.empty())
        throw DataError("metrics: sequences must have equal nonzero length");
    double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
    std::size_t pct_n = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double err = actual[i] - forecast[i];
        abs_sum += std::abs(err);
        sq_sum += err * err;
        if (std::abs(actual[i]) >= 1e-6) {
            pct_sum += std::abs(err) / std::abs(actual[i]);
            ++pct_n;
        }
    }
    MetricsResult r;
    r.count = actual.size();
    r.mape_excluded = actual.size() - pct_n;
    const double n = static_cast<double>(actual.size());
    r.triple.mae = abs_sum / n;
    r.triple.rmse = std::sqrt(sq_sum / n);
    r.triple.mape = pct_n > 0 ? pct_sum / static_cast<double>(pct_n) * 100.0
                              : std::numeric_limits<double>::quiet_NaN();
    return r;
}

} // namespace loadcast
