#pragma once

#include <array>
#include <cmath>
#include <set>
#include <span>
#include <vector>

#include "loadcast/kmeans.hpp"
#include "loadcast/series.hpp"
#include "loadcast/tensor.hpp"

namespace loadcast {

/// Categorical time codes for one hour. The holiday flag follows the source
/// convention: 0 when the day IS a holiday, 1 when it is not. The one-hot
/// transform makes the choice representational only.
struct TimeIndex {
    int weekday = 0; // 0 = Monday ... 6 = Sunday
    int hour = 0; // 0..23
    int holiday = 1; // 0 = holiday, 1 = not

    static TimeIndex at(HourStamp t, const std::set<Date>& holidays) {
        TimeIndex ti;
        ti.weekday = day_of_week(t.date());
        ti.hour = t.hour_of_day();
        ti.holiday = holidays.count(t.date()) ? 0 : 1;
        return ti;
    }
};

inline std::vector<double> one_hot(int code, int cardinality) {
    if (code < 0 || code >= cardinality)
        throw DataError("one_hot: code " + std::to_string(code) + " out of range [0, " +
                        std::to_string(cardinality) + ")");
    std::vector<double> v(static_cast<std::size_t>(cardinality), 0.0);
    v[static_cast<std::size_t>(code)] = 1.0;
    return v;
}

/// [max, min, mean] of the normalized history window.
inline std::array<double, 3> stat_features(std::span<const double> history) {
    double hi = history[0], lo = history[0], sum = 0.0;
    for (double v : history) {
        hi = std::max(hi, v);
        lo = std::min(lo, v);
        sum += v;
    }
    return {hi, lo, sum / static_cast<double>(history.size())};
}

/// Cosine similarity of the window against every cluster center.
inline std::vector<double> similarity(std::span<const double> history, const ClusterModel& model) {
    double wn = 0.0;
    for (double v : history) wn += v * v;
    wn = std::sqrt(wn);
    if (wn <= 0.0) throw DataError("similarity: zero-norm window");
    std::vector<double> p;
    p.reserve(model.n_clusters());
    for (const std::vector<double>& c : model.centers) {
        double cn = 0.0, d = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            cn += c[k] * c[k];
            d += history[k] * c[k];
        }
        p.push_back(d / (wn * std::sqrt(cn)));
    }
    return p;
}

/// Which feature families a model variant consumes. The full model uses all
/// of them; the reduced variants of the comparison study switch families off.
struct FeatureMask {
    bool time_onehots = true; // one-hot codes inside the temporal input rows
    bool stats = true; // F block of the non-temporal input
    bool sim = true; // P block of the non-temporal input
    bool fcnn = true; // whether the non-temporal branch exists at all

    std::size_t in_dim() const { return time_onehots ? 34 : 1; }
    std::size_t q_dim(std::size_t n_c) const {
        if (!fcnn) return 0;
        return (stats ? 3 : 0) + 7 + 2 + (sim ? n_c : 0);
    }
};

/// One assembled training/forecast instance, everything in normalized space.
/// x is seq_len x in_dim with rows [load | W one-hot | T one-hot | H one-hot]
/// for that hour's own timestamp; q is [F | target-day W | target-day H | P].
struct WindowSample {
    Tensor x;
    std::vector<double> q;
    std::vector<double> y;
    Date target_date;
};

inline WindowSample assemble_sample(const RawWindow& raw, const Scaler& scaler,
                                    const std::set<Date>& holidays, const ClusterModel* clusters,
                                    const FeatureMask& mask = {}) {
    if (raw.target_start.hour_of_day() != 0)
        throw DataError("assemble_sample: window target day does not start at 00:00");
    const std::size_t seq = raw.history.size();
    const std::size_t in_dim = mask.in_dim();

    std::vector<double> norm(seq);
    for (std::size_t j = 0; j < seq; ++j) norm[j] = scaler.apply(raw.history[j]);

    WindowSample s;
    s.target_date = raw.target_start.date();
    s.x = Tensor(seq, in_dim);
    const std::int64_t history_start = raw.target_start.hours - static_cast<std::int64_t>(seq);
    for (std::size_t j = 0; j < seq; ++j) {
        s.x(j, 0) = norm[j];
        if (mask.time_onehots) {
            TimeIndex ti = TimeIndex::at(HourStamp{history_start + static_cast<std::int64_t>(j)},
                                         holidays);
            s.x(j, 1 + static_cast<std::size_t>(ti.weekday)) = 1.0;
            s.x(j, 8 + static_cast<std::size_t>(ti.hour)) = 1.0;
            s.x(j, 32 + static_cast<std::size_t>(ti.holiday)) = 1.0;
        }
    }

    if (mask.fcnn) {
        TimeIndex target = TimeIndex::at(raw.target_start, holidays);
        if (mask.stats) {
            const std::array<double, 3> f = stat_features(norm);
            s.q.insert(s.q.end(), f.begin(), f.end());
        }
        std::vector<double> wd = one_hot(target.weekday, 7);
        s.q.insert(s.q.end(), wd.begin(), wd.end());
        std::vector<double> hol = one_hot(target.holiday, 2);
        s.q.insert(s.q.end(), hol.begin(), hol.end());
        if (mask.sim) {
            if (!clusters) throw DataError("assemble_sample: similarity requested without clusters");
            std::vector<double> p = similarity(norm, *clusters);
            s.q.insert(s.q.end(), p.begin(), p.end());
        }
    }

    s.y.resize(raw.target.size());
    for (std::size_t j = 0; j < raw.target.size(); ++j) s.y[j] = scaler.apply(raw.target[j]);
    return s;
}

/// Normalized history vectors for clustering, in window order.
inline std::vector<std::vector<double>> normalized_histories(const std::vector<RawWindow>& windows,
                                                             const Scaler& scaler) {
    std::vector<std::vector<double>> out;
    out.reserve(windows.size());
    for (const RawWindow& w : windows) {
        std::vector<double> v(w.history.size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = scaler.apply(w.history[j]);
        out.push_back(std::move(v));
    }
    return out;
}

} // namespace loadcast
