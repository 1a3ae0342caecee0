#pragma once

#include "loadcast/report.hpp"

namespace loadcast {

/// Everything a full train-and-evaluate run needs beyond the data itself.
struct PipelineConfig {
    std::size_t n_clusters = 20;
    std::size_t hidden = 128;
    std::size_t embed_dim = 10;
    Date split_date = make_date(2021, 1, 1); // first test day
    TrainConfig train;
    CorrectionPolicy policy;

    void validate() const {
        if (n_clusters < 2) throw ConfigError("features.clusters must be >= 2");
        train.validate();
        policy.validate();
    }
};

inline ModelDims dims_for(const PipelineConfig& pc, const FeatureMask& mask) {
    ModelDims d;
    d.seq_len = 168;
    d.in_dim = mask.in_dim();
    d.embed_dim = pc.embed_dim;
    d.hidden = pc.hidden;
    d.q_dim = mask.q_dim(pc.n_clusters);
    d.out_len = 24;
    return d;
}

/// Scaler fit, windowing, clustering, and offline training on everything
/// strictly before the split date.
inline Checkpoint run_training(const LoadSeries& series, const PipelineConfig& pc,
                               const FeatureMask& mask = {}, const TrainHooks* hooks = nullptr) {
    pc.validate();
    const std::int64_t split = series.index_of(start_of_day(pc.split_date));
    if (split < 192 || split % 24 != 0)
        throw DataError("training needs at least 192 hours before the split date " +
                        format_date(pc.split_date));
    const std::size_t train_hours = std::min<std::size_t>(static_cast<std::size_t>(split),
                                                          series.size());

    LoadSeries train_slice;
    train_slice.start = series.start;
    train_slice.values.assign(series.values.begin(),
                              series.values.begin() + static_cast<std::ptrdiff_t>(train_hours));
    train_slice.holidays = series.holidays;

    Scaler scaler = fit_scaler(train_slice, 0, train_slice.size());
    std::vector<RawWindow> windows = make_windows(train_slice);

    ClusterModel clusters;
    if (mask.sim)
        clusters = kmeans_fit(normalized_histories(windows, scaler), pc.n_clusters, pc.train.seed);

    std::vector<WindowSample> samples;
    samples.reserve(windows.size());
    for (const RawWindow& w : windows)
        samples.push_back(
            assemble_sample(w, scaler, series.holidays, mask.sim ? &clusters : nullptr, mask));

    return train_offline(samples, dims_for(pc, mask), mask, std::move(clusters), scaler, pc.train,
                         hooks);
}

inline ForecastReport run_backtest(const Checkpoint& cp, const LoadSeries& series,
                                   const PipelineConfig& pc) {
    return backtest(cp, series, pc.split_date, pc.policy);
}

// ---------------------------------------------------------------------------
// Feature-selection comparison (the reduced variants) and the n_c / lambda
// sensitivity sweep.
// ---------------------------------------------------------------------------

enum class Variant { Proposed, Model1, Model2, Model3 };

inline const char* to_string(Variant v) {
    switch (v) {
    case Variant::Proposed: return "proposed";
    case Variant::Model1: return "model1";
    case Variant::Model2: return "model2";
    case Variant::Model3: return "model3";
    }
    return "?";
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "proposed") return Variant::Proposed;
    if (s == "model1") return Variant::Model1;
    if (s == "model2") return Variant::Model2;
    if (s == "model3") return Variant::Model3;
    throw ConfigError("unknown variant '" + s + "' (proposed, model1, model2, model3)");
}

/// model1: history only (bare load scalar, no non-temporal branch);
/// model2: drops the similarity block; model3: drops the statistics block.
inline FeatureMask mask_for(Variant v) {
    switch (v) {
    case Variant::Proposed: return {true, true, true, true};
    case Variant::Model1: return {false, false, false, false};
    case Variant::Model2: return {true, true, false, true};
    case Variant::Model3: return {true, false, true, true};
    }
    throw ConfigError("bad variant");
}

struct AblationRow {
    Variant variant = Variant::Proposed;
    MetricTriple aggregate;
};

/// Trains and backtests each variant with identical seeds and configuration.
inline std::vector<AblationRow> run_ablation(const LoadSeries& series, const PipelineConfig& pc,
                                             const std::vector<Variant>& variants) {
    if (variants.empty()) throw ConfigError("run_ablation: no variants requested");
    std::vector<AblationRow> rows;
    for (Variant v : variants) {
        Checkpoint cp = run_training(series, pc, mask_for(v));
        ForecastReport rep = run_backtest(cp, series, pc);
        rows.push_back({v, rep.aggregate});
    }
    return rows;
}

struct SweepPoint {
    std::size_t n_c = 0;
    double lambda = 0.0;
    MetricTriple m;
};

/// One run per grid point along each axis: n_c varies with lambda at the
/// base value, lambda varies with n_c at the base value. Points shared by
/// both axes run once.
inline std::vector<SweepPoint> run_sweep(const LoadSeries& series, const PipelineConfig& pc,
                                         const std::vector<std::size_t>& n_c_values,
                                         const std::vector<double>& lambda_values) {
    if (n_c_values.empty() || lambda_values.empty())
        throw ConfigError("run_sweep: both grids must be nonempty");
    std::vector<std::pair<std::size_t, double>> points;
    auto add = [&points](std::size_t nc, double lam) {
        for (const auto& p : points)
            if (p.first == nc && p.second == lam) return;
        points.emplace_back(nc, lam);
    };
    for (std::size_t nc : n_c_values) add(nc, pc.train.lambda_perturb);
    for (double lam : lambda_values) add(pc.n_clusters, lam);

    std::vector<SweepPoint> out;
    for (const auto& [nc, lam] : points) {
        PipelineConfig point_cfg = pc;
        point_cfg.n_clusters = nc;
        point_cfg.train.lambda_perturb = lam;
        Checkpoint cp = run_training(series, point_cfg, FeatureMask{});
        ForecastReport rep = run_backtest(cp, series, point_cfg);
        out.push_back({nc, lam, rep.aggregate});
    }
    return out;
}

} // namespace loadcast
