#pragma once

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "loadcast/pipeline.hpp"
#include "loadcast/synth.hpp"

namespace loadcast {

/// Flat key-value run configuration: one `section.key = value` per line,
/// '#' comments. Defaults follow the reference configuration; CLI flags
/// override file values. Unknown keys are rejected.
struct RunConfig {
    SynthConfig synth;
    PipelineConfig pipeline;
};

namespace detail {

inline double cfg_double(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
}

inline long long cfg_int(const std::string& v, const std::string& key) {
    long long out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    return out;
}

inline bool cfg_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

inline Date cfg_date(const std::string& v, const std::string& key) {
    try {
        return parse_date(v);
    } catch (const DataError& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

struct ConfigKey {
    const char* name;
    const char* default_value;
    const char* doc;
    std::function<void(RunConfig&, const std::string&)> set;
};

inline const std::vector<ConfigKey>& config_registry() {
    static const std::vector<ConfigKey> keys = {
        {"synth.years", "3", "span of the generated series in calendar years",
         [](RunConfig& c, const std::string& v) { c.synth.years = static_cast<int>(cfg_int(v, "synth.years")); }},
        {"synth.start_date", "2019-01-01", "first day of the generated series",
         [](RunConfig& c, const std::string& v) { c.synth.start_date = cfg_date(v, "synth.start_date"); }},
        {"synth.base_load", "1000", "base load level [MW]",
         [](RunConfig& c, const std::string& v) { c.synth.base_load = cfg_double(v, "synth.base_load"); }},
        {"synth.daily_amplitude", "150", "amplitude of the daily profile [MW]",
         [](RunConfig& c, const std::string& v) { c.synth.daily_amplitude = cfg_double(v, "synth.daily_amplitude"); }},
        {"synth.weekly_amplitude", "80", "weekday/weekend level difference [MW]",
         [](RunConfig& c, const std::string& v) { c.synth.weekly_amplitude = cfg_double(v, "synth.weekly_amplitude"); }},
        {"synth.trend_slope", "20", "slow linear trend [MW per year]",
         [](RunConfig& c, const std::string& v) { c.synth.trend_slope = cfg_double(v, "synth.trend_slope"); }},
        {"synth.holiday_dip_fraction", "0.12", "fractional load drop on holidays, in [0,1)",
         [](RunConfig& c, const std::string& v) { c.synth.holiday_dip_fraction = cfg_double(v, "synth.holiday_dip_fraction"); }},
        {"synth.noise_std_fraction", "0.015", "noise std as a fraction of base load, < 0.2",
         [](RunConfig& c, const std::string& v) { c.synth.noise_std_fraction = cfg_double(v, "synth.noise_std_fraction"); }},
        {"synth.holidays_per_year", "10", "holidays per calendar year (Jan 1 plus seeded dates)",
         [](RunConfig& c, const std::string& v) { c.synth.holidays_per_year = static_cast<int>(cfg_int(v, "synth.holidays_per_year")); }},
        {"synth.level_shift_date", "", "date of a permanent step change (empty: none)",
         [](RunConfig& c, const std::string& v) {
             if (v.empty()) c.synth.level_shift_date.reset();
             else c.synth.level_shift_date = cfg_date(v, "synth.level_shift_date");
         }},
        {"synth.level_shift_mw", "0", "size of the step change [MW]",
         [](RunConfig& c, const std::string& v) { c.synth.level_shift_mw = cfg_double(v, "synth.level_shift_mw"); }},
        {"synth.seed", "1", "generator seed",
         [](RunConfig& c, const std::string& v) { c.synth.seed = static_cast<std::uint64_t>(cfg_int(v, "synth.seed")); }},

        {"data.split_date", "2021-01-01", "first test day; training uses everything before it",
         [](RunConfig& c, const std::string& v) { c.pipeline.split_date = cfg_date(v, "data.split_date"); }},

        {"features.clusters", "20", "number of K-means clusters n_c",
         [](RunConfig& c, const std::string& v) { c.pipeline.n_clusters = static_cast<std::size_t>(cfg_int(v, "features.clusters")); }},

        {"model.hidden", "128", "LSTM / FCNN / output hidden width n_h",
         [](RunConfig& c, const std::string& v) { c.pipeline.hidden = static_cast<std::size_t>(cfg_int(v, "model.hidden")); }},
        {"model.embedding_dim", "10", "embedding size d",
         [](RunConfig& c, const std::string& v) { c.pipeline.embed_dim = static_cast<std::size_t>(cfg_int(v, "model.embedding_dim")); }},

        {"train.lambda", "1", "scale of the embedding perturbation",
         [](RunConfig& c, const std::string& v) { c.pipeline.train.lambda_perturb = cfg_double(v, "train.lambda"); }},
        {"train.lr_offline", "0.005", "Adam learning rate, offline training",
         [](RunConfig& c, const std::string& v) { c.pipeline.train.lr_offline = cfg_double(v, "train.lr_offline"); }},
        {"train.lr_online", "0.01", "Adam learning rate, online correction",
         [](RunConfig& c, const std::string& v) { c.pipeline.train.lr_online = cfg_double(v, "train.lr_online"); }},
        {"train.batch_size", "56", "samples per gradient step",
         [](RunConfig& c, const std::string& v) { c.pipeline.train.batch_size = static_cast<std::size_t>(cfg_int(v, "train.batch_size")); }},
        {"train.max_epochs_offline", "150", "offline epoch cap",
         [](RunConfig& c, const std::string& v) { c.pipeline.train.max_epochs_offline = static_cast<int>(cfg_int(v, "train.max_epochs_offline")); }},
        {"train.patience", "7", "offline early-stopping patience j_max",
         [](RunConfig& c, const std::string& v) { c.pipeline.train.patience_offline = static_cast<int>(cfg_int(v, "train.patience")); }},
        {"train.max_epochs_online", "10", "epochs per online correction",
         [](RunConfig& c, const std::string& v) { c.pipeline.train.max_epochs_online = static_cast<int>(cfg_int(v, "train.max_epochs_online")); }},
        {"train.tolerance_online", "5", "online early-stopping patience",
         [](RunConfig& c, const std::string& v) { c.pipeline.train.tolerance_online = static_cast<int>(cfg_int(v, "train.tolerance_online")); }},
        {"train.validation_fraction", "0.10", "share of training windows held out",
         [](RunConfig& c, const std::string& v) { c.pipeline.train.validation_fraction = cfg_double(v, "train.validation_fraction"); }},
        {"train.early_stop_epsilon", "1e-4", "minimum validation improvement [normalized loss]",
         [](RunConfig& c, const std::string& v) { c.pipeline.train.early_stop_epsilon = cfg_double(v, "train.early_stop_epsilon"); }},
        {"train.grad_clip", "0", "global gradient-norm clip (0 disables)",
         [](RunConfig& c, const std::string& v) { c.pipeline.train.grad_clip = cfg_double(v, "train.grad_clip"); }},
        {"train.forget_bias_one", "false", "initialize the forget-gate bias to 1",
         [](RunConfig& c, const std::string& v) { c.pipeline.train.forget_bias_one = cfg_bool(v, "train.forget_bias_one"); }},
        {"train.seed", "1", "training seed (init, splits, shuffles)",
         [](RunConfig& c, const std::string& v) { c.pipeline.train.seed = static_cast<std::uint64_t>(cfg_int(v, "train.seed")); }},

        {"policy.mode", "fine-tune-output",
         "online correction mode: fine-tune-output, retrain-all, none",
         [](RunConfig& c, const std::string& v) { c.pipeline.policy.mode = correction_mode_from_string(v); }},
        {"policy.cadence_days", "7", "days between corrections",
         [](RunConfig& c, const std::string& v) { c.pipeline.policy.cadence_days = static_cast<int>(cfg_int(v, "policy.cadence_days")); }},
        {"policy.history_days", "90", "trailing days of data each correction sees",
         [](RunConfig& c, const std::string& v) { c.pipeline.policy.history_days = static_cast<int>(cfg_int(v, "policy.history_days")); }},
    };
    return keys;
}

} // namespace detail

inline void set_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const detail::ConfigKey& k : detail::config_registry()) {
        if (key == k.name) {
            k.set(cfg, value);
            return;
        }
    }
    throw ConfigError("unknown configuration key '" + key + "'");
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected 'section.key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        set_config_key(cfg, key, value);
    }
}

/// Key table for --help: every configuration key with its default.
inline std::string config_key_help() {
    std::ostringstream out;
    out << "Configuration keys (file: 'section.key = value' lines, '#' comments):\n";
    for (const detail::ConfigKey& k : detail::config_registry()) {
        out << "  " << k.name;
        for (std::size_t i = std::char_traits<char>::length(k.name); i < 28; ++i) out << ' ';
        out << "[" << k.default_value << "] " << k.doc << '\n';
    }
    return out.str();
}

} // namespace loadcast
