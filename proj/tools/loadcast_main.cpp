// loadcast command-line front end: synthetic data generation, offline
// training, rolling backtests with online correction, feature-selection
// comparisons, hyperparameter sweeps, and metric recomputation.
//
// Exit codes: 0 success, 1 IO/data error, 2 configuration error,
// 3 numeric divergence.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "loadcast/loadcast.hpp"

namespace fs = std::filesystem;
using namespace loadcast;

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;

    RunConfig load() const {
        RunConfig cfg;
        if (!config_path.empty()) apply_config_file(cfg, config_path);
        if (seed) {
            cfg.synth.seed = *seed;
            cfg.pipeline.train.seed = *seed;
        }
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run configuration file");
    cmd->add_option("--seed", args.seed, "override synth.seed and train.seed");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t comma = s.find(',', pos);
        out.push_back(s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

void print_triple(const char* label, const MetricTriple& m) {
    std::printf("%-18s MAE %10.3f MW   MAPE %7.3f %%   RMSE %10.3f MW\n", label, m.mae, m.mape,
                m.rmse);
}

int cmd_synth(const CommonArgs& common, const std::string& out_dir) {
    RunConfig cfg = common.load();
    cfg.synth.validate();
    LoadSeries series = synth_generate(cfg.synth);
    fs::create_directories(out_dir);
    const fs::path base(out_dir);
    save_csv(series, (base / "load.csv").string());
    save_holiday_file(series.holidays, (base / "holidays.txt").string());
    std::printf("wrote %zu hourly rows (%zu days, %zu holidays) to %s\n", series.size(),
                series.size() / 24, series.holidays.size(), out_dir.c_str());
    return 0;
}

int cmd_train(const CommonArgs& common, const std::string& data_path,
              const std::string& holiday_path, const std::string& out_path,
              std::string history_path, std::optional<int> max_epochs) {
    RunConfig cfg = common.load();
    if (max_epochs) cfg.pipeline.train.max_epochs_offline = *max_epochs;
    LoadSeries series = load_csv(data_path, holiday_path);
    Checkpoint cp = run_training(series, cfg.pipeline, FeatureMask{});
    save_checkpoint(cp, out_path);

    if (history_path.empty()) history_path = out_path + ".history.csv";
    std::ofstream hist(history_path);
    if (!hist) throw DataError("cannot write " + history_path);
    hist << "epoch,train_loss,val_loss\n";
    for (const EpochRecord& r : cp.history)
        hist << r.epoch << ',' << detail::format_double(r.train_loss) << ','
             << detail::format_double(r.val_loss) << '\n';

    const double final_val = cp.history.empty() ? 0.0 : cp.history.back().val_loss;
    std::printf("trained %zu epochs, final validation loss %.6f\n", cp.history.size(), final_val);
    std::printf("checkpoint: %s\nhistory:    %s\n", out_path.c_str(), history_path.c_str());
    return 0;
}

int cmd_backtest(const CommonArgs& common, const std::string& checkpoint_path,
                 const std::string& data_path, const std::string& holiday_path,
                 const std::string& policy_override, const std::string& test_start_str,
                 const std::string& out_dir) {
    RunConfig cfg = common.load();
    if (!policy_override.empty())
        cfg.pipeline.policy.mode = correction_mode_from_string(policy_override);
    Date test_start = test_start_str.empty() ? cfg.pipeline.split_date : parse_date(test_start_str);
    Checkpoint cp = load_checkpoint(checkpoint_path);
    LoadSeries series = load_csv(data_path, holiday_path);
    ForecastReport report = backtest(cp, series, test_start, cfg.pipeline.policy);
    write_report_bundle(report, out_dir);
    print_triple("backtest", report.aggregate);
    std::printf("%zu days, %zu corrections (%s); reports in %s\n", report.days.size(),
                report.corrections.size(), to_string(cfg.pipeline.policy.mode), out_dir.c_str());
    return 0;
}

int cmd_ablate(const CommonArgs& common, const std::string& data_path,
               const std::string& holiday_path, const std::string& variants_csv,
               const std::string& out_dir) {
    RunConfig cfg = common.load();
    std::vector<Variant> variants;
    for (const std::string& v : split_list(variants_csv)) variants.push_back(variant_from_string(v));
    LoadSeries series = load_csv(data_path, holiday_path);
    std::vector<AblationRow> rows = run_ablation(series, cfg.pipeline, variants);

    fs::create_directories(out_dir);
    std::vector<SummaryRow> summary;
    for (const AblationRow& r : rows) {
        summary.push_back({to_string(r.variant), r.aggregate});
        print_triple(to_string(r.variant), r.aggregate);
    }
    save_summary_csv(summary, (fs::path(out_dir) / "ablation.csv").string());
    std::vector<std::string> labels;
    std::vector<double> mapes;
    for (const AblationRow& r : rows) {
        labels.push_back(to_string(r.variant));
        mapes.push_back(r.aggregate.mape);
    }
    svg_bar_chart("Feature selection: test MAPE [%]", labels, mapes, "MAPE [%]",
                  (fs::path(out_dir) / "ablation_mape.svg").string());
    return 0;
}

int cmd_sweep(const CommonArgs& common, const std::string& data_path,
              const std::string& holiday_path, const std::string& nc_csv,
              const std::string& lambda_csv, const std::string& out_dir) {
    RunConfig cfg = common.load();
    std::vector<std::size_t> nc_values;
    for (const std::string& v : split_list(nc_csv))
        nc_values.push_back(static_cast<std::size_t>(detail::cfg_int(v, "--nc")));
    std::vector<double> lambda_values;
    for (const std::string& v : split_list(lambda_csv))
        lambda_values.push_back(detail::cfg_double(v, "--lambda"));

    LoadSeries series = load_csv(data_path, holiday_path);
    std::vector<SweepPoint> points = run_sweep(series, cfg.pipeline, nc_values, lambda_values);

    fs::create_directories(out_dir);
    std::vector<SummaryRow> summary;
    std::vector<std::string> labels;
    std::vector<double> mapes, rmses;
    for (const SweepPoint& p : points) {
        char label[64];
        std::snprintf(label, sizeof(label), "nc=%zu lambda=%g", p.n_c, p.lambda);
        summary.push_back({label, p.m});
        labels.push_back(label);
        mapes.push_back(p.m.mape);
        rmses.push_back(p.m.rmse);
        print_triple(label, p.m);
    }
    save_summary_csv(summary, (fs::path(out_dir) / "sweep.csv").string());
    svg_bar_chart("Sensitivity sweep: MAPE [%]", labels, mapes, "MAPE [%]",
                  (fs::path(out_dir) / "sweep_mape.svg").string());
    svg_bar_chart("Sensitivity sweep: RMSE [MW]", labels, rmses, "RMSE [MW]",
                  (fs::path(out_dir) / "sweep_rmse.svg").string());
    return 0;
}

int cmd_metrics(const std::string& csv_path) {
    MetricsResult r = metrics_from_csv(csv_path);
    print_triple(csv_path.c_str(), r.triple);
    if (r.mape_excluded > 0)
        std::printf("note: %zu of %zu hours excluded from MAPE (near-zero actuals)\n",
                    r.mape_excluded, r.count);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"loadcast: day-ahead electrical load forecasting toolkit"};
    app.require_subcommand(1);
    app.footer(config_key_help());

    CommonArgs synth_args, train_args, backtest_args, ablate_args, sweep_args;
    std::string out_dir, data_path, holiday_path, checkpoint_path, history_path;
    std::string policy_override, test_start, variants = "proposed,model1,model2,model3";
    std::string nc_csv = "20", lambda_csv = "1", metrics_csv;
    std::optional<int> max_epochs;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic load CSV + holiday file");
    add_common(synth, synth_args);
    synth->add_option("--out", out_dir, "output directory")->required();

    CLI::App* train = app.add_subcommand("train", "offline training, writes a checkpoint");
    add_common(train, train_args);
    train->add_option("--data", data_path, "hourly load CSV")->required();
    train->add_option("--holidays", holiday_path, "holiday file (one date per line)");
    train->add_option("--out", checkpoint_path, "checkpoint output path")->required();
    train->add_option("--history", history_path, "training-history CSV path");
    train->add_option("--max-epochs", max_epochs, "override train.max_epochs_offline");

    CLI::App* bt = app.add_subcommand("backtest", "rolling day-ahead evaluation of a checkpoint");
    add_common(bt, backtest_args);
    bt->add_option("--checkpoint", checkpoint_path, "checkpoint path")->required();
    bt->add_option("--data", data_path, "hourly load CSV")->required();
    bt->add_option("--holidays", holiday_path, "holiday file");
    bt->add_option("--policy", policy_override, "fine-tune-output | retrain-all | none");
    bt->add_option("--test-start", test_start, "first test day (default: data.split_date)");
    bt->add_option("--out", out_dir, "report output directory")->required();

    CLI::App* ab = app.add_subcommand("ablate", "train + backtest reduced feature variants");
    add_common(ab, ablate_args);
    ab->add_option("--data", data_path, "hourly load CSV")->required();
    ab->add_option("--holidays", holiday_path, "holiday file");
    ab->add_option("--variants", variants, "comma list: proposed,model1,model2,model3");
    ab->add_option("--out", out_dir, "output directory")->required();

    CLI::App* sw = app.add_subcommand("sweep", "n_c / lambda sensitivity sweep");
    add_common(sw, sweep_args);
    sw->add_option("--data", data_path, "hourly load CSV")->required();
    sw->add_option("--holidays", holiday_path, "holiday file");
    sw->add_option("--nc", nc_csv, "comma list of cluster counts");
    sw->add_option("--lambda", lambda_csv, "comma list of perturbation scales");
    sw->add_option("--out", out_dir, "output directory")->required();

    CLI::App* me = app.add_subcommand("metrics", "recompute metrics from a forecast CSV");
    me->add_option("--csv", metrics_csv, "forecast CSV (date,hour,actual_mw,forecast_mw)")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(synth_args, out_dir);
        if (train->parsed())
            return cmd_train(train_args, data_path, holiday_path, checkpoint_path, history_path,
                             max_epochs);
        if (bt->parsed())
            return cmd_backtest(backtest_args, checkpoint_path, data_path, holiday_path,
                                policy_override, test_start, out_dir);
        if (ab->parsed()) return cmd_ablate(ablate_args, data_path, holiday_path, variants, out_dir);
        if (sw->parsed())
            return cmd_sweep(sweep_args, data_path, holiday_path, nc_csv, lambda_csv, out_dir);
        if (me->parsed()) return cmd_metrics(metrics_csv);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
