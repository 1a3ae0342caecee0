#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

#include "loadcast/adam.hpp"
#include "loadcast/model.hpp"

namespace loadcast {

struct TrainConfig {
    double lambda_perturb = 1.0; // scale of the embedding perturbation
    double lr_offline = 0.005;
    double lr_online = 0.01;
    std::size_t batch_size = 56;
    int max_epochs_offline = 150;
    int patience_offline = 7; // j_max
    int max_epochs_online = 10;
    int tolerance_online = 5; // online patience
    double validation_fraction = 0.10;
    double early_stop_epsilon = 1e-4; // normalized-loss units
    double grad_clip = 0.0; // global-norm clip; 0 = off
    bool forget_bias_one = false;
    std::uint64_t seed = 1;

    void validate() const {
        if (lambda_perturb < 0.0) throw ConfigError("train.lambda must be >= 0");
        if (lr_offline <= 0.0 || lr_online <= 0.0) throw ConfigError("learning rates must be positive");
        if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
        if (max_epochs_offline < 0 || max_epochs_online < 0)
            throw ConfigError("epoch counts must be >= 0");
        if (patience_offline <= 0 || tolerance_online <= 0)
            throw ConfigError("patience values must be positive");
        if (validation_fraction <= 0.0 || validation_fraction >= 1.0)
            throw ConfigError("train.validation_fraction must be in (0, 1)");
        if (early_stop_epsilon <= 0.0) throw ConfigError("train.early_stop_epsilon must be positive");
    }
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

/// Self-contained training artifact: everything forecasting needs.
struct Checkpoint {
    static constexpr int current_format_version = 1;
    int format_version = current_format_version;
    ModelDims dims;
    FeatureMask features;
    ModelParameters params;
    ClusterModel clusters;
    Scaler scaler;
    TrainConfig train_config;
    std::vector<EpochRecord> history;
};

/// When and how the deployed model is corrected on recent data.
struct CorrectionPolicy {
    enum class Mode { FineTuneOutput, RetrainAll, None };
    Mode mode = Mode::FineTuneOutput;
    int cadence_days = 7;
    int history_days = 90;

    void validate() const {
        if (cadence_days < 1) throw ConfigError("policy.cadence_days must be >= 1");
        if (history_days < cadence_days)
            throw ConfigError("policy.history_days must be >= policy.cadence_days");
    }
};

inline const char* to_string(CorrectionPolicy::Mode m) {
    switch (m) {
    case CorrectionPolicy::Mode::FineTuneOutput: return "fine-tune-output";
    case CorrectionPolicy::Mode::RetrainAll: return "retrain-all";
    case CorrectionPolicy::Mode::None: return "none";
    }
    return "?";
}

inline CorrectionPolicy::Mode correction_mode_from_string(const std::string& s) {
    if (s == "fine-tune-output") return CorrectionPolicy::Mode::FineTuneOutput;
    if (s == "retrain-all") return CorrectionPolicy::Mode::RetrainAll;
    if (s == "none") return CorrectionPolicy::Mode::None;
    throw ConfigError("unknown correction mode '" + s + "'");
}

namespace detail {
inline bool trainable_all(ModelParameters::Block) { return true; }
inline bool trainable_embedding(ModelParameters::Block b) {
    return b == ModelParameters::Block::Embedding;
}
inline bool trainable_output(ModelParameters::Block b) {
    return b == ModelParameters::Block::Output;
}
} // namespace detail

/// Plain approximation loss over a batch: the batch-mean of per-sample
/// 1-norms between targets and predictions, in normalized space.
inline double batch_loss(std::span<const WindowSample* const> batch, const ModelDims& dims,
                         ModelParameters& params, Tape* reuse = nullptr) {
    if (batch.empty()) throw DataError("batch_loss: empty batch");
    Tape local;
    Tape& tape = reuse ? *reuse : local;
    ParamVars pv = register_params(tape, params);
    Var yhat = forward_graph(tape, dims, pv, batch);
    Var loss = tape.mean_abs_error(yhat, tape.constant(gather_y(batch)));
    double out = tape.value(loss)[0];
    tape.reset();
    return out;
}

inline std::size_t validation_count(std::size_t n, double fraction) {
    return static_cast<std::size_t>(static_cast<double>(n) * fraction);
}

namespace detail {

struct PerturbedResult {
    double gamma = 0.0; // loss under the perturbed embedding
    double gamma1 = 0.0; // plain loss
    std::vector<Tensor> grads; // one per trainable entry, in entries() order
    std::vector<Tensor*> trainable; // the matching parameter tensors
};

/// Restores the embedding weights even if the perturbed pass throws.
struct EmbeddingGuard {
    Tensor* slot = nullptr;
    Tensor saved;
    ~EmbeddingGuard() {
        if (slot) *slot = std::move(saved);
    }
};

/// The two-pass perturbation step. Pass one takes the gradient of the plain
/// loss with respect to the embedding weights only; the embedding is then
/// shifted by lambda times that gradient, held constant, and pass two
/// differentiates the shifted loss for every parameter `filter` admits.
/// lambda == 0 collapses to a single plain pass, so the gradient then equals
/// backward(batch_loss) exactly.
inline PerturbedResult perturbed_pass(Tape& tape, const ModelDims& dims, ModelParameters& params,
                                      std::span<const WindowSample* const> batch, double lambda,
                                      bool (*filter)(ModelParameters::Block), bool want_grads) {
    if (batch.empty()) throw DataError("perturbed_pass: empty batch");
    PerturbedResult res;
    const Tensor targets = gather_y(batch);

    EmbeddingGuard guard;
    if (lambda != 0.0) {
        ParamVars pv = register_params(tape, params, detail::trainable_embedding);
        Var yhat = forward_graph(tape, dims, pv, batch);
        Var loss = tape.mean_abs_error(yhat, tape.constant(targets));
        res.gamma1 = tape.value(loss)[0];
        tape.backward(loss);
        Tensor embed_grad = tape.grad(pv.w_e);
        tape.reset();
        guard.saved = params.w_e;
        guard.slot = &params.w_e;
        axpy(lambda, embed_grad, params.w_e); // perturbation held constant from here
    }

    ParamVars pv = register_params(tape, params, want_grads ? filter : detail::trainable_embedding);
    Var yhat = forward_graph(tape, dims, pv, batch);
    Var loss = tape.mean_abs_error(yhat, tape.constant(targets));
    res.gamma = tape.value(loss)[0];
    if (guard.slot == nullptr) res.gamma1 = res.gamma;
    if (want_grads) {
        tape.backward(loss);
        for (std::size_t k = 0; k < pv.entries.size(); ++k) {
            if (!filter(pv.entries[k].block)) continue;
            res.grads.push_back(tape.grad(pv.vars[k]));
            res.trainable.push_back(pv.entries[k].tensor);
        }
    }
    tape.reset();
    return res;
}

} // namespace detail

/// The regularized loss: the plain loss evaluated with the embedding weights
/// shifted by lambda times their own loss gradient (the shift is a constant,
/// nothing differentiates through it).
inline double perturbed_loss(std::span<const WindowSample* const> batch, const ModelDims& dims,
                             ModelParameters& params, double lambda, Tape* reuse = nullptr) {
    Tape local;
    Tape& tape = reuse ? *reuse : local;
    return detail::perturbed_pass(tape, dims, params, batch, lambda, detail::trainable_all, false)
        .gamma;
}

/// Test instrumentation points; default-constructed hooks do nothing.
struct TrainHooks {
    std::function<void(int epoch, const std::vector<std::size_t>& sample_indices)>
        on_gradient_batch;
};

namespace detail {

struct EpochRunner {
    const ModelDims& dims;
    ModelParameters& params;
    const TrainConfig& cfg;
    bool (*filter)(ModelParameters::Block);
    double learning_rate;
    Tape tape;
    AdamState adam;

    EpochRunner(const ModelDims& d, ModelParameters& p, const TrainConfig& c,
                bool (*f)(ModelParameters::Block), double lr)
        : dims(d), params(p), cfg(c), filter(f), learning_rate(lr) {
        std::vector<Tensor*> trainable;
        for (ModelParameters::Entry& e : params.entries())
            if (filter(e.block)) trainable.push_back(e.tensor);
        adam = AdamState::for_params(trainable);
    }

    /// One pass over `pool` in `order`, one Adam step per batch. Returns the
    /// sample-weighted mean of the batch losses.
    double run(const std::vector<WindowSample>& pool, const std::vector<std::size_t>& order,
               int epoch, const TrainHooks* hooks) {
        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
            const std::size_t take = std::min(cfg.batch_size, order.size() - at);
            std::vector<const WindowSample*> batch(take);
            std::vector<std::size_t> ids(take);
            for (std::size_t b = 0; b < take; ++b) {
                ids[b] = order[at + b];
                batch[b] = &pool[ids[b]];
            }
            try {
                detail::PerturbedResult step = detail::perturbed_pass(
                    tape, dims, params, batch, cfg.lambda_perturb, filter, true);
                if (!std::isfinite(step.gamma))
                    throw NumericError("non-finite training loss");
                if (cfg.grad_clip > 0.0) clip_global_norm(step.grads, cfg.grad_clip);
                adam_step(adam, step.trainable, step.grads, learning_rate);
                loss_sum += step.gamma * static_cast<double>(take);
                seen += take;
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(at / cfg.batch_size + 1) + ")");
            }
            if (hooks && hooks->on_gradient_batch) hooks->on_gradient_batch(epoch, ids);
        }
        return loss_sum / static_cast<double>(seen);
    }
};

} // namespace detail

/// Offline training: seeded validation split, epoch shuffles without
/// replacement, the perturbation step on every batch, Adam on all parameters,
/// and patience-based early stopping on the validation loss. Returns the
/// checkpoint whose parameters achieved the best validation loss.
inline Checkpoint train_offline(const std::vector<WindowSample>& samples, const ModelDims& dims,
                                const FeatureMask& features, ClusterModel clusters, Scaler scaler,
                                const TrainConfig& cfg, const TrainHooks* hooks = nullptr) {
    cfg.validate();
    dims.validate();
    if (samples.empty()) throw DataError("train_offline: no training samples");

    Checkpoint cp;
    cp.dims = dims;
    cp.features = features;
    cp.clusters = std::move(clusters);
    cp.scaler = scaler;
    cp.train_config = cfg;
    cp.params = init_params(dims, cfg.seed, cfg.forget_bias_one ? 1.0 : 0.0);
    if (cfg.max_epochs_offline == 0) return cp;

    // validation split: sampled once, never touched by a gradient
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 split_rng(cfg.seed ^ 0x76616c73706c6974ull);
    std::shuffle(order.begin(), order.end(), split_rng);
    const std::size_t n_val =
        static_cast<std::size_t>(validation_count(samples.size(), cfg.validation_fraction));
    if (n_val == 0) throw DataError("train_offline: validation split is empty");
    if (n_val >= samples.size()) throw DataError("train_offline: validation split leaves no training data");
    std::vector<std::size_t> val_idx(order.begin(), order.begin() + n_val);
    std::vector<std::size_t> train_idx(order.begin() + n_val, order.end());

    std::vector<const WindowSample*> val_batch;
    val_batch.reserve(val_idx.size());
    for (std::size_t i : val_idx) val_batch.push_back(&samples[i]);

    detail::EpochRunner runner(dims, cp.params, cfg, detail::trainable_all, cfg.lr_offline);
    std::mt19937_64 epoch_rng(cfg.seed ^ 0x65706f6368726e67ull);

    ModelParameters best_params = cp.params;
    double best_val = std::numeric_limits<double>::infinity();
    double prev_val = std::numeric_limits<double>::infinity();
    int patience = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs_offline; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), epoch_rng);
        const double train_loss = runner.run(samples, train_idx, epoch, hooks);
        const double val_loss =
            perturbed_loss(val_batch, dims, cp.params, cfg.lambda_perturb, &runner.tape);
        if (!std::isfinite(val_loss))
            throw NumericError("non-finite validation loss (epoch " + std::to_string(epoch) + ")");
        cp.history.push_back({epoch, train_loss, val_loss});
        if (val_loss < best_val) {
            best_val = val_loss;
            best_params = cp.params;
        }
        const double improvement = prev_val - val_loss;
        patience = improvement < cfg.early_stop_epsilon ? patience + 1 : 0;
        if (patience >= cfg.patience_offline) break;
        prev_val = val_loss;
    }
    cp.params = std::move(best_params);
    return cp;
}

/// Weekly correction. fine-tune-output updates only the output block with a
/// fresh Adam state and leaves every other parameter, the clusters, and the
/// scaler bit-identical; retrain-all updates everything under the same
/// schedule; none returns the checkpoint unchanged.
inline Checkpoint correct_online(const Checkpoint& cp, const std::vector<WindowSample>& recent,
                                 const CorrectionPolicy& policy) {
    policy.validate();
    Checkpoint out = cp;
    if (policy.mode == CorrectionPolicy::Mode::None) return out;
    if (recent.empty()) throw DataError("correct_online: no recent windows");
    const TrainConfig& cfg = cp.train_config;

    bool (*filter)(ModelParameters::Block) = policy.mode == CorrectionPolicy::Mode::RetrainAll
                                                 ? detail::trainable_all
                                                 : detail::trainable_output;
    detail::EpochRunner runner(out.dims, out.params, cfg, filter, cfg.lr_online);
    std::mt19937_64 rng(cfg.seed ^ 0x6f6e6c696e656370ull);

    std::vector<std::size_t> order(recent.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    double prev = std::numeric_limits<double>::infinity();
    int patience = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs_online; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        const double loss = runner.run(recent, order, epoch, nullptr);
        const double improvement = prev - loss;
        patience = improvement < cfg.early_stop_epsilon ? patience + 1 : 0;
        if (patience >= cfg.tolerance_online) break;
        prev = loss;
    }
    return out;
}

} // namespace loadcast
