#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "loadcast/features.hpp"
#include "loadcast/tape.hpp"

namespace loadcast {

/// Shape configuration of the hybrid model. q_dim == 0 drops the
/// fully-connected branch entirely (the history-only variant); the output
/// layer then takes the LSTM state alone.
struct ModelDims {
    std::size_t seq_len = 168;
    std::size_t in_dim = 34;
    std::size_t embed_dim = 10; // d
    std::size_t hidden = 128; // n_h
    std::size_t q_dim = 32; // 12 + n_c; 0 = no FCNN branch
    std::size_t out_len = 24;

    bool has_fcnn() const { return q_dim > 0; }
    std::size_t concat_dim() const { return has_fcnn() ? 2 * hidden : hidden; }

    void validate() const {
        if (seq_len == 0 || in_dim == 0 || embed_dim == 0 || hidden == 0 || out_len == 0)
            throw ConfigError("model dims must be positive");
        if (in_dim > 1 && embed_dim >= in_dim)
            throw ConfigError("embedding size must be smaller than the input dimension");
    }

    friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Every weight and bias of the model, partitioned into the embedding
/// block, the output block, and the rest. The partition drives both the
/// perturbation (embedding only) and online fine-tuning (output only).
struct ModelParameters {
    enum class Block { Embedding, Rest, Output };

    Tensor w_e, b_e; // embedding
    Tensor w_gh, w_gs, b_g; // LSTM cell input node
    Tensor w_ih, w_is, b_i; // input gate
    Tensor w_fh, w_fs, b_f; // forget gate
    Tensor w_oh, w_os, b_o; // output gate
    Tensor w_f1, b_f1, w_f2, b_f2, w_f3, b_f3; // FCNN branch (may be empty)
    Tensor w_o1, b_o1, w_o2, b_o2; // output block

    struct Entry {
        const char* name;
        Tensor* tensor;
        Block block;
    };

    /// Fixed, documented parameter order: initialization, optimizer state,
    /// and serialization all follow it.
    std::vector<Entry> entries(bool include_fcnn = true) {
        std::vector<Entry> e = {
            {"w_e", &w_e, Block::Embedding},   {"b_e", &b_e, Block::Embedding},
            {"w_gh", &w_gh, Block::Rest},      {"w_gs", &w_gs, Block::Rest},
            {"b_g", &b_g, Block::Rest},        {"w_ih", &w_ih, Block::Rest},
            {"w_is", &w_is, Block::Rest},      {"b_i", &b_i, Block::Rest},
            {"w_fh", &w_fh, Block::Rest},      {"w_fs", &w_fs, Block::Rest},
            {"b_f", &b_f, Block::Rest},        {"w_oh", &w_oh, Block::Rest},
            {"w_os", &w_os, Block::Rest},      {"b_o", &b_o, Block::Rest},
        };
        if (include_fcnn && w_f1.size() > 0) {
            e.push_back({"w_f1", &w_f1, Block::Rest});
            e.push_back({"b_f1", &b_f1, Block::Rest});
            e.push_back({"w_f2", &w_f2, Block::Rest});
            e.push_back({"b_f2", &b_f2, Block::Rest});
            e.push_back({"w_f3", &w_f3, Block::Rest});
            e.push_back({"b_f3", &b_f3, Block::Rest});
        }
        e.push_back({"w_o1", &w_o1, Block::Output});
        e.push_back({"b_o1", &b_o1, Block::Output});
        e.push_back({"w_o2", &w_o2, Block::Output});
        e.push_back({"b_o2", &b_o2, Block::Output});
        return e;
    }
};

/// Glorot-uniform weights, zero biases (the forget-gate bias can be raised
/// to 1 via config). Deterministic under the seed: tensors are filled in
/// entries() order, each entry row-major.
inline ModelParameters init_params(const ModelDims& dims, std::uint64_t seed,
                                   double forget_bias = 0.0) {
    dims.validate();
    ModelParameters p;
    const std::size_t d = dims.embed_dim, nh = dims.hidden;
    p.w_e = Tensor(d, dims.in_dim);
    p.b_e = Tensor::vector(d);
    for (Tensor* w : {&p.w_gh, &p.w_ih, &p.w_fh, &p.w_oh}) *w = Tensor(nh, nh);
    for (Tensor* w : {&p.w_gs, &p.w_is, &p.w_fs, &p.w_os}) *w = Tensor(nh, d);
    for (Tensor* b : {&p.b_g, &p.b_i, &p.b_f, &p.b_o}) *b = Tensor::vector(nh);
    if (dims.has_fcnn()) {
        p.w_f1 = Tensor(nh, dims.q_dim);
        p.w_f2 = Tensor(nh, nh);
        p.w_f3 = Tensor(nh, nh);
        for (Tensor* b : {&p.b_f1, &p.b_f2, &p.b_f3}) *b = Tensor::vector(nh);
    }
    p.w_o1 = Tensor(nh, dims.concat_dim());
    p.b_o1 = Tensor::vector(nh);
    p.w_o2 = Tensor(dims.out_len, nh);
    p.b_o2 = Tensor::vector(dims.out_len);

    std::mt19937_64 rng(seed);
    for (ModelParameters::Entry& e : p.entries()) {
        Tensor& t = *e.tensor;
        if (t.cols() == 1 && e.name[0] == 'b') continue; // biases stay zero
        const double bound = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
    }
    if (forget_bias != 0.0) p.b_f.fill(forget_bias);
    return p;
}

// ---------------------------------------------------------------------------
// Graph construction. Training, evaluation, and the single-sample helpers all
// build through the same functions, so the unit-tested path is the trained
// path. Columns of every node are batch samples.
// ---------------------------------------------------------------------------

/// Tape handles for every parameter, in the same order as entries().
struct ParamVars {
    std::vector<Var> vars;
    std::vector<ModelParameters::Entry> entries;
    Var w_e; // kept separately: the perturbation needs its gradient

    Var at(const char* name) const {
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (std::string_view(entries[i].name) == name) return vars[i];
        throw Error(std::string("unknown parameter ") + name);
    }
};

/// Registers parameters on the tape. `trainable` decides which blocks become
/// gradient-bearing leaves; the rest enter as constants, which prunes their
/// whole backward subgraph.
inline ParamVars register_params(Tape& tape, ModelParameters& params,
                                 bool (*trainable)(ModelParameters::Block) = nullptr) {
    ParamVars pv;
    pv.entries = params.entries();
    pv.vars.reserve(pv.entries.size());
    for (ModelParameters::Entry& e : pv.entries) {
        const bool grad = trainable == nullptr || trainable(e.block);
        Var v = grad ? tape.param(*e.tensor) : tape.constant(*e.tensor);
        pv.vars.push_back(v);
        if (std::string_view(e.name) == "w_e") pv.w_e = v;
    }
    return pv;
}

/// One LSTM cell step: the six gate equations. Returns h and writes c
/// through c_out.
inline Var lstm_cell_step(Tape& t, const ParamVars& p, Var s, Var h_prev, Var c_prev,
                          Var& c_out) {
    Var g = t.tanh(t.add(t.affine(p.at("w_gh"), h_prev), t.affine(p.at("w_gs"), s, p.at("b_g"))));
    Var i = t.sigmoid(t.add(t.affine(p.at("w_ih"), h_prev), t.affine(p.at("w_is"), s, p.at("b_i"))));
    Var f = t.sigmoid(t.add(t.affine(p.at("w_fh"), h_prev), t.affine(p.at("w_fs"), s, p.at("b_f"))));
    Var c = t.add(t.hadamard(f, c_prev), t.hadamard(i, g));
    Var o = t.sigmoid(t.add(t.affine(p.at("w_oh"), h_prev), t.affine(p.at("w_os"), s, p.at("b_o"))));
    Var h = t.hadamard(o, t.tanh(c));
    c_out = c;
    return h;
}

/// Embeds each time step and runs the cell across the sequence from zero
/// initial state; returns the final hidden state (hidden x batch).
/// x_steps[j] is the (in_dim x batch) input of step j.
inline Var lstm_block_graph(Tape& t, const ModelDims& dims, const ParamVars& p,
                            std::span<const Var> x_steps) {
    Var h = t.constant(Tensor(dims.hidden, t.value(x_steps[0]).cols()));
    Var c = t.constant(Tensor(dims.hidden, t.value(x_steps[0]).cols()));
    for (Var x : x_steps) {
        Var s = t.affine(p.at("w_e"), x, p.at("b_e"));
        Var c_next;
        h = lstm_cell_step(t, p, s, h, c, c_next);
        c = c_next;
    }
    return h;
}

/// Three affine layers with ReLU between them and none after the last.
inline Var fcnn_block_graph(Tape& t, const ParamVars& p, Var q) {
    Var l1 = t.relu(t.affine(p.at("w_f1"), q, p.at("b_f1")));
    Var l2 = t.relu(t.affine(p.at("w_f2"), l1, p.at("b_f2")));
    return t.affine(p.at("w_f3"), l2, p.at("b_f3"));
}

/// Concatenation of the two branch states followed by the two-layer output
/// block (ReLU inside, linear final layer).
inline Var output_graph(Tape& t, const ParamVars& p, Var h_final, Var h_q, bool has_fcnn) {
    Var hf = has_fcnn ? t.concat(h_final, h_q) : h_final;
    return t.affine(p.at("w_o2"), t.relu(t.affine(p.at("w_o1"), hf, p.at("b_o1"))), p.at("b_o2"));
}

/// Gathers step j of each sample into one (in_dim x batch) tensor.
inline Tensor gather_step(std::span<const WindowSample* const> batch, std::size_t j) {
    Tensor out(batch.empty() ? 0 : batch[0]->x.cols(), batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b)
        for (std::size_t r = 0; r < out.rows(); ++r) out(r, b) = batch[b]->x(j, r);
    return out;
}

inline Tensor gather_q(std::span<const WindowSample* const> batch) {
    Tensor out(batch[0]->q.size(), batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b)
        for (std::size_t r = 0; r < out.rows(); ++r) out(r, b) = batch[b]->q[r];
    return out;
}

inline Tensor gather_y(std::span<const WindowSample* const> batch) {
    Tensor out(batch[0]->y.size(), batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b)
        for (std::size_t r = 0; r < out.rows(); ++r) out(r, b) = batch[b]->y[r];
    return out;
}

/// Full forward pass over a batch; returns the (out_len x batch) prediction.
inline Var forward_graph(Tape& t, const ModelDims& dims, const ParamVars& p,
                         std::span<const WindowSample* const> batch) {
    std::vector<Var> steps;
    steps.reserve(dims.seq_len);
    for (std::size_t j = 0; j < dims.seq_len; ++j)
        steps.push_back(t.constant(gather_step(batch, j)));
    Var h_final = lstm_block_graph(t, dims, p, steps);
    Var h_q{};
    if (dims.has_fcnn()) h_q = fcnn_block_graph(t, p, t.constant(gather_q(batch)));
    return output_graph(t, p, h_final, h_q, dims.has_fcnn());
}

// ---------------------------------------------------------------------------
// Single-sample evaluation helpers. Thin wrappers over the graph builders.
// ---------------------------------------------------------------------------

struct LstmCellState {
    std::vector<double> h;
    std::vector<double> c;
};

namespace detail {
inline Tensor column(std::span<const double> v) {
    Tensor t(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) t[i] = v[i];
    return t;
}
inline std::vector<double> to_vec(const Tensor& t) {
    return std::vector<double>(t.data(), t.data() + t.size());
}
} // namespace detail

/// s = W_e * x + b_e
inline std::vector<double> embed(std::span<const double> x, ModelParameters& params) {
    Tape t;
    ParamVars pv = register_params(t, params);
    Var out = t.affine(pv.at("w_e"), t.constant(detail::column(x)), pv.at("b_e"));
    return detail::to_vec(t.value(out));
}

inline LstmCellState lstm_cell(std::span<const double> s, const LstmCellState& prev,
                               ModelParameters& params) {
    Tape t;
    ParamVars pv = register_params(t, params);
    Var c_out;
    Var h = lstm_cell_step(t, pv, t.constant(detail::column(s)),
                           t.constant(detail::column(prev.h)), t.constant(detail::column(prev.c)),
                           c_out);
    return {detail::to_vec(t.value(h)), detail::to_vec(t.value(c_out))};
}

/// Runs embed + cell over every row of x (seq_len x in_dim) from zero state.
inline std::vector<double> lstm_block(const Tensor& x, const ModelDims& dims,
                                      ModelParameters& params) {
    Tape t;
    ParamVars pv = register_params(t, params);
    std::vector<Var> steps;
    steps.reserve(x.rows());
    for (std::size_t j = 0; j < x.rows(); ++j) {
        Tensor col(x.cols(), 1);
        for (std::size_t r = 0; r < x.cols(); ++r) col[r] = x(j, r);
        steps.push_back(t.constant(std::move(col)));
    }
    ModelDims d = dims;
    d.seq_len = x.rows();
    Var h = lstm_block_graph(t, d, pv, steps);
    return detail::to_vec(t.value(h));
}

inline std::vector<double> fcnn_block(std::span<const double> q, ModelParameters& params) {
    Tape t;
    ParamVars pv = register_params(t, params);
    Var out = fcnn_block_graph(t, pv, t.constant(detail::column(q)));
    return detail::to_vec(t.value(out));
}

/// Day-ahead prediction for one sample, in normalized space.
inline std::vector<double> forward(const WindowSample& sample, const ModelDims& dims,
                                   ModelParameters& params) {
    Tape t;
    ParamVars pv = register_params(t, params);
    const WindowSample* one[] = {&sample};
    Var out = forward_graph(t, dims, pv, one);
    return detail::to_vec(t.value(out));
}

} // namespace loadcast
