#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "loadcast/tensor.hpp"

namespace loadcast {

/// Adam with bias correction. One state instance covers a fixed list of
/// parameters, matched to them by position.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    std::vector<Tensor> m; // first moments, shaped like the parameters
    std::vector<Tensor> v; // second moments

    static AdamState for_params(const std::vector<Tensor*>& params) {
        AdamState s;
        s.m.reserve(params.size());
        s.v.reserve(params.size());
        for (const Tensor* p : params) {
            s.m.emplace_back(p->rows(), p->cols());
            s.v.emplace_back(p->rows(), p->cols());
        }
        return s;
    }
};

/// One Adam update over all parameters. grads[k] must be shaped like
/// *params[k]; non-finite gradients are rejected.
inline void adam_step(AdamState& state, const std::vector<Tensor*>& params,
                      const std::vector<Tensor>& grads, double learning_rate) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw Error("adam_step: parameter/gradient/state count mismatch");
    for (std::size_t k = 0; k < grads.size(); ++k) {
        if (!grads[k].all_finite()) throw NumericError("adam_step: non-finite gradient");
        if (!grads[k].same_shape(*params[k]))
            throw Error("adam_step: gradient shape " + grads[k].shape_str() +
                        " does not match parameter " + params[k]->shape_str());
    }
    state.step += 1;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        const Tensor& g = grads[k];
        Tensor& m = state.m[k];
        Tensor& v = state.v[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p[i] -= learning_rate * mhat / (std::sqrt(vhat) + state.eps);
        }
        check_finite(p, "adam_step");
    }
}

/// Scales all gradients so their global 2-norm is at most max_norm.
/// max_norm <= 0 disables clipping.
inline void clip_global_norm(std::vector<Tensor>& grads, double max_norm) {
    if (max_norm <= 0.0) return;
    double sq = 0.0;
    for (const Tensor& g : grads) sq += squared_norm(g);
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double s = max_norm / norm;
    for (Tensor& g : grads)
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= s;
}

} // namespace loadcast
