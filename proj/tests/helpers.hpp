#pragma once

#include <random>

#include "loadcast/features.hpp"
#include "loadcast/model.hpp"
#include "loadcast/tensor.hpp"

namespace testutil {

using loadcast::Tensor;

inline void fill_uniform(Tensor& t, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
}

inline Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
    Tensor t(r, c);
    fill_uniform(t, rng, lo, hi);
    return t;
}

inline std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                      double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

/// The tiny model configuration used by the gradient checks.
inline loadcast::ModelDims tiny_dims() {
    loadcast::ModelDims d;
    d.seq_len = 6;
    d.in_dim = 34;
    d.embed_dim = 4;
    d.hidden = 5;
    d.q_dim = 12 + 3; // n_c = 3
    d.out_len = 4;
    return d;
}

/// Random samples shaped for `dims`; loads in [0, 1], one-hot-free (random
/// dense inputs exercise the same code paths).
inline std::vector<loadcast::WindowSample> random_samples(const loadcast::ModelDims& dims,
                                                          std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<loadcast::WindowSample> out;
    for (std::size_t s = 0; s < count; ++s) {
        loadcast::WindowSample w;
        w.x = random_tensor(dims.seq_len, dims.in_dim, rng, 0.0, 1.0);
        w.q = random_vec(dims.q_dim, rng, 0.0, 1.0);
        w.y = random_vec(dims.out_len, rng, 0.0, 1.0);
        w.target_date = loadcast::make_date(2021, 1, 1);
        out.push_back(std::move(w));
    }
    return out;
}

inline std::vector<const loadcast::WindowSample*> as_batch(
    const std::vector<loadcast::WindowSample>& samples) {
    std::vector<const loadcast::WindowSample*> b;
    for (const auto& s : samples) b.push_back(&s);
    return b;
}

} // namespace testutil
