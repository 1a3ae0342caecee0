#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "loadcast/tensor.hpp"

namespace loadcast {

/// Central finite-difference verification of analytic gradients.
///
/// eval_loss must recompute the scalar loss from the current contents of
/// params (it is called twice per parameter entry with the entry nudged by
/// +/- h, then the entry is restored). Relative error uses the denominator
/// max(|analytic|, |fd|, 1e-8). Returns the maximum relative error over all
/// entries of all parameters.
inline double check_gradients(const std::vector<Tensor*>& params,
                              const std::vector<Tensor>& analytic_grads,
                              const std::function<double()>& eval_loss, double h) {
    if (h <= 0.0) throw Error("check_gradients: h must be positive");
    if (params.size() != analytic_grads.size())
        throw Error("check_gradients: parameter/gradient count mismatch");
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        const Tensor& g = analytic_grads[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double saved = p[i];
            p[i] = saved + h;
            const double up = eval_loss();
            p[i] = saved - h;
            const double down = eval_loss();
            p[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double denom = std::max({std::abs(g[i]), std::abs(fd), 1e-8});
            worst = std::max(worst, std::abs(g[i] - fd) / denom);
        }
    }
    return worst;
}

} // namespace loadcast
