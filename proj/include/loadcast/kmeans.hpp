#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "loadcast/error.hpp"

namespace loadcast {

/// Frozen clustering of normalized 168-hour load windows. centers[j] is the
/// j-th pattern; the objective J is the summed (unsquared) Euclidean
/// distance between every window and its assigned center.
struct ClusterModel {
    std::vector<std::vector<double>> centers;
    double final_objective = 0.0;
    int iterations_run = 0;
    std::vector<double> objective_history; // J(1), J(2), ...

    std::size_t n_clusters() const { return centers.size(); }
    std::size_t dim() const { return centers.empty() ? 0 : centers.front().size(); }
};

namespace detail {
inline double euclidean(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}
} // namespace detail

/// Index of the nearest center by Euclidean distance, ties broken toward the
/// lowest index. Exposed so tests can cross-check assignments exhaustively.
inline std::size_t nearest_center(std::span<const double> w,
                                  const std::vector<std::vector<double>>& centers) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centers.size(); ++j) {
        const double d = detail::euclidean(w, centers[j]);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

/// Lloyd iterations on normalized windows. Centers are initialized as n_c
/// distinct windows drawn with the seed and updated as cluster means;
/// because J sums unsquared distances, a mean update can occasionally raise
/// it, so an update that would is rejected and the previous center kept.
/// That keeps J non-increasing at every iteration, which is also verified
/// as the history is recorded. Iteration stops once
/// |J(k+1) - J(k)| <= tolerance_rel * J(1) or at max_iter. An empty cluster
/// is repaired by promoting the window farthest from its assigned center.
inline ClusterModel kmeans_fit(const std::vector<std::vector<double>>& windows, std::size_t n_c,
                               std::uint64_t seed, double tolerance_rel = 1e-6,
                               int max_iter = 300) {
    if (n_c < 1) throw DataError("kmeans_fit: need at least one cluster");
    if (windows.size() < n_c)
        throw DataError("kmeans_fit: " + std::to_string(windows.size()) + " windows for " +
                        std::to_string(n_c) + " clusters");
    const std::size_t n = windows.size();
    const std::size_t dim = windows.front().size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    ClusterModel model;
    model.centers.reserve(n_c);
    for (std::size_t j = 0; j < n_c; ++j) model.centers.push_back(windows[order[j]]);

    std::vector<std::size_t> assign(n, 0);
    std::vector<double> dist(n, 0.0);
    double prev_j = std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= max_iter; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            assign[i] = nearest_center(windows[i], model.centers);
            dist[i] = detail::euclidean(windows[i], model.centers[assign[i]]);
        }
        std::vector<std::size_t> counts(n_c, 0);
        for (std::size_t a : assign) counts[a]++;
        for (std::size_t j = 0; j < n_c; ++j) {
            if (counts[j] > 0) continue;
            std::size_t far = 0;
            for (std::size_t i = 1; i < n; ++i)
                if (dist[i] > dist[far]) far = i;
            counts[assign[far]]--;
            assign[far] = j;
            counts[j] = 1;
            dist[far] = 0.0;
            model.centers[j] = windows[far];
        }
        // mean update per cluster, fixed summation order over window index
        std::vector<std::vector<double>> sums(n_c, std::vector<double>(dim, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double>& s = sums[assign[i]];
            for (std::size_t k = 0; k < dim; ++k) s[k] += windows[i][k];
        }
        std::vector<double> old_cost(n_c, 0.0), new_cost(n_c, 0.0);
        std::vector<std::vector<double>> means(n_c);
        for (std::size_t j = 0; j < n_c; ++j) {
            means[j].resize(dim);
            for (std::size_t k = 0; k < dim; ++k)
                means[j][k] = sums[j][k] / static_cast<double>(counts[j]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            old_cost[assign[i]] += detail::euclidean(windows[i], model.centers[assign[i]]);
            new_cost[assign[i]] += detail::euclidean(windows[i], means[assign[i]]);
        }
        double objective = 0.0;
        for (std::size_t j = 0; j < n_c; ++j) {
            if (new_cost[j] <= old_cost[j]) {
                model.centers[j] = std::move(means[j]);
                objective += new_cost[j];
            } else {
                objective += old_cost[j];
            }
        }

        if (!model.objective_history.empty() &&
            objective > model.objective_history.back() + 1e-9 * model.objective_history.front())
            throw NumericError("kmeans_fit: objective increased at iteration " +
                               std::to_string(iter));
        model.objective_history.push_back(objective);
        model.iterations_run = iter;
        model.final_objective = objective;
        if (iter > 1 && std::abs(prev_j - objective) <= tolerance_rel * model.objective_history.front())
            break;
        prev_j = objective;
    }
    for (const std::vector<double>& c : model.centers) {
        double sq = 0.0;
        for (double v : c) {
            if (!std::isfinite(v)) throw NumericError("kmeans_fit: non-finite center");
            sq += v * v;
        }
        if (sq <= 0.0) throw NumericError("kmeans_fit: zero-norm center");
    }
    return model;
}

} // namespace loadcast
