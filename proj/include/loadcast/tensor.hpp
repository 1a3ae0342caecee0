#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "loadcast/error.hpp"

namespace loadcast {

/// Dense row-major matrix of 64-bit floats. A vector of length n is an n-by-1
/// tensor. Every public operation that produces values checks them for
/// NaN/Inf and throws NumericError instead of propagating them.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    /// Adopts existing storage (its size must be rows * cols); lets the tape
    /// recycle buffers between forward passes.
    Tensor(std::size_t rows, std::size_t cols, std::vector<double>&& storage)
        : rows_(rows), cols_(cols), data_(std::move(storage)) {}

    static Tensor vector(std::size_t len, double fill = 0.0) { return Tensor(len, 1, fill); }

    /// Gives the storage back (the tensor becomes empty).
    std::vector<double> release() {
        rows_ = cols_ = 0;
        return std::move(data_);
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    void fill(double v) { data_.assign(data_.size(), v); }

    std::string shape_str() const {
        return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline void check_finite(const Tensor& t, const char* op) {
    if (!t.all_finite())
        throw NumericError(std::string("non-finite value produced by ") + op);
}

inline void require_shape(bool ok, const char* op, const Tensor& a, const Tensor& b) {
    if (!ok)
        throw Error(std::string("shape mismatch in ") + op + ": " + a.shape_str() + " vs " +
                    b.shape_str());
}

// ---------------------------------------------------------------------------
// Accumulating matrix kernels. These carry the bulk of the training cost.
// They are written in saxpy/dot form with contiguous inner loops that the
// compiler vectorizes well; accumulation order is fixed, so results are
// bit-identical from run to run.
// ---------------------------------------------------------------------------

/// C += A * B, A (m x k), B (k x n), C (m x n)
inline void gemm_add(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    const double* __restrict__ pa = a.data();
    const double* __restrict__ pb = b.data();
    double* __restrict__ pc = c.data();
    for (std::size_t i = 0; i < m; ++i) {
        double* __restrict__ ci = pc + i * n;
        const double* ai = pa + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            const double* __restrict__ bp = pb + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

/// C += A^T * B, A (m x k), B (m x n), C (k x n)
inline void gemm_at_b_add(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    const double* __restrict__ pa = a.data();
    const double* __restrict__ pb = b.data();
    double* __restrict__ pc = c.data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = pa + i * k;
        const double* __restrict__ bi = pb + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            double* __restrict__ cp = pc + p * n;
            for (std::size_t j = 0; j < n; ++j) cp[j] += aip * bi[j];
        }
    }
}

/// C += A * B^T, A (m x n), B (k x n), C (m x k)
inline void gemm_a_bt_add(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t m = a.rows(), n = a.cols(), k = b.rows();
    const double* __restrict__ pa = a.data();
    const double* __restrict__ pb = b.data();
    double* __restrict__ pc = c.data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* __restrict__ ai = pa + i * n;
        double* ci = pc + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* __restrict__ bp = pb + p * n;
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += ai[j] * bp[j];
            ci[p] += s;
        }
    }
}

/// C[i][j] += v[i] for every column j (bias broadcast).
inline void add_col_broadcast(const Tensor& v, Tensor& c) {
    const std::size_t m = c.rows(), n = c.cols();
    for (std::size_t i = 0; i < m; ++i) {
        const double vi = v[i];
        double* ci = c.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += vi;
    }
}

/// v[i] += sum_j C[i][j] (reduction adjoint of the bias broadcast).
inline void add_row_sum(const Tensor& c, Tensor& v) {
    const std::size_t m = c.rows(), n = c.cols();
    for (std::size_t i = 0; i < m; ++i) {
        const double* ci = c.data() + i * n;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += ci[j];
        v[i] += s;
    }
}

inline void axpy(double alpha, const Tensor& x, Tensor& y) {
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

inline double dot(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_norm(const Tensor& a) { return dot(a, a); }

} // namespace loadcast
