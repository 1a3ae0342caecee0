#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <utility>
#include <vector>

#include "loadcast/tensor.hpp"

namespace loadcast {

/// Reverse-mode gradient tape over whole tensors.
///
/// A forward pass is built by calling the op methods; each call appends one
/// node holding the op's output, so creation order is already a topological
/// order. backward() walks the nodes in reverse creation order and
/// accumulates adjoints, which makes the accumulation order deterministic.
/// Columns act as independent batch samples in every op, so a value computed
/// for one column never depends on any other column.
///
/// A tape is confined to a single thread and describes exactly one forward
/// pass; reset() recycles the node buffers into a pool, which keeps repeated
/// passes free of allocation and page-fault churn.
class Tape {
public:
    struct Var {
        std::uint32_t id = UINT32_MAX;
    };

    Tape() { nodes_.reserve(1024); }

    /// Leaf that does not need a gradient (inputs, targets).
    Var constant(Tensor v) { return push_leaf(std::move(v), false); }

    /// Leaf parameter; its gradient is available after backward().
    Var param(const Tensor& v) {
        Tensor copy = uninit(v.rows(), v.cols());
        std::memcpy(copy.data(), v.data(), v.size() * sizeof(double));
        return push_leaf(std::move(copy), true);
    }

    /// W*x, W (m x k), x (k x n).
    Var affine(Var w, Var x) {
        const Tensor& wv = value(w);
        const Tensor& xv = value(x);
        require_shape(wv.cols() == xv.rows(), "affine", wv, xv);
        Tensor out = zeros(wv.rows(), xv.cols());
        gemm_add(wv, xv, out);
        return push(Op::Affine, std::move(out), w, x);
    }

    /// W*x + b with b (m x 1) broadcast over the columns of the product.
    Var affine(Var w, Var x, Var b) {
        const Tensor& wv = value(w);
        const Tensor& xv = value(x);
        const Tensor& bv = value(b);
        require_shape(wv.cols() == xv.rows(), "affine", wv, xv);
        require_shape(bv.rows() == wv.rows() && bv.cols() == 1, "affine bias", wv, bv);
        Tensor out = zeros(wv.rows(), xv.cols());
        gemm_add(wv, xv, out);
        add_col_broadcast(bv, out);
        return push(Op::AffineBias, std::move(out), w, x, b);
    }

    Var add(Var a, Var b) {
        const Tensor& av = value(a);
        const Tensor& bv = value(b);
        require_shape(av.same_shape(bv), "add", av, bv);
        Tensor out = uninit(av.rows(), av.cols());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
        return push(Op::Add, std::move(out), a, b);
    }

    Var sigmoid(Var a) {
        const Tensor& av = value(a);
        Tensor out = uninit(av.rows(), av.cols());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-av[i]));
        return push(Op::Sigmoid, std::move(out), a);
    }

    Var tanh(Var a) {
        const Tensor& av = value(a);
        Tensor out = uninit(av.rows(), av.cols());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
        return push(Op::Tanh, std::move(out), a);
    }

    Var relu(Var a) {
        const Tensor& av = value(a);
        Tensor out = uninit(av.rows(), av.cols());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
        return push(Op::Relu, std::move(out), a);
    }

    Var hadamard(Var a, Var b) {
        const Tensor& av = value(a);
        const Tensor& bv = value(b);
        require_shape(av.same_shape(bv), "hadamard", av, bv);
        Tensor out = uninit(av.rows(), av.cols());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
        return push(Op::Hadamard, std::move(out), a, b);
    }

    /// Stacks the rows of a on top of b (columns must agree).
    Var concat(Var a, Var b) {
        const Tensor& av = value(a);
        const Tensor& bv = value(b);
        require_shape(av.cols() == bv.cols(), "concat", av, bv);
        Tensor out = uninit(av.rows() + bv.rows(), av.cols());
        const std::size_t na = av.size();
        for (std::size_t i = 0; i < na; ++i) out[i] = av[i];
        for (std::size_t i = 0; i < bv.size(); ++i) out[na + i] = bv[i];
        return push(Op::Concat, std::move(out), a, b);
    }

    /// Per-column 1-norm of (pred - target), averaged over columns. Columns
    /// are batch samples, so this is the batch-mean of per-sample 1-norms.
    Var mean_abs_error(Var pred, Var target) {
        const Tensor& pv = value(pred);
        const Tensor& tv = value(target);
        require_shape(pv.same_shape(tv), "mean_abs_error", pv, tv);
        double s = 0.0;
        for (std::size_t i = 0; i < pv.size(); ++i) s += std::abs(pv[i] - tv[i]);
        Tensor out = uninit(1, 1);
        out[0] = s / static_cast<double>(pv.cols());
        return push(Op::MeanAbsError, std::move(out), pred, target);
    }

    /// alpha * a, elementwise.
    Var scale(Var a, double alpha) {
        const Tensor& av = value(a);
        Tensor out = uninit(av.rows(), av.cols());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * av[i];
        Var v = push(Op::Scale, std::move(out), a);
        nodes_[v.id].alpha = alpha;
        return v;
    }

    /// Accumulates d(loss)/d(node) for every node that can reach a parameter.
    /// loss must be a scalar (1 x 1) value produced on this tape.
    void backward(Var loss) {
        const Tensor& lv = value(loss);
        if (lv.rows() != 1 || lv.cols() != 1)
            throw Error("backward: loss must be scalar, got " + lv.shape_str());
        touch(loss.id).fill(1.0);
        for (std::uint32_t id = loss.id + 1; id-- > 0;) {
            Node& n = nodes_[id];
            if (!n.requires_grad || n.grad.size() == 0) continue;
            propagate(n);
        }
    }

    const Tensor& value(Var v) const { return nodes_[v.id].value; }

    /// Gradient accumulated by the last backward(); zero for untouched nodes.
    const Tensor& grad(Var v) {
        Node& n = nodes_[v.id];
        if (n.grad.size() == 0) n.grad = zeros(n.value.rows(), n.value.cols());
        return n.grad;
    }

    std::size_t node_count() const { return nodes_.size(); }

    /// Drops the graph but keeps every buffer for the next pass.
    void reset() {
        for (Node& n : nodes_) {
            pool_.push_back(n.value.release());
            if (n.grad.size() > 0) pool_.push_back(n.grad.release());
        }
        nodes_.clear();
    }

private:
    enum class Op : std::uint8_t {
        Leaf,
        Affine,
        AffineBias,
        Add,
        Sigmoid,
        Tanh,
        Relu,
        Hadamard,
        Concat,
        MeanAbsError,
        Scale,
    };

    struct Node {
        Tensor value;
        Tensor grad; // empty until touched by backward
        Op op = Op::Leaf;
        bool requires_grad = false;
        std::uint32_t a = UINT32_MAX, b = UINT32_MAX, c = UINT32_MAX;
        double alpha = 0.0;
    };

    std::vector<double> take_buf(std::size_t n) {
        if (!pool_.empty()) {
            std::vector<double> v = std::move(pool_.back());
            pool_.pop_back();
            v.resize(n);
            return v;
        }
        return std::vector<double>(n);
    }

    Tensor uninit(std::size_t r, std::size_t c) { return Tensor(r, c, take_buf(r * c)); }

    Tensor zeros(std::size_t r, std::size_t c) {
        std::vector<double> v = take_buf(r * c);
        std::fill(v.begin(), v.end(), 0.0);
        return Tensor(r, c, std::move(v));
    }

    Var push_leaf(Tensor v, bool requires_grad) {
        check_finite(v, "leaf");
        Node n;
        n.value = std::move(v);
        n.op = Op::Leaf;
        n.requires_grad = requires_grad;
        nodes_.push_back(std::move(n));
        return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
    }

    Var push(Op op, Tensor out, Var a, Var b = Var{UINT32_MAX}, Var c = Var{UINT32_MAX}) {
        check_finite(out, op_name(op));
        Node n;
        n.value = std::move(out);
        n.op = op;
        n.a = a.id;
        n.b = b.id;
        n.c = c.id;
        n.requires_grad = nodes_[a.id].requires_grad ||
                          (b.id != UINT32_MAX && nodes_[b.id].requires_grad) ||
                          (c.id != UINT32_MAX && nodes_[c.id].requires_grad);
        nodes_.push_back(std::move(n));
        return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
    }

    Tensor& touch(std::uint32_t id) {
        Node& n = nodes_[id];
        if (n.grad.size() == 0) n.grad = zeros(n.value.rows(), n.value.cols());
        return n.grad;
    }

    // Adds this node's contribution to its parents' adjoints.
    void propagate(Node& n) {
        switch (n.op) {
        case Op::Leaf:
            break;
        case Op::Affine:
        case Op::AffineBias: {
            Node& w = nodes_[n.a];
            Node& x = nodes_[n.b];
            if (w.requires_grad) gemm_a_bt_add(n.grad, x.value, touch(n.a));
            if (x.requires_grad) gemm_at_b_add(w.value, n.grad, touch(n.b));
            if (n.op == Op::AffineBias && nodes_[n.c].requires_grad)
                add_row_sum(n.grad, touch(n.c));
            break;
        }
        case Op::Add: {
            if (nodes_[n.a].requires_grad) axpy(1.0, n.grad, touch(n.a));
            if (nodes_[n.b].requires_grad) axpy(1.0, n.grad, touch(n.b));
            break;
        }
        case Op::Sigmoid: {
            if (!nodes_[n.a].requires_grad) break;
            Tensor& ga = touch(n.a);
            for (std::size_t i = 0; i < n.value.size(); ++i) {
                const double y = n.value[i];
                ga[i] += n.grad[i] * y * (1.0 - y);
            }
            break;
        }
        case Op::Tanh: {
            if (!nodes_[n.a].requires_grad) break;
            Tensor& ga = touch(n.a);
            for (std::size_t i = 0; i < n.value.size(); ++i) {
                const double y = n.value[i];
                ga[i] += n.grad[i] * (1.0 - y * y);
            }
            break;
        }
        case Op::Relu: {
            if (!nodes_[n.a].requires_grad) break;
            Tensor& ga = touch(n.a);
            for (std::size_t i = 0; i < n.value.size(); ++i)
                if (n.value[i] > 0.0) ga[i] += n.grad[i];
            break;
        }
        case Op::Hadamard: {
            Node& a = nodes_[n.a];
            Node& b = nodes_[n.b];
            if (a.requires_grad) {
                Tensor& ga = touch(n.a);
                for (std::size_t i = 0; i < n.value.size(); ++i)
                    ga[i] += n.grad[i] * b.value[i];
            }
            if (b.requires_grad) {
                Tensor& gb = touch(n.b);
                for (std::size_t i = 0; i < n.value.size(); ++i)
                    gb[i] += n.grad[i] * a.value[i];
            }
            break;
        }
        case Op::Concat: {
            Node& a = nodes_[n.a];
            Node& b = nodes_[n.b];
            const std::size_t na = a.value.size();
            if (a.requires_grad) {
                Tensor& ga = touch(n.a);
                for (std::size_t i = 0; i < na; ++i) ga[i] += n.grad[i];
            }
            if (b.requires_grad) {
                Tensor& gb = touch(n.b);
                for (std::size_t i = 0; i < b.value.size(); ++i) gb[i] += n.grad[na + i];
            }
            break;
        }
        case Op::MeanAbsError: {
            // Subgradient of |z| at z = 0 taken as 0.
            Node& p = nodes_[n.a];
            Node& t = nodes_[n.b];
            const double g = n.grad[0] / static_cast<double>(p.value.cols());
            if (p.requires_grad) {
                Tensor& gp = touch(n.a);
                for (std::size_t i = 0; i < p.value.size(); ++i) {
                    const double d = p.value[i] - t.value[i];
                    gp[i] += d > 0.0 ? g : (d < 0.0 ? -g : 0.0);
                }
            }
            if (t.requires_grad) {
                Tensor& gt = touch(n.b);
                for (std::size_t i = 0; i < p.value.size(); ++i) {
                    const double d = p.value[i] - t.value[i];
                    gt[i] -= d > 0.0 ? g : (d < 0.0 ? -g : 0.0);
                }
            }
            break;
        }
        case Op::Scale: {
            if (nodes_[n.a].requires_grad) axpy(n.alpha, n.grad, touch(n.a));
            break;
        }
        }
    }

    static const char* op_name(Op op) {
        switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Affine: return "affine";
        case Op::AffineBias: return "affine";
        case Op::Add: return "add";
        case Op::Sigmoid: return "sigmoid";
        case Op::Tanh: return "tanh";
        case Op::Relu: return "relu";
        case Op::Hadamard: return "hadamard";
        case Op::Concat: return "concat";
        case Op::MeanAbsError: return "mean_abs_error";
        case Op::Scale: return "scale";
        }
        return "?";
    }

    std::vector<Node> nodes_;
    std::vector<std::vector<double>> pool_;
};

using Var = Tape::Var;

} // namespace loadcast
