#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "council/tensor.hpp"

namespace council {

// Reverse-mode autodiff over Tensor. Each forward op records a node whose
// backward_fn scatters the incoming gradient into its parents. Graphs are
// built per forward pass and dropped afterwards; only leaf parameters keep
// their gradients across the pass (until zero_grad).
struct Node {
    Tensor value;
    Tensor grad;               // allocated lazily on first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn; // may be empty (leaf)

    Tensor& grad_buf() {
        if (grad.numel() == 0) grad = Tensor::zeros(value.shape());
        return grad;
    }
};

using NodePtr = std::shared_ptr<Node>;

class Var {
public:
    Var() = default;
    explicit Var(NodePtr n) : n_(std::move(n)) {}
    explicit Var(Tensor value, bool requires_grad = false) {
        n_ = std::make_shared<Node>();
        n_->value = std::move(value);
        n_->requires_grad = requires_grad;
    }

    bool defined() const { return n_ != nullptr; }
    const Tensor& value() const { return n_->value; }
    Tensor& value_mut() { return n_->value; }
    const Tensor& grad() const { return n_->grad; }
    bool requires_grad() const { return n_ && n_->requires_grad; }
    NodePtr node() const { return n_; }
    const std::vector<int64_t>& shape() const { return n_->value.shape(); }

    real item() const {
        if (n_->value.numel() != 1)
            throw std::logic_error("Var::item: tensor is not scalar");
        return n_->value[0];
    }

    void zero_grad() { n_->grad = Tensor(); }

    Var detach() const { return Var(n_->value, false); }

    // Backpropagate from a scalar.
    void backward() const {
        if (n_->value.numel() != 1)
            throw std::logic_error("Var::backward: output must be scalar");
        std::vector<Node*> order;
        std::unordered_set<Node*> seen;
        topo(n_.get(), seen, order);
        n_->grad_buf()[0] += 1.0;
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            Node* node = *it;
            if (node->backward_fn && node->grad.numel() != 0) node->backward_fn(*node);
        }
    }

private:
    static void topo(Node* root, std::unordered_set<Node*>& seen, std::vector<Node*>& order) {
        // iterative post-order; graphs can be deep for long residual stacks
        struct Frame { Node* n; size_t next; };
        std::vector<Frame> stack{{root, 0}};
        if (!seen.insert(root).second) return;
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next < f.n->parents.size()) {
                Node* p = f.n->parents[f.next++].get();
                if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
            } else {
                order.push_back(f.n);
                stack.pop_back();
            }
        }
    }

    NodePtr n_;
};

namespace detail {

inline Var make_op(Tensor value, std::vector<Var> parents,
                   std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    for (const auto& p : parents) {
        n->parents.push_back(p.node());
        if (p.requires_grad()) n->requires_grad = true;
    }
    if (n->requires_grad) n->backward_fn = std::move(backward_fn);
    return Var(n);
}

} // namespace detail

// ---- elementwise arithmetic -------------------------------------------------

inline Var add(const Var& a, const Var& b) {
    if (!a.value().same_shape(b.value()))
        throw std::invalid_argument("add: shape mismatch");
    Tensor out = a.value();
    out.add_(b.value());
    return detail::make_op(std::move(out), {a, b}, [](Node& n) {
        for (int side = 0; side < 2; ++side) {
            Node* p = n.parents[side].get();
            if (p->requires_grad) p->grad_buf().add_(n.grad);
        }
    });
}

inline Var sub(const Var& a, const Var& b) {
    if (!a.value().same_shape(b.value()))
        throw std::invalid_argument("sub: shape mismatch");
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] -= bv[i];
    return detail::make_op(std::move(out), {a, b}, [](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->grad_buf().add_(n.grad);
        if (n.parents[1]->requires_grad) {
            Tensor& g = n.parents[1]->grad_buf();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] -= n.grad[i];
        }
    });
}

inline Var mul(const Var& a, const Var& b) {
    if (!a.value().same_shape(b.value()))
        throw std::invalid_argument("mul: shape mismatch");
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] *= bv[i];
    return detail::make_op(std::move(out), {a, b}, [](Node& n) {
        const Tensor& av = n.parents[0]->value;
        const Tensor& bv2 = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
            Tensor& g = n.parents[0]->grad_buf();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * bv2[i];
        }
        if (n.parents[1]->requires_grad) {
            Tensor& g = n.parents[1]->grad_buf();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * av[i];
        }
    });
}

inline Var scale(const Var& a, real s) {
    Tensor out = a.value();
    out.scale_(s);
    return detail::make_op(std::move(out), {a}, [s](Node& n) {
        Tensor& g = n.parents[0]->grad_buf();
        for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * s;
    });
}

inline Var add_scalar(const Var& a, real s) {
    Tensor out = a.value();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] += s;
    return detail::make_op(std::move(out), {a}, [](Node& n) {
        n.parents[0]->grad_buf().add_(n.grad);
    });
}

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator*(const Var& a, real s) { return scale(a, s); }
inline Var operator*(real s, const Var& a) { return scale(a, s); }

inline Var square(const Var& a) { return mul(a, a); }

inline Var reciprocal(const Var& a) {
    Tensor out = a.value();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = 1.0 / out[i];
    return detail::make_op(std::move(out), {a}, [](Node& n) {
        Tensor& g = n.parents[0]->grad_buf();
        for (int64_t i = 0; i < g.numel(); ++i) {
            real y = n.value[i];
            g[i] += -y * y * n.grad[i];
        }
    });
}

inline Var abs(const Var& a) {
    Tensor out = a.value();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::abs(out[i]);
    return detail::make_op(std::move(out), {a}, [](Node& n) {
        const Tensor& x = n.parents[0]->value;
        Tensor& g = n.parents[0]->grad_buf();
        for (int64_t i = 0; i < g.numel(); ++i)
            g[i] += (x[i] > 0 ? 1.0 : (x[i] < 0 ? -1.0 : 0.0)) * n.grad[i];
    });
}

// ---- activations ------------------------------------------------------------

inline Var relu(const Var& a) {
    Tensor out = a.value();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = out[i] > 0 ? out[i] : 0;
    return detail::make_op(std::move(out), {a}, [](Node& n) {
        const Tensor& x = n.parents[0]->value;
        Tensor& g = n.parents[0]->grad_buf();
        for (int64_t i = 0; i < g.numel(); ++i)
            if (x[i] > 0) g[i] += n.grad[i];
    });
}

inline Var leaky_relu(const Var& a, real slope = 0.2) {
    Tensor out = a.value();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = out[i] > 0 ? out[i] : slope * out[i];
    return detail::make_op(std::move(out), {a}, [slope](Node& n) {
        const Tensor& x = n.parents[0]->value;
        Tensor& g = n.parents[0]->grad_buf();
        for (int64_t i = 0; i < g.numel(); ++i)
            g[i] += (x[i] > 0 ? 1.0 : slope) * n.grad[i];
    });
}

inline Var tanh(const Var& a) {
    Tensor out = a.value();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(out[i]);
    return detail::make_op(std::move(out), {a}, [](Node& n) {
        Tensor& g = n.parents[0]->grad_buf();
        for (int64_t i = 0; i < g.numel(); ++i) {
            real y = n.value[i];
            g[i] += (1.0 - y * y) * n.grad[i];
        }
    });
}

inline Var sigmoid(const Var& a) {
    Tensor out = a.value();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
    return detail::make_op(std::move(out), {a}, [](Node& n) {
        Tensor& g = n.parents[0]->grad_buf();
        for (int64_t i = 0; i < g.numel(); ++i) {
            real y = n.value[i];
            g[i] += y * (1.0 - y) * n.grad[i];
        }
    });
}

// ---- reductions -------------------------------------------------------------

inline Var mean_all(const Var& a) {
    Tensor out({1}, a.value().mean());
    const real inv = 1.0 / static_cast<real>(a.value().numel());
    return detail::make_op(std::move(out), {a}, [inv](Node& n) {
        Tensor& g = n.parents[0]->grad_buf();
        real d = n.grad[0] * inv;
        for (int64_t i = 0; i < g.numel(); ++i) g[i] += d;
    });
}

inline Var sum_all(const Var& a) {
    Tensor out({1}, a.value().sum());
    return detail::make_op(std::move(out), {a}, [](Node& n) {
        Tensor& g = n.parents[0]->grad_buf();
        real d = n.grad[0];
        for (int64_t i = 0; i < g.numel(); ++i) g[i] += d;
    });
}

// Collapse every axis but the first: (B, ...) -> (B,)
inline Var sum_per_sample(const Var& a) {
    const int64_t batch = a.value().dim(0);
    const int64_t per = a.value().numel() / batch;
    Tensor out({batch});
    for (int64_t b = 0; b < batch; ++b) {
        real s = 0;
        for (int64_t i = 0; i < per; ++i) s += a.value()[b * per + i];
        out[b] = s;
    }
    return detail::make_op(std::move(out), {a}, [batch, per](Node& n) {
        Tensor& g = n.parents[0]->grad_buf();
        for (int64_t b = 0; b < batch; ++b)
            for (int64_t i = 0; i < per; ++i) g[b * per + i] += n.grad[b];
    });
}

// ---- linear algebra ---------------------------------------------------------

using EMat = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

// x: (B, in), w: (out, in), b: (out) -> (B, out)
inline Var linear(const Var& x, const Var& w, const Var& b) {
    const int64_t B = x.value().dim(0), in = x.value().dim(1), out_dim = w.value().dim(0);
    if (w.value().dim(1) != in || b.value().dim(0) != out_dim)
        throw std::invalid_argument("linear: shape mismatch");
    Tensor out({B, out_dim});
    ECMap xm(x.value().data(), B, in);
    ECMap wm(w.value().data(), out_dim, in);
    EMap om(out.data(), B, out_dim);
    om.noalias() = xm * wm.transpose();
    for (int64_t r = 0; r < B; ++r)
        for (int64_t c = 0; c < out_dim; ++c) out[r * out_dim + c] += b.value()[c];
    return detail::make_op(std::move(out), {x, w, b}, [B, in, out_dim](Node& n) {
        ECMap gy(n.grad.data(), B, out_dim);
        ECMap xm2(n.parents[0]->value.data(), B, in);
        ECMap wm2(n.parents[1]->value.data(), out_dim, in);
        if (n.parents[0]->requires_grad) {
            EMap gx(n.parents[0]->grad_buf().data(), B, in);
            gx.noalias() += gy * wm2;
        }
        if (n.parents[1]->requires_grad) {
            EMap gw(n.parents[1]->grad_buf().data(), out_dim, in);
            gw.noalias() += gy.transpose() * xm2;
        }
        if (n.parents[2]->requires_grad) {
            Tensor& gb = n.parents[2]->grad_buf();
            for (int64_t r = 0; r < B; ++r)
                for (int64_t c = 0; c < out_dim; ++c) gb[c] += n.grad[r * out_dim + c];
        }
    });
}

} // namespace council
