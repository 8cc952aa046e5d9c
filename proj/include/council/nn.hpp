#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "council/ops.hpp"

namespace council {

// Flat parameter list. Construction order is deterministic, so checkpoints
// serialize parameters positionally with shape checks on load.
class ParamStore {
public:
    Var add(Tensor init) {
        params_.emplace_back(std::move(init), true);
        return params_.back();
    }
    std::vector<Var>& params() { return params_; }
    const std::vector<Var>& params() const { return params_; }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

    int64_t numel() const {
        int64_t n = 0;
        for (const auto& p : params_) n += p.value().numel();
        return n;
    }

    // Order-sensitive checksum of parameter values; used to assert that a
    // step touched (or did not touch) a network.
    double checksum() const {
        double acc = 0;
        int64_t k = 1;
        for (const auto& p : params_)
            for (int64_t i = 0; i < p.value().numel(); ++i, ++k)
                acc += p.value()[i] * std::cos(0.001 * static_cast<double>(k));
        return acc;
    }

private:
    std::vector<Var> params_;
};

namespace init {

// Fan-in scaled normal init.
inline Tensor conv_weight(int64_t out_ch, int64_t in_ch, int64_t k, std::mt19937_64& rng,
                          real scale = 1.0) {
    real std = scale * std::sqrt(2.0 / static_cast<real>(in_ch * k * k));
    return Tensor::randn({out_ch, in_ch, k, k}, rng, std);
}

inline Tensor linear_weight(int64_t out_dim, int64_t in_dim, std::mt19937_64& rng) {
    real std = std::sqrt(2.0 / static_cast<real>(in_dim));
    return Tensor::randn({out_dim, in_dim}, rng, std);
}

} // namespace init

struct Conv2dLayer {
    Var w, b;
    int64_t stride = 1, pad = 0;

    Conv2dLayer() = default;
    Conv2dLayer(ParamStore& ps, int64_t in_ch, int64_t out_ch, int64_t k, int64_t stride_,
                int64_t pad_, std::mt19937_64& rng, real init_scale = 1.0)
        : w(ps.add(init::conv_weight(out_ch, in_ch, k, rng, init_scale))),
          b(ps.add(Tensor::zeros({out_ch}))),
          stride(stride_), pad(pad_) {}

    Var operator()(const Var& x) const { return conv2d(x, w, b, stride, pad); }
};

struct LinearLayer {
    Var w, b;

    LinearLayer() = default;
    LinearLayer(ParamStore& ps, int64_t in_dim, int64_t out_dim, std::mt19937_64& rng)
        : w(ps.add(init::linear_weight(out_dim, in_dim, rng))),
          b(ps.add(Tensor::zeros({out_dim}))) {}

    Var operator()(const Var& x) const { return linear(x, w, b); }
};

// Standard Adam with bias correction; one (m, v) pair per parameter.
class Adam {
public:
    Adam() = default;
    Adam(ParamStore& ps, double beta1, double beta2, double eps = 1e-8)
        : store_(&ps), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (const auto& p : ps.params()) {
            m_.push_back(Tensor::zeros(p.value().shape()));
            v_.push_back(Tensor::zeros(p.value().shape()));
        }
    }

    void step(double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        auto& params = store_->params();
        for (size_t pi = 0; pi < params.size(); ++pi) {
            const Tensor& g = params[pi].grad();
            if (g.numel() == 0) continue; // no gradient flowed this step
            Tensor& value = params[pi].value_mut();
            Tensor& m = m_[pi];
            Tensor& v = v_[pi];
            for (int64_t i = 0; i < value.numel(); ++i) {
                m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
                v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
                value[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
            }
        }
    }

    int64_t step_count() const { return t_; }
    std::vector<Tensor>& moment1() { return m_; }
    std::vector<Tensor>& moment2() { return v_; }
    const std::vector<Tensor>& moment1() const { return m_; }
    const std::vector<Tensor>& moment2() const { return v_; }
    void set_step_count(int64_t t) { t_ = t; }
    double beta1() const { return beta1_; }
    double beta2() const { return beta2_; }

private:
    ParamStore* store_ = nullptr;
    double beta1_ = 0.5, beta2_ = 0.999, eps_ = 1e-8;
    int64_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

} // namespace council
