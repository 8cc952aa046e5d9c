#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace council {

using real = double;

// Dense row-major tensor. Shape is a small vector of extents; data is a flat
// buffer indexed with the usual strides.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int64_t> shape)
        : shape_(std::move(shape)), data_(count(shape_), real(0)) {}
    Tensor(std::vector<int64_t> shape, real fill)
        : shape_(std::move(shape)), data_(count(shape_), fill) {}
    Tensor(std::vector<int64_t> shape, std::vector<real> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<int64_t>(data_.size()) != count(shape_))
            throw std::invalid_argument("Tensor: data size does not match shape");
    }

    static Tensor zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int64_t> shape, real v) { return Tensor(std::move(shape), v); }

    static Tensor randn(std::vector<int64_t> shape, std::mt19937_64& rng, real stddev = 1.0) {
        Tensor t(std::move(shape));
        std::normal_distribution<real> dist(0.0, stddev);
        for (auto& v : t.data_) v = dist(rng);
        return t;
    }

    const std::vector<int64_t>& shape() const { return shape_; }
    int64_t dim(size_t i) const { return shape_.at(i); }
    size_t ndim() const { return shape_.size(); }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }

    real* data() { return data_.data(); }
    const real* data() const { return data_.data(); }
    real& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    real operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(),
                           [](real v) { return std::isfinite(v); });
    }

    real min() const { return *std::min_element(data_.begin(), data_.end()); }
    real max() const { return *std::max_element(data_.begin(), data_.end()); }
    real sum() const { return std::accumulate(data_.begin(), data_.end(), real(0)); }
    real mean() const { return numel() ? sum() / static_cast<real>(numel()) : real(0); }

    void fill(real v) { std::fill(data_.begin(), data_.end(), v); }

    void add_(const Tensor& o) {
        check_same(o);
        for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    }
    void scale_(real s) {
        for (auto& v : data_) v *= s;
    }

    static int64_t count(const std::vector<int64_t>& shape) {
        int64_t n = 1;
        for (int64_t d : shape) {
            if (d < 0) throw std::invalid_argument("Tensor: negative extent");
            n *= d;
        }
        return n;
    }

    static std::string shape_str(const std::vector<int64_t>& shape) {
        std::string s = "(";
        for (size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + ")";
    }

private:
    void check_same(const Tensor& o) const {
        if (!same_shape(o))
            throw std::invalid_argument("Tensor: shape mismatch " + shape_str(shape_) +
                                        " vs " + shape_str(o.shape_));
    }

    std::vector<int64_t> shape_;
    std::vector<real> data_;
};

} // namespace council
