#pragma once

// Central finite-difference gradient checker. Test-only: rebuilds the forward
// graph per probe, so keep the closures small.

#include <functional>
#include <vector>

#include "council/autograd.hpp"

namespace gradcheck {

struct Result {
    double max_rel_err = 0;
    int64_t checked = 0;
    bool ok(double rtol) const { return checked > 0 && max_rel_err <= rtol; }
};

// f() must rebuild the graph from the current parameter values and return a
// scalar. Gradients are compared per parameter element against
// (f(x+h) - f(x-h)) / 2h with a relative error normalized by
// max(|analytic|, |numeric|, atol_floor).
inline Result check(const std::function<council::Var()>& f,
                    std::vector<council::Var> params,
                    double h = 1e-4, double atol_floor = 1e-6) {
    for (auto& p : params) p.zero_grad();
    council::Var out = f();
    out.backward();

    std::vector<council::Tensor> analytic;
    for (auto& p : params)
        analytic.push_back(p.grad().numel() ? p.grad() : council::Tensor::zeros(p.shape()));

    Result r;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        council::Tensor& v = params[pi].value_mut();
        for (int64_t i = 0; i < v.numel(); ++i) {
            double orig = v[i];
            v[i] = orig + h;
            double up = f().item();
            v[i] = orig - h;
            double down = f().item();
            v[i] = orig;
            double numeric = (up - down) / (2 * h);
            double a = analytic[pi][i];
            double denom = std::max({std::abs(a), std::abs(numeric), atol_floor});
            r.max_rel_err = std::max(r.max_rel_err, std::abs(a - numeric) / denom);
            ++r.checked;
        }
    }
    return r;
}

} // namespace gradcheck
