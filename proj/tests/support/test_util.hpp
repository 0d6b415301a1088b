#pragma once

#include <string>

#include "ccsp/nn.hpp"

namespace testutil {

inline ccsp::Tensor rand_tensor(const ccsp::Shape& shape, uint64_t seed, double lo = -1.0,
                                double hi = 1.0) {
    ccsp::Tensor t(shape);
    ccsp::Rng rng(ccsp::splitmix64(seed));
    t.fill_uniform(rng, lo, hi);
    return t;
}

inline void zero_params(ccsp::ParamMap& params) {
    for (auto& [name, v] : params) v.value().zero();
}

struct GradCheckResult {
    double max_rel_err = 0.0;
    int64_t checked = 0;
    std::string worst;
};

/// Central finite differences against reverse-mode gradients for every entry
/// of every tensor in `params`. `loss_fn` must rebuild the graph from the
/// current parameter values and return the scalar loss.
template <typename LossFn>
GradCheckResult check_gradients(ccsp::ParamMap& params, LossFn&& loss_fn, double step = 1e-4,
                                int64_t stride = 1) {
    using ccsp::Tensor;
    for (auto& [name, v] : params) v.zero_grad();
    ccsp::Variable loss = loss_fn();
    ccsp::backward(loss);

    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (auto& [name, v] : params) analytic.push_back(v.grad());

    GradCheckResult res;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& [name, v] = params[pi];
        Tensor& value = v.value();
        for (int64_t i = 0; i < value.numel(); i += stride) {
            const double saved = value[i];
            value[i] = saved + step;
            const double up = loss_fn().scalar();
            value[i] = saved - step;
            const double down = loss_fn().scalar();
            value[i] = saved;
            const double fd = (up - down) / (2.0 * step);
            const double ad = analytic[pi][i];
            const double denom = std::max({std::abs(fd), std::abs(ad), 1e-4});
            const double rel = std::abs(fd - ad) / denom;
            ++res.checked;
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst = name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return res;
}

}  // namespace testutil
