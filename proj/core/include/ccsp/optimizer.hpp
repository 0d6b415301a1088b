#pragma once

#include <cmath>
#include <unordered_map>

#include "ccsp/nn.hpp"

namespace ccsp {

/// Plain SGD with momentum; velocity buffers are keyed by parameter name so
/// they survive checkpointing. Optional global gradient-norm clipping and
/// per-name-prefix learning-rate scales.
struct SgdMomentum {
    double lr = 0.01;
    double momentum = 0.9;
    double clip_norm = 0.0;  // 0 disables clipping
    std::vector<std::pair<std::string, double>> prefix_lr_scale;
    std::unordered_map<std::string, Tensor> velocity;

    void zero_grads(ParamMap& params) {
        for (auto& [name, v] : params) v.zero_grad();
    }

    double grad_norm(ParamMap& params) const {
        double sq = 0.0;
        for (auto& [name, v] : params) {
            if (!v.has_grad()) continue;
            const Tensor& g = v.grad();
            for (int64_t i = 0; i < g.numel(); ++i) sq += g[i] * g[i];
        }
        return std::sqrt(sq);
    }

    double scale_for(const std::string& name) const {
        for (const auto& [prefix, s] : prefix_lr_scale) {
            if (name.rfind(prefix, 0) == 0) return s;
        }
        return 1.0;
    }

    void step(ParamMap& params) {
        double clip_factor = 1.0;
        if (clip_norm > 0.0) {
            const double norm = grad_norm(params);
            if (norm > clip_norm) clip_factor = clip_norm / norm;
        }
        for (auto& [name, v] : params) {
            if (!v.has_grad()) continue;
            Tensor& vel = velocity.try_emplace(name, Tensor::zeros(v.value().shape())).first->second;
            const Tensor& g = v.grad();
            Tensor& val = v.value();
            const double step_lr = lr * scale_for(name);
            for (int64_t i = 0; i < val.numel(); ++i) {
                vel[i] = momentum * vel[i] + clip_factor * g[i];
                val[i] -= step_lr * vel[i];
            }
        }
    }
};

}  // namespace ccsp
