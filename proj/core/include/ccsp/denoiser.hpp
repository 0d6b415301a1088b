#pragma once

#include "ccsp/losses.hpp"
#include "ccsp/optimizer.hpp"

namespace ccsp {

struct DenoiserConfig {
    int base_width = 16;
    /// Zero the residual output layer so the network starts as the identity.
    bool identity_init = false;
};

/// 3-level U-shaped restoration network. The final layer predicts a residual
/// added to the input, then the result is clipped to [0,1]; a zeroed output
/// layer therefore yields the exact identity.
struct DenoiserParams {
    DenoiserConfig cfg;
    ConvBlock enc1;   // 3 -> w
    ConvBlock down1;  // w -> w, stride 2
    ConvBlock enc2;   // w -> w
    ConvBlock down2;  // w -> 2w, stride 2
    ConvBlock mid;    // 2w -> 2w
    ConvBlock dec2;   // 3w -> w (upsampled mid + skip)
    ConvBlock dec1;   // 2w -> w (upsampled dec2 + skip)
    Conv2d out;       // 1x1, w -> 3, raw residual

    static DenoiserParams make(const DenoiserConfig& cfg, const std::string& name, uint64_t seed);
    void collect(ParamMap& out) const;
};

/// degraded: (N, 3, H, W) in [0,1], H and W multiples of 4. Output has the
/// same shape with every entry in [0,1].
Variable denoise_forward(const Variable& degraded, const DenoiserParams& params);

/// One SGD step on the restoration loss alone; returns the pre-step loss.
double pretrain_step(const Tensor& degraded, const Tensor& clean, DenoiserParams& params,
                     SgdMomentum& opt);

}  // namespace ccsp
