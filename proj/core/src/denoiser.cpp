#include "ccsp/denoiser.hpp"

namespace ccsp {

namespace {
constexpr double kResidualGain = 8.0;
}

DenoiserParams DenoiserParams::make(const DenoiserConfig& cfg, const std::string& name,
                                    uint64_t seed) {
    if (cfg.base_width < 1) throw ConfigError("denoiser: base width must be positive");
    const int w = cfg.base_width;
    DenoiserParams p;
    p.cfg = cfg;
    const bool norm = false;  // restoration needs absolute magnitudes
    p.enc1 = ConvBlock::make(3, w, 3, 1, name + ".enc1", seed, 1, true, norm);
    p.down1 = ConvBlock::make(w, w, 3, 2, name + ".down1", seed, 1, true, norm);
    p.enc2 = ConvBlock::make(w, w, 3, 1, name + ".enc2", seed, 1, true, norm);
    p.down2 = ConvBlock::make(w, 2 * w, 3, 2, name + ".down2", seed, 1, true, norm);
    p.mid = ConvBlock::make(2 * w, 2 * w, 3, 1, name + ".mid", seed, 1, true, norm);
    p.dec2 = ConvBlock::make(3 * w, w, 3, 1, name + ".dec2", seed, 1, true, norm);
    p.dec1 = ConvBlock::make(2 * w, w, 3, 1, name + ".dec1", seed, 1, true, norm);
    p.out = Conv2d::make(w + 3, 3, 1, 1, 0, 1, name + ".out", seed);
    // Start the residual near zero so the clamp never saturates at init.
    for (int64_t i = 0; i < p.out.w.value().numel(); ++i) p.out.w.value()[i] *= 0.1 / kResidualGain;
    if (cfg.identity_init) {
        p.out.w.value().zero();
        p.out.b.value().zero();
    }
    return p;
}

void DenoiserParams::collect(ParamMap& out_map) const {
    enc1.collect(out_map);
    down1.collect(out_map);
    enc2.collect(out_map);
    down2.collect(out_map);
    mid.collect(out_map);
    dec2.collect(out_map);
    dec1.collect(out_map);
    out.collect(out_map);
}

Variable denoise_forward(const Variable& degraded, const DenoiserParams& params) {
    const Tensor& x = degraded.value();
    if (x.rank() != 4 || x.dim(1) != 3) {
        throw InputError("denoise_forward: expected (N, 3, H, W), got " + shape_str(x.shape()));
    }
    if (x.dim(2) % 4 != 0 || x.dim(3) % 4 != 0) {
        throw InputError("denoise_forward: H and W must be multiples of 4, got " +
                         std::to_string(x.dim(2)) + "x" + std::to_string(x.dim(3)));
    }
    Variable e1 = params.enc1.forward(degraded);
    Variable e2 = params.enc2.forward(params.down1.forward(e1));
    Variable m = params.mid.forward(params.down2.forward(e2));
    Variable d2 = params.dec2.forward(concat_channels({upsample_nearest2x(m), e2}));
    Variable d1 = params.dec1.forward(concat_channels({upsample_nearest2x(d2), e1}));
    // The residual head also sees the raw input channels.
    Variable residual = scale(params.out.forward(concat_channels({d1, degraded})), kResidualGain);
    return clamp01(add(degraded, residual));
}

double pretrain_step(const Tensor& degraded, const Tensor& clean, DenoiserParams& params,
                     SgdMomentum& opt) {
    if (!degraded.same_shape(clean)) {
        throw InputError("pretrain_step: degraded/clean shape mismatch");
    }
    ParamMap pm;
    params.collect(pm);
    opt.zero_grads(pm);
    Variable restored = denoise_forward(Variable::constant(degraded), params);
    Variable loss = denoise_loss(restored, clean);
    const double value = loss.scalar();
    backward(loss);
    opt.step(pm);
    return value;
}

}  // namespace ccsp
