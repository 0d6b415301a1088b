#include "ccsp/nn.hpp"

#include <cmath>

namespace ccsp {

int64_t param_count(const ParamMap& params) {
    int64_t n = 0;
    for (const auto& [name, v] : params) n += v.value().numel();
    return n;
}

Tensor init_weight(const Shape& shape, int64_t fan_in, const std::string& name, uint64_t seed) {
    Tensor t(shape);
    Rng rng(mix_seed(seed, name));
    const double a = std::sqrt(6.0 / static_cast<double>(std::max<int64_t>(fan_in, 1)));
    t.fill_uniform(rng, -a, a);
    return t;
}

Conv2d Conv2d::make(int cin, int cout, int k, int stride, int pad, int groups,
                    const std::string& name, uint64_t seed) {
    if (cin % groups != 0 || cout % groups != 0) {
        throw ConfigError("conv " + name + ": channels not divisible by groups");
    }
    Conv2d c;
    c.name = name;
    c.stride = stride;
    c.pad = pad;
    c.groups = groups;
    const int64_t fan_in = static_cast<int64_t>(cin / groups) * k * k;
    c.w = Variable::param(init_weight({cout, cin / groups, k, k}, fan_in, name + ".w", seed));
    c.b = Variable::param(Tensor({static_cast<int64_t>(cout)}));
    return c;
}

void Conv2d::collect(ParamMap& out) const {
    out.emplace_back(name + ".w", w);
    out.emplace_back(name + ".b", b);
}

Norm Norm::make(int c, const std::string& name, uint64_t seed) {
    (void)seed;
    Norm n;
    n.name = name;
    n.gamma = Variable::param(Tensor({static_cast<int64_t>(c)}, 1.0));
    n.beta = Variable::param(Tensor({static_cast<int64_t>(c)}));
    return n;
}

void Norm::collect(ParamMap& out) const {
    out.emplace_back(name + ".gamma", gamma);
    out.emplace_back(name + ".beta", beta);
}

ConvBlock ConvBlock::make(int cin, int cout, int k, int stride, const std::string& name,
                          uint64_t seed, int groups, bool act, bool use_norm) {
    ConvBlock b;
    b.conv = Conv2d::make(cin, cout, k, stride, k / 2, groups, name + ".conv", seed);
    b.use_norm = use_norm;
    if (use_norm) b.norm = Norm::make(cout, name + ".norm", seed);
    b.act = act;
    return b;
}

Variable ConvBlock::forward(const Variable& x) const {
    Variable y = conv.forward(x);
    if (use_norm) y = norm.forward(y);
    return act ? silu(y) : y;
}

void ConvBlock::collect(ParamMap& out) const {
    conv.collect(out);
    if (use_norm) norm.collect(out);
}

CoTParams CoTParams::make(int c, const CotConfig& cfg, const std::string& name, uint64_t seed) {
    if (cfg.kernel % 2 == 0 || cfg.kernel < 1) {
        throw ConfigError("cot " + name + ": kernel must be odd, got " + std::to_string(cfg.kernel));
    }
    if (cfg.heads < 1 || c % cfg.heads != 0) {
        throw ConfigError("cot " + name + ": channels " + std::to_string(c) +
                          " not divisible by heads " + std::to_string(cfg.heads));
    }
    CoTParams p;
    p.kernel = cfg.kernel;
    p.heads = cfg.heads;
    const int hidden = std::max(1, 2 * c / std::max(1, cfg.reduction));
    p.key = ConvBlock::make(c, c, cfg.kernel, 1, name + ".key", seed, cfg.heads);
    p.value = ConvBlock::make(c, c, 1, 1, name + ".value", seed);
    p.attn_mix = ConvBlock::make(2 * c, hidden, 1, 1, name + ".attn_mix", seed);
    p.attn_out = Conv2d::make(hidden, cfg.heads * cfg.kernel * cfg.kernel, 1, 1, 0, 1,
                              name + ".attn_out", seed);
    return p;
}

void CoTParams::collect(ParamMap& out) const {
    key.collect(out);
    value.collect(out);
    attn_mix.collect(out);
    attn_out.collect(out);
}

CoTOutput cot_forward_detailed(const Variable& x, const CoTParams& params) {
    const int64_t c = x.value().dim(1);
    if (c != params.key.conv.in_channels()) {
        throw ConfigError("cot_forward: input has " + std::to_string(c) + " channels, params expect " +
                          std::to_string(params.key.conv.in_channels()));
    }
    // Static context from the grouped k*k conv over the keys (K = x).
    Variable k1 = params.key.forward(x);
    Variable v = params.value.forward(x);
    // Window logits from [K1, Q] through the two 1x1 convs; raw at the end
    // so the softmax sees unsquashed values.
    Variable logits = params.attn_out.forward(params.attn_mix.forward(concat_channels({k1, x})));
    Variable attn = group_softmax(logits, params.kernel * params.kernel);
    Variable k2 = local_weighted_sum(v, attn, params.kernel, params.heads);
    return {add(k1, k2), attn};
}

Variable cot_forward(const Variable& x, const CoTParams& params) {
    return cot_forward_detailed(x, params).features;
}

CcspParams CcspParams::make(int c, const CotConfig& cfg, const std::string& name, uint64_t seed) {
    CcspParams p;
    p.pre = ConvBlock::make(c, c, 1, 1, name + ".pre", seed);
    p.cot = CoTParams::make(c, cfg, name + ".cot", seed);
    p.post = ConvBlock::make(c, c, 3, 1, name + ".post", seed);
    return p;
}

void CcspParams::collect(ParamMap& out) const {
    pre.collect(out);
    cot.collect(out);
    post.collect(out);
}

Variable ccsp_block_forward(const Variable& x, const CcspParams& params) {
    if (x.value().dim(1) != params.pre.conv.in_channels()) {
        throw ConfigError("ccsp_block_forward: channel mismatch, input " +
                          std::to_string(x.value().dim(1)) + " vs params " +
                          std::to_string(params.pre.conv.in_channels()));
    }
    Variable x1 = add(x, params.pre.forward(x));
    Variable x2 = cot_forward(x1, params.cot);
    Variable x3 = add(x2, params.post.forward(x2));
    return add(x, x3);
}

BackboneParams BackboneParams::make(const BackboneConfig& cfg, const std::string& name,
                                    uint64_t seed) {
    BackboneParams p;
    p.cfg = cfg;
    p.stem = ConvBlock::make(3, cfg.c3, 3, 2, name + ".stem", seed);
    p.s1 = ConvBlock::make(cfg.c3, cfg.c3, 3, 2, name + ".s1", seed);
    p.s2 = ConvBlock::make(cfg.c3, cfg.c3, 3, 2, name + ".s2", seed);
    p.s3 = ConvBlock::make(cfg.c3, cfg.c4, 3, 2, name + ".s3", seed);
    p.s4 = ConvBlock::make(cfg.c4, cfg.c5, 3, 2, name + ".s4", seed);
    return p;
}

void BackboneParams::collect(ParamMap& out) const {
    stem.collect(out);
    s1.collect(out);
    s2.collect(out);
    s3.collect(out);
    s4.collect(out);
}

BackboneOutput backbone_forward(const Variable& image, const BackboneParams& params) {
    const Tensor& img = image.value();
    if (img.rank() != 4) throw InputError("backbone_forward: input must be rank 4");
    if (img.dim(2) % 32 != 0 || img.dim(3) % 32 != 0) {
        throw InputError("backbone_forward: spatial dims must be multiples of 32, got " +
                         std::to_string(img.dim(2)) + "x" + std::to_string(img.dim(3)));
    }
    Variable x = params.stem.forward(image);
    x = params.s1.forward(x);
    Variable c3 = params.s2.forward(x);
    Variable c4 = params.s3.forward(c3);
    Variable c5 = params.s4.forward(c4);
    return {{c3, c4, c5}};
}

NeckParams NeckParams::make(const BackboneConfig& cfg, const CotConfig& cot, const std::string& name,
                            uint64_t seed) {
    NeckParams p;
    p.cfg = cfg;
    p.lat5 = ConvBlock::make(cfg.c5, cfg.c4, 1, 1, name + ".lat5", seed);
    p.fuse4 = ConvBlock::make(2 * cfg.c4, cfg.c4, 1, 1, name + ".fuse4", seed);
    p.ccsp4 = CcspParams::make(cfg.c4, cot, name + ".ccsp4", seed);
    p.lat4 = ConvBlock::make(cfg.c4, cfg.c3, 1, 1, name + ".lat4", seed);
    p.fuse3 = ConvBlock::make(2 * cfg.c3, cfg.c3, 1, 1, name + ".fuse3", seed);
    p.ccsp3 = CcspParams::make(cfg.c3, cot, name + ".ccsp3", seed);
    p.down3 = ConvBlock::make(cfg.c3, cfg.c4, 3, 2, name + ".down3", seed);
    p.fuse4b = ConvBlock::make(2 * cfg.c4, cfg.c4, 1, 1, name + ".fuse4b", seed);
    p.ccsp4b = CcspParams::make(cfg.c4, cot, name + ".ccsp4b", seed);
    p.down4 = ConvBlock::make(cfg.c4, cfg.c5, 3, 2, name + ".down4", seed);
    p.fuse5 = ConvBlock::make(2 * cfg.c5, cfg.c5, 1, 1, name + ".fuse5", seed);
    p.ccsp5 = CcspParams::make(cfg.c5, cot, name + ".ccsp5", seed);
    return p;
}

void NeckParams::collect(ParamMap& out) const {
    lat5.collect(out);
    fuse4.collect(out);
    ccsp4.collect(out);
    lat4.collect(out);
    fuse3.collect(out);
    ccsp3.collect(out);
    down3.collect(out);
    fuse4b.collect(out);
    ccsp4b.collect(out);
    down4.collect(out);
    fuse5.collect(out);
    ccsp5.collect(out);
}

BackboneOutput neck_forward(const BackboneOutput& scales, const NeckParams& params) {
    const Variable& c3 = scales.scales[0];
    const Variable& c4 = scales.scales[1];
    const Variable& c5 = scales.scales[2];
    if (c3.value().dim(1) != params.cfg.c3 || c4.value().dim(1) != params.cfg.c4 ||
        c5.value().dim(1) != params.cfg.c5) {
        throw ConfigError("neck_forward: scale channel widths do not match params");
    }

    // Top-down path.
    Variable p4 = ccsp_block_forward(
        params.fuse4.forward(concat_channels({upsample_nearest2x(params.lat5.forward(c5)), c4})),
        params.ccsp4);
    Variable p3 = ccsp_block_forward(
        params.fuse3.forward(concat_channels({upsample_nearest2x(params.lat4.forward(p4)), c3})),
        params.ccsp3);

    // Bottom-up path.
    Variable n4 = ccsp_block_forward(
        params.fuse4b.forward(concat_channels({params.down3.forward(p3), p4})), params.ccsp4b);
    Variable n5 = ccsp_block_forward(
        params.fuse5.forward(concat_channels({params.down4.forward(n4), c5})), params.ccsp5);

    return {{p3, n4, n5}};
}

}  // namespace ccsp
