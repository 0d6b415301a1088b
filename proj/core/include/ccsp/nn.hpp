#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "ccsp/ops.hpp"

namespace ccsp {

/// Named trainable tensors in a stable order (drives the optimizer,
/// checkpoints and parameter counting).
using ParamMap = std::vector<std::pair<std::string, Variable>>;

int64_t param_count(const ParamMap& params);

/// Seeded centered-uniform fan-in initialization; the stream is derived from
/// (seed, name) so values do not depend on construction order.
Tensor init_weight(const Shape& shape, int64_t fan_in, const std::string& name, uint64_t seed);

struct Conv2d {
    std::string name;
    Variable w, b;
    int stride = 1, pad = 0, groups = 1;

    static Conv2d make(int cin, int cout, int k, int stride, int pad, int groups,
                       const std::string& name, uint64_t seed);
    Variable forward(const Variable& x) const { return conv2d(x, w, b, stride, pad, groups); }
    void collect(ParamMap& out) const;
    int in_channels() const { return static_cast<int>(w.value().dim(1)) * groups; }
    int out_channels() const { return static_cast<int>(w.value().dim(0)); }
    int kernel() const { return static_cast<int>(w.value().dim(2)); }
};

struct Norm {
    std::string name;
    Variable gamma, beta;

    static Norm make(int c, const std::string& name, uint64_t seed);
    Variable forward(const Variable& x) const { return instance_norm(x, gamma, beta); }
    void collect(ParamMap& out) const;
};

/// conv -> per-channel norm -> SiLU (norm and activation optional).
struct ConvBlock {
    Conv2d conv;
    Norm norm;
    bool act = true;
    bool use_norm = true;

    static ConvBlock make(int cin, int cout, int k, int stride, const std::string& name,
                          uint64_t seed, int groups = 1, bool act = true, bool use_norm = true);
    Variable forward(const Variable& x) const;
    void collect(ParamMap& out) const;
};

struct CotConfig {
    int kernel = 3;
    int heads = 1;
    int reduction = 4;
};

/// Contextual attention layer: a grouped k*k conv mines static context, two
/// 1x1 convs turn [static, query] into per-window logits, and a local
/// softmax-weighted sum over the value map adds the dynamic context.
struct CoTParams {
    int kernel = 3;
    int heads = 1;
    ConvBlock key;       // k*k grouped conv, C -> C
    ConvBlock value;     // 1x1, C -> C
    ConvBlock attn_mix;  // 1x1, 2C -> hidden
    Conv2d attn_out;     // 1x1, hidden -> heads * k*k, raw logits

    static CoTParams make(int c, const CotConfig& cfg, const std::string& name, uint64_t seed);
    void collect(ParamMap& out) const;
};

struct CoTOutput {
    Variable features;   // same shape as the input
    Variable attention;  // softmax weights, (N, heads*k*k, H, W)
};

CoTOutput cot_forward_detailed(const Variable& x, const CoTParams& params);
Variable cot_forward(const Variable& x, const CoTParams& params);

/// Residual 1x1 conv, CoT layer, residual 3x3 conv; the block output is the
/// input plus the refined branch, so zeroing the branch gives the identity.
struct CcspParams {
    ConvBlock pre;   // 1x1, C -> C (residual)
    CoTParams cot;
    ConvBlock post;  // 3x3, C -> C (residual)

    static CcspParams make(int c, const CotConfig& cfg, const std::string& name, uint64_t seed);
    void collect(ParamMap& out) const;
};

Variable ccsp_block_forward(const Variable& x, const CcspParams& params);

struct BackboneConfig {
    int c3 = 8;
    int c4 = 16;
    int c5 = 32;
};

/// Strided conv stages tapping feature maps at strides 8, 16 and 32.
struct BackboneParams {
    BackboneConfig cfg;
    ConvBlock stem;  // /2
    ConvBlock s1;    // /4
    ConvBlock s2;    // /8   (tap 0)
    ConvBlock s3;    // /16  (tap 1)
    ConvBlock s4;    // /32  (tap 2)

    static BackboneParams make(const BackboneConfig& cfg, const std::string& name, uint64_t seed);
    void collect(ParamMap& out) const;
};

struct BackboneOutput {
    std::array<Variable, 3> scales;  // strides 8, 16, 32
};

BackboneOutput backbone_forward(const Variable& image, const BackboneParams& params);

/// Top-down/bottom-up fusion where every refinement block is a CCSP block.
struct NeckParams {
    BackboneConfig cfg;
    ConvBlock lat5, fuse4;
    CcspParams ccsp4;
    ConvBlock lat4, fuse3;
    CcspParams ccsp3;
    ConvBlock down3, fuse4b;
    CcspParams ccsp4b;
    ConvBlock down4, fuse5;
    CcspParams ccsp5;

    static NeckParams make(const BackboneConfig& cfg, const CotConfig& cot, const std::string& name,
                           uint64_t seed);
    void collect(ParamMap& out) const;
};

BackboneOutput neck_forward(const BackboneOutput& scales, const NeckParams& params);

}  // namespace ccsp
