#pragma once

// Straight-loop reference implementations used as independent oracles. These
// deliberately avoid the library's op kernels: plain convolution loops,
// per-window softmax, explicit neighborhood unfolding.

#include <cmath>

#include "ccsp/nn.hpp"

namespace testutil {

inline ccsp::Tensor naive_conv2d(const ccsp::Tensor& x, const ccsp::Tensor& w,
                                 const ccsp::Tensor& b, int stride, int pad, int groups) {
    const int64_t N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t Cout = w.dim(0), Cg = w.dim(1);
    const int k = static_cast<int>(w.dim(2));
    const int64_t Ho = (H + 2 * pad - k) / stride + 1;
    const int64_t Wo = (W + 2 * pad - k) / stride + 1;
    const int64_t Coutg = Cout / groups;
    ccsp::Tensor out({N, Cout, Ho, Wo});
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t co = 0; co < Cout; ++co) {
            const int64_t g = co / Coutg;
            for (int64_t oy = 0; oy < Ho; ++oy) {
                for (int64_t ox = 0; ox < Wo; ++ox) {
                    double acc = b[co];
                    for (int64_t ci = 0; ci < Cg; ++ci) {
                        for (int ky = 0; ky < k; ++ky) {
                            for (int kx = 0; kx < k; ++kx) {
                                const int64_t iy = oy * stride - pad + ky;
                                const int64_t ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                                acc += w.at(co, ci, ky, kx) * x.at(n, g * Cg + ci, iy, ix);
                            }
                        }
                    }
                    out.at(n, co, oy, ox) = acc;
                }
            }
        }
    }
    return out;
}

inline ccsp::Tensor naive_instance_norm(const ccsp::Tensor& x, const ccsp::Tensor& gamma,
                                        const ccsp::Tensor& beta, double eps = 1e-5) {
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    ccsp::Tensor out(x.shape());
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t c = 0; c < C; ++c) {
            double mean = 0.0;
            for (int64_t h = 0; h < H; ++h)
                for (int64_t w2 = 0; w2 < W; ++w2) mean += x.at(n, c, h, w2);
            mean /= static_cast<double>(H * W);
            double var = 0.0;
            for (int64_t h = 0; h < H; ++h)
                for (int64_t w2 = 0; w2 < W; ++w2) {
                    const double d = x.at(n, c, h, w2) - mean;
                    var += d * d;
                }
            var /= static_cast<double>(H * W);
            for (int64_t h = 0; h < H; ++h)
                for (int64_t w2 = 0; w2 < W; ++w2) {
                    out.at(n, c, h, w2) =
                        gamma[c] * (x.at(n, c, h, w2) - mean) / std::sqrt(var + eps) + beta[c];
                }
        }
    }
    return out;
}

inline ccsp::Tensor naive_silu(const ccsp::Tensor& x) {
    ccsp::Tensor out(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) out[i] = x[i] / (1.0 + std::exp(-x[i]));
    return out;
}

inline ccsp::Tensor naive_conv_block(const ccsp::Tensor& x, const ccsp::ConvBlock& cb) {
    ccsp::Tensor y = naive_conv2d(x, cb.conv.w.value(), cb.conv.b.value(), cb.conv.stride,
                                  cb.conv.pad, cb.conv.groups);
    y = naive_instance_norm(y, cb.norm.gamma.value(), cb.norm.beta.value());
    return cb.act ? naive_silu(y) : y;
}

/// Whole contextual layer recomputed with explicit per-window unfolding:
/// for every output position the k*k logits are softmax-normalized and the
/// zero-padded value neighborhood is summed with those weights.
inline ccsp::Tensor naive_cot_forward(const ccsp::Tensor& x, const ccsp::CoTParams& p) {
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int k = p.kernel;
    const int kk = k * k;
    const int pad = k / 2;
    const int64_t Ch = C / p.heads;

    ccsp::Tensor k1 = naive_conv_block(x, p.key);
    ccsp::Tensor v = naive_conv_block(x, p.value);

    ccsp::Tensor cat({N, 2 * C, H, W});
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t c = 0; c < C; ++c)
            for (int64_t h = 0; h < H; ++h)
                for (int64_t w2 = 0; w2 < W; ++w2) {
                    cat.at(n, c, h, w2) = k1.at(n, c, h, w2);
                    cat.at(n, C + c, h, w2) = x.at(n, c, h, w2);
                }
    }
    ccsp::Tensor logits = naive_conv2d(naive_conv_block(cat, p.attn_mix), p.attn_out.w.value(),
                                       p.attn_out.b.value(), 1, 0, 1);

    ccsp::Tensor out(x.shape());
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t c = 0; c < C; ++c) {
            const int64_t head = c / Ch;
            for (int64_t y = 0; y < H; ++y) {
                for (int64_t w2 = 0; w2 < W; ++w2) {
                    // Softmax over this window's logits.
                    std::vector<double> lw(static_cast<size_t>(kk));
                    double mx = -1e300;
                    for (int j = 0; j < kk; ++j) {
                        lw[static_cast<size_t>(j)] = logits.at(n, head * kk + j, y, w2);
                        mx = std::max(mx, lw[static_cast<size_t>(j)]);
                    }
                    double z = 0.0;
                    for (int j = 0; j < kk; ++j) {
                        lw[static_cast<size_t>(j)] = std::exp(lw[static_cast<size_t>(j)] - mx);
                        z += lw[static_cast<size_t>(j)];
                    }
                    double acc = 0.0;
                    for (int j = 0; j < kk; ++j) {
                        const int64_t iy = y + j / k - pad;
                        const int64_t ix = w2 + j % k - pad;
                        if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;  // zero-padded V
                        acc += (lw[static_cast<size_t>(j)] / z) * v.at(n, c, iy, ix);
                    }
                    out.at(n, c, y, w2) = k1.at(n, c, y, w2) + acc;
                }
            }
        }
    }
    return out;
}

}  // namespace testutil
