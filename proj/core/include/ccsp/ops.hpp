#pragma once

#include <utility>
#include <vector>

#include "ccsp/autodiff.hpp"

namespace ccsp {

// Differentiable building blocks. All activation tensors are NCHW; scalars
// are tensors of shape {1}. Constant tensors (targets, masks, grids) are
// captured by value and receive no gradient.

/// y = a + b, elementwise; shapes must match.
Variable add(const Variable& a, const Variable& b);

/// y = c * x.
Variable scale(const Variable& x, double c);

/// Scalar combination sum_i coeff_i * term_i. All terms must be shape {1}.
Variable weighted_sum(const std::vector<std::pair<double, Variable>>& terms);

/// 2-D convolution, zero padding, square kernel, optional channel groups.
/// x: (N, Cin, H, W); w: (Cout, Cin/groups, k, k); b: (Cout).
Variable conv2d(const Variable& x, const Variable& w, const Variable& b, int stride, int pad,
                int groups = 1);

/// Per-sample, per-channel normalization over the spatial dims followed by
/// a learned per-channel affine. Independent of batch composition.
Variable instance_norm(const Variable& x, const Variable& gamma, const Variable& beta,
                       double eps = 1e-5);

Variable silu(const Variable& x);
Variable sigmoid(const Variable& x);
Variable sqrt_op(const Variable& x);

/// y = exp(clamp(x, lo, hi)); gradient is zero outside [lo, hi].
Variable exp_clamp(const Variable& x, double lo, double hi);

/// Hard clip to [0, 1]; pass-through gradient inside the range (inclusive).
Variable clamp01(const Variable& x);

Variable concat_channels(const std::vector<Variable>& parts);

/// Gathers the listed channels into a new tensor (backward scatter-adds).
Variable channel_gather(const Variable& x, std::vector<int> channels);

Variable upsample_nearest2x(const Variable& x);

/// Softmax over consecutive channel blocks of `group_size`, independently at
/// every (n, y, x). Output entries are in (0,1) and each block sums to 1.
Variable group_softmax(const Variable& x, int group_size);

/// Local window aggregation: every output position mixes the k*k spatial
/// neighborhood of `v` (zero padded) with the per-position weight block of
/// its head. weights: (N, heads*k*k, H, W); v: (N, C, H, W), C % heads == 0.
Variable local_weighted_sum(const Variable& v, const Variable& weights, int k, int heads);

/// Scalar sum of mask * (x - target)^2. target/mask are constants shaped
/// like x.
Variable masked_sse(const Variable& x, Tensor target, Tensor mask);

/// Scalar mean of (x - target)^2 over all entries.
Variable mse_mean(const Variable& x, Tensor target);

/// y = a * x + t with constant t of shape x.shape()[1:] broadcast over N.
Variable affine_const(const Variable& x, double a, Tensor t);

/// y = x * m with constant m of shape x.shape()[1:] broadcast over N.
Variable mul_const(const Variable& x, Tensor m);

}  // namespace ccsp
