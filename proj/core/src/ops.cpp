#include "ccsp/ops.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ccsp {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

void check(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

// Gathers one image's group-slice into a (Cg*k*k) x (Ho*Wo) patch matrix.
void im2col(const double* x, int64_t C, int64_t H, int64_t W, int64_t c0, int64_t Cg, int k,
            int stride, int pad, int64_t Ho, int64_t Wo, double* col) {
    const int64_t plane = H * W;
    for (int64_t ci = 0; ci < Cg; ++ci) {
        const double* src = x + (c0 + ci) * plane;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                double* dst = col + ((ci * k + ky) * k + kx) * (Ho * Wo);
                for (int64_t oy = 0; oy < Ho; ++oy) {
                    const int64_t iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= H) {
                        std::memset(dst + oy * Wo, 0, sizeof(double) * static_cast<size_t>(Wo));
                        continue;
                    }
                    const double* row = src + iy * W;
                    double* out = dst + oy * Wo;
                    for (int64_t ox = 0; ox < Wo; ++ox) {
                        const int64_t ix = ox * stride - pad + kx;
                        out[ox] = (ix >= 0 && ix < W) ? row[ix] : 0.0;
                    }
                }
            }
        }
    }
}

// Scatter-add of a patch matrix back into one image's group-slice.
void col2im_add(const double* col, int64_t C, int64_t H, int64_t W, int64_t c0, int64_t Cg, int k,
                int stride, int pad, int64_t Ho, int64_t Wo, double* dx) {
    const int64_t plane = H * W;
    for (int64_t ci = 0; ci < Cg; ++ci) {
        double* dst = dx + (c0 + ci) * plane;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const double* src = col + ((ci * k + ky) * k + kx) * (Ho * Wo);
                for (int64_t oy = 0; oy < Ho; ++oy) {
                    const int64_t iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= H) continue;
                    double* row = dst + iy * W;
                    const double* in = src + oy * Wo;
                    for (int64_t ox = 0; ox < Wo; ++ox) {
                        const int64_t ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < W) row[ix] += in[ox];
                    }
                }
            }
        }
    }
}

}  // namespace

Variable add(const Variable& a, const Variable& b) {
    check(a.value().same_shape(b.value()),
          "add: shape mismatch " + shape_str(a.value().shape()) + " vs " + shape_str(b.value().shape()));
    Tensor out = a.value();
    out.add_scaled(b.value(), 1.0);
    return make_op(std::move(out), {a, b}, [](Node& self) {
        for (auto& p : self.parents) {
            if (p->requires_grad) p->ensure_grad().add_scaled(self.grad, 1.0);
        }
    });
}

Variable scale(const Variable& x, double c) {
    Tensor out = x.value();
    double* d = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) d[i] *= c;
    return make_op(std::move(out), {x}, [c](Node& self) {
        auto& p = self.parents[0];
        if (p->requires_grad) p->ensure_grad().add_scaled(self.grad, c);
    });
}

Variable weighted_sum(const std::vector<std::pair<double, Variable>>& terms) {
    assert(!terms.empty());
    double total = 0.0;
    std::vector<Variable> parents;
    std::vector<double> coeffs;
    for (const auto& [c, v] : terms) {
        assert(v.value().numel() == 1);
        total += c * v.scalar();
        parents.push_back(v);
        coeffs.push_back(c);
    }
    return make_op(Tensor({1}, total), std::move(parents), [coeffs](Node& self) {
        const double g = self.grad[0];
        for (size_t i = 0; i < self.parents.size(); ++i) {
            auto& p = self.parents[i];
            if (p->requires_grad) p->ensure_grad()[0] += coeffs[i] * g;
        }
    });
}

Variable conv2d(const Variable& x, const Variable& w, const Variable& b, int stride, int pad,
                int groups) {
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    check(xv.rank() == 4, "conv2d: input must be rank 4, got " + shape_str(xv.shape()));
    check(wv.rank() == 4, "conv2d: weight must be rank 4");
    const int64_t N = xv.dim(0), Cin = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
    const int64_t Cout = wv.dim(0), Cg = wv.dim(1);
    const int k = static_cast<int>(wv.dim(2));
    check(wv.dim(2) == wv.dim(3), "conv2d: kernel must be square");
    check(groups >= 1 && Cin % groups == 0 && Cout % groups == 0,
          "conv2d: channel counts not divisible by groups");
    check(Cg == Cin / groups, "conv2d: weight shape " + shape_str(wv.shape()) +
                                  " inconsistent with input channels " + std::to_string(Cin));
    check(b.value().numel() == Cout, "conv2d: bias size mismatch");
    const int64_t Ho = (H + 2 * pad - k) / stride + 1;
    const int64_t Wo = (W + 2 * pad - k) / stride + 1;
    check(Ho >= 1 && Wo >= 1, "conv2d: output would be empty");

    const int64_t Coutg = Cout / groups;
    const int64_t K = Cg * k * k;
    const int64_t HoWo = Ho * Wo;

    Tensor out({N, Cout, Ho, Wo});
#pragma omp parallel
    {
        std::vector<double> col(static_cast<size_t>(K * HoWo));
#pragma omp for schedule(static)
        for (int64_t n = 0; n < N; ++n) {
            for (int g = 0; g < groups; ++g) {
                im2col(xv.data() + n * Cin * H * W, Cin, H, W, g * Cg, Cg, k, stride, pad, Ho, Wo,
                       col.data());
                ConstMatMap Wm(wv.data() + g * Coutg * K, Coutg, K);
                ConstMatMap Cm(col.data(), K, HoWo);
                MatMap Om(out.data() + (n * Cout + g * Coutg) * HoWo, Coutg, HoWo);
                Om.noalias() = Wm * Cm;
                for (int64_t co = 0; co < Coutg; ++co) {
                    Om.row(co).array() += b.value()[g * Coutg + co];
                }
            }
        }
    }

    auto backward = [stride, pad, groups, N, Cin, H, W, Cout, Cg, k, Ho, Wo, Coutg, K,
                     HoWo](Node& self) {
        auto& xn = self.parents[0];
        auto& wn = self.parents[1];
        auto& bn = self.parents[2];
        const Tensor& g_out = self.grad;
        const Tensor& xv = xn->value;
        const Tensor& wv = wn->value;

        if (xn->requires_grad) {
            Tensor& dx = xn->ensure_grad();
#pragma omp parallel
            {
                std::vector<double> gcol(static_cast<size_t>(K * HoWo));
#pragma omp for schedule(static)
                for (int64_t n = 0; n < N; ++n) {
                    for (int g = 0; g < groups; ++g) {
                        ConstMatMap Wm(wv.data() + g * Coutg * K, Coutg, K);
                        ConstMatMap Gm(g_out.data() + (n * Cout + g * Coutg) * HoWo, Coutg, HoWo);
                        MatMap GC(gcol.data(), K, HoWo);
                        GC.noalias() = Wm.transpose() * Gm;
                        col2im_add(gcol.data(), Cin, H, W, g * Cg, Cg, k, stride, pad, Ho, Wo,
                                   dx.data() + n * Cin * H * W);
                    }
                }
            }
        }
        if (wn->requires_grad || bn->requires_grad) {
            // Per-image partials, reduced in index order so results do not
            // depend on thread scheduling.
            const int64_t wn_numel = wv.numel();
            std::vector<double> dw_part(static_cast<size_t>(N * wn_numel), 0.0);
            std::vector<double> db_part(static_cast<size_t>(N * Cout), 0.0);
#pragma omp parallel
            {
                std::vector<double> col(static_cast<size_t>(K * HoWo));
#pragma omp for schedule(static)
                for (int64_t n = 0; n < N; ++n) {
                    for (int g = 0; g < groups; ++g) {
                        im2col(xv.data() + n * Cin * H * W, Cin, H, W, g * Cg, Cg, k, stride, pad,
                               Ho, Wo, col.data());
                        ConstMatMap Cm(col.data(), K, HoWo);
                        ConstMatMap Gm(g_out.data() + (n * Cout + g * Coutg) * HoWo, Coutg, HoWo);
                        MatMap DW(dw_part.data() + n * wn_numel + g * Coutg * K, Coutg, K);
                        DW.noalias() = Gm * Cm.transpose();
                        for (int64_t co = 0; co < Coutg; ++co) {
                            db_part[static_cast<size_t>(n * Cout + g * Coutg + co)] = Gm.row(co).sum();
                        }
                    }
                }
            }
            if (wn->requires_grad) {
                Tensor& dw = wn->ensure_grad();
                for (int64_t n = 0; n < N; ++n) {
                    for (int64_t i = 0; i < wn_numel; ++i) dw[i] += dw_part[static_cast<size_t>(n * wn_numel + i)];
                }
            }
            if (bn->requires_grad) {
                Tensor& db = bn->ensure_grad();
                for (int64_t n = 0; n < N; ++n) {
                    for (int64_t c = 0; c < Cout; ++c) db[c] += db_part[static_cast<size_t>(n * Cout + c)];
                }
            }
        }
    };
    return make_op(std::move(out), {x, w, b}, std::move(backward));
}

Variable instance_norm(const Variable& x, const Variable& gamma, const Variable& beta, double eps) {
    const Tensor& xv = x.value();
    check(xv.rank() == 4, "instance_norm: input must be rank 4");
    const int64_t N = xv.dim(0), C = xv.dim(1), HW = xv.dim(2) * xv.dim(3);
    check(gamma.value().numel() == C && beta.value().numel() == C,
          "instance_norm: affine size mismatch (C=" + std::to_string(C) + ")");

    Tensor out(xv.shape());
    // Cached statistics reused by the backward pass.
    auto mean = std::make_shared<std::vector<double>>(static_cast<size_t>(N * C));
    auto istd = std::make_shared<std::vector<double>>(static_cast<size_t>(N * C));

#pragma omp parallel for schedule(static)
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t c = 0; c < C; ++c) {
            const double* src = xv.data() + (n * C + c) * HW;
            double m = 0.0;
            for (int64_t i = 0; i < HW; ++i) m += src[i];
            m /= static_cast<double>(HW);
            double var = 0.0;
            for (int64_t i = 0; i < HW; ++i) {
                const double d = src[i] - m;
                var += d * d;
            }
            var /= static_cast<double>(HW);
            const double is = 1.0 / std::sqrt(var + eps);
            (*mean)[static_cast<size_t>(n * C + c)] = m;
            (*istd)[static_cast<size_t>(n * C + c)] = is;
            const double gm = gamma.value()[c], bt = beta.value()[c];
            double* dst = out.data() + (n * C + c) * HW;
            for (int64_t i = 0; i < HW; ++i) dst[i] = gm * (src[i] - m) * is + bt;
        }
    }

    auto backward = [N, C, HW, mean, istd](Node& self) {
        auto& xn = self.parents[0];
        auto& gn = self.parents[1];
        auto& bn = self.parents[2];
        const Tensor& g_out = self.grad;
        const Tensor& xv = xn->value;
        const Tensor& gamma = gn->value;

        std::vector<double> dgamma(static_cast<size_t>(C), 0.0), dbeta(static_cast<size_t>(C), 0.0);
        for (int64_t n = 0; n < N; ++n) {
            for (int64_t c = 0; c < C; ++c) {
                const double m = (*mean)[static_cast<size_t>(n * C + c)];
                const double is = (*istd)[static_cast<size_t>(n * C + c)];
                const double* src = xv.data() + (n * C + c) * HW;
                const double* g = g_out.data() + (n * C + c) * HW;
                double sum_g = 0.0, sum_gx = 0.0;
                for (int64_t i = 0; i < HW; ++i) {
                    const double xhat = (src[i] - m) * is;
                    sum_g += g[i];
                    sum_gx += g[i] * xhat;
                }
                dgamma[static_cast<size_t>(c)] += sum_gx;
                dbeta[static_cast<size_t>(c)] += sum_g;
                if (xn->requires_grad) {
                    Tensor& dx = xn->ensure_grad();
                    double* dd = dx.data() + (n * C + c) * HW;
                    const double inv = 1.0 / static_cast<double>(HW);
                    const double k1 = sum_g * inv, k2 = sum_gx * inv;
                    const double gm = gamma[c];
                    for (int64_t i = 0; i < HW; ++i) {
                        const double xhat = (src[i] - m) * is;
                        dd[i] += gm * is * (g[i] - k1 - xhat * k2);
                    }
                }
            }
        }
        if (gn->requires_grad) {
            Tensor& dg = gn->ensure_grad();
            for (int64_t c = 0; c < C; ++c) dg[c] += dgamma[static_cast<size_t>(c)];
        }
        if (bn->requires_grad) {
            Tensor& db = bn->ensure_grad();
            for (int64_t c = 0; c < C; ++c) db[c] += dbeta[static_cast<size_t>(c)];
        }
    };
    return make_op(std::move(out), {x, gamma, beta}, std::move(backward));
}

Variable silu(const Variable& x) {
    const Tensor& xv = x.value();
    Tensor out(xv.shape());
    for (int64_t i = 0; i < xv.numel(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-xv[i]));
        out[i] = xv[i] * s;
    }
    return make_op(std::move(out), {x}, [](Node& self) {
        auto& p = self.parents[0];
        if (!p->requires_grad) return;
        Tensor& dx = p->ensure_grad();
        const Tensor& xv = p->value;
        for (int64_t i = 0; i < xv.numel(); ++i) {
            const double s = 1.0 / (1.0 + std::exp(-xv[i]));
            dx[i] += self.grad[i] * s * (1.0 + xv[i] * (1.0 - s));
        }
    });
}

Variable sigmoid(const Variable& x) {
    const Tensor& xv = x.value();
    Tensor out(xv.shape());
    for (int64_t i = 0; i < xv.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-xv[i]));
    return make_op(std::move(out), {x}, [](Node& self) {
        auto& p = self.parents[0];
        if (!p->requires_grad) return;
        Tensor& dx = p->ensure_grad();
        for (int64_t i = 0; i < self.value.numel(); ++i) {
            const double y = self.value[i];
            dx[i] += self.grad[i] * y * (1.0 - y);
        }
    });
}

Variable sqrt_op(const Variable& x) {
    const Tensor& xv = x.value();
    Tensor out(xv.shape());
    for (int64_t i = 0; i < xv.numel(); ++i) {
        if (xv[i] < 0.0) throw InputError("sqrt_op: negative input");
        out[i] = std::sqrt(xv[i]);
    }
    return make_op(std::move(out), {x}, [](Node& self) {
        auto& p = self.parents[0];
        if (!p->requires_grad) return;
        Tensor& dx = p->ensure_grad();
        for (int64_t i = 0; i < self.value.numel(); ++i) {
            dx[i] += self.grad[i] * 0.5 / std::max(self.value[i], 1e-12);
        }
    });
}

Variable exp_clamp(const Variable& x, double lo, double hi) {
    const Tensor& xv = x.value();
    Tensor out(xv.shape());
    for (int64_t i = 0; i < xv.numel(); ++i) {
        out[i] = std::exp(std::min(hi, std::max(lo, xv[i])));
    }
    return make_op(std::move(out), {x}, [lo, hi](Node& self) {
        auto& p = self.parents[0];
        if (!p->requires_grad) return;
        Tensor& dx = p->ensure_grad();
        const Tensor& xv = p->value;
        for (int64_t i = 0; i < xv.numel(); ++i) {
            if (xv[i] >= lo && xv[i] <= hi) dx[i] += self.grad[i] * self.value[i];
        }
    });
}

Variable clamp01(const Variable& x) {
    const Tensor& xv = x.value();
    Tensor out(xv.shape());
    for (int64_t i = 0; i < xv.numel(); ++i) out[i] = std::min(1.0, std::max(0.0, xv[i]));
    return make_op(std::move(out), {x}, [](Node& self) {
        auto& p = self.parents[0];
        if (!p->requires_grad) return;
        Tensor& dx = p->ensure_grad();
        const Tensor& xv = p->value;
        for (int64_t i = 0; i < xv.numel(); ++i) {
            if (xv[i] >= 0.0 && xv[i] <= 1.0) dx[i] += self.grad[i];
        }
    });
}

Variable concat_channels(const std::vector<Variable>& parts) {
    assert(!parts.empty());
    const Tensor& first = parts[0].value();
    check(first.rank() == 4, "concat_channels: inputs must be rank 4");
    const int64_t N = first.dim(0), H = first.dim(2), W = first.dim(3);
    int64_t Ctot = 0;
    for (const auto& p : parts) {
        check(p.value().dim(0) == N && p.value().dim(2) == H && p.value().dim(3) == W,
              "concat_channels: spatial/batch mismatch");
        Ctot += p.value().dim(1);
    }
    Tensor out({N, Ctot, H, W});
    const int64_t plane = H * W;
    for (int64_t n = 0; n < N; ++n) {
        int64_t c_off = 0;
        for (const auto& p : parts) {
            const int64_t Cp = p.value().dim(1);
            std::memcpy(out.data() + (n * Ctot + c_off) * plane,
                        p.value().data() + n * Cp * plane,
                        sizeof(double) * static_cast<size_t>(Cp * plane));
            c_off += Cp;
        }
    }
    return make_op(std::move(out), parts, [N, plane, Ctot](Node& self) {
        for (int64_t n = 0; n < N; ++n) {
            int64_t c_off = 0;
            for (auto& p : self.parents) {
                const int64_t Cp = p->value.dim(1);
                if (p->requires_grad) {
                    Tensor& dx = p->ensure_grad();
                    const double* g = self.grad.data() + (n * Ctot + c_off) * plane;
                    double* d = dx.data() + n * Cp * plane;
                    for (int64_t i = 0; i < Cp * plane; ++i) d[i] += g[i];
                }
                c_off += Cp;
            }
        }
    });
}

Variable channel_gather(const Variable& x, std::vector<int> channels) {
    const Tensor& xv = x.value();
    check(xv.rank() == 4, "channel_gather: input must be rank 4");
    const int64_t N = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
    const int64_t plane = H * W;
    const int64_t Cs = static_cast<int64_t>(channels.size());
    for (int c : channels) check(c >= 0 && c < C, "channel_gather: index out of range");
    Tensor out({N, Cs, H, W});
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t j = 0; j < Cs; ++j) {
            std::memcpy(out.data() + (n * Cs + j) * plane,
                        xv.data() + (n * C + channels[static_cast<size_t>(j)]) * plane,
                        sizeof(double) * static_cast<size_t>(plane));
        }
    }
    return make_op(std::move(out), {x}, [channels, N, C, Cs, plane](Node& self) {
        auto& p = self.parents[0];
        if (!p->requires_grad) return;
        Tensor& dx = p->ensure_grad();
        for (int64_t n = 0; n < N; ++n) {
            for (int64_t j = 0; j < Cs; ++j) {
                const double* g = self.grad.data() + (n * Cs + j) * plane;
                double* d = dx.data() + (n * C + channels[static_cast<size_t>(j)]) * plane;
                for (int64_t i = 0; i < plane; ++i) d[i] += g[i];
            }
        }
    });
}

Variable upsample_nearest2x(const Variable& x) {
    const Tensor& xv = x.value();
    check(xv.rank() == 4, "upsample_nearest2x: input must be rank 4");
    const int64_t N = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
    Tensor out({N, C, H * 2, W * 2});
    for (int64_t nc = 0; nc < N * C; ++nc) {
        const double* src = xv.data() + nc * H * W;
        double* dst = out.data() + nc * 4 * H * W;
        for (int64_t y = 0; y < H; ++y) {
            for (int64_t x2 = 0; x2 < W; ++x2) {
                const double v = src[y * W + x2];
                double* o = dst + (2 * y) * (2 * W) + 2 * x2;
                o[0] = v;
                o[1] = v;
                o[2 * W] = v;
                o[2 * W + 1] = v;
            }
        }
    }
    return make_op(std::move(out), {x}, [N, C, H, W](Node& self) {
        auto& p = self.parents[0];
        if (!p->requires_grad) return;
        Tensor& dx = p->ensure_grad();
        for (int64_t nc = 0; nc < N * C; ++nc) {
            const double* g = self.grad.data() + nc * 4 * H * W;
            double* d = dx.data() + nc * H * W;
            for (int64_t y = 0; y < H; ++y) {
                for (int64_t x2 = 0; x2 < W; ++x2) {
                    const double* gi = g + (2 * y) * (2 * W) + 2 * x2;
                    d[y * W + x2] += gi[0] + gi[1] + gi[2 * W] + gi[2 * W + 1];
                }
            }
        }
    });
}

Variable group_softmax(const Variable& x, int group_size) {
    const Tensor& xv = x.value();
    check(xv.rank() == 4, "group_softmax: input must be rank 4");
    const int64_t N = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
    check(C % group_size == 0, "group_softmax: channels not divisible by group size");
    const int64_t G = C / group_size;
    const int64_t plane = H * W;
    Tensor out(xv.shape());
#pragma omp parallel for schedule(static)
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t g = 0; g < G; ++g) {
            for (int64_t p = 0; p < plane; ++p) {
                const double* src = xv.data() + (n * C + g * group_size) * plane + p;
                double* dst = out.data() + (n * C + g * group_size) * plane + p;
                double mx = src[0];
                for (int j = 1; j < group_size; ++j) mx = std::max(mx, src[j * plane]);
                double z = 0.0;
                for (int j = 0; j < group_size; ++j) z += std::exp(src[j * plane] - mx);
                for (int j = 0; j < group_size; ++j) dst[j * plane] = std::exp(src[j * plane] - mx) / z;
            }
        }
    }
    return make_op(std::move(out), {x}, [N, C, G, group_size, plane](Node& self) {
        auto& pn = self.parents[0];
        if (!pn->requires_grad) return;
        Tensor& dx = pn->ensure_grad();
#pragma omp parallel for schedule(static)
        for (int64_t n = 0; n < N; ++n) {
            for (int64_t g = 0; g < G; ++g) {
                for (int64_t p = 0; p < plane; ++p) {
                    const double* y = self.value.data() + (n * C + g * group_size) * plane + p;
                    const double* gy = self.grad.data() + (n * C + g * group_size) * plane + p;
                    double* d = dx.data() + (n * C + g * group_size) * plane + p;
                    double dot = 0.0;
                    for (int j = 0; j < group_size; ++j) dot += y[j * plane] * gy[j * plane];
                    for (int j = 0; j < group_size; ++j) {
                        d[j * plane] += y[j * plane] * (gy[j * plane] - dot);
                    }
                }
            }
        }
    });
}

Variable local_weighted_sum(const Variable& v, const Variable& weights, int k, int heads) {
    const Tensor& vv = v.value();
    const Tensor& wv = weights.value();
    check(vv.rank() == 4 && wv.rank() == 4, "local_weighted_sum: inputs must be rank 4");
    const int64_t N = vv.dim(0), C = vv.dim(1), H = vv.dim(2), W = vv.dim(3);
    const int kk = k * k;
    check(C % heads == 0, "local_weighted_sum: channels not divisible by heads");
    check(wv.dim(0) == N && wv.dim(1) == static_cast<int64_t>(heads) * kk && wv.dim(2) == H &&
              wv.dim(3) == W,
          "local_weighted_sum: weight shape mismatch");
    const int64_t Ch = C / heads;
    const int pad = k / 2;
    const int64_t plane = H * W;

    Tensor out({N, C, H, W});
#pragma omp parallel for schedule(static)
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t c = 0; c < C; ++c) {
            const int64_t head = c / Ch;
            const double* vp = vv.data() + (n * C + c) * plane;
            double* op = out.data() + (n * C + c) * plane;
            for (int64_t y = 0; y < H; ++y) {
                for (int64_t x = 0; x < W; ++x) {
                    double acc = 0.0;
                    for (int j = 0; j < kk; ++j) {
                        const int64_t iy = y + j / k - pad;
                        const int64_t ix = x + j % k - pad;
                        if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                        const double wj =
                            wv.data()[((n * heads + head) * kk + j) * plane + y * W + x];
                        acc += wj * vp[iy * W + ix];
                    }
                    op[y * W + x] = acc;
                }
            }
        }
    }

    auto backward = [N, C, H, W, k, kk, heads, Ch, pad, plane](Node& self) {
        auto& vn = self.parents[0];
        auto& wn = self.parents[1];
        const Tensor& vv = vn->value;
        const Tensor& wv = wn->value;
        const Tensor& g = self.grad;
        if (vn->requires_grad) {
            Tensor& dv = vn->ensure_grad();
#pragma omp parallel for schedule(static)
            for (int64_t n = 0; n < N; ++n) {
                for (int64_t c = 0; c < C; ++c) {
                    const int64_t head = c / Ch;
                    const double* gp = g.data() + (n * C + c) * plane;
                    double* dvp = dv.data() + (n * C + c) * plane;
                    for (int64_t y = 0; y < H; ++y) {
                        for (int64_t x = 0; x < W; ++x) {
                            const double gv = gp[y * W + x];
                            for (int j = 0; j < kk; ++j) {
                                const int64_t iy = y + j / k - pad;
                                const int64_t ix = x + j % k - pad;
                                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                                const double wj =
                                    wv.data()[((n * heads + head) * kk + j) * plane + y * W + x];
                                dvp[iy * W + ix] += gv * wj;
                            }
                        }
                    }
                }
            }
        }
        if (wn->requires_grad) {
            Tensor& dw = wn->ensure_grad();
#pragma omp parallel for schedule(static)
            for (int64_t n = 0; n < N; ++n) {
                for (int head = 0; head < heads; ++head) {
                    for (int j = 0; j < kk; ++j) {
                        double* dwp = dw.data() + ((n * heads + head) * kk + j) * plane;
                        for (int64_t y = 0; y < H; ++y) {
                            const int64_t iy = y + j / k - pad;
                            if (iy < 0 || iy >= H) continue;
                            for (int64_t x = 0; x < W; ++x) {
                                const int64_t ix = x + j % k - pad;
                                if (ix < 0 || ix >= W) continue;
                                double acc = 0.0;
                                for (int64_t ci = 0; ci < Ch; ++ci) {
                                    const int64_t c = head * Ch + ci;
                                    acc += g.data()[(n * C + c) * plane + y * W + x] *
                                           vv.data()[(n * C + c) * plane + iy * W + ix];
                                }
                                dwp[y * W + x] += acc;
                            }
                        }
                    }
                }
            }
        }
    };
    return make_op(std::move(out), {v, weights}, std::move(backward));
}

Variable masked_sse(const Variable& x, Tensor target, Tensor mask) {
    const Tensor& xv = x.value();
    if (!xv.same_shape(target) || !xv.same_shape(mask)) {
        throw InputError("masked_sse: shape mismatch, x=" + shape_str(xv.shape()) +
                         " target=" + shape_str(target.shape()) + " mask=" + shape_str(mask.shape()));
    }
    double total = 0.0;
    for (int64_t i = 0; i < xv.numel(); ++i) {
        const double d = xv[i] - target[i];
        total += mask[i] * d * d;
    }
    auto t = std::make_shared<Tensor>(std::move(target));
    auto m = std::make_shared<Tensor>(std::move(mask));
    return make_op(Tensor({1}, total), {x}, [t, m](Node& self) {
        auto& p = self.parents[0];
        if (!p->requires_grad) return;
        Tensor& dx = p->ensure_grad();
        const double g = self.grad[0];
        const Tensor& xv = p->value;
        for (int64_t i = 0; i < xv.numel(); ++i) {
            dx[i] += g * 2.0 * (*m)[i] * (xv[i] - (*t)[i]);
        }
    });
}

Variable mse_mean(const Variable& x, Tensor target) {
    const Tensor& xv = x.value();
    if (!xv.same_shape(target)) {
        throw InputError("mse_mean: shape mismatch " + shape_str(xv.shape()) + " vs " +
                         shape_str(target.shape()));
    }
    const double inv = 1.0 / static_cast<double>(xv.numel());
    double total = 0.0;
    for (int64_t i = 0; i < xv.numel(); ++i) {
        const double d = xv[i] - target[i];
        total += d * d;
    }
    total *= inv;
    auto t = std::make_shared<Tensor>(std::move(target));
    return make_op(Tensor({1}, total), {x}, [t, inv](Node& self) {
        auto& p = self.parents[0];
        if (!p->requires_grad) return;
        Tensor& dx = p->ensure_grad();
        const double g = self.grad[0];
        const Tensor& xv = p->value;
        for (int64_t i = 0; i < xv.numel(); ++i) {
            dx[i] += g * 2.0 * inv * (xv[i] - (*t)[i]);
        }
    });
}

namespace {
int64_t broadcast_stride_check(const Tensor& x, const Tensor& t, const char* opname) {
    if (x.rank() != 4 || t.rank() != 3 || x.dim(1) != t.dim(0) || x.dim(2) != t.dim(1) ||
        x.dim(3) != t.dim(2)) {
        throw InputError(std::string(opname) + ": broadcast shape mismatch, x=" +
                         shape_str(x.shape()) + " const=" + shape_str(t.shape()));
    }
    return t.numel();
}
}  // namespace

Variable affine_const(const Variable& x, double a, Tensor t) {
    const Tensor& xv = x.value();
    const int64_t stride = broadcast_stride_check(xv, t, "affine_const");
    const int64_t N = xv.dim(0);
    Tensor out(xv.shape());
    for (int64_t n = 0; n < N; ++n) {
        const double* src = xv.data() + n * stride;
        double* dst = out.data() + n * stride;
        for (int64_t i = 0; i < stride; ++i) dst[i] = a * src[i] + t[i];
    }
    return make_op(std::move(out), {x}, [a](Node& self) {
        auto& p = self.parents[0];
        if (p->requires_grad) p->ensure_grad().add_scaled(self.grad, a);
    });
}

Variable mul_const(const Variable& x, Tensor m) {
    const Tensor& xv = x.value();
    const int64_t stride = broadcast_stride_check(xv, m, "mul_const");
    const int64_t N = xv.dim(0);
    Tensor out(xv.shape());
    for (int64_t n = 0; n < N; ++n) {
        const double* src = xv.data() + n * stride;
        double* dst = out.data() + n * stride;
        for (int64_t i = 0; i < stride; ++i) dst[i] = src[i] * m[i];
    }
    auto mc = std::make_shared<Tensor>(std::move(m));
    return make_op(std::move(out), {x}, [mc, stride, N](Node& self) {
        auto& p = self.parents[0];
        if (!p->requires_grad) return;
        Tensor& dx = p->ensure_grad();
        for (int64_t n = 0; n < N; ++n) {
            const double* g = self.grad.data() + n * stride;
            double* d = dx.data() + n * stride;
            for (int64_t i = 0; i < stride; ++i) d[i] += g[i] * (*mc)[i];
        }
    });
}

}  // namespace ccsp
