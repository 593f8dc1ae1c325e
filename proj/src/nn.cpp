#include "phase/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phase {

namespace {

void check_rank(const Tensor& t, std::size_t r, const char* what) {
    if (t.rank() != r) {
        throw std::invalid_argument(std::string(what) + ": expected rank " + std::to_string(r) +
                                    ", got " + t.shape_str());
    }
}

}  // namespace

Tensor conv3d_forward(const Tensor& x, const Tensor& w, const Tensor& bias) {
    check_rank(x, 5, "conv3d");
    check_rank(w, 5, "conv3d weight");
    const std::size_t B = x.dim(0), Ci = x.dim(1), T = x.dim(2), H = x.dim(3), W = x.dim(4);
    const std::size_t Co = w.dim(0), kt = w.dim(2), kh = w.dim(3), kw = w.dim(4);
    if (w.dim(1) != Ci || bias.numel() != Co) {
        throw std::invalid_argument("conv3d: weight/bias shape mismatch");
    }
    const std::size_t pt = kt / 2, ph = kh / 2, pw = kw / 2;
    const std::size_t hw = H * W, thw = T * hw;

    Tensor out({B, Co, T, H, W});
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t co = 0; co < Co; ++co) {
            double* op = out.data() + (b * Co + co) * thw;
            const double bv = bias[co];
            for (std::size_t i = 0; i < thw; ++i) op[i] = bv;
            for (std::size_t ci = 0; ci < Ci; ++ci) {
                const double* xp = x.data() + (b * Ci + ci) * thw;
                const double* wp = w.data() + (co * Ci + ci) * kt * kh * kw;
                for (std::size_t dt = 0; dt < kt; ++dt) {
                    const std::ptrdiff_t ot = static_cast<std::ptrdiff_t>(dt) - static_cast<std::ptrdiff_t>(pt);
                    const std::size_t t0 = ot < 0 ? static_cast<std::size_t>(-ot) : 0;
                    const std::size_t t1 = ot > 0 ? T - static_cast<std::size_t>(ot) : T;
                    for (std::size_t dh = 0; dh < kh; ++dh) {
                        const std::ptrdiff_t oh = static_cast<std::ptrdiff_t>(dh) - static_cast<std::ptrdiff_t>(ph);
                        const std::size_t h0 = oh < 0 ? static_cast<std::size_t>(-oh) : 0;
                        const std::size_t h1 = oh > 0 ? H - static_cast<std::size_t>(oh) : H;
                        for (std::size_t dw = 0; dw < kw; ++dw) {
                            const std::ptrdiff_t ow = static_cast<std::ptrdiff_t>(dw) - static_cast<std::ptrdiff_t>(pw);
                            const std::size_t w0 = ow < 0 ? static_cast<std::size_t>(-ow) : 0;
                            const std::size_t w1 = ow > 0 ? W - static_cast<std::size_t>(ow) : W;
                            const double wv = wp[(dt * kh + dh) * kw + dw];
                            if (wv == 0.0) continue;
                            for (std::size_t t = t0; t < t1; ++t) {
                                const double* xr = xp + (t + ot) * hw + oh * static_cast<std::ptrdiff_t>(W) + ow;
                                double* orow = op + t * hw;
                                for (std::size_t h = h0; h < h1; ++h) {
                                    const double* xs = xr + h * W;
                                    double* os = orow + h * W;
                                    for (std::size_t ww = w0; ww < w1; ++ww) os[ww] += wv * xs[ww];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

void conv3d_backward(const Tensor& gout, const Tensor& x, const Tensor& w,
                     Tensor& gx, Tensor& gw, Tensor& gbias) {
    const std::size_t B = x.dim(0), Ci = x.dim(1), T = x.dim(2), H = x.dim(3), W = x.dim(4);
    const std::size_t Co = w.dim(0), kt = w.dim(2), kh = w.dim(3), kw = w.dim(4);
    const std::size_t pt = kt / 2, ph = kh / 2, pw = kw / 2;
    const std::size_t hw = H * W, thw = T * hw;

    gx = Tensor::zeros(x.shape());
    gw = Tensor::zeros(w.shape());
    gbias = Tensor::zeros({Co});

    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t co = 0; co < Co; ++co) {
            const double* gp = gout.data() + (b * Co + co) * thw;
            double gb = 0.0;
            for (std::size_t i = 0; i < thw; ++i) gb += gp[i];
            gbias[co] += gb;
            for (std::size_t ci = 0; ci < Ci; ++ci) {
                const double* xp = x.data() + (b * Ci + ci) * thw;
                double* gxp = gx.data() + (b * Ci + ci) * thw;
                const double* wp = w.data() + (co * Ci + ci) * kt * kh * kw;
                double* gwp = gw.data() + (co * Ci + ci) * kt * kh * kw;
                for (std::size_t dt = 0; dt < kt; ++dt) {
                    const std::ptrdiff_t ot = static_cast<std::ptrdiff_t>(dt) - static_cast<std::ptrdiff_t>(pt);
                    const std::size_t t0 = ot < 0 ? static_cast<std::size_t>(-ot) : 0;
                    const std::size_t t1 = ot > 0 ? T - static_cast<std::size_t>(ot) : T;
                    for (std::size_t dh = 0; dh < kh; ++dh) {
                        const std::ptrdiff_t oh = static_cast<std::ptrdiff_t>(dh) - static_cast<std::ptrdiff_t>(ph);
                        const std::size_t h0 = oh < 0 ? static_cast<std::size_t>(-oh) : 0;
                        const std::size_t h1 = oh > 0 ? H - static_cast<std::size_t>(oh) : H;
                        for (std::size_t dw = 0; dw < kw; ++dw) {
                            const std::ptrdiff_t ow = static_cast<std::ptrdiff_t>(dw) - static_cast<std::ptrdiff_t>(pw);
                            const std::size_t w0 = ow < 0 ? static_cast<std::size_t>(-ow) : 0;
                            const std::size_t w1 = ow > 0 ? W - static_cast<std::size_t>(ow) : W;
                            const double wv = wp[(dt * kh + dh) * kw + dw];
                            double gwv = 0.0;
                            for (std::size_t t = t0; t < t1; ++t) {
                                const double* xr = xp + (t + ot) * hw + oh * static_cast<std::ptrdiff_t>(W) + ow;
                                double* gxr = gxp + (t + ot) * hw + oh * static_cast<std::ptrdiff_t>(W) + ow;
                                const double* gr = gp + t * hw;
                                for (std::size_t h = h0; h < h1; ++h) {
                                    const double* xs = xr + h * W;
                                    double* gxs = gxr + h * W;
                                    const double* gs = gr + h * W;
                                    for (std::size_t ww = w0; ww < w1; ++ww) {
                                        gwv += xs[ww] * gs[ww];
                                        gxs[ww] += wv * gs[ww];
                                    }
                                }
                            }
                            gwp[(dt * kh + dh) * kw + dw] += gwv;
                        }
                    }
                }
            }
        }
    }
}

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& bias) {
    check_rank(x, 4, "conv2d");
    const std::size_t N = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
    // Reuse the 3D kernel with a singleton temporal axis.
    Tensor x5 = x.reshape({N, Ci, 1, H, W});
    const std::size_t Co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    Tensor w5 = w.reshape({Co, Ci, 1, kh, kw});
    Tensor out = conv3d_forward(x5, w5, bias);
    return out.reshape({N, Co, H, W});
}

void conv2d_backward(const Tensor& gout, const Tensor& x, const Tensor& w,
                     Tensor& gx, Tensor& gw, Tensor& gbias) {
    const std::size_t N = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t Co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    Tensor gx5, gw5;
    conv3d_backward(gout.reshape({N, Co, 1, H, W}), x.reshape({N, Ci, 1, H, W}),
                    w.reshape({Co, Ci, 1, kh, kw}), gx5, gw5, gbias);
    gx = gx5.reshape({N, Ci, H, W});
    gw = gw5.reshape({Co, Ci, kh, kw});
}

Tensor conv1d_causal_forward(const Tensor& x, const Tensor& w, const Tensor& bias,
                             std::size_t dilation) {
    check_rank(x, 3, "conv1d");
    const std::size_t B = x.dim(0), Ci = x.dim(1), T = x.dim(2);
    const std::size_t Co = w.dim(0), k = w.dim(2);
    if (w.dim(1) != Ci || bias.numel() != Co) {
        throw std::invalid_argument("conv1d: weight/bias shape mismatch");
    }
    Tensor out({B, Co, T});
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t co = 0; co < Co; ++co) {
            double* op = out.data() + (b * Co + co) * T;
            for (std::size_t t = 0; t < T; ++t) op[t] = bias[co];
            for (std::size_t ci = 0; ci < Ci; ++ci) {
                const double* xp = x.data() + (b * Ci + ci) * T;
                const double* wp = w.data() + (co * Ci + ci) * k;
                for (std::size_t j = 0; j < k; ++j) {
                    const std::size_t lag = (k - 1 - j) * dilation;
                    const double wv = wp[j];
                    for (std::size_t t = lag; t < T; ++t) op[t] += wv * xp[t - lag];
                }
            }
        }
    }
    return out;
}

void conv1d_causal_backward(const Tensor& gout, const Tensor& x, const Tensor& w,
                            std::size_t dilation, Tensor& gx, Tensor& gw, Tensor& gbias) {
    const std::size_t B = x.dim(0), Ci = x.dim(1), T = x.dim(2);
    const std::size_t Co = w.dim(0), k = w.dim(2);
    gx = Tensor::zeros(x.shape());
    gw = Tensor::zeros(w.shape());
    gbias = Tensor::zeros({Co});
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t co = 0; co < Co; ++co) {
            const double* gp = gout.data() + (b * Co + co) * T;
            double gb = 0.0;
            for (std::size_t t = 0; t < T; ++t) gb += gp[t];
            gbias[co] += gb;
            for (std::size_t ci = 0; ci < Ci; ++ci) {
                const double* xp = x.data() + (b * Ci + ci) * T;
                double* gxp = gx.data() + (b * Ci + ci) * T;
                const double* wp = w.data() + (co * Ci + ci) * k;
                double* gwp = gw.data() + (co * Ci + ci) * k;
                for (std::size_t j = 0; j < k; ++j) {
                    const std::size_t lag = (k - 1 - j) * dilation;
                    const double wv = wp[j];
                    double gwv = 0.0;
                    for (std::size_t t = lag; t < T; ++t) {
                        gwv += xp[t - lag] * gp[t];
                        gxp[t - lag] += wv * gp[t];
                    }
                    gwp[j] += gwv;
                }
            }
        }
    }
}

Tensor chan_norm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                         ChanNormCache& cache, double eps) {
    check_rank(x, 5, "chan_norm");
    const std::size_t B = x.dim(0), C = x.dim(1);
    const std::size_t M = x.dim(2) * x.dim(3) * x.dim(4);
    if (gamma.numel() != C || beta.numel() != C) {
        throw std::invalid_argument("chan_norm: gamma/beta must have C entries");
    }
    cache.xhat = Tensor(x.shape());
    cache.invstd.assign(B * C, 0.0);
    Tensor out(x.shape());
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
            const double* xp = x.data() + (b * C + c) * M;
            double* hp = cache.xhat.data() + (b * C + c) * M;
            double* op = out.data() + (b * C + c) * M;
            double mean = 0.0;
            for (std::size_t i = 0; i < M; ++i) mean += xp[i];
            mean /= static_cast<double>(M);
            double var = 0.0;
            for (std::size_t i = 0; i < M; ++i) {
                const double d = xp[i] - mean;
                var += d * d;
            }
            var /= static_cast<double>(M);
            const double invstd = 1.0 / std::sqrt(var + eps);
            cache.invstd[b * C + c] = invstd;
            const double g = gamma[c], be = beta[c];
            for (std::size_t i = 0; i < M; ++i) {
                hp[i] = (xp[i] - mean) * invstd;
                op[i] = g * hp[i] + be;
            }
        }
    }
    return out;
}

void chan_norm_backward(const Tensor& gout, const Tensor& gamma, const ChanNormCache& cache,
                        Tensor& gx, Tensor& ggamma, Tensor& gbeta) {
    const Tensor& xhat = cache.xhat;
    const std::size_t B = xhat.dim(0), C = xhat.dim(1);
    const std::size_t M = xhat.dim(2) * xhat.dim(3) * xhat.dim(4);
    gx = Tensor::zeros(xhat.shape());
    ggamma = Tensor::zeros({C});
    gbeta = Tensor::zeros({C});
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
            const double* gp = gout.data() + (b * C + c) * M;
            const double* hp = xhat.data() + (b * C + c) * M;
            double* gxp = gx.data() + (b * C + c) * M;
            double sum_g = 0.0, sum_gh = 0.0;
            for (std::size_t i = 0; i < M; ++i) {
                sum_g += gp[i];
                sum_gh += gp[i] * hp[i];
            }
            ggamma[c] += sum_gh;
            gbeta[c] += sum_g;
            const double invstd = cache.invstd[b * C + c];
            const double g = gamma[c];
            const double inv_m = 1.0 / static_cast<double>(M);
            for (std::size_t i = 0; i < M; ++i) {
                gxp[i] = g * invstd * (gp[i] - inv_m * sum_g - inv_m * sum_gh * hp[i]);
            }
        }
    }
}

Tensor tanh_forward(const Tensor& x) { return tanh_t(x); }

Tensor tanh_backward(const Tensor& gout, const Tensor& y) {
    Tensor gx(y.shape());
    for (std::size_t i = 0; i < y.numel(); ++i) gx[i] = gout[i] * (1.0 - y[i] * y[i]);
    return gx;
}

Tensor sigmoid_forward(const Tensor& x) { return sigmoid_t(x); }

Tensor sigmoid_backward(const Tensor& gout, const Tensor& y) {
    Tensor gx(y.shape());
    for (std::size_t i = 0; i < y.numel(); ++i) gx[i] = gout[i] * y[i] * (1.0 - y[i]);
    return gx;
}

Tensor avgpool2_forward(const Tensor& x) {
    check_rank(x, 5, "avgpool2");
    const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2), H = x.dim(3), W = x.dim(4);
    if (H < 2 || W < 2) throw std::invalid_argument("avgpool2: spatial dims must be >= 2");
    if (H % 2 != 0 || W % 2 != 0) throw std::invalid_argument("avgpool2: spatial dims must be even");
    const std::size_t Ho = H / 2, Wo = W / 2;
    Tensor out({B, C, T, Ho, Wo});
    const std::size_t planes = B * C * T;
    for (std::size_t p = 0; p < planes; ++p) {
        const double* xp = x.data() + p * H * W;
        double* op = out.data() + p * Ho * Wo;
        for (std::size_t h = 0; h < Ho; ++h) {
            for (std::size_t w = 0; w < Wo; ++w) {
                const double* r0 = xp + (2 * h) * W + 2 * w;
                const double* r1 = r0 + W;
                op[h * Wo + w] = 0.25 * (r0[0] + r0[1] + r1[0] + r1[1]);
            }
        }
    }
    return out;
}

Tensor avgpool2_backward(const Tensor& gout, const std::vector<std::size_t>& x_shape) {
    const std::size_t H = x_shape[3], W = x_shape[4];
    const std::size_t Ho = H / 2, Wo = W / 2;
    Tensor gx(x_shape);
    const std::size_t planes = x_shape[0] * x_shape[1] * x_shape[2];
    for (std::size_t p = 0; p < planes; ++p) {
        const double* gp = gout.data() + p * Ho * Wo;
        double* gxp = gx.data() + p * H * W;
        for (std::size_t h = 0; h < Ho; ++h) {
            for (std::size_t w = 0; w < Wo; ++w) {
                const double g = 0.25 * gp[h * Wo + w];
                double* r0 = gxp + (2 * h) * W + 2 * w;
                double* r1 = r0 + W;
                r0[0] += g;
                r0[1] += g;
                r1[0] += g;
                r1[1] += g;
            }
        }
    }
    return gx;
}

Tensor softmax_rows_forward(const Tensor& x) {
    check_rank(x, 2, "softmax_rows");
    const std::size_t N = x.dim(0), M = x.dim(1);
    Tensor y(x.shape());
    for (std::size_t n = 0; n < N; ++n) {
        const double* xp = x.data() + n * M;
        double* yp = y.data() + n * M;
        double mx = xp[0];
        for (std::size_t i = 1; i < M; ++i) mx = std::max(mx, xp[i]);
        double z = 0.0;
        for (std::size_t i = 0; i < M; ++i) {
            yp[i] = std::exp(xp[i] - mx);
            z += yp[i];
        }
        const double inv = 1.0 / z;
        for (std::size_t i = 0; i < M; ++i) yp[i] *= inv;
    }
    return y;
}

Tensor softmax_rows_backward(const Tensor& gout, const Tensor& y) {
    const std::size_t N = y.dim(0), M = y.dim(1);
    Tensor gx(y.shape());
    for (std::size_t n = 0; n < N; ++n) {
        const double* gp = gout.data() + n * M;
        const double* yp = y.data() + n * M;
        double* gxp = gx.data() + n * M;
        double dot = 0.0;
        for (std::size_t i = 0; i < M; ++i) dot += gp[i] * yp[i];
        for (std::size_t i = 0; i < M; ++i) gxp[i] = yp[i] * (gp[i] - dot);
    }
    return gx;
}

}  // namespace phase
