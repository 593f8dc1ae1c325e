#include "phase/asf.hpp"

#include <cmath>
#include <stdexcept>

#include "phase/nn.hpp"

namespace phase {

namespace {

// [B,C,T,H,W] -> [B*T,C,H,W]
Tensor to_frames(const Tensor& x) {
    return x.permute_axes({0, 2, 1, 3, 4})
        .reshape({x.dim(0) * x.dim(2), x.dim(1), x.dim(3), x.dim(4)});
}

// [B*T,C,H,W] -> [B,C,T,H,W]
Tensor from_frames(const Tensor& f, std::size_t B, std::size_t T) {
    return f.reshape({B, T, f.dim(1), f.dim(2), f.dim(3)}).permute_axes({0, 2, 1, 3, 4});
}

}  // namespace

AsfOutput asf_forward(const Tensor& z_in, const AsfParams& params, AsfCache& cache) {
    if (z_in.rank() != 5) throw std::invalid_argument("asf_forward: rank-5 [B,C,T,H,W] required");
    const std::size_t B = z_in.dim(0), C = z_in.dim(1), T = z_in.dim(2), H = z_in.dim(3),
                      W = z_in.dim(4);
    const std::size_t N = B * T, HW = H * W;

    cache.frames = to_frames(z_in);
    const Tensor h1 = conv2d_forward(cache.frames, params.w1, params.b1);
    cache.hidden = tanh_forward(h1);
    const Tensor logits = conv2d_forward(cache.hidden, params.w2, params.b2);
    cache.mask = softmax_rows_forward(logits.reshape({N, HW}));

    AsfOutput out;
    out.z = Tensor({B, C, T});
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < T; ++t) {
            const std::size_t n = b * T + t;
            const double* mp = cache.mask.data() + n * HW;
            for (std::size_t c = 0; c < C; ++c) {
                const double* fp = cache.frames.data() + (n * C + c) * HW;
                double acc = 0.0;
                for (std::size_t s = 0; s < HW; ++s) acc += fp[s] * mp[s];
                out.z[(b * C + c) * T + t] = acc;
            }
        }
    }

    out.v = Tensor::zeros({B, C, T});
    for (std::size_t bc = 0; bc < B * C; ++bc) {
        const double* zp = out.z.data() + bc * T;
        double* vp = out.v.data() + bc * T;
        for (std::size_t t = 1; t < T; ++t) vp[t] = zp[t] - zp[t - 1];
    }

    out.z_cat = Tensor({B, 2 * C, T});
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
            const double* zp = out.z.data() + (b * C + c) * T;
            const double* vp = out.v.data() + (b * C + c) * T;
            double* zc = out.z_cat.data() + (b * 2 * C + c) * T;
            double* vc = out.z_cat.data() + (b * 2 * C + C + c) * T;
            for (std::size_t t = 0; t < T; ++t) {
                zc[t] = zp[t];
                vc[t] = vp[t];
            }
        }
    }

    out.mask = cache.mask.reshape({B, T, 1, H, W}).permute_axes({0, 2, 1, 3, 4});
    cache.out = out;
    cache.valid = true;
    return out;
}

AsfGrads asf_backward(const Tensor& grad_out, const AsfParams& params, const AsfCache& cache) {
    if (!cache.valid) throw std::logic_error("asf_backward: forward cache missing");
    const Tensor& frames = cache.frames;
    const std::size_t N = frames.dim(0), C = frames.dim(1), H = frames.dim(2), W = frames.dim(3);
    const std::size_t B = grad_out.dim(0), T = grad_out.dim(2), HW = H * W;
    if (grad_out.dim(1) != 2 * C || B * T != N) {
        throw std::invalid_argument("asf_backward: grad_out shape mismatch");
    }

    // Split the concat and fold the derivative chain v_t = z_t - z_{t-1}
    // back into a single gradient on z.
    Tensor gz({B, C, T});
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
            const double* gzc = grad_out.data() + (b * 2 * C + c) * T;
            const double* gvc = grad_out.data() + (b * 2 * C + C + c) * T;
            double* gp = gz.data() + (b * C + c) * T;
            for (std::size_t t = 0; t < T; ++t) {
                double g = gzc[t];
                if (t >= 1) g += gvc[t];
                if (t + 1 < T) g -= gvc[t + 1];
                gp[t] = g;
            }
        }
    }

    Tensor gframes = Tensor::zeros(frames.shape());
    Tensor gmask = Tensor::zeros({N, HW});
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < T; ++t) {
            const std::size_t n = b * T + t;
            const double* mp = cache.mask.data() + n * HW;
            double* gmp = gmask.data() + n * HW;
            for (std::size_t c = 0; c < C; ++c) {
                const double g = gz[(b * C + c) * T + t];
                const double* fp = frames.data() + (n * C + c) * HW;
                double* gfp = gframes.data() + (n * C + c) * HW;
                for (std::size_t s = 0; s < HW; ++s) {
                    gfp[s] += g * mp[s];
                    gmp[s] += g * fp[s];
                }
            }
        }
    }

    const Tensor glogits = softmax_rows_backward(gmask, cache.mask).reshape({N, 1, H, W});

    AsfGrads grads;
    Tensor ghidden, gw2, gb2;
    conv2d_backward(glogits, cache.hidden, params.w2, ghidden, gw2, gb2);
    const Tensor gh1 = tanh_backward(ghidden, cache.hidden);
    Tensor gframes_conv, gw1, gb1;
    conv2d_backward(gh1, frames, params.w1, gframes_conv, gw1, gb1);
    for (std::size_t i = 0; i < gframes.numel(); ++i) gframes[i] += gframes_conv[i];

    grads.gz_in = from_frames(gframes, B, T);
    grads.gparams.w1 = gw1;
    grads.gparams.b1 = gb1;
    grads.gparams.w2 = gw2;
    grads.gparams.b2 = gb2;
    return grads;
}

AsfParams asf_init(Rng& rng, std::size_t channels) {
    if (channels < 2) throw std::invalid_argument("asf_init: need at least 2 channels");
    const std::size_t hidden = channels / 2;
    AsfParams p;
    p.w1 = randn(rng, {hidden, channels, 3, 3});
    const double s1 = 1.0 / std::sqrt(static_cast<double>(channels * 9));
    for (std::size_t i = 0; i < p.w1.numel(); ++i) p.w1[i] *= s1;
    p.b1 = Tensor::zeros({hidden});
    p.w2 = randn(rng, {1, hidden, 1, 1});
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (std::size_t i = 0; i < p.w2.numel(); ++i) p.w2[i] *= s2;
    p.b2 = Tensor::zeros({1});
    return p;
}

}  // namespace phase
