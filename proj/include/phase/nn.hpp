#pragma once

#include <cstddef>
#include <vector>

#include "phase/tensor.hpp"

namespace phase {

// Building-block layers used by the encoder, ASF, and GTCN head. Every
// forward has an explicit backward taking the cached forward state; gradient
// correctness is enforced against central finite differences in the tests.

// --- 3D convolution, odd kernel, same-size output (zero padding) ---
// x [B,Ci,T,H,W], w [Co,Ci,kt,kh,kw], bias [Co] -> [B,Co,T,H,W]
Tensor conv3d_forward(const Tensor& x, const Tensor& w, const Tensor& bias);
void conv3d_backward(const Tensor& gout, const Tensor& x, const Tensor& w,
                     Tensor& gx, Tensor& gw, Tensor& gbias);

// --- 2D convolution over a batch of frames, same-size output ---
// x [N,Ci,H,W], w [Co,Ci,kh,kw], bias [Co] -> [N,Co,H,W]
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& bias);
void conv2d_backward(const Tensor& gout, const Tensor& x, const Tensor& w,
                     Tensor& gx, Tensor& gw, Tensor& gbias);

// --- causal dilated 1D convolution ---
// x [B,Ci,T], w [Co,Ci,k], bias [Co]; tap j reads x at t-(k-1-j)*d, inputs
// before t=0 are zero, so output at t never sees the future.
Tensor conv1d_causal_forward(const Tensor& x, const Tensor& w, const Tensor& bias,
                             std::size_t dilation);
void conv1d_causal_backward(const Tensor& gout, const Tensor& x, const Tensor& w,
                            std::size_t dilation, Tensor& gx, Tensor& gw, Tensor& gbias);

// --- per-channel normalization over (T,H,W) with learnable scale/shift ---
struct ChanNormCache {
    Tensor xhat;                 // normalized input
    std::vector<double> invstd;  // per (b,c)
};
Tensor chan_norm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                         ChanNormCache& cache, double eps = 1e-5);
void chan_norm_backward(const Tensor& gout, const Tensor& gamma, const ChanNormCache& cache,
                        Tensor& gx, Tensor& ggamma, Tensor& gbeta);

// --- activations (cache the forward output) ---
Tensor tanh_forward(const Tensor& x);
Tensor tanh_backward(const Tensor& gout, const Tensor& y);
Tensor sigmoid_forward(const Tensor& x);
Tensor sigmoid_backward(const Tensor& gout, const Tensor& y);

// --- 2x2 spatial average pooling on [B,C,T,H,W]; H, W must be even ---
Tensor avgpool2_forward(const Tensor& x);
Tensor avgpool2_backward(const Tensor& gout, const std::vector<std::size_t>& x_shape);

// --- row-wise softmax on [N,M] ---
Tensor softmax_rows_forward(const Tensor& x);
Tensor softmax_rows_backward(const Tensor& gout, const Tensor& y);

}  // namespace phase
