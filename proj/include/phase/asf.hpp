#pragma once

#include <cstddef>

#include "phase/tensor.hpp"

namespace phase {

// Adaptive Spatial Filter: per-frame spatial logits from a small conv net
// (3x3 -> tanh -> 1x1), spatial softmax mask, weighted aggregation, first
// order temporal derivative, and [z, v] channel concatenation.
struct AsfParams {
    Tensor w1;   // [C'/2, C', 3, 3]
    Tensor b1;   // [C'/2]
    Tensor w2;   // [1, C'/2, 1, 1]
    Tensor b2;   // [1]
};

struct AsfOutput {
    Tensor z;       // [B, C', T]
    Tensor v;       // [B, C', T], v at t=0 zero-padded
    Tensor z_cat;   // [B, 2C', T]
    Tensor mask;    // [B, 1, T, H, W], each frame sums to 1
};

struct AsfCache {
    Tensor frames;   // [B*T, C', H, W] view of the input
    Tensor hidden;   // tanh output of the first conv
    Tensor mask;     // [B*T, H*W]
    AsfOutput out;
    bool valid = false;
};

AsfOutput asf_forward(const Tensor& z_in, const AsfParams& params, AsfCache& cache);

struct AsfGrads {
    Tensor gz_in;
    AsfParams gparams;
};

// grad_out is the gradient of the loss w.r.t. z_cat [B, 2C', T].
AsfGrads asf_backward(const Tensor& grad_out, const AsfParams& params, const AsfCache& cache);

AsfParams asf_init(Rng& rng, std::size_t channels);

}  // namespace phase
