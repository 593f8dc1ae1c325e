#pragma once

#include <cstddef>

#include "phase/tensor.hpp"

namespace phase {

// Zero-FLOPs Axial Swapper: block-wise spatial transpose on the trailing
// floor(p*C) channels, identical for every (batch, channel, time) slice.
struct ZasConfig {
    double p = 0.25;       // swapped-channel fraction, (0,1)
    std::size_t b = 2;     // block size in pixels

    ZasConfig() = default;
    ZasConfig(double p, std::size_t b);
    std::size_t swapped_channels(std::size_t channels) const;
};

// Input must be rank-5 [B,C,T,H,W]. Pure index permutation; self-inverse.
// Border rows/cols outside the floor(H/b)*b x floor(W/b)*b core are copied
// unchanged. The backward pass is the same map applied to the gradient.
Tensor zas_forward(const Tensor& x, const ZasConfig& cfg);

struct ZasAudit {
    std::size_t multiply_accumulates;  // always 0
    std::size_t moved_elements;        // entries whose index changes
};

// Structural audit of the forward path: counts index moves on a shadow pass
// without touching values.
ZasAudit zas_flop_count(const std::vector<std::size_t>& x_shape, const ZasConfig& cfg);

}  // namespace phase
