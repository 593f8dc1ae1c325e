#include "phase/zas.hpp"

#include <cmath>
#include <stdexcept>

namespace phase {

ZasConfig::ZasConfig(double p_, std::size_t b_) : p(p_), b(b_) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("ZasConfig: p must be in (0,1)");
    if (b < 1) throw std::invalid_argument("ZasConfig: b >= 1 required");
}

std::size_t ZasConfig::swapped_channels(std::size_t channels) const {
    return static_cast<std::size_t>(std::floor(p * static_cast<double>(channels)));
}

Tensor zas_forward(const Tensor& x, const ZasConfig& cfg) {
    if (x.rank() != 5) throw std::invalid_argument("zas_forward: rank-5 [B,C,T,H,W] required");
    const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2), H = x.dim(3), W = x.dim(4);
    const std::size_t k = cfg.swapped_channels(C);
    Tensor out = x;  // identity channels and borders copy through
    if (k == 0) return out;

    const std::size_t b = cfg.b;
    const std::size_t H2 = (H / b) * b;
    const std::size_t W2 = (W / b) * b;
    const std::size_t hw = H * W;

    for (std::size_t bi = 0; bi < B; ++bi) {
        for (std::size_t c = C - k; c < C; ++c) {
            for (std::size_t t = 0; t < T; ++t) {
                const std::size_t base = ((bi * C + c) * T + t) * hw;
                const double* src = x.data() + base;
                double* dst = out.data() + base;
                for (std::size_t bh = 0; bh < H2; bh += b) {
                    for (std::size_t bw = 0; bw < W2; bw += b) {
                        for (std::size_t u = 0; u < b; ++u) {
                            for (std::size_t v = 0; v < b; ++v) {
                                dst[(bh + u) * W + (bw + v)] = src[(bh + v) * W + (bw + u)];
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

ZasAudit zas_flop_count(const std::vector<std::size_t>& x_shape, const ZasConfig& cfg) {
    if (x_shape.size() != 5) throw std::invalid_argument("zas_flop_count: rank-5 shape required");
    const std::size_t B = x_shape[0], C = x_shape[1], T = x_shape[2], H = x_shape[3],
                      W = x_shape[4];
    const std::size_t k = cfg.swapped_channels(C);
    const std::size_t H2 = (H / cfg.b) * cfg.b;
    const std::size_t W2 = (W / cfg.b) * cfg.b;
    ZasAudit audit;
    audit.multiply_accumulates = 0;  // the forward path above contains only index moves
    audit.moved_elements = B * k * T * H2 * W2;
    return audit;
}

}  // namespace phase
