#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "phase/asf.hpp"
#include "phase/nn.hpp"
#include "phase/tensor.hpp"
#include "phase/zas.hpp"

namespace phase {

struct ModelConfig {
    std::size_t in_channels = 3;
    std::vector<std::size_t> est_channels = {16, 32, 64};
    ZasConfig zas{0.25, 2};
    bool asf_enabled = true;
    bool est_norm = true;
    std::size_t tcn_layers = 3;
    std::size_t tcn_channels = 64;
    std::size_t tcn_kernel = 3;
    std::size_t dilation_base = 2;
    std::size_t T = 128, H = 128, W = 128;

    static ModelConfig paper();   // T=128, 128x128, channels {16,32,64}
    static ModelConfig mini();    // T=64, 32x32, channels {8,16,32}

    // Receptive field of the TCN head along time.
    std::size_t receptive_field() const;
    void validate() const;
};

// Flat registry of named learnable arrays with parallel gradients.
class ParamStore {
public:
    std::size_t add(const std::string& name, Tensor init);
    std::size_t index_of(const std::string& name) const;
    bool has(const std::string& name) const;

    Tensor& value(std::size_t idx) { return entries_[idx].value; }
    const Tensor& value(std::size_t idx) const { return entries_[idx].value; }
    Tensor& grad(std::size_t idx) { return entries_[idx].grad; }
    Tensor& value(const std::string& name) { return entries_[index_of(name)].value; }
    Tensor& grad(const std::string& name) { return entries_[index_of(name)].grad; }

    std::size_t size() const { return entries_.size(); }
    const std::string& name(std::size_t idx) const { return entries_[idx].name; }
    std::size_t total_params() const;
    void zero_grads();

private:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor grad;
    };
    std::vector<Entry> entries_;
};

// Analytic parameter count for a config; must equal the live registry.
std::size_t count_params(const ModelConfig& cfg);

// One Efficient Spatio-Temporal Block: conv3d 3x3x3 (same padding) ->
// optional per-channel norm -> tanh -> ZAS -> 2x2 spatial average pool.
struct EstBlockParams {
    const Tensor* w;
    const Tensor* bias;
    const Tensor* gamma;  // nullptr disables normalization
    const Tensor* beta;
};
Tensor est_block_forward(const Tensor& x, const EstBlockParams& p, const ZasConfig& zas);

// One gated TCN layer: tanh(conv_f(s)) * sigmoid(conv_g(s)) + s.
Tensor gtcn_layer_forward(const Tensor& s, const Tensor& wf, const Tensor& bf,
                          const Tensor& wg, const Tensor& bg, std::size_t dilation);

class PhaseNet {
public:
    PhaseNet(const ModelConfig& cfg, std::uint64_t seed);

    // video [B, in_channels, T, H, W] -> predicted waveform [B, T]
    Tensor forward(const Tensor& video);
    // grad_y [B, T]; accumulates into the store's gradients. One backward
    // per forward; a second call without a fresh forward is an error.
    void backward(const Tensor& grad_y);

    // TCN head alone (post-projection sequence [B, tcn_channels, T] -> [B, T]),
    // used for receptive-field and causality checks.
    Tensor tcn_head_forward(const Tensor& seq) const;

    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    const ModelConfig& config() const { return cfg_; }

    void save_checkpoint(const std::string& path) const;
    void load_checkpoint(const std::string& path);

private:
    struct EstCache {
        Tensor x_in;
        ChanNormCache norm;
        Tensor tanh_out;           // pre-ZAS activations
        std::vector<std::size_t> pool_in_shape;
    };
    struct TcnCache {
        Tensor s_in;
        Tensor tanh_out;
        Tensor sig_out;
    };

    ModelConfig cfg_;
    ParamStore store_;

    // parameter indices, resolved once at construction
    struct EstIdx {
        std::size_t w, b, gamma, beta;
    };
    std::vector<EstIdx> est_idx_;
    std::size_t asf_w1_ = 0, asf_b1_ = 0, asf_w2_ = 0, asf_b2_ = 0;
    std::size_t proj_w_ = 0, proj_b_ = 0;
    struct TcnIdx {
        std::size_t wf, bf, wg, bg;
    };
    std::vector<TcnIdx> tcn_idx_;
    std::size_t head_w_ = 0, head_b_ = 0;

    // forward caches
    std::vector<EstCache> est_cache_;
    AsfCache asf_cache_;
    Tensor enc_out_;       // encoder output fed to ASF (or pooled fallback)
    Tensor proj_in_;       // [B, 2C', T]
    Tensor proj_out_;
    std::vector<TcnCache> tcn_cache_;
    Tensor tcn_out_;       // input of the head projection
    bool forward_done_ = false;

    AsfParams asf_view() const;
    std::size_t dilation_at(std::size_t layer) const;
};

// Checkpoint serialization: magic "PHWT", version u32 LE, then per array
// (name length u16 LE, name bytes, rank u8, dims u32 LE each, f64 LE data).
void write_checkpoint(const std::string& path, const ParamStore& store);
void read_checkpoint(const std::string& path, ParamStore& store);

}  // namespace phase
