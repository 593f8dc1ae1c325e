#include "phase/model.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace phase {

ModelConfig ModelConfig::paper() {
    ModelConfig c;
    c.est_channels = {16, 32, 64};
    c.tcn_channels = 64;
    c.T = 128;
    c.H = 128;
    c.W = 128;
    return c;
}

ModelConfig ModelConfig::mini() {
    ModelConfig c;
    c.est_channels = {8, 16, 32};
    c.tcn_channels = 16;
    c.T = 64;
    c.H = 32;
    c.W = 32;
    return c;
}

std::size_t ModelConfig::receptive_field() const {
    const std::size_t k = tcn_kernel;
    if (dilation_base == 1) return 1 + (k - 1) * tcn_layers;
    std::size_t geom = 0, d = 1;
    for (std::size_t l = 0; l < tcn_layers; ++l) {
        geom += d;
        d *= dilation_base;
    }
    return 1 + (k - 1) * geom;
}

void ModelConfig::validate() const {
    if (est_channels.empty()) throw std::invalid_argument("ModelConfig: need encoder blocks");
    if (tcn_layers < 1) throw std::invalid_argument("ModelConfig: tcn_layers >= 1");
    if (tcn_kernel < 1 || tcn_channels < 1) throw std::invalid_argument("ModelConfig: bad TCN head");
    std::size_t h = H, w = W;
    for (std::size_t i = 0; i < est_channels.size(); ++i) {
        if (h < 2 || w < 2 || h % 2 != 0 || w % 2 != 0) {
            throw std::invalid_argument("ModelConfig: spatial dims must halve through every block");
        }
        h /= 2;
        w /= 2;
    }
    if (asf_enabled && est_channels.back() < 2) {
        throw std::invalid_argument("ModelConfig: ASF needs >= 2 encoder output channels");
    }
}

std::size_t ParamStore::add(const std::string& name, Tensor init) {
    if (has(name)) throw std::invalid_argument("ParamStore: duplicate name " + name);
    Entry e;
    e.name = name;
    e.grad = Tensor::zeros(init.shape());
    e.value = std::move(init);
    entries_.push_back(std::move(e));
    return entries_.size() - 1;
}

std::size_t ParamStore::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name == name) return i;
    }
    throw std::invalid_argument("ParamStore: unknown name " + name);
}

bool ParamStore::has(const std::string& name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return true;
    }
    return false;
}

std::size_t ParamStore::total_params() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.numel();
    return n;
}

void ParamStore::zero_grads() {
    for (auto& e : entries_) {
        std::fill(e.grad.vec().begin(), e.grad.vec().end(), 0.0);
    }
}

std::size_t count_params(const ModelConfig& cfg) {
    std::size_t total = 0;
    std::size_t ci = cfg.in_channels;
    for (std::size_t co : cfg.est_channels) {
        total += co * ci * 27 + co;          // conv3d 3x3x3 + bias
        if (cfg.est_norm) total += 2 * co;   // gamma, beta
        ci = co;
    }
    const std::size_t cp = cfg.est_channels.back();
    if (cfg.asf_enabled) {
        const std::size_t hidden = cp / 2;
        total += hidden * cp * 9 + hidden;   // 3x3 conv
        total += hidden + 1;                 // 1x1 conv to one logit channel
    }
    total += cfg.tcn_channels * (2 * cp) + cfg.tcn_channels;  // channel projection
    for (std::size_t l = 0; l < cfg.tcn_layers; ++l) {
        total += 2 * (cfg.tcn_channels * cfg.tcn_channels * cfg.tcn_kernel + cfg.tcn_channels);
    }
    total += cfg.tcn_channels + 1;  // head projection, ZAS contributes nothing
    return total;
}

Tensor est_block_forward(const Tensor& x, const EstBlockParams& p, const ZasConfig& zas) {
    if (x.dim(3) < 2 || x.dim(4) < 2) {
        throw std::invalid_argument("est_block_forward: spatial dims must be >= 2");
    }
    Tensor h = conv3d_forward(x, *p.w, *p.bias);
    if (p.gamma != nullptr) {
        ChanNormCache nc;
        h = chan_norm_forward(h, *p.gamma, *p.beta, nc);
    }
    h = tanh_forward(h);
    h = zas_forward(h, zas);
    return avgpool2_forward(h);
}

Tensor gtcn_layer_forward(const Tensor& s, const Tensor& wf, const Tensor& bf,
                          const Tensor& wg, const Tensor& bg, std::size_t dilation) {
    const Tensor f = tanh_forward(conv1d_causal_forward(s, wf, bf, dilation));
    const Tensor g = sigmoid_forward(conv1d_causal_forward(s, wg, bg, dilation));
    Tensor out = mul(f, g);
    return add(out, s);
}

namespace {

Tensor scaled_randn(Rng& rng, std::vector<std::size_t> shape, std::size_t fan_in) {
    Tensor t = randn(rng, std::move(shape));
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] *= s;
    return t;
}

void accumulate(Tensor& dst, const Tensor& src) {
    for (std::size_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
}

}  // namespace

PhaseNet::PhaseNet(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    std::size_t ci = cfg_.in_channels;
    for (std::size_t b = 0; b < cfg_.est_channels.size(); ++b) {
        const std::size_t co = cfg_.est_channels[b];
        const std::string p = "est" + std::to_string(b);
        EstIdx idx{};
        idx.w = store_.add(p + ".w", scaled_randn(rng, {co, ci, 3, 3, 3}, ci * 27));
        idx.b = store_.add(p + ".b", Tensor::zeros({co}));
        if (cfg_.est_norm) {
            idx.gamma = store_.add(p + ".gamma", Tensor::full({co}, 1.0));
            idx.beta = store_.add(p + ".beta", Tensor::zeros({co}));
        }
        est_idx_.push_back(idx);
        ci = co;
    }
    const std::size_t cp = cfg_.est_channels.back();
    if (cfg_.asf_enabled) {
        const std::size_t hidden = cp / 2;
        asf_w1_ = store_.add("asf.w1", scaled_randn(rng, {hidden, cp, 3, 3}, cp * 9));
        asf_b1_ = store_.add("asf.b1", Tensor::zeros({hidden}));
        asf_w2_ = store_.add("asf.w2", scaled_randn(rng, {1, hidden, 1, 1}, hidden));
        asf_b2_ = store_.add("asf.b2", Tensor::zeros({1}));
    }
    proj_w_ = store_.add("proj.w", scaled_randn(rng, {cfg_.tcn_channels, 2 * cp, 1}, 2 * cp));
    proj_b_ = store_.add("proj.b", Tensor::zeros({cfg_.tcn_channels}));
    for (std::size_t l = 0; l < cfg_.tcn_layers; ++l) {
        const std::string p = "tcn" + std::to_string(l);
        const std::size_t tc = cfg_.tcn_channels;
        TcnIdx idx{};
        idx.wf = store_.add(p + ".wf", scaled_randn(rng, {tc, tc, cfg_.tcn_kernel}, tc * cfg_.tcn_kernel));
        idx.bf = store_.add(p + ".bf", Tensor::zeros({tc}));
        idx.wg = store_.add(p + ".wg", scaled_randn(rng, {tc, tc, cfg_.tcn_kernel}, tc * cfg_.tcn_kernel));
        idx.bg = store_.add(p + ".bg", Tensor::zeros({tc}));
        tcn_idx_.push_back(idx);
    }
    head_w_ = store_.add("head.w", scaled_randn(rng, {1, cfg_.tcn_channels, 1}, cfg_.tcn_channels));
    head_b_ = store_.add("head.b", Tensor::zeros({1}));
}

AsfParams PhaseNet::asf_view() const {
    AsfParams p;
    p.w1 = store_.value(asf_w1_);
    p.b1 = store_.value(asf_b1_);
    p.w2 = store_.value(asf_w2_);
    p.b2 = store_.value(asf_b2_);
    return p;
}

std::size_t PhaseNet::dilation_at(std::size_t layer) const {
    std::size_t d = 1;
    for (std::size_t l = 0; l < layer; ++l) d *= cfg_.dilation_base;
    return d;
}

Tensor PhaseNet::forward(const Tensor& video) {
    if (video.rank() != 5 || video.dim(1) != cfg_.in_channels) {
        throw std::invalid_argument("PhaseNet::forward: video must be [B,C,T,H,W]");
    }
    const std::size_t B = video.dim(0), T = video.dim(2);

    est_cache_.assign(cfg_.est_channels.size(), EstCache{});
    Tensor h = video;
    for (std::size_t b = 0; b < est_idx_.size(); ++b) {
        EstCache& cache = est_cache_[b];
        cache.x_in = h;
        h = conv3d_forward(h, store_.value(est_idx_[b].w), store_.value(est_idx_[b].b));
        if (cfg_.est_norm) {
            h = chan_norm_forward(h, store_.value(est_idx_[b].gamma), store_.value(est_idx_[b].beta),
                                  cache.norm);
        }
        h = tanh_forward(h);
        cache.tanh_out = h;
        h = zas_forward(h, cfg_.zas);
        cache.pool_in_shape = h.shape();
        h = avgpool2_forward(h);
    }
    enc_out_ = h;

    const std::size_t cp = cfg_.est_channels.back();
    if (cfg_.asf_enabled) {
        const AsfParams p = asf_view();
        AsfOutput out = asf_forward(enc_out_, p, asf_cache_);
        proj_in_ = out.z_cat;
    } else {
        // Uniform mask fallback: spatial mean plus its temporal derivative.
        const std::size_t H = enc_out_.dim(3), W = enc_out_.dim(4);
        const double inv_hw = 1.0 / static_cast<double>(H * W);
        Tensor z({B, cp, T});
        for (std::size_t i = 0; i < B * cp * T; ++i) {
            const double* fp = enc_out_.data() + i * H * W;
            double acc = 0.0;
            for (std::size_t s = 0; s < H * W; ++s) acc += fp[s];
            z[i] = acc * inv_hw;
        }
        proj_in_ = Tensor({B, 2 * cp, T});
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t c = 0; c < cp; ++c) {
                const double* zp = z.data() + (b * cp + c) * T;
                double* zc = proj_in_.data() + (b * 2 * cp + c) * T;
                double* vc = proj_in_.data() + (b * 2 * cp + cp + c) * T;
                for (std::size_t t = 0; t < T; ++t) {
                    zc[t] = zp[t];
                    vc[t] = t == 0 ? 0.0 : zp[t] - zp[t - 1];
                }
            }
        }
    }

    proj_out_ = conv1d_causal_forward(proj_in_, store_.value(proj_w_), store_.value(proj_b_), 1);

    tcn_cache_.assign(cfg_.tcn_layers, TcnCache{});
    Tensor s = proj_out_;
    for (std::size_t l = 0; l < cfg_.tcn_layers; ++l) {
        TcnCache& cache = tcn_cache_[l];
        cache.s_in = s;
        const std::size_t d = dilation_at(l);
        cache.tanh_out = tanh_forward(
            conv1d_causal_forward(s, store_.value(tcn_idx_[l].wf), store_.value(tcn_idx_[l].bf), d));
        cache.sig_out = sigmoid_forward(
            conv1d_causal_forward(s, store_.value(tcn_idx_[l].wg), store_.value(tcn_idx_[l].bg), d));
        s = add(mul(cache.tanh_out, cache.sig_out), s);
    }
    tcn_out_ = s;

    Tensor y = conv1d_causal_forward(tcn_out_, store_.value(head_w_), store_.value(head_b_), 1);
    forward_done_ = true;
    return y.reshape({B, T});
}

void PhaseNet::backward(const Tensor& grad_y) {
    if (!forward_done_) {
        throw std::logic_error("PhaseNet::backward: no forward pass cached (graph reuse?)");
    }
    forward_done_ = false;

    const std::size_t B = grad_y.dim(0), T = grad_y.dim(1);
    Tensor g = grad_y.reshape({B, 1, T});

    {
        Tensor gx, gw, gb;
        conv1d_causal_backward(g, tcn_out_, store_.value(head_w_), 1, gx, gw, gb);
        accumulate(store_.grad(head_w_), gw);
        accumulate(store_.grad(head_b_), gb);
        g = gx;
    }

    for (std::size_t l = cfg_.tcn_layers; l-- > 0;) {
        const TcnCache& cache = tcn_cache_[l];
        const std::size_t d = dilation_at(l);
        const Tensor gtanh = tanh_backward(mul(g, cache.sig_out), cache.tanh_out);
        const Tensor gsig = sigmoid_backward(mul(g, cache.tanh_out), cache.sig_out);
        Tensor gx_f, gw_f, gb_f, gx_g, gw_g, gb_g;
        conv1d_causal_backward(gtanh, cache.s_in, store_.value(tcn_idx_[l].wf), d, gx_f, gw_f, gb_f);
        conv1d_causal_backward(gsig, cache.s_in, store_.value(tcn_idx_[l].wg), d, gx_g, gw_g, gb_g);
        accumulate(store_.grad(tcn_idx_[l].wf), gw_f);
        accumulate(store_.grad(tcn_idx_[l].bf), gb_f);
        accumulate(store_.grad(tcn_idx_[l].wg), gw_g);
        accumulate(store_.grad(tcn_idx_[l].bg), gb_g);
        Tensor gs = add(gx_f, gx_g);
        g = add(gs, g);  // residual path
    }

    {
        Tensor gx, gw, gb;
        conv1d_causal_backward(g, proj_in_, store_.value(proj_w_), 1, gx, gw, gb);
        accumulate(store_.grad(proj_w_), gw);
        accumulate(store_.grad(proj_b_), gb);
        g = gx;
    }

    Tensor genc;
    const std::size_t cp = cfg_.est_channels.back();
    if (cfg_.asf_enabled) {
        const AsfParams p = asf_view();
        AsfGrads grads = asf_backward(g, p, asf_cache_);
        asf_cache_.valid = false;
        accumulate(store_.grad(asf_w1_), grads.gparams.w1);
        accumulate(store_.grad(asf_b1_), grads.gparams.b1);
        accumulate(store_.grad(asf_w2_), grads.gparams.w2);
        accumulate(store_.grad(asf_b2_), grads.gparams.b2);
        genc = grads.gz_in;
    } else {
        const std::size_t H = enc_out_.dim(3), W = enc_out_.dim(4);
        const double inv_hw = 1.0 / static_cast<double>(H * W);
        Tensor gz({B, cp, T});
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t c = 0; c < cp; ++c) {
                const double* gzc = g.data() + (b * 2 * cp + c) * T;
                const double* gvc = g.data() + (b * 2 * cp + cp + c) * T;
                double* gp = gz.data() + (b * cp + c) * T;
                for (std::size_t t = 0; t < T; ++t) {
                    double gv = gzc[t];
                    if (t >= 1) gv += gvc[t];
                    if (t + 1 < T) gv -= gvc[t + 1];
                    gp[t] = gv;
                }
            }
        }
        genc = Tensor({B, cp, T, H, W});
        for (std::size_t i = 0; i < B * cp * T; ++i) {
            const double gv = gz[i] * inv_hw;
            double* gp = genc.data() + i * H * W;
            for (std::size_t s = 0; s < H * W; ++s) gp[s] = gv;
        }
    }

    Tensor gh = genc;
    for (std::size_t b = est_idx_.size(); b-- > 0;) {
        const EstCache& cache = est_cache_[b];
        gh = avgpool2_backward(gh, cache.pool_in_shape);
        gh = zas_forward(gh, cfg_.zas);  // permutation Jacobian is its own transpose
        gh = tanh_backward(gh, cache.tanh_out);
        if (cfg_.est_norm) {
            Tensor gx, ggamma, gbeta;
            chan_norm_backward(gh, store_.value(est_idx_[b].gamma), cache.norm, gx, ggamma, gbeta);
            accumulate(store_.grad(est_idx_[b].gamma), ggamma);
            accumulate(store_.grad(est_idx_[b].beta), gbeta);
            gh = gx;
        }
        Tensor gx, gw, gb;
        conv3d_backward(gh, cache.x_in, store_.value(est_idx_[b].w), gx, gw, gb);
        accumulate(store_.grad(est_idx_[b].w), gw);
        accumulate(store_.grad(est_idx_[b].b), gb);
        gh = gx;
    }
}

Tensor PhaseNet::tcn_head_forward(const Tensor& seq) const {
    Tensor s = seq;
    for (std::size_t l = 0; l < cfg_.tcn_layers; ++l) {
        s = gtcn_layer_forward(s, store_.value(tcn_idx_[l].wf), store_.value(tcn_idx_[l].bf),
                               store_.value(tcn_idx_[l].wg), store_.value(tcn_idx_[l].bg),
                               dilation_at(l));
    }
    Tensor y = conv1d_causal_forward(s, store_.value(head_w_), store_.value(head_b_), 1);
    return y.reshape({seq.dim(0), seq.dim(2)});
}

void PhaseNet::save_checkpoint(const std::string& path) const { write_checkpoint(path, store_); }
void PhaseNet::load_checkpoint(const std::string& path) { read_checkpoint(path, store_); }

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

void put_u16(std::ofstream& os, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ofstream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint16_t get_u16(std::ifstream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::ifstream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const ParamStore& store) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("write_checkpoint: cannot open " + tmp);
        os.write("PHWT", 4);
        put_u32(os, kCheckpointVersion);
        put_u32(os, static_cast<std::uint32_t>(store.size()));
        for (std::size_t i = 0; i < store.size(); ++i) {
            const std::string& name = store.name(i);
            const Tensor& t = store.value(i);
            put_u16(os, static_cast<std::uint16_t>(name.size()));
            os.write(name.data(), static_cast<std::streamsize>(name.size()));
            const unsigned char rank = static_cast<unsigned char>(t.rank());
            os.write(reinterpret_cast<const char*>(&rank), 1);
            for (std::size_t a = 0; a < t.rank(); ++a) {
                put_u32(os, static_cast<std::uint32_t>(t.dim(a)));
            }
            os.write(reinterpret_cast<const char*>(t.data()),
                     static_cast<std::streamsize>(t.numel() * sizeof(double)));
        }
        if (!os) throw std::runtime_error("write_checkpoint: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw std::runtime_error("write_checkpoint: rename failed for " + path);
    }
}

void read_checkpoint(const std::string& path, ParamStore& store) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "PHWT", 4) != 0) {
        throw std::runtime_error("read_checkpoint: bad magic in " + path);
    }
    const std::uint32_t version = get_u32(is);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("read_checkpoint: version mismatch, expected " +
                                 std::to_string(kCheckpointVersion) + ", found " +
                                 std::to_string(version));
    }
    const std::uint32_t count = get_u32(is);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t nlen = get_u16(is);
        std::string name(nlen, '\0');
        is.read(name.data(), nlen);
        unsigned char rank = 0;
        is.read(reinterpret_cast<char*>(&rank), 1);
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = get_u32(is);
        if (!is) throw std::runtime_error("read_checkpoint: truncated header in " + path);
        Tensor& dst = store.value(name);
        if (dst.shape() != shape) {
            throw std::runtime_error("read_checkpoint: shape mismatch for " + name);
        }
        is.read(reinterpret_cast<char*>(dst.data()),
                static_cast<std::streamsize>(dst.numel() * sizeof(double)));
        if (!is) throw std::runtime_error("read_checkpoint: truncated data for " + name);
    }
}

}  // namespace phase
