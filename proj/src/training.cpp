#include "phase/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace phase {

void TrainConfig::validate() const {
    if (lambda < 0.0) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (epochs == 0 || batch_size == 0) {
        throw std::invalid_argument("TrainConfig: epochs and batch_size must be positive");
    }
}

namespace {

struct PearsonStats {
    double ma, mb, sab, sa, sb;
};

PearsonStats pearson_stats(const TimeSeries& yhat, const TimeSeries& y) {
    if (yhat.size() != y.size() || yhat.size() < 2) {
        throw std::invalid_argument("pearson_loss: equal lengths >= 2 required");
    }
    const double n = static_cast<double>(yhat.size());
    PearsonStats s{0.0, 0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < yhat.size(); ++i) {
        s.ma += yhat[i];
        s.mb += y[i];
    }
    s.ma /= n;
    s.mb /= n;
    for (std::size_t i = 0; i < yhat.size(); ++i) {
        const double a = yhat[i] - s.ma;
        const double b = y[i] - s.mb;
        s.sab += a * b;
        s.sa += a * a;
        s.sb += b * b;
    }
    if (s.sa <= 0.0 || s.sb <= 0.0) {
        throw std::invalid_argument("pearson_loss: degenerate (zero-variance) signal");
    }
    return s;
}

}  // namespace

double pearson_loss(const TimeSeries& yhat, const TimeSeries& y) {
    const PearsonStats s = pearson_stats(yhat, y);
    return -s.sab / std::sqrt(s.sa * s.sb);
}

TimeSeries pearson_loss_grad(const TimeSeries& yhat, const TimeSeries& y) {
    const PearsonStats s = pearson_stats(yhat, y);
    const double denom = std::sqrt(s.sa * s.sb);
    TimeSeries g(yhat.size());
    // d(-sab/sqrt(sa*sb))/da_i = -b_i/denom + sab*a_i/(sa*denom);
    // the mean terms cancel because sum a = sum b = 0.
    for (std::size_t i = 0; i < yhat.size(); ++i) {
        const double a = yhat[i] - s.ma;
        const double b = y[i] - s.mb;
        g[i] = -b / denom + s.sab * a / (s.sa * denom);
    }
    return g;
}

double physics_residual_loss(const TimeSeries& yhat, double alpha, double omega, double dt) {
    const std::size_t T = yhat.size();
    if (T < 3) throw std::invalid_argument("physics_residual_loss: need T >= 3");
    const double inv_dt2 = 1.0 / (dt * dt);
    const double inv_dt = 1.0 / dt;
    double acc = 0.0;
    for (std::size_t t = 1; t + 1 < T; ++t) {
        const double r = (yhat[t + 1] - 2.0 * yhat[t] + yhat[t - 1]) * inv_dt2 +
                         alpha * (yhat[t] - yhat[t - 1]) * inv_dt + omega * omega * yhat[t];
        acc += r * r;
    }
    return acc / static_cast<double>(T - 2);
}

TimeSeries physics_residual_grad(const TimeSeries& yhat, double alpha, double omega, double dt) {
    const std::size_t T = yhat.size();
    if (T < 3) throw std::invalid_argument("physics_residual_grad: need T >= 3");
    const double inv_dt2 = 1.0 / (dt * dt);
    const double inv_dt = 1.0 / dt;
    const double w2 = omega * omega;
    const double scale = 2.0 / static_cast<double>(T - 2);
    TimeSeries g(T, 0.0);
    for (std::size_t t = 1; t + 1 < T; ++t) {
        const double r = (yhat[t + 1] - 2.0 * yhat[t] + yhat[t - 1]) * inv_dt2 +
                         alpha * (yhat[t] - yhat[t - 1]) * inv_dt + w2 * yhat[t];
        const double rs = scale * r;
        g[t + 1] += rs * inv_dt2;
        g[t] += rs * (-2.0 * inv_dt2 + alpha * inv_dt + w2);
        g[t - 1] += rs * (inv_dt2 - alpha * inv_dt);
    }
    return g;
}

Adam::Adam(ParamStore& store, double lr, double beta1, double beta2, double eps)
    : store_(&store), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (std::size_t i = 0; i < store.size(); ++i) {
        m_.push_back(Tensor::zeros(store.value(i).shape()));
        v_.push_back(Tensor::zeros(store.value(i).shape()));
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < store_->size(); ++i) {
        Tensor& p = store_->value(i);
        Tensor& g = store_->grad(i);
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::size_t k = 0; k < p.numel(); ++k) {
            m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
            v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            p[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

std::vector<LossReport> train(PhaseNet& net, const std::vector<ClipRecord>& clips,
                              const TrainConfig& tc, const std::string& log_path) {
    tc.validate();
    if (clips.empty()) throw std::invalid_argument("train: empty dataset");
    const ModelConfig& mc = net.config();

    // Contiguous non-overlapping windows of model length T per clip.
    struct Window {
        std::size_t clip, t0;
    };
    std::vector<Window> windows;
    for (std::size_t ci = 0; ci < clips.size(); ++ci) {
        const std::size_t clip_T = clips[ci].frames.dim(1);
        if (clips[ci].frames.dim(0) != mc.in_channels || clips[ci].frames.dim(2) != mc.H ||
            clips[ci].frames.dim(3) != mc.W) {
            throw std::invalid_argument("train: clip shape does not match model config");
        }
        for (std::size_t t0 = 0; t0 + mc.T <= clip_T; t0 += mc.T) {
            windows.push_back({ci, t0});
        }
    }
    if (windows.empty()) throw std::invalid_argument("train: no full-length windows in dataset");

    // The auxiliary residual is evaluated in per-sample time units (dt = 1)
    // with the oscillator constants rescaled by fps. This keeps the residual
    // magnitude O(1), so the lambda mixing weight trades off the two loss
    // terms on comparable scales instead of being swamped by a 1/dt^2 factor.
    const double fps = clips[0].meta.fps;
    const double dt = 1.0;
    const double res_alpha = tc.res_alpha / fps;
    const double res_omega = tc.res_omega / fps;
    Adam opt(net.params(), tc.learning_rate, tc.beta1, tc.beta2, tc.adam_eps);
    Rng shuffle_rng(tc.seed);

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path, std::ios::trunc);
        if (!log) throw std::runtime_error("train: cannot open log " + log_path);
    }

    std::vector<LossReport> reports;
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        const auto t_start = std::chrono::steady_clock::now();
        // Fisher-Yates with the pinned generator: deterministic shuffle order.
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng.next_u64() % i);
            std::swap(order[i - 1], order[j]);
        }

        double sum_pred = 0.0, sum_aux = 0.0;
        std::size_t n_samples = 0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += tc.batch_size) {
            const std::size_t bn = std::min(tc.batch_size, order.size() - b0);
            const std::size_t batch_index = b0 / tc.batch_size;
            net.params().zero_grads();
            Tensor video({bn, mc.in_channels, mc.T, mc.H, mc.W});
            std::vector<TimeSeries> targets(bn);
            for (std::size_t s = 0; s < bn; ++s) {
                const Window& w = windows[order[b0 + s]];
                const Tensor& fr = clips[w.clip].frames;
                const std::size_t clip_T = fr.dim(1);
                for (std::size_t c = 0; c < mc.in_channels; ++c) {
                    const double* src = fr.data() + (c * clip_T + w.t0) * mc.H * mc.W;
                    double* dst = video.data() + ((s * mc.in_channels + c) * mc.T) * mc.H * mc.W;
                    std::copy(src, src + mc.T * mc.H * mc.W, dst);
                }
                targets[s].assign(clips[w.clip].pulse_gt.begin() + static_cast<std::ptrdiff_t>(w.t0),
                                  clips[w.clip].pulse_gt.begin() +
                                      static_cast<std::ptrdiff_t>(w.t0 + mc.T));
            }

            const Tensor yhat = net.forward(video);
            Tensor grad_y = Tensor::zeros({bn, mc.T});
            for (std::size_t s = 0; s < bn; ++s) {
                TimeSeries pred(yhat.data() + s * mc.T, yhat.data() + (s + 1) * mc.T);
                const double lp = pearson_loss(pred, targets[s]);
                const double la = physics_residual_loss(pred, res_alpha, res_omega, dt);
                if (!std::isfinite(lp) || !std::isfinite(la)) {
                    throw std::runtime_error("train: NaN loss at epoch " + std::to_string(epoch) +
                                             ", batch " + std::to_string(batch_index));
                }
                sum_pred += lp;
                sum_aux += la;
                ++n_samples;
                const TimeSeries gp = pearson_loss_grad(pred, targets[s]);
                const TimeSeries ga = physics_residual_grad(pred, res_alpha, res_omega, dt);
                const double inv_b = 1.0 / static_cast<double>(bn);
                for (std::size_t t = 0; t < mc.T; ++t) {
                    grad_y[s * mc.T + t] = inv_b * (gp[t] + tc.lambda * ga[t]);
                }
            }
            net.backward(grad_y);
            opt.step();
        }

        LossReport rep;
        rep.epoch = epoch;
        rep.l_pred = sum_pred / static_cast<double>(n_samples);
        rep.l_aux = sum_aux / static_cast<double>(n_samples);
        rep.total = rep.l_pred + tc.lambda * rep.l_aux;
        rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                t_start)
                          .count();
        reports.push_back(rep);
        if (log) {
            log << "{\"epoch\":" << rep.epoch << ",\"l_pred\":" << rep.l_pred
                << ",\"l_aux\":" << rep.l_aux << ",\"total\":" << rep.total
                << ",\"wall_ms\":" << rep.wall_ms << "}\n";
            log.flush();
        }
    }
    return reports;
}

}  // namespace phase
