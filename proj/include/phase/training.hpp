#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phase/model.hpp"
#include "phase/oscillator.hpp"
#include "phase/synth.hpp"
#include "phase/tensor.hpp"

namespace phase {

struct TrainConfig {
    std::size_t epochs = 15;
    std::size_t batch_size = 4;
    double learning_rate = 1e-4;
    double lambda = 0.1;      // auxiliary-loss weight
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 42;
    // Physics prior used by the auxiliary residual; dt comes from the data fps.
    double res_alpha = 1.5;
    double res_omega = 2.0 * 3.14159265358979323846 * 1.5;

    void validate() const;
};

struct LossReport {
    double l_pred = 0.0;
    double l_aux = 0.0;
    double total = 0.0;
    double wall_ms = 0.0;
    std::size_t epoch = 0;
};

// Negative Pearson correlation between prediction and target.
double pearson_loss(const TimeSeries& yhat, const TimeSeries& y);
// Analytic gradient d loss / d yhat.
TimeSeries pearson_loss_grad(const TimeSeries& yhat, const TimeSeries& y);

// Mean squared discrete oscillator residual over interior samples.
double physics_residual_loss(const TimeSeries& yhat, double alpha, double omega, double dt);
TimeSeries physics_residual_grad(const TimeSeries& yhat, double alpha, double omega, double dt);

// Adam with bias correction. Zero gradients leave parameters unchanged.
class Adam {
public:
    Adam(ParamStore& store, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8);
    void step();
    std::size_t t() const { return t_; }

private:
    ParamStore* store_;
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

// Full training loop over in-memory clips; deterministic in (seed, data, cfg).
// log_path: JSON-lines, one record per epoch. Empty path skips the file.
std::vector<LossReport> train(PhaseNet& net, const std::vector<ClipRecord>& clips,
                              const TrainConfig& tc, const std::string& log_path = "");

}  // namespace phase
