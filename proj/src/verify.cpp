#include "phase/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "phase/eval.hpp"
#include "phase/model.hpp"
#include "phase/oscillator.hpp"
#include "phase/synth.hpp"
#include "phase/training.hpp"
#include "phase/zas.hpp"

namespace phase {

namespace {

void run_check(VerifyReport& rep, const std::string& name,
               const std::function<void(std::ostringstream&)>& body) {
    CheckResult r;
    r.name = name;
    std::ostringstream msg;
    try {
        body(msg);
        r.pass = true;
    } catch (const std::exception& e) {
        r.pass = false;
        msg << e.what();
    }
    r.detail = msg.str();
    rep.checks.push_back(std::move(r));
}

void require(bool cond, const std::string& what) {
    if (!cond) throw std::runtime_error(what);
}

StateMatrices random_stable_system(Rng& rng) {
    for (;;) {
        const double alpha = 0.2 + 3.0 * rng.uniform();
        const double omega = 0.5 + 6.0 * rng.uniform();
        const double dt = 0.01 + 0.06 * rng.uniform();
        const StateMatrices m = discretize(OscillatorParams(alpha, omega, dt));
        if (m.spectral_radius() < 0.999) return m;
    }
}

}  // namespace

VerifyReport run_verify(const VerifyOptions& opts) {
    VerifyReport rep;

    run_check(rep, "oscillator.discretize_closed_form", [](std::ostringstream&) {
        const StateMatrices m = discretize(OscillatorParams(1.0, 1.0, 1.0));
        require(std::abs(m.A[0][0] - 0.5) < 1e-15 && std::abs(m.A[0][1] - 0.5) < 1e-15 &&
                    std::abs(m.A[1][0] + 0.5) < 1e-15 && std::abs(m.A[1][1] - 0.5) < 1e-15,
                "A mismatch for alpha=omega=dt=1");
        require(std::abs(m.B[0] - 0.5) < 1e-15 && std::abs(m.B[1] - 0.5) < 1e-15, "B mismatch");
        require(std::abs(m.spectral_radius() - std::sqrt(0.5)) < 1e-12, "spectral radius mismatch");
    });

    run_check(rep, "oscillator.ssm_fir_equivalence", [&](std::ostringstream& msg) {
        Rng rng(opts.seed);
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const StateMatrices m = random_stable_system(rng);
            const std::size_t T = 256;
            TimeSeries forcing(T);
            double fmax = 0.0;
            for (auto& f : forcing) {
                f = rng.normal();
                fmax = std::max(fmax, std::abs(f));
            }
            const TimeSeries a = ssm_rollout(m, forcing);
            const TimeSeries b = fir_convolve(impulse_response(m, T), forcing);
            for (std::size_t t = 0; t < T; ++t) {
                worst = std::max(worst, std::abs(a[t] - b[t]) / fmax);
            }
        }
        msg << "max relative deviation " << worst;
        require(worst <= 1e-10, "rollout/convolution deviation above 1e-10");
    });

    run_check(rep, "oscillator.truncation_tail_bound", [&](std::ostringstream&) {
        Rng rng(opts.seed + 1);
        for (int trial = 0; trial < 10; ++trial) {
            const StateMatrices m = random_stable_system(rng);
            const FirKernel full = impulse_response(m, 2048);
            for (std::size_t R : {4u, 8u, 16u, 32u}) {
                const FirKernel k = impulse_response(m, R);
                double tail = 0.0;
                for (std::size_t i = R; i < full.g.size(); ++i) tail += std::abs(full.g[i]);
                require(tail <= k.tail_bound + 1e-12, "measured tail exceeds bound");
            }
        }
    });

    run_check(rep, "oscillator.rademacher_example", [](std::ostringstream& msg) {
        BoundParams b;
        b.K = 1.0;
        b.rho = 0.5;
        b.C0 = 1.0;
        b.B0 = 1.0;
        b.M_in = 1.0;
        b.n = 1000;
        b.R = 8;
        const double got = rademacher_bound(b);
        msg << "bound " << got;
        require(std::abs(got - 0.148932) < 1e-4, "known-value mismatch");
    });

    run_check(rep, "zas.self_inversion", [&](std::ostringstream&) {
        Rng rng(opts.seed + 2);
        const ZasConfig cfg{0.5, 2};
        const Tensor x = randn(rng, {1, 4, 3, 6, 6});
        Tensor y = zas_forward(x, cfg);
        if (opts.inject_zas_fault && y.numel() >= 2) {
            std::swap(y[0], y[1]);  // deliberate corruption via the test hook
        }
        const Tensor back = zas_forward(y, cfg);
        for (std::size_t i = 0; i < x.numel(); ++i) {
            require(back[i] == x[i], "round trip not bit-exact");
        }
    });

    run_check(rep, "zas.multiset_preservation", [&](std::ostringstream&) {
        Rng rng(opts.seed + 3);
        const ZasConfig cfg{0.25, 3};
        const Tensor x = randn(rng, {2, 8, 2, 7, 5});
        const Tensor y = zas_forward(x, cfg);
        std::vector<double> a(x.vec()), b(y.vec());
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        require(a == b, "value multiset changed");
    });

    run_check(rep, "zas.zero_flops", [](std::ostringstream&) {
        const ZasAudit audit = zas_flop_count({2, 8, 4, 16, 16}, ZasConfig{0.25, 2});
        require(audit.multiply_accumulates == 0, "nonzero multiply-accumulate count");
        require(audit.moved_elements == 2ull * 2 * 4 * 16 * 16, "unexpected moved-element count");
    });

    run_check(rep, "asf.mask_normalization", [&](std::ostringstream&) {
        Rng rng(opts.seed + 4);
        const std::size_t C = 4, B = 1, T = 3, H = 6, W = 6;
        const AsfParams p = asf_init(rng, C);
        const Tensor z_in = randn(rng, {B, C, T, H, W});
        AsfCache cache;
        const AsfOutput out = asf_forward(z_in, p, cache);
        for (std::size_t bt = 0; bt < B * T; ++bt) {
            double s = 0.0;
            for (std::size_t i = 0; i < H * W; ++i) s += cache.mask[bt * H * W + i];
            require(std::abs(s - 1.0) < 1e-12, "mask does not sum to one");
        }
        for (std::size_t c = 0; c < C; ++c) {
            require(out.v[(0 * C + c) * T] == 0.0, "derivative not zero at t=0");
        }
    });

    run_check(rep, "model.param_count", [](std::ostringstream& msg) {
        for (const ModelConfig& cfg : {ModelConfig::mini(), ModelConfig::paper()}) {
            PhaseNet net(cfg, 7);
            msg << net.params().total_params() << " ";
            require(net.params().total_params() == count_params(cfg),
                    "registry size does not match the analytic count");
        }
    });

    run_check(rep, "training.pearson_contracts", [](std::ostringstream&) {
        const TimeSeries y = {0.1, -0.4, 0.9, 0.3, -0.7};
        TimeSeries neg(y), aff(y);
        for (auto& v : neg) v = -v;
        for (auto& v : aff) v = 2.0 * v + 7.0;
        require(std::abs(pearson_loss(y, y) + 1.0) < 1e-12, "identical signals must give -1");
        require(std::abs(pearson_loss(neg, y) - 1.0) < 1e-12, "sign flip must give +1");
        require(std::abs(pearson_loss(aff, y) + 1.0) < 1e-12, "affine invariance broken");
    });

    run_check(rep, "training.adam_zero_grad", [&](std::ostringstream&) {
        Rng rng(opts.seed + 5);
        ParamStore store;
        store.add("w", randn(rng, {3, 3}));
        const std::vector<double> before = store.value("w").vec();
        Adam opt(store, 1e-2);
        store.zero_grads();
        opt.step();
        opt.step();
        require(store.value("w").vec() == before, "zero gradient moved parameters");
    });

    run_check(rep, "eval.psd_peak", [](std::ostringstream& msg) {
        const double fps = 30.0;
        TimeSeries sig(512);
        for (std::size_t t = 0; t < sig.size(); ++t) {
            sig[t] = std::sin(2.0 * M_PI * 1.5 * static_cast<double>(t) / fps);
        }
        const HrEstimate est = estimate_hr(sig, fps);
        msg << est.hr_bpm << " bpm";
        require(std::abs(est.hr_bpm - 90.0) < 1.0, "sine at 1.5 Hz must read 90 bpm");
    });

    run_check(rep, "eval.metrics_hand_values", [](std::ostringstream&) {
        const MetricsReport r = metrics({60.0, 90.0}, {70.0, 80.0});
        require(std::abs(r.mae_bpm - 10.0) < 1e-12 && std::abs(r.rmse_bpm - 10.0) < 1e-12,
                "hand-computed MAE/RMSE mismatch");
        require(r.pearson_r && std::abs(*r.pearson_r - 1.0) < 1e-12, "hand-computed r mismatch");
    });

    run_check(rep, "synth.determinism", [&](std::ostringstream&) {
        SynthConfig cfg;
        cfg.T = 64;
        cfg.H = cfg.W = 8;
        Rng r1(opts.seed + 6), r2(opts.seed + 6);
        const ClipRecord a = generate_clip(cfg, r1);
        const ClipRecord b = generate_clip(cfg, r2);
        require(a.frames.vec() == b.frames.vec() && a.pulse_gt == b.pulse_gt,
                "same seed produced different clips");
    });

    rep.checks_total = rep.checks.size();
    for (const auto& c : rep.checks) {
        if (c.pass) ++rep.checks_passed;
    }
    return rep;
}

}  // namespace phase
