#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "phase/eval.hpp"
#include "phase/synth.hpp"

using namespace phase;

namespace {

double corr(const TimeSeries& a, const TimeSeries& b) { return pearson_corr(a, b); }

}  // namespace

TEST_CASE("config validation") {
    SynthConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    SUBCASE("nyquist guard") {
        cfg.fps = 4.0;
        cfg.hr_hi_bpm = 150.0;  // 2.5 Hz needs fps >= 5
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SUBCASE("hr range limits") {
        cfg.hr_lo_bpm = 20.0;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SUBCASE("json round trip") {
        cfg.T = 48;
        cfg.noise_std = 0.25;
        cfg.seed = 99;
        const SynthConfig back = SynthConfig::from_json(cfg.to_json());
        CHECK(back.T == 48);
        CHECK(back.noise_std == 0.25);
        CHECK(back.seed == 99);
        CHECK(back.fps == cfg.fps);
    }
}

TEST_CASE("gen_pulse") {
    SUBCASE("psd peak lands on the forced frequency") {
        SynthConfig cfg;
        cfg.T = 512;
        cfg.hr_lo_bpm = 90.0;
        cfg.hr_hi_bpm = 90.000001;  // pin f_hr ~ 1.5 Hz
        cfg.omega_jitter = 0.0;
        cfg.forcing_noise = 0.0;
        cfg.osc_alpha = 0.5;
        Rng rng(91);
        const PulseTrace p = gen_pulse(cfg, rng);
        CHECK(p.hr_bpm == doctest::Approx(90.0).epsilon(1e-6));
        const Spectrum sp = psd_single_rect(p.pulse, cfg.fps);
        std::size_t kmax = 0;
        for (std::size_t k = 1; k < sp.power.size(); ++k) {
            if (sp.power[k] > sp.power[kmax]) kmax = k;
        }
        const double bin = cfg.fps / static_cast<double>(cfg.T);
        CHECK(std::abs(sp.freq_hz[kmax] - 1.5) <= bin + 1e-12);
    }
    SUBCASE("normalized to zero mean unit variance") {
        SynthConfig cfg;
        Rng rng(92);
        const PulseTrace p = gen_pulse(cfg, rng);
        double mean = std::accumulate(p.pulse.begin(), p.pulse.end(), 0.0) / p.pulse.size();
        double var = 0.0;
        for (double v : p.pulse) var += (v - mean) * (v - mean);
        var /= p.pulse.size();
        CHECK(std::abs(mean) < 1e-9);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("zero forcing is rejected as degenerate") {
        SynthConfig cfg;
        cfg.forcing_amplitude = 0.0;
        Rng rng(93);
        CHECK_THROWS_AS((void)gen_pulse(cfg, rng), std::runtime_error);
    }
    SUBCASE("same seed gives the identical trace") {
        SynthConfig cfg;
        Rng r1(94), r2(94);
        const PulseTrace a = gen_pulse(cfg, r1);
        const PulseTrace b = gen_pulse(cfg, r2);
        CHECK(a.hr_bpm == b.hr_bpm);
        CHECK(a.pulse == b.pulse);
    }
}

TEST_CASE("render_clip") {
    SynthConfig clean;
    clean.T = 64;
    clean.H = clean.W = 16;
    clean.noise_std = 0.0;
    clean.distractor_count = 0;
    clean.motion_max_shift = 0.0;
    clean.patch_strength = 0.08;

    SUBCASE("noise-free pixels correlate with the pulse at |r| = 1") {
        Rng rng(95);
        const PulseTrace p = gen_pulse(clean, rng);
        const ClipRecord rec = render_clip(p, clean, rng);
        // pick the green-channel pixel with the largest temporal variance
        const std::size_t T = clean.T, HW = clean.H * clean.W;
        std::size_t best = 0;
        double best_var = -1.0;
        for (std::size_t i = 0; i < HW; ++i) {
            TimeSeries px(T);
            for (std::size_t t = 0; t < T; ++t) px[t] = rec.frames[(1 * T + t) * HW + i];
            double m = std::accumulate(px.begin(), px.end(), 0.0) / T;
            double v = 0.0;
            for (double x : px) v += (x - m) * (x - m);
            if (v > best_var) {
                best_var = v;
                best = i;
            }
        }
        TimeSeries px(T);
        for (std::size_t t = 0; t < T; ++t) px[t] = rec.frames[(1 * T + t) * HW + best];
        CHECK(std::abs(corr(px, rec.pulse_gt)) >= 1.0 - 1e-6);
    }
    SUBCASE("solvability oracle: spatial mean over the high-variance region") {
        Rng rng(96);
        const PulseTrace p = gen_pulse(clean, rng);
        const ClipRecord rec = render_clip(p, clean, rng);
        const std::size_t T = clean.T, HW = clean.H * clean.W;
        std::vector<std::pair<double, std::size_t>> by_var;
        for (std::size_t i = 0; i < HW; ++i) {
            double m = 0.0, v = 0.0;
            for (std::size_t t = 0; t < T; ++t) m += rec.frames[(T + t) * HW + i];
            m /= T;
            for (std::size_t t = 0; t < T; ++t) {
                const double d = rec.frames[(T + t) * HW + i] - m;
                v += d * d;
            }
            by_var.push_back({v, i});
        }
        std::sort(by_var.rbegin(), by_var.rend());
        TimeSeries est(T, 0.0);
        const std::size_t top = HW / 10;
        for (std::size_t r = 0; r < top; ++r) {
            for (std::size_t t = 0; t < T; ++t) {
                est[t] += rec.frames[(T + t) * HW + by_var[r].second];
            }
        }
        CHECK(corr(est, rec.pulse_gt) >= 0.999);
    }
    SUBCASE("all pixels stay in [0,1] even under heavy noise") {
        SynthConfig noisy = clean;
        noisy.noise_std = 0.5;
        noisy.distractor_count = 3;
        Rng rng(97);
        const ClipRecord rec = render_clip(gen_pulse(noisy, rng), noisy, rng);
        for (std::size_t i = 0; i < rec.frames.numel(); ++i) {
            CHECK(rec.frames[i] >= 0.0);
            CHECK(rec.frames[i] <= 1.0);
        }
    }
    SUBCASE("wrong pulse length rejected") {
        Rng rng(98);
        PulseTrace p = gen_pulse(clean, rng);
        p.pulse.pop_back();
        CHECK_THROWS_AS((void)render_clip(p, clean, rng), std::invalid_argument);
    }
}

TEST_CASE("clip file round trip") {
    SynthConfig cfg;
    cfg.T = 32;
    cfg.H = cfg.W = 6;
    Rng rng(99);
    const ClipRecord rec = generate_clip(cfg, rng);
    const std::string path = "test_clip_roundtrip.phcl";
    write_clip(path, rec);

    SUBCASE("bit-identical frames, pulse, and metadata") {
        const ClipRecord back = read_clip(path);
        REQUIRE(back.frames.same_shape(rec.frames));
        for (std::size_t i = 0; i < rec.frames.numel(); ++i) {
            REQUIRE(back.frames[i] == rec.frames[i]);
        }
        CHECK(back.pulse_gt == rec.pulse_gt);
        CHECK(back.hr_gt_bpm == doctest::Approx(rec.hr_gt_bpm).epsilon(1e-12));
        CHECK(back.meta.T == cfg.T);
    }
    SUBCASE("corrupt magic names byte offset 0") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
        f.close();
        CHECK_THROWS_WITH_AS((void)read_clip(path), doctest::Contains("offset 0"),
                             std::runtime_error);
    }
    SUBCASE("version bump names expected and found versions") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        const unsigned char v2[4] = {9, 0, 0, 0};
        f.write(reinterpret_cast<const char*>(v2), 4);
        f.close();
        try {
            (void)read_clip(path);
            FAIL("expected version error");
        } catch (const std::runtime_error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("expected 1") != std::string::npos);
            CHECK(msg.find("found 9") != std::string::npos);
        }
    }
    SUBCASE("truncation detected") {
        std::ifstream in(path, std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
        in.close();
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
        out.close();
        CHECK_THROWS_WITH_AS((void)read_clip(path), doctest::Contains("truncated"),
                             std::runtime_error);
    }
    std::remove(path.c_str());
}

TEST_CASE("dataset generation is deterministic byte for byte") {
    SynthConfig cfg;
    cfg.T = 32;
    cfg.H = cfg.W = 6;
    cfg.seed = 1234;
    const std::string d1 = "test_ds_a", d2 = "test_ds_b";
    generate_dataset(cfg, 3, d1);
    generate_dataset(cfg, 3, d2);
    const auto p1 = dataset_clip_paths(d1);
    const auto p2 = dataset_clip_paths(d2);
    REQUIRE(p1.size() == 3);
    REQUIRE(p2.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(fnv1a_file(p1[i]) == fnv1a_file(p2[i]));
    }
    // distinct clips within the dataset
    CHECK(fnv1a_file(p1[0]) != fnv1a_file(p1[1]));
    std::filesystem::remove_all(d1);
    std::filesystem::remove_all(d2);
}
