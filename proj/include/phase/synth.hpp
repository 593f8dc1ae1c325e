#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phase/oscillator.hpp"
#include "phase/tensor.hpp"

namespace phase {

// Synthetic clip generator: a driven damped-oscillator pulse rendered into
// video-like frames with spatially heterogeneous gain, confounder signals,
// white noise, and integer translation motion.
struct SynthConfig {
    double fps = 30.0;
    std::size_t T = 64, H = 32, W = 32;
    double hr_lo_bpm = 48.0, hr_hi_bpm = 150.0;
    double osc_alpha = 1.5;          // oscillator damping, 1/s
    double omega_jitter = 0.02;      // relative jitter on the natural frequency
    double forcing_amplitude = 1.0;
    double forcing_noise = 0.02;     // band-limited forcing noise, relative
    std::size_t n_patches = 3;       // high-SNR gain patches
    double patch_strength = 0.15;
    double noise_std = 0.01;         // pixel white noise
    std::size_t distractor_count = 2;
    double distractor_amplitude = 0.05;
    double motion_max_shift = 1.0;   // pixels, integer translation after rounding
    double motion_period_s = 4.0;
    std::uint64_t seed = 42;

    void validate() const;  // includes the Nyquist guard fps >= 2*hr_hi/60
    std::string to_json() const;
    static SynthConfig from_json(const std::string& text);
};

struct ClipRecord {
    Tensor frames;          // [3, T, H, W]
    TimeSeries pulse_gt;    // zero mean, unit variance
    double hr_gt_bpm = 0.0;
    SynthConfig meta;
};

struct PulseTrace {
    TimeSeries pulse;       // normalized
    double hr_bpm;
};

PulseTrace gen_pulse(const SynthConfig& cfg, Rng& rng);

ClipRecord render_clip(const PulseTrace& pulse, const SynthConfig& cfg, Rng& rng);

// gen_pulse + render_clip + generation-time self-check of the HR trace.
ClipRecord generate_clip(const SynthConfig& cfg, Rng& rng);

// Clip file format: magic "PHCL", version u32 LE, C,T,H,W u32 LE, f32 LE
// frames [C][T][H][W], T f32 LE pulse values, u32 LE JSON length, JSON bytes.
void write_clip(const std::string& path, const ClipRecord& rec);
ClipRecord read_clip(const std::string& path);

// dataset/manifest.json plus clip_<index>.phcl, per-clip forked seeds.
void generate_dataset(const SynthConfig& cfg, std::size_t n_clips, const std::string& dir);

std::vector<std::string> dataset_clip_paths(const std::string& dir);

std::uint64_t fnv1a_file(const std::string& path);

}  // namespace phase
