#include "phase/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "phase/eval.hpp"

namespace phase {

using nlohmann::json;

void SynthConfig::validate() const {
    if (fps <= 0.0 || T == 0 || H == 0 || W == 0) {
        throw std::invalid_argument("SynthConfig: bad dimensions");
    }
    if (!(hr_lo_bpm >= 30.0 && hr_hi_bpm <= 240.0 && hr_lo_bpm < hr_hi_bpm)) {
        throw std::invalid_argument("SynthConfig: hr range must lie within [30,240] bpm");
    }
    if (fps < 2.0 * hr_hi_bpm / 60.0) {
        throw std::invalid_argument("SynthConfig: Nyquist guard failed, fps < 2*hr_hi/60");
    }
    if (osc_alpha <= 0.0) throw std::invalid_argument("SynthConfig: osc_alpha must be positive");
    if (noise_std < 0.0 || distractor_amplitude < 0.0 || patch_strength <= 0.0) {
        throw std::invalid_argument("SynthConfig: negative magnitudes");
    }
}

namespace {

json config_to_json(const SynthConfig& c) {
    return json{{"fps", c.fps},
                {"T", c.T},
                {"H", c.H},
                {"W", c.W},
                {"hr_lo_bpm", c.hr_lo_bpm},
                {"hr_hi_bpm", c.hr_hi_bpm},
                {"osc_alpha", c.osc_alpha},
                {"omega_jitter", c.omega_jitter},
                {"forcing_amplitude", c.forcing_amplitude},
                {"forcing_noise", c.forcing_noise},
                {"n_patches", c.n_patches},
                {"patch_strength", c.patch_strength},
                {"noise_std", c.noise_std},
                {"distractor_count", c.distractor_count},
                {"distractor_amplitude", c.distractor_amplitude},
                {"motion_max_shift", c.motion_max_shift},
                {"motion_period_s", c.motion_period_s},
                {"seed", c.seed}};
}

SynthConfig config_from_json(const json& j) {
    SynthConfig c;
    c.fps = j.value("fps", c.fps);
    c.T = j.value("T", c.T);
    c.H = j.value("H", c.H);
    c.W = j.value("W", c.W);
    c.hr_lo_bpm = j.value("hr_lo_bpm", c.hr_lo_bpm);
    c.hr_hi_bpm = j.value("hr_hi_bpm", c.hr_hi_bpm);
    c.osc_alpha = j.value("osc_alpha", c.osc_alpha);
    c.omega_jitter = j.value("omega_jitter", c.omega_jitter);
    c.forcing_amplitude = j.value("forcing_amplitude", c.forcing_amplitude);
    c.forcing_noise = j.value("forcing_noise", c.forcing_noise);
    c.n_patches = j.value("n_patches", c.n_patches);
    c.patch_strength = j.value("patch_strength", c.patch_strength);
    c.noise_std = j.value("noise_std", c.noise_std);
    c.distractor_count = j.value("distractor_count", c.distractor_count);
    c.distractor_amplitude = j.value("distractor_amplitude", c.distractor_amplitude);
    c.motion_max_shift = j.value("motion_max_shift", c.motion_max_shift);
    c.motion_period_s = j.value("motion_period_s", c.motion_period_s);
    c.seed = j.value("seed", c.seed);
    return c;
}

}  // namespace

std::string SynthConfig::to_json() const { return config_to_json(*this).dump(); }

SynthConfig SynthConfig::from_json(const std::string& text) {
    return config_from_json(json::parse(text));
}

PulseTrace gen_pulse(const SynthConfig& cfg, Rng& rng) {
    cfg.validate();
    const double dt = 1.0 / cfg.fps;
    const double f_hr = (cfg.hr_lo_bpm + (cfg.hr_hi_bpm - cfg.hr_lo_bpm) * rng.uniform()) / 60.0;
    const double omega = 2.0 * M_PI * f_hr * (1.0 + cfg.omega_jitter * (2.0 * rng.uniform() - 1.0));
    const StateMatrices m = discretize(OscillatorParams(cfg.osc_alpha, omega, dt));

    // Warm up past the transient, then keep the last T samples. The state
    // decays by 1/sqrt(1 + alpha*dt) per step, so size the warmup to shrink
    // the transient below 1e-4 regardless of the clip length.
    const double per_step = 0.5 * std::log1p(cfg.osc_alpha * dt);
    const std::size_t settle =
        per_step > 0.0 ? static_cast<std::size_t>(std::ceil(std::log(1e4) / per_step)) : 0;
    const std::size_t warmup = std::max<std::size_t>(2 * cfg.T, settle);
    const std::size_t total = warmup + cfg.T;
    const double phase = 2.0 * M_PI * rng.uniform();
    TimeSeries forcing(total);
    // Band-limited forcing noise: white noise smoothed by a short moving average.
    TimeSeries white(total);
    for (auto& w : white) w = rng.normal();
    for (std::size_t t = 0; t < total; ++t) {
        double smooth = 0.0;
        std::size_t cnt = 0;
        for (std::size_t k = t >= 4 ? t - 4 : 0; k <= t; ++k) {
            smooth += white[k];
            ++cnt;
        }
        smooth /= static_cast<double>(cnt);
        forcing[t] = cfg.forcing_amplitude *
                     (std::sin(2.0 * M_PI * f_hr * static_cast<double>(t) * dt + phase) +
                      cfg.forcing_noise * smooth);
    }

    const TimeSeries z_full = ssm_rollout(m, forcing);
    TimeSeries z(z_full.begin() + static_cast<std::ptrdiff_t>(warmup), z_full.end());

    double mean = 0.0;
    for (double v : z) mean += v;
    mean /= static_cast<double>(z.size());
    double var = 0.0;
    for (double v : z) var += (v - mean) * (v - mean);
    var /= static_cast<double>(z.size());
    if (var < 1e-24) throw std::runtime_error("gen_pulse: degenerate (zero-variance) signal");
    const double inv_std = 1.0 / std::sqrt(var);
    for (double& v : z) v = (v - mean) * inv_std;

    return PulseTrace{std::move(z), f_hr * 60.0};
}

ClipRecord render_clip(const PulseTrace& pulse, const SynthConfig& cfg, Rng& rng) {
    cfg.validate();
    if (pulse.pulse.size() != cfg.T) {
        throw std::invalid_argument("render_clip: pulse length must equal T");
    }
    const std::size_t T = cfg.T, H = cfg.H, W = cfg.W;
    const double dt = 1.0 / cfg.fps;

    // Smooth nonnegative gain map concentrated in a few patches.
    std::vector<double> gain(H * W, 0.0);
    for (std::size_t p = 0; p < cfg.n_patches; ++p) {
        const double cy = H * (0.2 + 0.6 * rng.uniform());
        const double cx = W * (0.2 + 0.6 * rng.uniform());
        const double sig = (0.08 + 0.10 * rng.uniform()) * static_cast<double>(std::min(H, W));
        const double amp = cfg.patch_strength * (0.6 + 0.4 * rng.uniform());
        for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t w = 0; w < W; ++w) {
                const double dy = (static_cast<double>(h) - cy) / sig;
                const double dx = (static_cast<double>(w) - cx) / sig;
                gain[h * W + w] += amp * std::exp(-0.5 * (dy * dy + dx * dx));
            }
        }
    }

    // Confounders: slow "respiration-like" signals in disjoint-ish regions.
    struct Distractor {
        std::vector<double> map;
        double freq_hz, phase;
    };
    std::vector<Distractor> distractors;
    for (std::size_t d = 0; d < cfg.distractor_count; ++d) {
        Distractor ds;
        ds.map.assign(H * W, 0.0);
        const double cy = H * rng.uniform();
        const double cx = W * rng.uniform();
        const double sig = (0.10 + 0.10 * rng.uniform()) * static_cast<double>(std::min(H, W));
        for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t w = 0; w < W; ++w) {
                const double dy = (static_cast<double>(h) - cy) / sig;
                const double dx = (static_cast<double>(w) - cx) / sig;
                ds.map[h * W + w] = cfg.distractor_amplitude * std::exp(-0.5 * (dy * dy + dx * dx));
            }
        }
        ds.freq_hz = 0.15 + 0.45 * rng.uniform();
        ds.phase = 2.0 * M_PI * rng.uniform();
        distractors.push_back(std::move(ds));
    }

    const double motion_phase_x = 2.0 * M_PI * rng.uniform();
    const double motion_phase_y = 2.0 * M_PI * rng.uniform();

    const double base[3] = {0.45, 0.52, 0.40};
    const double chan_gain[3] = {0.55, 1.0, 0.65};  // green channel dominates

    ClipRecord rec;
    rec.frames = Tensor({3, T, H, W});
    rec.pulse_gt = pulse.pulse;
    rec.hr_gt_bpm = pulse.hr_bpm;
    rec.meta = cfg;

    for (std::size_t t = 0; t < T; ++t) {
        long sx = 0, sy = 0;
        if (cfg.motion_max_shift > 0.0 && cfg.motion_period_s > 0.0) {
            const double ph = 2.0 * M_PI * static_cast<double>(t) * dt / cfg.motion_period_s;
            sx = std::lround(cfg.motion_max_shift * std::sin(ph + motion_phase_x));
            sy = std::lround(cfg.motion_max_shift * std::sin(ph + motion_phase_y));
        }
        std::vector<double> spatial(H * W);
        for (std::size_t h = 0; h < H; ++h) {
            const std::size_t hs = static_cast<std::size_t>(
                std::clamp<long>(static_cast<long>(h) - sy, 0, static_cast<long>(H) - 1));
            for (std::size_t w = 0; w < W; ++w) {
                const std::size_t ws = static_cast<std::size_t>(
                    std::clamp<long>(static_cast<long>(w) - sx, 0, static_cast<long>(W) - 1));
                double v = gain[hs * W + ws] * pulse.pulse[t];
                for (const auto& ds : distractors) {
                    const double dsig =
                        std::sin(2.0 * M_PI * ds.freq_hz * static_cast<double>(t) * dt + ds.phase);
                    v += ds.map[hs * W + ws] * dsig;
                }
                spatial[h * W + w] = v;
            }
        }
        for (std::size_t c = 0; c < 3; ++c) {
            double* fp = rec.frames.data() + (c * T + t) * H * W;
            for (std::size_t s = 0; s < H * W; ++s) {
                double v = base[c] + chan_gain[c] * spatial[s];
                if (cfg.noise_std > 0.0) v += cfg.noise_std * rng.normal();
                // quantize to storage precision so disk round trips are bit-exact
                fp[s] = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    for (double& v : rec.pulse_gt) v = static_cast<float>(v);
    return rec;
}

namespace {

// Dominant frequency by least-squares sinusoid fit on a fine grid. Unlike a
// windowed-periodogram argmax, the fit models the negative-frequency mirror
// exactly, so it stays unbiased on the short traces used here.
double dominant_freq_ls(const TimeSeries& x, double fps, double f_lo, double f_hi) {
    const std::size_t T = x.size();
    const double n = static_cast<double>(T);
    double best_f = f_lo, best_e = -1.0;
    // Fit a*cos + b*sin + m at each candidate frequency. The intercept matters
    // for short windows: the series is zero-meaned over a non-integer number
    // of periods, which would bias a fit without a constant term.
    for (double f = f_lo; f <= f_hi; f += 0.004) {
        double cc = 0.0, ss = 0.0, cs = 0.0, c1 = 0.0, s1 = 0.0;
        double xc = 0.0, xs = 0.0, x1 = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const double ang = 2.0 * M_PI * f * static_cast<double>(t) / fps;
            const double c = std::cos(ang), s = std::sin(ang);
            cc += c * c;
            ss += s * s;
            cs += c * s;
            c1 += c;
            s1 += s;
            xc += x[t] * c;
            xs += x[t] * s;
            x1 += x[t];
        }
        const double det = cc * (ss * n - s1 * s1) - cs * (cs * n - s1 * c1) +
                           c1 * (cs * s1 - ss * c1);
        if (std::abs(det) <= 1e-12) continue;
        const double a = (xc * (ss * n - s1 * s1) - cs * (xs * n - s1 * x1) +
                          c1 * (xs * s1 - ss * x1)) /
                         det;
        const double b = (cc * (xs * n - s1 * x1) - xc * (cs * n - s1 * c1) +
                          c1 * (cs * x1 - xs * c1)) /
                         det;
        const double m = (cc * (ss * x1 - xs * s1) - cs * (cs * x1 - xs * c1) +
                          xc * (cs * s1 - ss * c1)) /
                         det;
        const double energy = a * xc + b * xs + m * x1;  // explained energy of the fit
        if (energy > best_e) {
            best_e = energy;
            best_f = f;
        }
    }
    return best_f;
}

}  // namespace

ClipRecord generate_clip(const SynthConfig& cfg, Rng& rng) {
    const PulseTrace pulse = gen_pulse(cfg, rng);
    ClipRecord rec = render_clip(pulse, cfg, rng);
    const double f_est = dominant_freq_ls(rec.pulse_gt, cfg.fps, cfg.hr_lo_bpm / 60.0 - 0.1,
                                          cfg.hr_hi_bpm / 60.0 + 0.1);
    if (std::abs(60.0 * f_est - rec.hr_gt_bpm) > 1.0) {
        throw std::runtime_error("generate_clip: HR self-check failed (dominant frequency " +
                                 std::to_string(60.0 * f_est) + " bpm vs ground truth " +
                                 std::to_string(rec.hr_gt_bpm) + " bpm)");
    }
    return rec;
}

namespace {

constexpr std::uint32_t kClipVersion = 1;

void put_u32(std::ofstream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& is, const std::string& path, const char* what) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) {
        throw std::runtime_error("read_clip: truncated " + std::string(what) + " in " + path);
    }
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void put_f32(std::ofstream& os, const double* src, std::size_t n) {
    std::vector<float> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<float>(src[i]);
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(n * sizeof(float)));
}

}  // namespace

void write_clip(const std::string& path, const ClipRecord& rec) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("write_clip: cannot open " + path);
    os.write("PHCL", 4);
    put_u32(os, kClipVersion);
    const std::size_t C = rec.frames.dim(0), T = rec.frames.dim(1), H = rec.frames.dim(2),
                      W = rec.frames.dim(3);
    put_u32(os, static_cast<std::uint32_t>(C));
    put_u32(os, static_cast<std::uint32_t>(T));
    put_u32(os, static_cast<std::uint32_t>(H));
    put_u32(os, static_cast<std::uint32_t>(W));
    put_f32(os, rec.frames.data(), rec.frames.numel());
    put_f32(os, rec.pulse_gt.data(), rec.pulse_gt.size());
    json meta = config_to_json(rec.meta);
    meta["hr_gt_bpm"] = rec.hr_gt_bpm;
    const std::string mtext = meta.dump();
    put_u32(os, static_cast<std::uint32_t>(mtext.size()));
    os.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
    if (!os) throw std::runtime_error("write_clip: write failed for " + path);
}

ClipRecord read_clip(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_clip: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "PHCL", 4) != 0) {
        throw std::runtime_error("read_clip: bad magic at byte offset 0 in " + path);
    }
    const std::uint32_t version = get_u32(is, path, "version");
    if (version != kClipVersion) {
        throw std::runtime_error("read_clip: version mismatch, expected " +
                                 std::to_string(kClipVersion) + ", found " +
                                 std::to_string(version));
    }
    const std::uint32_t C = get_u32(is, path, "C");
    const std::uint32_t T = get_u32(is, path, "T");
    const std::uint32_t H = get_u32(is, path, "H");
    const std::uint32_t W = get_u32(is, path, "W");

    ClipRecord rec;
    rec.frames = Tensor({C, T, H, W});
    {
        std::vector<float> buf(rec.frames.numel());
        is.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!is) {
            throw std::runtime_error("read_clip: truncated frame data at byte offset " +
                                     std::to_string(24) + " in " + path);
        }
        for (std::size_t i = 0; i < buf.size(); ++i) rec.frames[i] = buf[i];
    }
    {
        std::vector<float> buf(T);
        is.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!is) throw std::runtime_error("read_clip: truncated pulse data in " + path);
        rec.pulse_gt.assign(buf.begin(), buf.end());
    }
    const std::uint32_t mlen = get_u32(is, path, "metadata length");
    std::string mtext(mlen, '\0');
    is.read(mtext.data(), mlen);
    if (!is) throw std::runtime_error("read_clip: truncated metadata in " + path);
    json meta = json::parse(mtext);
    rec.meta = config_from_json(meta);
    rec.hr_gt_bpm = meta.value("hr_gt_bpm", 0.0);
    return rec;
}

void generate_dataset(const SynthConfig& cfg, std::size_t n_clips, const std::string& dir) {
    cfg.validate();
    std::filesystem::create_directories(dir);
    const Rng base(cfg.seed);
    json clips = json::array();
    for (std::size_t i = 0; i < n_clips; ++i) {
        Rng clip_rng = base.fork(i);
        SynthConfig clip_cfg = cfg;
        clip_cfg.seed = clip_rng.seed();
        const ClipRecord rec = generate_clip(clip_cfg, clip_rng);
        const std::string name = "clip_" + std::to_string(i) + ".phcl";
        const std::string path = dir + "/" + name;
        write_clip(path, rec);
        std::ostringstream hash;
        hash << "0x" << std::hex << fnv1a_file(path);
        clips.push_back({{"file", name}, {"hash", hash.str()}, {"hr_gt_bpm", rec.hr_gt_bpm}});
    }
    json manifest = {{"config", config_to_json(cfg)}, {"n_clips", n_clips}, {"clips", clips}};
    std::ofstream os(dir + "/manifest.json", std::ios::trunc);
    if (!os) throw std::runtime_error("generate_dataset: cannot write manifest in " + dir);
    os << manifest.dump(2) << "\n";
}

std::vector<std::string> dataset_clip_paths(const std::string& dir) {
    std::ifstream is(dir + "/manifest.json");
    if (!is) throw std::runtime_error("dataset_clip_paths: missing manifest in " + dir);
    json manifest = json::parse(is);
    std::vector<std::string> paths;
    for (const auto& c : manifest.at("clips")) {
        paths.push_back(dir + "/" + c.at("file").get<std::string>());
    }
    return paths;
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("fnv1a_file: cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        const std::streamsize n = is.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (n < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    return h;
}

}  // namespace phase
