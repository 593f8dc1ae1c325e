// phase: command-line front end for the rPPG pipeline.
//
// Subcommands: verify, synth, train, eval, bounds, export. All outputs are
// machine-readable (JSON, CSV); every run writes run.json with the fully
// resolved configuration. Seed precedence: --seed flag > PHASE_SEED env >
// config file > default 42.
//
// Exit codes: 0 success, 1 check failure, 2 usage error, 3 I/O error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "phase/eval.hpp"
#include "phase/model.hpp"
#include "phase/oscillator.hpp"
#include "phase/synth.hpp"
#include "phase/training.hpp"
#include "phase/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json load_json_file(const std::string& path) {
    if (!fs::exists(path)) throw IoError("file not found: " + path);
    std::ifstream is(path);
    if (!is) throw IoError("cannot open: " + path);
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        // nlohmann reports line/column in the message
        throw InputError(std::string("malformed JSON in ") + path + ": " + e.what());
    }
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed,
                           const std::optional<std::uint64_t>& file_seed) {
    if (flag_seed) return *flag_seed;
    if (const char* env = std::getenv("PHASE_SEED")) {
        try {
            return std::stoull(env);
        } catch (...) {
            throw InputError("PHASE_SEED is not an unsigned integer");
        }
    }
    if (file_seed) return *file_seed;
    return 42;
}

void write_run_json(const std::string& dir, const std::string& subcommand,
                    const json& resolved) {
    fs::create_directories(dir);
    json run = {{"subcommand", subcommand},
                {"resolved_config", resolved},
                {"timestamp_unix",
                 std::chrono::duration_cast<std::chrono::seconds>(
                     std::chrono::system_clock::now().time_since_epoch())
                     .count()}};
    std::ofstream os(dir + "/run.json", std::ios::trunc);
    if (!os) throw IoError("cannot write " + dir + "/run.json");
    os << run.dump(2) << "\n";
}

phase::ModelConfig model_from_json(const json& j, std::size_t data_T, std::size_t data_H,
                                   std::size_t data_W) {
    phase::ModelConfig mc =
        j.value("preset", std::string("mini")) == "paper" ? phase::ModelConfig::paper()
                                                          : phase::ModelConfig::mini();
    mc.T = data_T;
    mc.H = data_H;
    mc.W = data_W;
    if (j.contains("tcn_layers")) mc.tcn_layers = j["tcn_layers"].get<std::size_t>();
    if (j.contains("tcn_channels")) mc.tcn_channels = j["tcn_channels"].get<std::size_t>();
    if (j.contains("asf_enabled")) mc.asf_enabled = j["asf_enabled"].get<bool>();
    if (j.contains("est_channels")) {
        mc.est_channels = j["est_channels"].get<std::vector<std::size_t>>();
    }
    mc.validate();
    return mc;
}

json model_to_json(const phase::ModelConfig& mc) {
    return json{{"in_channels", mc.in_channels}, {"est_channels", mc.est_channels},
                {"asf_enabled", mc.asf_enabled}, {"tcn_layers", mc.tcn_layers},
                {"tcn_channels", mc.tcn_channels}, {"tcn_kernel", mc.tcn_kernel},
                {"T", mc.T},     {"H", mc.H},
                {"W", mc.W}};
}

std::vector<phase::ClipRecord> load_dataset(const std::string& dir) {
    std::vector<phase::ClipRecord> clips;
    for (const std::string& p : phase::dataset_clip_paths(dir)) {
        clips.push_back(phase::read_clip(p));
    }
    if (clips.empty()) throw InputError("dataset is empty: " + dir);
    return clips;
}

int cmd_verify(bool inject_fault, const std::string& out_dir, std::uint64_t seed) {
    phase::VerifyOptions opts;
    opts.inject_zas_fault = inject_fault;
    opts.seed = seed;
    const phase::VerifyReport rep = phase::run_verify(opts);
    json checks = json::array();
    for (const auto& c : rep.checks) {
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        std::cout << (c.pass ? "pass " : "FAIL ") << c.name
                  << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
    }
    json report = {{"checks", checks},
                   {"checks_total", rep.checks_total},
                   {"checks_passed", rep.checks_passed}};
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream os(out_dir + "/verify.json", std::ios::trunc);
        os << report.dump(2) << "\n";
        write_run_json(out_dir, "verify",
                       json{{"inject_zas_fault", inject_fault}, {"seed", seed}});
    }
    std::cout << rep.checks_passed << "/" << rep.checks_total << " checks passed\n";
    return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"phase: physics-informed rPPG pipeline"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> flag_seed;
    std::string config_path, out_path, data_dir, ckpt_path, log_path;
    std::size_t n_clips = 16, clip_index = 0;
    bool inject_fault = false;

    auto* c_verify = app.add_subcommand("verify", "run the full invariant suite");
    c_verify->add_flag("--inject-zas-fault", inject_fault,
                       "test hook: corrupt one swapped index");
    c_verify->add_option("--out", out_path, "report directory");
    c_verify->add_option("--seed", flag_seed, "rng seed");

    auto* c_synth = app.add_subcommand("synth", "generate a synthetic dataset");
    c_synth->add_option("--config", config_path, "SynthConfig JSON");
    c_synth->add_option("--out", out_path, "dataset directory")->required();
    c_synth->add_option("--n", n_clips, "number of clips");
    c_synth->add_option("--seed", flag_seed, "rng seed");

    auto* c_train = app.add_subcommand("train", "train on a dataset directory");
    c_train->add_option("--data", data_dir, "dataset directory")->required();
    c_train->add_option("--config", config_path, "TrainConfig/model JSON");
    c_train->add_option("--out", out_path, "checkpoint path")->required();
    c_train->add_option("--log", log_path, "JSON-lines training log");
    c_train->add_option("--seed", flag_seed, "rng seed");

    auto* c_eval = app.add_subcommand("eval", "evaluate a checkpoint");
    c_eval->add_option("--data", data_dir, "dataset directory")->required();
    c_eval->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
    c_eval->add_option("--config", config_path, "model JSON (must match the checkpoint)");
    c_eval->add_option("--out", out_path, "report JSON path")->required();

    auto* c_bounds = app.add_subcommand("bounds", "generalization-bound calculator");
    c_bounds->add_option("--config", config_path, "BoundParams JSON");
    c_bounds->add_option("--out", out_path, "report JSON path");

    auto* c_export = app.add_subcommand("export", "CSV waveform and PSD for one clip");
    c_export->add_option("--data", data_dir, "dataset directory")->required();
    c_export->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
    c_export->add_option("--config", config_path, "model JSON (must match the checkpoint)");
    c_export->add_option("--clip", clip_index, "clip index");
    c_export->add_option("--out", out_path, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (c_verify->parsed()) {
            return cmd_verify(inject_fault, out_path, resolve_seed(flag_seed, std::nullopt));
        }

        if (c_synth->parsed()) {
            phase::SynthConfig cfg;
            std::optional<std::uint64_t> file_seed;
            if (!config_path.empty()) {
                const json j = load_json_file(config_path);
                cfg = phase::SynthConfig::from_json(j.dump());
                if (j.contains("seed")) file_seed = j["seed"].get<std::uint64_t>();
                if (j.contains("n_clips")) n_clips = j["n_clips"].get<std::size_t>();
            }
            cfg.seed = resolve_seed(flag_seed, file_seed);
            cfg.validate();
            phase::generate_dataset(cfg, n_clips, out_path);
            json resolved = json::parse(cfg.to_json());
            resolved["n_clips"] = n_clips;
            write_run_json(out_path, "synth", resolved);
            std::cout << "wrote " << n_clips << " clips to " << out_path << "\n";
            return 0;
        }

        if (c_train->parsed()) {
            const auto clips = load_dataset(data_dir);
            json j = config_path.empty() ? json::object() : load_json_file(config_path);
            phase::TrainConfig tc;
            tc.epochs = j.value("epochs", tc.epochs);
            tc.batch_size = j.value("batch_size", tc.batch_size);
            tc.learning_rate = j.value("learning_rate", tc.learning_rate);
            tc.lambda = j.value("lambda", tc.lambda);
            tc.res_alpha = j.value("res_alpha", tc.res_alpha);
            tc.res_omega = j.value("res_omega", tc.res_omega);
            std::optional<std::uint64_t> file_seed;
            if (j.contains("seed")) file_seed = j["seed"].get<std::uint64_t>();
            tc.seed = resolve_seed(flag_seed, file_seed);
            tc.validate();

            const phase::ModelConfig mc =
                model_from_json(j.value("model", json::object()), clips[0].frames.dim(1),
                                clips[0].frames.dim(2), clips[0].frames.dim(3));
            phase::PhaseNet net(mc, tc.seed);
            const auto reports = phase::train(net, clips, tc, log_path);
            net.save_checkpoint(out_path);

            json resolved = {{"epochs", tc.epochs},       {"batch_size", tc.batch_size},
                             {"learning_rate", tc.learning_rate}, {"lambda", tc.lambda},
                             {"seed", tc.seed},           {"model", model_to_json(mc)}};
            write_run_json(fs::path(out_path).parent_path().string().empty()
                               ? "."
                               : fs::path(out_path).parent_path().string(),
                           "train", resolved);
            if (!reports.empty()) {
                std::cout << "final l_pred " << reports.back().l_pred << ", total "
                          << reports.back().total << "\n";
            }
            return 0;
        }

        if (c_eval->parsed() || c_export->parsed()) {
            const auto clips = load_dataset(data_dir);
            json j = config_path.empty() ? json::object() : load_json_file(config_path);
            const phase::ModelConfig mc =
                model_from_json(j.value("model", j), clips[0].frames.dim(1),
                                clips[0].frames.dim(2), clips[0].frames.dim(3));
            phase::PhaseNet net(mc, 0);
            if (!fs::exists(ckpt_path)) throw IoError("file not found: " + ckpt_path);
            net.load_checkpoint(ckpt_path);
            const double fps = clips[0].meta.fps;

            if (c_export->parsed()) {
                if (clip_index >= clips.size()) {
                    throw InputError("clip index out of range: " + std::to_string(clip_index));
                }
                const phase::ClipRecord& rec = clips[clip_index];
                phase::Tensor video = rec.frames.reshape(
                    {1, rec.frames.dim(0), rec.frames.dim(1), rec.frames.dim(2),
                     rec.frames.dim(3)});
                const phase::Tensor yhat = net.forward(video);
                phase::TimeSeries pred(yhat.data(), yhat.data() + yhat.numel());
                std::vector<double> taxis(pred.size());
                for (std::size_t t = 0; t < pred.size(); ++t) {
                    taxis[t] = static_cast<double>(t) / fps;
                }
                phase::export_csv(out_path, "t", taxis, pred, rec.pulse_gt);
                const phase::Spectrum sp = phase::psd_welch(pred, fps);
                const phase::Spectrum sg = phase::psd_welch(rec.pulse_gt, fps);
                const std::string psd_path = out_path + ".psd.csv";
                phase::export_csv(psd_path, "f", sp.freq_hz, sp.power, sg.power);
                std::cout << "wrote " << out_path << " and " << psd_path << "\n";
                return 0;
            }

            std::vector<double> pred_hr, gt_hr;
            double r_sum = 0.0;
            std::size_t r_count = 0;
            for (const auto& rec : clips) {
                phase::Tensor video = rec.frames.reshape(
                    {1, rec.frames.dim(0), rec.frames.dim(1), rec.frames.dim(2),
                     rec.frames.dim(3)});
                const phase::Tensor yhat = net.forward(video);
                phase::TimeSeries pred(yhat.data(), yhat.data() + yhat.numel());
                pred_hr.push_back(phase::estimate_hr(pred, fps).hr_bpm);
                gt_hr.push_back(rec.hr_gt_bpm);
                try {
                    r_sum += phase::pearson_corr(pred, rec.pulse_gt);
                    ++r_count;
                } catch (const std::invalid_argument&) {
                    // constant prediction contributes nothing to waveform r
                }
            }
            const phase::MetricsReport m = phase::metrics(pred_hr, gt_hr);
            json report = {{"n_clips", clips.size()},
                           {"hr_mae_bpm", m.mae_bpm},
                           {"hr_rmse_bpm", m.rmse_bpm},
                           {"waveform_r_mean",
                            r_count ? json(r_sum / static_cast<double>(r_count)) : json()}};
            if (m.pearson_r) report["hr_pearson_r"] = *m.pearson_r;
            std::ofstream os(out_path, std::ios::trunc);
            if (!os) throw IoError("cannot write " + out_path);
            os << report.dump(2) << "\n";
            const std::string dir = fs::path(out_path).parent_path().string();
            write_run_json(dir.empty() ? "." : dir, "eval",
                           json{{"data", data_dir}, {"ckpt", ckpt_path},
                                {"model", model_to_json(mc)}});
            std::cout << report.dump(2) << "\n";
            return 0;
        }

        if (c_bounds->parsed()) {
            json j = config_path.empty() ? json::object() : load_json_file(config_path);
            phase::BoundParams b;
            b.K = j.value("K", b.K);
            b.rho = j.value("rho", b.rho);
            b.C0 = j.value("C0", b.C0);
            b.B0 = j.value("B0", b.B0);
            b.M_in = j.value("M_in", b.M_in);
            b.epsilon = j.value("epsilon", b.epsilon);
            b.n = j.value("n", b.n);
            b.R = j.value("R", b.R);
            b.L_ell = j.value("L_ell", b.L_ell);
            b.delta = j.value("delta", b.delta);
            b.validate();
            const double src = j.value("src_risk", 0.0);
            const double w1 = j.value("w1", 0.0);
            json report = {{"rademacher_bound", phase::rademacher_bound(b)},
                           {"fir_length_for_eps", phase::fir_length_for_eps(b)},
                           {"recommended_R",
                            phase::recommended_R(static_cast<double>(b.n), b.rho)},
                           {"target_risk_bound", phase::target_risk_bound(b, src, w1)},
                           {"U", b.U()},
                           {"L", b.L()},
                           {"Gamma", b.Gamma()}};
            if (!out_path.empty()) {
                std::ofstream os(out_path, std::ios::trunc);
                if (!os) throw IoError("cannot write " + out_path);
                os << report.dump(2) << "\n";
                const std::string dir = fs::path(out_path).parent_path().string();
                write_run_json(dir.empty() ? "." : dir, "bounds", j);
            }
            std::cout << report.dump(2) << "\n";
            return 0;
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
