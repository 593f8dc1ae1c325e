#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "phase/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli() {
    const char* p = std::getenv("PHASE_CLI");
    REQUIRE_MESSAGE(p != nullptr, "PHASE_CLI must point at the built binary");
    return p;
}

int run(const std::string& args, const std::string& out_file = "") {
    std::string cmd = cli() + " " + args + " >" +
                      (out_file.empty() ? std::string("/dev/null") : out_file) + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path p;
    explicit TempDir(const std::string& name) : p(fs::temp_directory_path() / name) {
        fs::remove_all(p);
        fs::create_directories(p);
    }
    ~TempDir() { fs::remove_all(p); }
    std::string operator/(const std::string& s) const { return (p / s).string(); }
};

}  // namespace

TEST_CASE("verify passes on a healthy build and fails under fault injection") {
    TempDir tmp("phase_cli_verify");
    CHECK(run("verify") == 0);
    const std::string log = tmp / "fault.txt";
    CHECK(run("verify --inject-zas-fault", log) == 1);
    const std::string text = slurp(log);
    CHECK(text.find("FAIL zas.self_inversion") != std::string::npos);
    CHECK(text.find("checks passed") != std::string::npos);
}

TEST_CASE("verify report counts checks") {
    TempDir tmp("phase_cli_report");
    CHECK(run("verify --out " + (tmp / "rep")) == 0);
    const json rep = json::parse(slurp(tmp / "rep/verify.json"));
    CHECK(rep["checks_total"].get<int>() > 0);
    CHECK(rep["checks_passed"] == rep["checks_total"]);
    CHECK(fs::exists(tmp / "rep/run.json"));
}

TEST_CASE("usage errors exit 2") {
    CHECK(run("--no-such-flag") == 2);
    CHECK(run("verify --bogus") == 2);
    CHECK(run("") == 2);  // missing subcommand
}

TEST_CASE("bounds reproduces the known rademacher value") {
    TempDir tmp("phase_cli_bounds");
    const std::string cfg = tmp / "b.json";
    std::ofstream(cfg) << R"({"K":1,"rho":0.5,"C0":1,"B0":1,"M_in":1,"R":8,"n":1000})";
    const std::string out = tmp / "bounds.json";
    CHECK(run("bounds --config " + cfg + " --out " + out) == 0);
    const json rep = json::parse(slurp(out));
    CHECK(std::abs(rep["rademacher_bound"].get<double>() - 0.148932) < 1e-4);
    CHECK(rep.contains("fir_length_for_eps"));
    CHECK(rep.contains("target_risk_bound"));
}

TEST_CASE("malformed json exits 2, missing file exits 3") {
    TempDir tmp("phase_cli_badio");
    const std::string bad = tmp / "bad.json";
    std::ofstream(bad) << "{ not json";
    const std::string log = tmp / "err.txt";
    CHECK(run("bounds --config " + bad, log) == 2);
    CHECK(slurp(log).find("line") != std::string::npos);  // parse error location
    CHECK(run("bounds --config " + (tmp / "nope.json"), log) == 3);
    CHECK(slurp(log).find("nope.json") != std::string::npos);
}

TEST_CASE("synth is deterministic and honors seed precedence") {
    TempDir tmp("phase_cli_synth");
    const std::string cfg = tmp / "s.json";
    std::ofstream(cfg) << R"({"T":32,"H":6,"W":6,"n_clips":2,"seed":5})";
    CHECK(run("synth --config " + cfg + " --out " + (tmp / "a")) == 0);
    CHECK(run("synth --config " + cfg + " --out " + (tmp / "b")) == 0);
    const auto pa = phase::dataset_clip_paths(tmp / "a");
    const auto pb = phase::dataset_clip_paths(tmp / "b");
    REQUIRE(pa.size() == 2);
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(phase::fnv1a_file(pa[i]) == phase::fnv1a_file(pb[i]));
    }

    SUBCASE("flag overrides the config seed") {
        CHECK(run("synth --config " + cfg + " --seed 6 --out " + (tmp / "c")) == 0);
        const auto pc = phase::dataset_clip_paths(tmp / "c");
        CHECK(phase::fnv1a_file(pa[0]) != phase::fnv1a_file(pc[0]));
    }
    SUBCASE("environment seed sits between flag and file") {
        const std::string cmd_env = "PHASE_SEED=6 " + cli() + " synth --config " + cfg +
                                    " --out " + (tmp / "d") + " >/dev/null 2>&1";
        REQUIRE(WEXITSTATUS(std::system(cmd_env.c_str())) == 0);
        const auto pd = phase::dataset_clip_paths(tmp / "d");
        CHECK(phase::fnv1a_file(pd[0]) != phase::fnv1a_file(pa[0]));
        const std::string cmd_both = "PHASE_SEED=6 " + cli() + " synth --config " + cfg +
                                     " --seed 5 --out " + (tmp / "e") + " >/dev/null 2>&1";
        REQUIRE(WEXITSTATUS(std::system(cmd_both.c_str())) == 0);
        const auto pe = phase::dataset_clip_paths(tmp / "e");
        CHECK(phase::fnv1a_file(pe[0]) == phase::fnv1a_file(pa[0]));
    }
    SUBCASE("run.json echoes the resolved config") {
        const json run_rec = json::parse(slurp(tmp / "a/run.json"));
        CHECK(run_rec["subcommand"] == "synth");
        CHECK(run_rec["resolved_config"]["T"] == 32);
        CHECK(run_rec["resolved_config"]["seed"] == 5);
    }
}

TEST_CASE("train then eval and export on a tiny dataset") {
    TempDir tmp("phase_cli_train");
    const std::string scfg = tmp / "s.json";
    std::ofstream(scfg) << R"({"T":32,"H":8,"W":8,"n_clips":3,"seed":11})";
    REQUIRE(run("synth --config " + scfg + " --out " + (tmp / "ds")) == 0);

    const std::string tcfg = tmp / "t.json";
    std::ofstream(tcfg)
        << R"({"epochs":1,"batch_size":2,"learning_rate":1e-4,"lambda":0.1,"seed":2,)"
        << R"("model":{"est_channels":[2,2,2],"tcn_layers":1,"tcn_channels":2}})";
    const std::string ckpt = tmp / "model.phwt";
    REQUIRE(run("train --data " + (tmp / "ds") + " --config " + tcfg + " --out " + ckpt +
                " --log " + (tmp / "log.jsonl")) == 0);
    CHECK(fs::exists(ckpt));
    CHECK(slurp(tmp / "log.jsonl").find("l_pred") != std::string::npos);

    const std::string report = tmp / "report.json";
    REQUIRE(run("eval --data " + (tmp / "ds") + " --ckpt " + ckpt + " --config " + tcfg +
                " --out " + report) == 0);
    const json rep = json::parse(slurp(report));
    CHECK(rep["n_clips"] == 3);
    CHECK(std::isfinite(rep["hr_mae_bpm"].get<double>()));
    CHECK(std::isfinite(rep["hr_rmse_bpm"].get<double>()));

    const std::string csv = tmp / "wave.csv";
    REQUIRE(run("export --data " + (tmp / "ds") + " --ckpt " + ckpt + " --config " + tcfg +
                " --clip 1 --out " + csv) == 0);
    CHECK(slurp(csv).rfind("t,prediction,ground_truth", 0) == 0);
    CHECK(fs::exists(csv + ".psd.csv"));

    SUBCASE("missing checkpoint exits 3") {
        CHECK(run("eval --data " + (tmp / "ds") + " --ckpt " + (tmp / "nope.phwt") +
                  " --config " + tcfg + " --out " + (tmp / "r2.json")) == 3);
    }
}
