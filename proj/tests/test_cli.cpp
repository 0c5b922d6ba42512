#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "flexifilm/checkpoint.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "flexifilm_cli_test";

int run(const std::string& args, const std::string& stdout_file = "/dev/null") {
    const std::string cmd = std::string(FLEXIFILM_CLI) + " " + args + " > " + stdout_file + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return flexifilm::read_file_bytes(p); }

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "manifest.json")); }

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
        ASSERT_EQ(run("gen-data --clips 12 --seed 3 --out-dir " + (kWork / "data").string()), 0);
        ASSERT_EQ(run("train --data " + (kWork / "data").string() + " --steps 2 --base-steps 1 --n-g 4 --n-c-max 2 --out-dir " +
                      (kWork / "train").string()),
                  0);
    }
    static void TearDownTestSuite() { fs::remove_all(kWork); }

    static std::string ckpt() { return (kWork / "train" / "checkpoint").string(); }
};

}  // namespace

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run(""), 1);
    EXPECT_EQ(run("no-such-command"), 1);
    EXPECT_EQ(run("sample --overlap 2"), 1);  // missing required options
    EXPECT_EQ(run("sample --checkpoint " + ckpt() + " --out-dir " + (kWork / "bad").string() + " --overlap 16"), 1);
}

TEST_F(Cli, HelpOnEverySubcommand) {
    EXPECT_EQ(run("--help"), 0);
    for (const char* sub : {"gen-data", "train", "sample", "drift-probe", "analyze-schedule", "oracle-check", "evaluate"})
        EXPECT_EQ(run(std::string(sub) + " --help"), 0) << sub;
}

TEST_F(Cli, RuntimeErrorExitsTwo) {
    EXPECT_EQ(run("evaluate --input " + (kWork / "data" / "dataset.json").string()), 2);
}

TEST_F(Cli, OracleCheckDeterministic) {
    ASSERT_EQ(run("oracle-check --seed 7 --samples 2000", (kWork / "o1.json").string()), 0);
    ASSERT_EQ(run("oracle-check --seed 7 --samples 2000", (kWork / "o2.json").string()), 0);
    EXPECT_EQ(slurp(kWork / "o1.json"), slurp(kWork / "o2.json"));
    const auto j = nlohmann::json::parse(slurp(kWork / "o1.json"));
    EXPECT_EQ(j.at("samples"), 2000);
}

TEST_F(Cli, SampleRecordsFrameCountLaw) {
    const fs::path a = kWork / "sample_a", b = kWork / "sample_b";
    const std::string flags = " --rounds 3 --frames-per-round 16 --overlap 4 --steps 2 --seed 5 --checkpoint " + ckpt();
    ASSERT_EQ(run("sample --out-dir " + a.string() + flags), 0);
    ASSERT_EQ(run("sample --out-dir " + b.string() + flags), 0);
    const auto m = manifest(a);
    EXPECT_EQ(m.at("subcommand"), "sample");
    EXPECT_EQ(m.at("results").at("total_frames"), 40);
    EXPECT_EQ(m.at("results").at("naive_frames"), 48);
    EXPECT_EQ(m.at("checkpoint_hash"), flexifilm::checkpoint_hash(ckpt()));
    EXPECT_TRUE(fs::exists(a / "frames" / "frame_00039.ppm"));
    EXPECT_FALSE(fs::exists(a / "frames" / "frame_00040.ppm"));
    // identical manifests, identical artifacts
    EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));
    EXPECT_EQ(slurp(a / "latent.fft1"), slurp(b / "latent.fft1"));
    EXPECT_EQ(slurp(a / "frames" / "frame_00017.ppm"), slurp(b / "frames" / "frame_00017.ppm"));
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
    const fs::path cfg = kWork / "sample.cfg";
    std::ofstream(cfg) << "rounds = 2\nframes_per_round = 6\noverlap = 2\nsteps = 1\n";
    const fs::path out = kWork / "sample_cfg";
    ASSERT_EQ(run("sample --config " + cfg.string() + " --overlap 1 --checkpoint " + ckpt() + " --out-dir " + out.string()), 0);
    const auto m = manifest(out);
    EXPECT_EQ(m.at("config").at("overlap"), 1);
    EXPECT_EQ(m.at("config").at("rounds"), 2);
    EXPECT_EQ(m.at("results").at("total_frames"), 11);
}

TEST_F(Cli, TrainOutputsAndRerun) {
    const fs::path again = kWork / "train_again";
    ASSERT_EQ(run("train --data " + (kWork / "data").string() + " --steps 2 --base-steps 1 --n-g 4 --n-c-max 2 --out-dir " +
                  again.string()),
              0);
    EXPECT_EQ(slurp(kWork / "train" / "manifest.json"), slurp(again / "manifest.json"));
    EXPECT_EQ(slurp(kWork / "train" / "loss.csv"), slurp(again / "loss.csv"));
    const auto m = manifest(again);
    EXPECT_EQ(m.at("config").at("steps"), 2);
    EXPECT_EQ(m.at("results").at("steps_run"), 3);
}

TEST_F(Cli, DriftProbeAndScheduleAndEvaluate) {
    const fs::path drift = kWork / "drift";
    ASSERT_EQ(run("drift-probe --rounds 3 --frames-per-round 4 --overlap 1 --steps 1 --r-values 0,0.7 --checkpoint " + ckpt() +
                  " --out-dir " + drift.string()),
              0);
    std::ifstream csv(drift / "drift.csv");
    std::string line;
    int rows = -1;
    while (std::getline(csv, line)) ++rows;
    EXPECT_EQ(rows, 6);

    const fs::path sched = kWork / "sched";
    ASSERT_EQ(run("analyze-schedule --out-dir " + sched.string()), 0);
    const auto summary = nlohmann::json::parse(slurp(sched / "summary.json"));
    EXPECT_TRUE(summary.at("flagged").get<bool>());
    ASSERT_EQ(run("analyze-schedule --rescale --out-dir " + sched.string()), 0);
    EXPECT_FALSE(nlohmann::json::parse(slurp(sched / "summary.json")).at("flagged").get<bool>());

    const fs::path clip = kWork / "data" / "clips" / "clip_00000.fft1";
    ASSERT_EQ(run("evaluate --input " + clip.string() + " --ref " + clip.string(), (kWork / "eval.json").string()), 0);
    const auto metrics = nlohmann::json::parse(slurp(kWork / "eval.json"));
    EXPECT_DOUBLE_EQ(metrics.at("psnr_vs_ref").get<double>(), 99.0);
    EXPECT_NEAR(metrics.at("ssim_vs_ref").get<double>(), 1.0, 1e-9);
}
