#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "flexifilm/synthdata.hpp"
#include "flexifilm/training.hpp"

using namespace flexifilm;

namespace {

using Snapshot = std::vector<std::vector<float>>;

Snapshot snapshot(const FlexiModel& m) {
    Snapshot s;
    for (const auto& p : m.registry().params()) s.emplace_back(p.value.data().begin(), p.value.data().end());
    return s;
}

bool group_unchanged(const Snapshot& a, const Snapshot& b, const std::vector<std::size_t>& idx) {
    for (auto i : idx)
        if (a[i] != b[i]) return false;
    return true;
}

TrainConfig small_train() {
    TrainConfig c;
    c.n_g = 4;
    c.n_c_max = 2;
    c.steps = 3;
    return c;
}

// The denoiser output layer starts at zero, which blocks every upstream
// gradient; routing tests need a live path.
void open_output(FlexiModel& m) {
    Rng rng(99);
    for (auto& v : m.denoiser().out_proj.weight.mutable_data()) v = float(rng.normal() * 0.05);
}

struct Fixture {
    FlexiModel model{ModelConfig{}};
    Dataset data;
    Fixture() : data([] {
        Rng rng(5);
        return make_dataset(10, rng, 8);
    }()) {}

    std::vector<TrainingSample> batch(const TrainConfig& cfg) {
        Rng rng(6);
        return draw_batch(model, data, cfg, rng);
    }
};

}  // namespace

TEST(CoTrain, UnconditionalStepTouchesOnlyPhi) {
    Fixture f;
    open_output(f.model);
    CoTrainState state(f.model);
    const auto before = snapshot(f.model);
    Rng rng(7);
    const auto r = co_train_step(f.model, state, f.batch(small_train()), small_train(), rng, default_schedule(),
                                 Branch::kUnconditional);
    const auto after = snapshot(f.model);
    EXPECT_EQ(r.branch, Branch::kUnconditional);
    EXPECT_TRUE(group_unchanged(before, after, state.part.theta));
    EXPECT_TRUE(group_unchanged(before, after, state.part.frozen));
    EXPECT_FALSE(group_unchanged(before, after, state.part.phi));
    EXPECT_EQ(r.grad_norm_theta, 0.0);
    EXPECT_EQ(r.grad_norm_frozen, 0.0);
    EXPECT_GT(r.grad_norm_phi, 0.0);
}

TEST(CoTrain, ConditionalStepTouchesThetaAndPhi) {
    Fixture f;
    open_output(f.model);
    CoTrainState state(f.model);
    const auto before = snapshot(f.model);
    Rng rng(7);
    const auto r = co_train_step(f.model, state, f.batch(small_train()), small_train(), rng, default_schedule(),
                                 Branch::kConditional);
    const auto after = snapshot(f.model);
    EXPECT_TRUE(group_unchanged(before, after, state.part.frozen));
    EXPECT_FALSE(group_unchanged(before, after, state.part.theta));
    EXPECT_FALSE(group_unchanged(before, after, state.part.phi));
    EXPECT_GT(r.grad_norm_theta, 0.0);
    EXPECT_EQ(r.grad_norm_frozen, 0.0);
}

TEST(CoTrain, BaseStepMovesOutputLayer) {
    Fixture f;
    CoTrainState state(f.model);
    const auto before = snapshot(f.model);
    Rng rng(8);
    TrainConfig cfg = small_train();
    cfg.p = 0.0;
    base_train_step(f.model, state, f.batch(cfg), cfg, rng, default_schedule());
    const auto after = snapshot(f.model);
    // zero-initialised output layer: only it can move on the first step
    const auto& params = f.model.registry().params();
    std::size_t checked = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].name.rfind("denoiser.out.", 0) != 0) continue;
        EXPECT_NE(before[i], after[i]) << params[i].name;
        ++checked;
    }
    EXPECT_GT(checked, 0u);
}

TEST(CoTrain, BaseBranchCannotBeForced) {
    Fixture f;
    CoTrainState state(f.model);
    Rng rng(9);
    EXPECT_THROW(co_train_step(f.model, state, f.batch(small_train()), small_train(), rng, default_schedule(), Branch::kBase),
                 ContractError);
    EXPECT_THROW(co_train_step(f.model, state, {}, small_train(), rng, default_schedule()), ContractError);
}

TEST(Draws, UnconditionalRateNearP) {
    Rng rng(10);
    int uncond = 0;
    for (int i = 0; i < 10000; ++i) uncond += draw_branch(rng, 0.1) == Branch::kUnconditional;
    EXPECT_GE(uncond / 10000.0, 0.08);
    EXPECT_LE(uncond / 10000.0, 0.12);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(draw_branch(rng, 0.0), Branch::kConditional);
        EXPECT_EQ(draw_branch(rng, 1.0), Branch::kUnconditional);
    }
}

TEST(Draws, OverlapUniformOverRange) {
    Rng rng(11);
    TrainConfig cfg;
    std::vector<int> counts(cfg.n_c_max + 1, 0);
    for (int i = 0; i < 10000; ++i) ++counts.at(draw_overlap(rng, cfg));
    EXPECT_EQ(counts[0], 0);
    for (std::size_t k = cfg.n_c_min; k <= cfg.n_c_max; ++k) EXPECT_NEAR(counts[k], 2500, 250) << k;
}

TEST(BuildSample, ConditionIsTargetHeadBitwise) {
    Fixture f;
    const Clip clip = f.data.clip(0);
    for (std::size_t n_c : {1, 3, 8}) {
        const auto s = build_sample(f.model.codec(), clip.pixels, clip.caption, n_c, 8);
        ASSERT_EQ(s.cond.frames.extent(0), n_c);
        const std::size_t per = s.target.numel() / 8;
        EXPECT_TRUE(std::equal(s.cond.frames.data().begin(), s.cond.frames.data().end(), s.target.data().begin()));
        EXPECT_EQ(s.cond.frames.numel(), per * n_c);
        EXPECT_EQ(s.cond.text, clip.caption);
    }
}

TEST(BuildSample, Errors) {
    Fixture f;
    const Clip clip = f.data.clip(0);
    EXPECT_THROW(build_sample(f.model.codec(), clip.pixels, clip.caption, 1, 9), ShapeError);
    EXPECT_THROW(build_sample(f.model.codec(), clip.pixels, clip.caption, 0, 4), ContractError);
    EXPECT_THROW(build_sample(f.model.codec(), clip.pixels, clip.caption, 5, 4), ContractError);
}

TEST(Train, ZeroStepsLeavesInitialWeights) {
    Fixture f;
    FlexiModel fresh{ModelConfig{}};
    TrainConfig cfg = small_train();
    cfg.steps = 0;
    const auto r = train(f.model, f.data, cfg);
    EXPECT_TRUE(r.curve.empty());
    EXPECT_EQ(snapshot(f.model), snapshot(fresh));
}

TEST(Train, SameSeedSameRun) {
    TrainConfig cfg = small_train();
    cfg.base_steps = 2;
    Fixture a, b;
    const auto ra = train(a.model, a.data, cfg);
    const auto rb = train(b.model, b.data, cfg);
    ASSERT_EQ(ra.curve.size(), 5u);
    for (std::size_t i = 0; i < ra.curve.size(); ++i) {
        EXPECT_EQ(ra.curve[i].loss, rb.curve[i].loss);
        EXPECT_EQ(ra.curve[i].branch, rb.curve[i].branch);
    }
    EXPECT_EQ(ra.curve[0].branch, Branch::kBase);
    EXPECT_NE(ra.curve[2].branch, Branch::kBase);
    EXPECT_EQ(snapshot(a.model), snapshot(b.model));
}

TEST(Train, WritesCheckpointAndLossCsv) {
    const auto dir = std::filesystem::temp_directory_path() / "flexifilm_train_test";
    std::filesystem::remove_all(dir);
    Fixture f;
    TrainConfig cfg = small_train();
    cfg.steps = 2;
    const auto r = train(f.model, f.data, cfg, dir);
    EXPECT_EQ(r.checkpoint_hash, checkpoint_hash(dir / "checkpoint"));
    std::ifstream is(dir / "loss.csv");
    std::string header, line;
    std::getline(is, header);
    EXPECT_EQ(header, "step,loss,branch");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, 2);
    std::filesystem::remove_all(dir);
}

TEST(Train, LossFallsOnShortRun) {
    Fixture f;
    TrainConfig cfg = small_train();
    cfg.base_steps = 150;
    cfg.steps = 0;
    cfg.lr = 2e-3;
    const auto r = train(f.model, f.data, cfg);
    EXPECT_LT(r.running_mean(150, 30), r.running_mean(30, 30));
}

TEST(TrainConfig, ParsesAndValidates) {
    std::istringstream is("p = 0.2\nn_g=8 # window\nsteps=10\nlr=5e-4\n");
    const auto c = train_config_from(parse_key_values(is));
    EXPECT_DOUBLE_EQ(c.p, 0.2);
    EXPECT_EQ(c.n_g, 8u);
    EXPECT_EQ(c.steps, 10u);
    EXPECT_DOUBLE_EQ(c.lr, 5e-4);
    EXPECT_EQ(c.n_c_max, 4u);
    EXPECT_THROW(train_config_from({{"bogus", "1"}}), ConfigError);
    EXPECT_THROW(train_config_from({{"steps", "ten"}}), ConfigError);
    EXPECT_THROW(train_config_from({{"p", "1.5"}}), ConfigError);
    EXPECT_THROW(train_config_from({{"n_c_max", "20"}}), ConfigError);
    std::istringstream bad("p 0.2\n");
    EXPECT_THROW(parse_key_values(bad), ConfigError);
}

TEST(Branch, Labels) {
    EXPECT_STREQ(branch_label(Branch::kConditional), "cond");
    EXPECT_STREQ(branch_label(Branch::kUnconditional), "uncond");
    EXPECT_STREQ(branch_label(Branch::kBase), "base");
}
