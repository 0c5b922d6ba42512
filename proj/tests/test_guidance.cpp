#include <gtest/gtest.h>

#include <cmath>

#include "flexifilm/guidance.hpp"
#include "flexifilm/oracle.hpp"
#include "flexifilm/rng.hpp"

using namespace flexifilm;

namespace {

Tensor scaled_randn(Rng& rng, Shape shape, double sd, double offset = 0.0) {
    Tensor t = randn(rng, shape);
    for (auto& v : t.mutable_data()) v = float(v * sd + offset);
    return t;
}

double cosine(const Tensor& a, const Tensor& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        ab += double(a.at(i)) * b.at(i);
        aa += double(a.at(i)) * a.at(i);
        bb += double(b.at(i)) * b.at(i);
    }
    return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST(CfgCombine, EndpointsAreExact) {
    Rng rng(1);
    Tensor pos = randn(rng, {64});
    Tensor neg = randn(rng, {64});
    Tensor at1 = cfg_combine(pos, neg, 1.0);
    Tensor at0 = cfg_combine(pos, neg, 0.0);
    for (std::size_t i = 0; i < 64; ++i) {
        EXPECT_EQ(at1.at(i), pos.at(i));
        EXPECT_EQ(at0.at(i), neg.at(i));
    }
}

TEST(CfgCombine, HandArithmetic) {
    Tensor z = cfg_combine(Tensor({1}, {2.0f}), Tensor({1}, {1.0f}), 7.5);
    EXPECT_FLOAT_EQ(z.at(0), 8.5f);
}

TEST(CfgCombine, ShapeMismatch) { EXPECT_THROW(cfg_combine(Tensor({2}), Tensor({3}), 2.0), ShapeError); }

TEST(CfgCombine, AffineInScale) {
    Rng rng(2);
    Tensor pos = randn(rng, {32});
    Tensor neg = randn(rng, {32});
    const double s1 = 0.5, s2 = 9.0, w = 0.3;
    Tensor a = cfg_combine(pos, neg, s1);
    Tensor b = cfg_combine(pos, neg, s2);
    Tensor mid = cfg_combine(pos, neg, (1 - w) * s1 + w * s2);
    for (std::size_t i = 0; i < 32; ++i) EXPECT_NEAR((1 - w) * a.at(i) + w * b.at(i), mid.at(i), 1e-5);
}

TEST(Resample, ZeroScaleIsIdentity) {
    Rng rng(3);
    Tensor z = randn(rng, {50});
    Tensor out = resample(z, 0.3, 0.0);
    for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(out.at(i), z.at(i));
}

TEST(Resample, FullScaleHitsTargetStd) {
    Rng rng(4);
    Tensor z = scaled_randn(rng, {1000}, 3.0, 0.4);
    EXPECT_NEAR(population_std(resample(z, 0.8, 1.0)), 0.8, 1e-6);
}

TEST(Resample, PartialScaleStdExample) {
    // r = 0.7, sigma_z = 2, sigma_pos = 1: r*sigma_pos + (1-r)*sigma_z = 0.7 + 0.6 = 1.3
    Rng rng(5);
    Tensor z = randn(rng, {4096});
    const double sd = population_std(z);
    for (auto& v : z.mutable_data()) v = float(v * (2.0 / sd));
    ASSERT_NEAR(population_std(z), 2.0, 1e-6);
    EXPECT_NEAR(population_std(resample(z, 1.0, 0.7)), 1.3, 1e-6);
}

TEST(Resample, Errors) {
    EXPECT_THROW(resample(Tensor({4}, 1.0f), 1.0, 0.5), NumericError);
    EXPECT_THROW(resample(Tensor({2}, {0.0f, 1.0f}), 1.0, 1.5), ConfigError);
    EXPECT_THROW(resample(Tensor({2}, {0.0f, 1.0f}), 1.0, -0.1), ConfigError);
    EXPECT_THROW(resample(Tensor({2}, {0.0f, 1.0f}), 0.0, 0.5), NumericError);
}

TEST(Resample, StdLawAndDirectionOverRandomInputs) {
    Rng rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        const double sd = rng.uniform(0.1, 5.0);
        Tensor z = scaled_randn(rng, {1 + rng.index(300) + 2}, sd, rng.uniform(-2, 2));
        const double sigma_pos = rng.uniform(0.05, 5.0);
        const double r = rng.uniform(0.0, 1.0);
        Tensor out = resample(z, sigma_pos, r);
        const double expect = r * sigma_pos + (1 - r) * population_std(z);
        EXPECT_NEAR(population_std(out), expect, 1e-6 * expect);
        EXPECT_NEAR(cosine(out, z), 1.0, 1e-6);
    }
}

namespace {

struct FixedPredictor {
    Tensor cond_pred;
    Tensor uncond_pred;
    int calls = 0;
    Tensor operator()(const Tensor&, int, const ConditionBundle& b) {
        ++calls;
        return b.is_null ? uncond_pred : cond_pred;
    }
};

ConditionBundle some_condition() { return ConditionBundle::from(Tensor({1, 1, 1, 1}, 1.0f), {3}); }

}  // namespace

TEST(GuidedEps, UnitScaleNoResampleIsConditional) {
    Rng rng(7);
    FixedPredictor p{randn(rng, {20}), randn(rng, {20})};
    Tensor out = guided_eps(p, Tensor({20}), 10, some_condition(), ConditionBundle::null(), {1.0, 0.0, true});
    EXPECT_EQ(p.calls, 2);
    for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(out.at(i), p.cond_pred.at(i));
}

TEST(GuidedEps, ZeroScaleNoResampleIsUnconditional) {
    Rng rng(8);
    FixedPredictor p{randn(rng, {20}), randn(rng, {20})};
    Tensor out = guided_eps(p, Tensor({20}), 10, some_condition(), ConditionBundle::null(), {0.0, 0.0, true});
    for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(out.at(i), p.uncond_pred.at(i));
}

TEST(GuidedEps, StdLawForAnyScales) {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        FixedPredictor p{scaled_randn(rng, {128}, rng.uniform(0.5, 2)), scaled_randn(rng, {128}, rng.uniform(0.5, 2))};
        const GuidanceConfig g{rng.uniform(0, 12), rng.uniform(0, 1), true};
        Tensor out = guided_eps(p, Tensor({128}), 10, some_condition(), ConditionBundle::null(), g);
        const double expect = g.resample_scale * population_std(p.cond_pred) +
                              (1 - g.resample_scale) * population_std(cfg_combine(p.cond_pred, p.uncond_pred, g.cfg_scale));
        EXPECT_NEAR(population_std(out), expect, 1e-5);
    }
}

TEST(GuidedEps, InvalidConfigRejected) {
    FixedPredictor p{Tensor({2}, {0, 1}), Tensor({2}, {1, 0})};
    EXPECT_THROW(guided_eps(p, Tensor({2}), 0, some_condition(), ConditionBundle::null(), {-1.0, 0.5, true}),
                 ConfigError);
}

// Two Gaussian worlds sharing a variance: the guided oracle noise equals the
// oracle noise of the world whose mean is extrapolated by the same scale.
TEST(GuidedEps, OracleWorldsInterpolateMeans) {
    const auto s = default_schedule();
    Rng rng(10);
    const Shape shape{40};
    const GaussianWorld pos_world(randn(rng, shape), Tensor(shape, 0.6f));
    const GaussianWorld neg_world(randn(rng, shape), Tensor(shape, 0.6f));
    const double scale_s = 4.0;
    Tensor mixed_mu(shape);
    for (std::size_t i = 0; i < 40; ++i) {
        mixed_mu.mutable_data()[i] = float(neg_world.mu.at(i) + scale_s * (pos_world.mu.at(i) - neg_world.mu.at(i)));
    }
    const GaussianWorld mixed(mixed_mu, Tensor(shape, 0.6f));
    Tensor z = randn(rng, shape);
    for (int t : {50, 400, 900}) {
        Tensor guided = cfg_combine(oracle_eps(pos_world, z, t, s), oracle_eps(neg_world, z, t, s), scale_s);
        Tensor direct = oracle_eps(mixed, z, t, s);
        for (std::size_t i = 0; i < 40; ++i) EXPECT_NEAR(guided.at(i), direct.at(i), 1e-4);
    }
}
