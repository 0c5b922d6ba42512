#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "flexifilm/io.hpp"
#include "flexifilm/ops.hpp"
#include "flexifilm/optim.hpp"
#include "flexifilm/rng.hpp"
#include "gradcheck.hpp"
#include "op_cases.hpp"

using namespace flexifilm;
using flexifilm::testing::DTensor;
using flexifilm::testing::gradcheck;
using flexifilm::testing::weighted;

namespace {

constexpr double kGradTol = 1e-4;

DTensor drandn(Rng& rng, Shape shape) { return randn<double>(rng, shape); }

}  // namespace

TEST(Randn, SameSeedSameStream) {
    Rng a(7), b(7);
    Tensor x = randn(a, {4});
    Tensor y = randn(b, {4});
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(x.at(i), y.at(i));
}

TEST(Randn, MomentsOfTenThousandDraws) {
    // sample mean has sd 0.01 and sample std has sd ~0.007 at n = 1e4, so 0.05 is > 5 sigma
    Rng rng(11);
    Tensor x = randn(rng, {10000});
    double m = 0.0;
    for (float v : x.data()) m += v;
    m /= 1e4;
    double var = 0.0;
    for (float v : x.data()) var += (v - m) * (v - m);
    EXPECT_NEAR(m, 0.0, 0.05);
    EXPECT_NEAR(std::sqrt(var / 1e4), 1.0, 0.05);
}

TEST(Randn, ZeroExtentRejected) {
    Rng rng(1);
    EXPECT_THROW(randn(rng, {3, 0}), ShapeError);
}

TEST(Rng, DerivedStreamsAreStableAndDistinct) {
    Rng base(5);
    EXPECT_EQ(base.derive("data").next_u64(), Rng(5).derive("data").next_u64());
    EXPECT_NE(base.derive("data").next_u64(), base.derive("model").next_u64());
}

TEST(Tensor, ShapeDataInvariant) {
    EXPECT_THROW(Tensor({2, 3}, std::vector<float>(5)), ShapeError);
    Tensor t({2, 3});
    EXPECT_EQ(t.numel(), 6u);
}

TEST(Matmul, IdentityLeftOperand) {
    Tensor eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Rng rng(3);
    Tensor b = randn(rng, {3, 2});
    Tensor c = matmul(eye, b);
    ASSERT_EQ(c.shape(), (Shape{3, 2}));
    for (std::size_t i = 0; i < 6; ++i) EXPECT_FLOAT_EQ(c.at(i), b.at(i));
}

TEST(Matmul, HandArithmetic) {
    Tensor c = matmul(Tensor({2, 2}, {1, 2, 3, 4}), Tensor({2, 1}, {1, 1}));
    EXPECT_FLOAT_EQ(c.at(0), 3.0f);
    EXPECT_FLOAT_EQ(c.at(1), 7.0f);
}

TEST(Matmul, InnerExtentMismatch) {
    EXPECT_THROW(matmul(Tensor({2, 3}), Tensor({2, 3})), ShapeError);
    EXPECT_THROW(matmul(Tensor({2, 2, 3}), Tensor({3, 3, 2})), ShapeError);
}

TEST(Matmul, GradOfSumMatchesFiniteDifferences) {
    Rng rng(21);
    auto r = gradcheck([](const auto& in) { return sum(matmul(in[0], in[1])); },
                       {drandn(rng, {5, 4}), drandn(rng, {4, 6})});
    EXPECT_LT(r.worst_relative_error, kGradTol);
}

TEST(Softmax, UniformRow) {
    Tensor y = softmax_lastdim(Tensor({3}, {0, 0, 0}));
    for (float v : y.data()) EXPECT_NEAR(v, 1.0f / 3.0f, 1e-7);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
    Tensor y = softmax_lastdim(Tensor({2}, {1000, 0}));
    EXPECT_NEAR(y.at(0), 1.0f, 1e-7);
    EXPECT_NEAR(y.at(1), 0.0f, 1e-7);
    EXPECT_TRUE(std::isfinite(y.at(0)));
}

TEST(Softmax, RowsSumToOne) {
    Rng rng(4);
    Tensor y = softmax_lastdim(scale(randn(rng, {6, 7}), 5.0f));
    for (std::size_t r = 0; r < 6; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < 7; ++j) {
            EXPECT_GE(y.at(r * 7 + j), 0.0f);
            s += y.at(r * 7 + j);
        }
        EXPECT_NEAR(s, 1.0, 1e-6);
    }
}

TEST(Softmax, NonFiniteInputRejected) {
    EXPECT_THROW(softmax_lastdim(Tensor({2}, {NAN, 0})), NumericError);
}

TEST(LayerNorm, ConstantRowGoesToZero) {
    Tensor y = layer_norm(Tensor({1, 4}, 3.5f), Tensor({4}, 1.0f), Tensor({4}, 0.0f));
    for (float v : y.data()) EXPECT_EQ(v, 0.0f);
}

TEST(LayerNorm, OutputMeanEqualsBias) {
    Rng rng(8);
    Tensor x = randn(rng, {3, 16});
    Tensor y = layer_norm(x, Tensor({16}, 1.0f), Tensor({16}, 0.25f));
    for (std::size_t r = 0; r < 3; ++r) {
        double m = 0.0;
        for (std::size_t j = 0; j < 16; ++j) m += y.at(r * 16 + j);
        EXPECT_NEAR(m / 16.0, 0.25, 1e-5);
    }
}

TEST(LayerNorm, ShapeMismatch) {
    EXPECT_THROW(layer_norm(Tensor({2, 4}), Tensor({3}), Tensor({4})), ShapeError);
}

TEST(LayerNorm, Gradcheck) {
    Rng rng(9);
    auto r = gradcheck([](const auto& in) { return weighted(layer_norm(in[0], in[1], in[2]), 99); },
                       {drandn(rng, {3, 5}), drandn(rng, {5}), drandn(rng, {5})});
    EXPECT_LT(r.worst_relative_error, kGradTol);
}

TEST(Attention, SingleKeyReturnsValue) {
    Rng rng(12);
    Tensor q = randn(rng, {3, 4});
    Tensor k = randn(rng, {1, 4});
    Tensor v = randn(rng, {1, 5});
    Tensor out = scaled_dot_attention(q, k, v);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(out.at(i * 5 + j), v.at(j), 1e-6);
}

TEST(Attention, IdentityInputsMatchDirectFormula) {
    Tensor eye({2, 2}, {1, 0, 0, 1});
    Tensor out = scaled_dot_attention(eye, eye, eye);
    const double on = std::exp(1.0 / std::sqrt(2.0));
    const double diag = on / (on + 1.0), off = 1.0 / (on + 1.0);
    EXPECT_NEAR(out.at(0), diag, 1e-6);
    EXPECT_NEAR(out.at(1), off, 1e-6);
    EXPECT_NEAR(out.at(2), off, 1e-6);
    EXPECT_NEAR(out.at(3), diag, 1e-6);
}

TEST(Attention, JointKeyValuePermutationInvariant) {
    Rng rng(13);
    Tensor q = randn(rng, {4, 3});
    Tensor k = randn(rng, {5, 3});
    Tensor v = randn(rng, {5, 2});
    const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    Tensor a = scaled_dot_attention(q, k, v);
    Tensor b = scaled_dot_attention(q, gather_rows(k, perm), gather_rows(v, perm));
    for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a.at(i), b.at(i), 1e-6);
}

TEST(Attention, ExtentMismatch) {
    EXPECT_THROW(scaled_dot_attention(Tensor({2, 3}), Tensor({2, 4}), Tensor({2, 2})), ShapeError);
    EXPECT_THROW(scaled_dot_attention(Tensor({2, 3}), Tensor({2, 3}), Tensor({3, 2})), ShapeError);
}

TEST(Backward, SumGivesOnes) {
    Tensor x({3}, {1, 2, 3});
    x.set_requires_grad(true);
    backward(sum(x));
    for (float g : x.grad()) EXPECT_EQ(g, 1.0f);
}

TEST(Backward, SquareGivesTwiceInput) {
    Tensor x({3}, {1, 2, 3});
    x.set_requires_grad(true);
    backward(sum(mul(x, x)));
    EXPECT_EQ(x.grad()[0], 2.0f);
    EXPECT_EQ(x.grad()[1], 4.0f);
    EXPECT_EQ(x.grad()[2], 6.0f);
}

TEST(Backward, NonScalarLossRejected) {
    Tensor x({3}, 1.0f);
    x.set_requires_grad(true);
    EXPECT_THROW(backward(scale(x, 2.0f)), ContractError);
}

TEST(Backward, NonTrainableTensorsUntouched) {
    Tensor x({2}, {1, 2});
    Tensor w({2}, {3, 4});
    x.set_requires_grad(true);
    backward(sum(mul(x, w)));
    EXPECT_TRUE(x.has_grad());
    EXPECT_FALSE(w.has_grad());
}

TEST(Backward, GraphFreedAfterwards) {
    Tensor x({2}, {1, 2});
    x.set_requires_grad(true);
    Tensor y = scale(x, 3.0f);
    Tensor loss = sum(y);
    backward(loss);
    EXPECT_TRUE(loss.node()->parents.empty());
    EXPECT_TRUE(y.node()->parents.empty());
}

TEST(Backward, NoGradGuardRecordsNothing) {
    Tensor x({2}, {1, 2});
    x.set_requires_grad(true);
    NoGradGuard guard;
    Tensor y = scale(x, 3.0f);
    EXPECT_FALSE(y.requires_grad());
}

TEST(Backward, CompositeMlpMatchesFiniteDifferences) {
    Rng rng(31);
    auto mlp_loss = [](const std::vector<DTensor>& p) {
        DTensor h = gelu(linear(p[0], p[1], p[2]));
        DTensor y = layer_norm(linear(h, p[3], p[4]), p[5], p[6]);
        return mse(y, p[7]);
    };
    auto r = gradcheck(mlp_loss, {drandn(rng, {4, 3}), drandn(rng, {3, 8}), drandn(rng, {8}), drandn(rng, {8, 5}),
                                  drandn(rng, {5}), drandn(rng, {5}), drandn(rng, {5}), drandn(rng, {4, 5})});
    EXPECT_LT(r.worst_relative_error, kGradTol) << "input " << r.worst_input;
}

// Every differentiable op, on random inputs with extents <= 8.
TEST(Gradcheck, AllDifferentiableOps) {
    for (const auto& [name, r] : flexifilm::testing::run_op_gradchecks(41))
        EXPECT_LT(r.worst_relative_error, kGradTol) << name << " input " << r.worst_input;
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
    std::vector<Tensor> params{Tensor({3}, {1, 2, 3})};
    params[0].mutable_grad();  // allocates zeros
    AdamState st;
    st.init(params);
    adam_step(params, st, 0.1);
    EXPECT_EQ(params[0].at(0), 1.0f);
    EXPECT_EQ(params[0].at(2), 3.0f);
}

TEST(Adam, ZeroLearningRateIsIdentity) {
    std::vector<Tensor> params{Tensor({2}, {1, 2})};
    params[0].mutable_grad()[0] = 5.0f;
    AdamState st;
    st.init(params);
    adam_step(params, st, 0.0);
    EXPECT_EQ(params[0].at(0), 1.0f);
}

TEST(Adam, ConstantGradientStepApproachesLearningRate) {
    // with bias correction, m_hat -> g and v_hat -> g^2, so each step is lr * g / |g|
    std::vector<Tensor> params{Tensor({2}, {0, 0})};
    AdamState st;
    st.init(params);
    const double lr = 1e-3;
    float prev0 = 0.0f, prev1 = 0.0f, step0 = 0.0f, step1 = 0.0f;
    for (int i = 0; i < 200; ++i) {
        auto g = params[0].mutable_grad();
        g[0] = 0.5f;
        g[1] = -3.0f;
        adam_step(params, st, lr);
        step0 = params[0].at(0) - prev0;
        step1 = params[0].at(1) - prev1;
        prev0 = params[0].at(0);
        prev1 = params[0].at(1);
    }
    EXPECT_NEAR(step0, -lr, 1e-6);
    EXPECT_NEAR(step1, lr, 1e-6);
}

TEST(Adam, UninitialisedState) {
    std::vector<Tensor> params{Tensor({2})};
    AdamState st;
    EXPECT_THROW(adam_step(params, st, 0.1), ShapeError);
}

TEST(ClipGradNorm, RescalesToMaxNorm) {
    std::vector<Tensor> params{Tensor({2})};
    params[0].mutable_grad()[0] = 3.0f;
    params[0].mutable_grad()[1] = 4.0f;
    EXPECT_DOUBLE_EQ(clip_grad_norm(params, 1.0), 5.0);
    EXPECT_NEAR(global_grad_norm(params), 1.0, 1e-6);
}

TEST(Fft1, ByteLayout) {
    std::ostringstream os;
    write_fft1(os, Tensor({1, 2}, {1.0f, -2.0f}));
    const std::string bytes = os.str();
    ASSERT_EQ(bytes.size(), 4u + 4u + 8u + 8u);
    EXPECT_EQ(bytes.substr(0, 4), "FFT1");
    EXPECT_EQ(bytes[4], 2);  // rank, little endian
    EXPECT_EQ(bytes[8], 1);
    EXPECT_EQ(bytes[12], 2);
    const unsigned char one[4] = {0x00, 0x00, 0x80, 0x3f};  // 1.0f
    for (int i = 0; i < 4; ++i) EXPECT_EQ(static_cast<unsigned char>(bytes[16 + i]), one[i]);
}

TEST(Fft1, RoundTripIsBitExact) {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        Shape shape;
        const std::size_t rank = 1 + rng.index(4);
        for (std::size_t i = 0; i < rank; ++i) shape.push_back(1 + rng.index(5));
        Tensor t = randn(rng, shape);
        std::stringstream ss;
        write_fft1(ss, t);
        Tensor back = read_fft1(ss);
        ASSERT_EQ(back.shape(), t.shape());
        for (std::size_t i = 0; i < t.numel(); ++i) EXPECT_EQ(std::bit_cast<std::uint32_t>(back.at(i)), std::bit_cast<std::uint32_t>(t.at(i)));
    }
}

TEST(Fft1, BadMagicRejected) {
    std::stringstream ss("FFT2\0\0\0\0");
    EXPECT_THROW(read_fft1(ss), IoError);
}
