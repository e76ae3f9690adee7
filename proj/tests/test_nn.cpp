#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fedsim/catalog.hpp"
#include "fedsim/layers.hpp"
#include "fedsim/loss.hpp"
#include "fedsim/model.hpp"
#include "fedsim/optim.hpp"

using namespace fedsim;

using T = Tensor<double>;

TEST(Dense, ForwardHandValues) {
    Dense<double> d(2, 3);
    d.weight() = T({3, 2}, {1, 2, 3, 4, 5, 6});
    d.bias() = T({3}, {0.5, -0.5, 0.0});
    const T x({1, 2}, {1.0, 1.0});
    const T y = d.forward(x, true);
    ASSERT_EQ(y.shape, (std::vector<std::size_t>{1, 3}));
    EXPECT_DOUBLE_EQ(y.at(0, 0), 3.5);
    EXPECT_DOUBLE_EQ(y.at(0, 1), 6.5);
    EXPECT_DOUBLE_EQ(y.at(0, 2), 11.0);
}

TEST(Dense, NoBias) {
    Dense<double> d(2, 1, false);
    d.weight() = T({1, 2}, {2.0, -1.0});
    const T x({2, 2}, {3.0, 4.0, 1.0, 0.0});
    const T y = d.forward(x, true);
    EXPECT_DOUBLE_EQ(y.at(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(y.at(1, 0), 2.0);
    EXPECT_TRUE(d.parameters().size() == 1);
}

TEST(Dense, RejectsWrongInput) {
    Dense<double> d(4, 2);
    EXPECT_THROW(d.forward(T({1, 3}, {1, 2, 3}), true), ShapeError);
    EXPECT_THROW(d.forward(T({2, 2, 2, 2}), true), ShapeError);
}

TEST(Dense, BackwardBeforeForwardThrows) {
    Dense<double> d(2, 2);
    EXPECT_THROW(d.backward(T({1, 2}, {1, 1})), ValueError);
}

TEST(Conv2d, IdentityKernelHandValue) {
    Conv2d<double> c(1, 1, 2);
    auto params = c.parameters();
    *params[0] = T({1, 1, 2, 2}, {1.0, 0.0, 0.0, 1.0});
    *params[1] = T({1}, {0.0});
    const T x({1, 1, 2, 2}, {1.0, 2.0, 3.0, 4.0});
    const T y = c.forward(x, true);
    ASSERT_EQ(y.shape, (std::vector<std::size_t>{1, 1, 1, 1}));
    EXPECT_DOUBLE_EQ(y.at(0, 0, 0, 0), 5.0);
}

TEST(Conv2d, PaddingContributesZeros) {
    Conv2d<double> c(1, 1, 3, 1, 1);
    auto params = c.parameters();
    params[0]->fill(1.0);
    params[1]->fill(0.0);
    const T x({1, 1, 1, 1}, {7.0});
    const T y = c.forward(x, true);
    ASSERT_EQ(y.shape, (std::vector<std::size_t>{1, 1, 1, 1}));
    EXPECT_DOUBLE_EQ(y.at(0, 0, 0, 0), 7.0);
}

TEST(Conv2d, StrideShrinksOutput) {
    Conv2d<double> c(1, 2, 3, 2, 1);
    EXPECT_EQ(c.output_shape({4, 1, 8, 8}), (std::vector<std::size_t>{4, 2, 4, 4}));
}

TEST(Conv2d, GroupedChannelsStayApart) {
    // Two groups, each mapping one input channel to one output channel with a
    // 1x1 kernel; group weights 10 and 100 make cross-talk visible.
    Conv2d<double> c(2, 2, 1, 1, 0, true, 2);
    auto params = c.parameters();
    ASSERT_EQ(params[0]->shape, (std::vector<std::size_t>{2, 1, 1, 1}));
    *params[0] = T({2, 1, 1, 1}, {10.0, 100.0});
    params[1]->fill(0.0);
    const T x({1, 2, 1, 1}, {1.0, 2.0});
    const T y = c.forward(x, true);
    EXPECT_DOUBLE_EQ(y.at(0, 0, 0, 0), 10.0);
    EXPECT_DOUBLE_EQ(y.at(0, 1, 0, 0), 200.0);
}

TEST(Conv2d, RejectsBadConstruction) {
    EXPECT_THROW(Conv2d<double>(3, 2, 3, 1, 0, true, 2), ShapeError); // 3 % 2 != 0
    EXPECT_THROW(Conv2d<double>(2, 3, 3, 1, 0, true, 2), ShapeError);
    EXPECT_THROW(Conv2d<double>(1, 1, 0), ValueError);
    EXPECT_THROW(Conv2d<double>(1, 1, 3, 0), ValueError);
}

TEST(Conv2d, RejectsWrongChannels) {
    Conv2d<double> c(3, 4, 3, 1, 1);
    EXPECT_THROW(c.forward(T({1, 2, 5, 5}), true), ShapeError);
}

TEST(MaxPool2d, HandValues) {
    MaxPool2d<double> p(2);
    const T x({1, 1, 4, 4}, {1,  5,  2,  6,
                             3,  7,  4,  8,
                             9,  13, 10, 14,
                             11, 15, 12, 16});
    const T y = p.forward(x, true);
    ASSERT_EQ(y.shape, (std::vector<std::size_t>{1, 1, 2, 2}));
    EXPECT_DOUBLE_EQ(y.at(0, 0, 0, 0), 7.0);
    EXPECT_DOUBLE_EQ(y.at(0, 0, 0, 1), 8.0);
    EXPECT_DOUBLE_EQ(y.at(0, 0, 1, 0), 15.0);
    EXPECT_DOUBLE_EQ(y.at(0, 0, 1, 1), 16.0);
}

TEST(MaxPool2d, PaddingNeverWins) {
    // All-negative input with zero padding: the maximum must still come from
    // real cells, never from the implicit border.
    MaxPool2d<double> p(3, 2, 1);
    T x({1, 1, 2, 2});
    x.fill(-5.0);
    const T y = p.forward(x, true);
    for (const double v : y.data) EXPECT_DOUBLE_EQ(v, -5.0);
}

TEST(MaxPool2d, BackwardRoutesToArgmax) {
    MaxPool2d<double> p(2);
    const T x({1, 1, 2, 2}, {1.0, 9.0, 3.0, 4.0});
    (void)p.forward(x, true);
    T g({1, 1, 1, 1}, {2.5});
    const T dx = p.backward(g);
    EXPECT_DOUBLE_EQ(dx.at(0, 0, 0, 0), 0.0);
    EXPECT_DOUBLE_EQ(dx.at(0, 0, 0, 1), 2.5);
    EXPECT_DOUBLE_EQ(dx.at(0, 0, 1, 0), 0.0);
    EXPECT_DOUBLE_EQ(dx.at(0, 0, 1, 1), 0.0);
}

TEST(MaxPool2d, DefaultStrideEqualsKernel) {
    MaxPool2d<double> p(3);
    EXPECT_EQ(p.output_shape({1, 2, 9, 9}), (std::vector<std::size_t>{1, 2, 3, 3}));
}

TEST(MaxPool2d, RejectsOversizedPadding) {
    EXPECT_THROW(MaxPool2d<double>(2, 2, 1), ValueError);
    EXPECT_THROW(MaxPool2d<double>(0), ValueError);
}

TEST(Relu, ClampsAndMasks) {
    Relu<double> r;
    const T x({1, 4}, {-2.0, 0.0, 3.0, -0.5});
    const T y = r.forward(x, true);
    EXPECT_DOUBLE_EQ(y.data[0], 0.0);
    EXPECT_DOUBLE_EQ(y.data[1], 0.0);
    EXPECT_DOUBLE_EQ(y.data[2], 3.0);
    EXPECT_DOUBLE_EQ(y.data[3], 0.0);
    const T dx = r.backward(T({1, 4}, {1.0, 1.0, 1.0, 1.0}));
    EXPECT_DOUBLE_EQ(dx.data[0], 0.0);
    EXPECT_DOUBLE_EQ(dx.data[2], 1.0);
}

TEST(Flatten, RoundTrips) {
    Flatten<double> f;
    T x({2, 3, 2, 2});
    for (std::size_t i = 0; i < x.numel(); ++i) x.data[i] = static_cast<double>(i);
    const T y = f.forward(x, true);
    ASSERT_EQ(y.shape, (std::vector<std::size_t>{2, 12}));
    const T dx = f.backward(y);
    ASSERT_EQ(dx.shape, x.shape);
    EXPECT_EQ(dx.data, x.data);
}

TEST(BatchNorm2d, TrainingNormalizesWithBatchStats) {
    BatchNorm2d<double> bn(1);
    auto params = bn.parameters();
    params[0]->fill(2.0); // gamma
    params[1]->fill(1.0); // beta
    // One channel, two samples of 1x1: values {1, 3} have mean 2, biased
    // variance 1.
    const T x({2, 1, 1, 1}, {1.0, 3.0});
    const T y = bn.forward(x, true);
    const double inv = 1.0 / std::sqrt(1.0 + 1e-5);
    EXPECT_NEAR(y.at(0, 0, 0, 0), 2.0 * (-1.0 * inv) + 1.0, 1e-12);
    EXPECT_NEAR(y.at(1, 0, 0, 0), 2.0 * (1.0 * inv) + 1.0, 1e-12);
}

TEST(BatchNorm2d, RunningStatsUpdateWithUnbiasedVariance) {
    BatchNorm2d<double> bn(1);
    (void)bn.forward(T({2, 1, 1, 1}, {1.0, 3.0}), true);
    auto state = bn.state();
    ASSERT_EQ(state.size(), 4u);
    // momentum 0.1: mean 0.9*0 + 0.1*2, var 0.9*1 + 0.1*2 (unbiased var of
    // {1,3} is 2).
    EXPECT_NEAR(state[2]->data[0], 0.2, 1e-12);
    EXPECT_NEAR(state[3]->data[0], 1.1, 1e-12);
}

TEST(BatchNorm2d, EvalUsesRunningStats) {
    BatchNorm2d<double> bn(1);
    auto state = bn.state();
    state[2]->data[0] = 10.0; // running mean
    state[3]->data[0] = 4.0;  // running var
    const T x({1, 1, 1, 2}, {10.0, 14.0});
    const T y = bn.forward(x, false);
    const double inv = 1.0 / std::sqrt(4.0 + 1e-5);
    EXPECT_NEAR(y.at(0, 0, 0, 0), 0.0, 1e-12);
    EXPECT_NEAR(y.at(0, 0, 0, 1), 4.0 * inv, 1e-9);
}

TEST(BatchNorm2d, EvalModeLeavesRunningStatsAlone) {
    BatchNorm2d<double> bn(2);
    const T x({1, 2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
    (void)bn.forward(x, false);
    auto state = bn.state();
    EXPECT_DOUBLE_EQ(state[2]->data[0], 0.0);
    EXPECT_DOUBLE_EQ(state[3]->data[0], 1.0);
}

TEST(BatchNorm2d, RejectsWrongChannelCount) {
    BatchNorm2d<double> bn(3);
    EXPECT_THROW(bn.forward(T({1, 2, 2, 2}), true), ShapeError);
}

TEST(SgdMomentum, TwoStepAlgebra) {
    T w({1}, {1.0});
    T g({1}, {1.0});
    SgdMomentum<double> opt(0.1, 0.9);
    opt.step({&w}, {&g});
    EXPECT_NEAR(w.data[0], 0.9, 1e-15); // v=1, w=1-0.1
    opt.step({&w}, {&g});
    EXPECT_NEAR(w.data[0], 0.71, 1e-15); // v=1.9, w=0.9-0.19
}

TEST(SgdMomentum, ResetClearsVelocity) {
    T w({1}, {1.0});
    T g({1}, {1.0});
    SgdMomentum<double> opt(0.1, 0.9);
    opt.step({&w}, {&g});
    opt.reset();
    opt.step({&w}, {&g});
    // Second step after the reset behaves like a first step: v = 1.
    EXPECT_NEAR(w.data[0], 0.8, 1e-15);
}

TEST(SgdMomentum, ZeroMomentumIsPlainSgd) {
    T w({2}, {1.0, -1.0});
    T g({2}, {0.5, 0.5});
    SgdMomentum<double> opt(0.2);
    opt.step({&w}, {&g});
    opt.step({&w}, {&g});
    EXPECT_NEAR(w.data[0], 0.8, 1e-15);
    EXPECT_NEAR(w.data[1], -1.2, 1e-15);
}

TEST(SgdMomentum, RejectsBadHyperparameters) {
    EXPECT_THROW(SgdMomentum<double>(-0.1), ValueError);
    EXPECT_THROW(SgdMomentum<double>(0.1, 1.0), ValueError);
    EXPECT_THROW(SgdMomentum<double>(0.1, -0.5), ValueError);
}

TEST(SgdMomentum, RejectsMismatchedLists) {
    T w({2}), g({2}), g3({3});
    SgdMomentum<double> opt(0.1);
    EXPECT_THROW(opt.step({&w}, {}), ShapeError);
    EXPECT_THROW(opt.step({&w}, {&g3}), ShapeError);
    EXPECT_NO_THROW(opt.step({&w}, {&g}));
}

TEST(Loss, TwoWayTieIsLogTwo) {
    const T logits({1, 2}, {0.0, 0.0});
    const auto r = softmax_cross_entropy(logits, {0});
    EXPECT_NEAR(r.value, std::log(2.0), 1e-15);
    EXPECT_NEAR(r.dlogits.at(0, 0), -0.5, 1e-15);
    EXPECT_NEAR(r.dlogits.at(0, 1), 0.5, 1e-15);
}

TEST(Loss, BatchMeanAndGradScale) {
    const T logits({2, 2}, {0.0, 0.0, 0.0, 0.0});
    const auto r = softmax_cross_entropy(logits, {0, 1});
    EXPECT_NEAR(r.value, std::log(2.0), 1e-15);
    // Per-sample grad (softmax - onehot) is halved by the batch mean.
    EXPECT_NEAR(r.dlogits.at(0, 0), -0.25, 1e-15);
    EXPECT_NEAR(r.dlogits.at(1, 1), -0.25, 1e-15);
}

TEST(Loss, ShiftInvariant) {
    const T a({1, 3}, {1.0, 2.0, 3.0});
    const T b({1, 3}, {1001.0, 1002.0, 1003.0});
    const auto ra = softmax_cross_entropy(a, {2});
    const auto rb = softmax_cross_entropy(b, {2});
    EXPECT_NEAR(ra.value, rb.value, 1e-12);
}

TEST(Loss, RejectsBadInput) {
    EXPECT_THROW(softmax_cross_entropy(T({2, 3}), std::vector<std::size_t>{0}), ShapeError);
    EXPECT_THROW(softmax_cross_entropy(T({1, 3}), std::vector<std::size_t>{3}), ValueError);
    EXPECT_THROW(softmax_cross_entropy(T({2}), std::vector<std::size_t>{0, 0}), ShapeError);
}

TEST(Loss, ArgmaxPicksFirstOnTies) {
    const T logits({2, 3}, {1.0, 5.0, 5.0,
                            7.0, 7.0, 7.0});
    const auto idx = argmax_rows(logits);
    EXPECT_EQ(idx[0], 1u);
    EXPECT_EQ(idx[1], 0u);
}

TEST(Model, CountsMatchCatalog) {
    auto m = build_model<double>(catalog_arch("tiny_cnn_bn"));
    EXPECT_EQ(m.parameter_count(), 2148u);
    EXPECT_EQ(m.state_count(), 2164u);
}

TEST(Model, StateRoundTrip) {
    auto m = build_model<double>(catalog_arch("tiny_cnn_bn"));
    Rng rng(7);
    m.init_params(rng);
    auto flat = m.state_to_flat();
    ASSERT_EQ(flat.size(), 2164u);
    for (double& v : flat) v += 0.25;
    m.load_state_flat(flat);
    EXPECT_EQ(m.state_to_flat(), flat);
}

TEST(Model, LoadRejectsWrongSize) {
    auto m = build_model<double>(catalog_arch("tiny_mlp"));
    EXPECT_THROW(m.load_state_flat(std::vector<double>(675)), ShapeError);
}

TEST(Model, ForwardRejectsNonFinite) {
    Model<double> m;
    m.emplace<Dense<double>>(2, 2);
    auto params = m.parameters();
    params[0]->fill(std::numeric_limits<double>::infinity());
    try {
        m.forward(T({1, 2}, {1.0, 1.0}), true);
        FAIL() << "expected ValueError";
    } catch (const ValueError& e) {
        EXPECT_NE(std::string(e.what()).find("non-finite"), std::string::npos);
    }
}

TEST(Model, InitIsSeedDeterministic) {
    auto a = build_model<double>(catalog_arch("tiny_cnn"));
    auto b = build_model<double>(catalog_arch("tiny_cnn"));
    Rng r1(42), r2(42), r3(43);
    a.init_params(r1);
    b.init_params(r2);
    EXPECT_EQ(a.state_to_flat(), b.state_to_flat());
    auto c = build_model<double>(catalog_arch("tiny_cnn"));
    c.init_params(r3);
    EXPECT_NE(a.state_to_flat(), c.state_to_flat());
}
