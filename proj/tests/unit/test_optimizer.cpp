// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gpfn/optimizer.hpp"

namespace {

using gpfn::AdamWConfig;
using gpfn::OptimizerState;
using Vec = gpfn::VectorT<double>;

Vec random_vector(Eigen::Index n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    Vec v(n);
    for (double& x : v) x = normal(rng);
    return v;
}

TEST(OptimizerStep, ZeroGradientWithoutDecayIsIdentity) {
    Vec params = random_vector(20, 1);
    const Vec before = params;
    OptimizerState<double> state(AdamWConfig{}, params);
    for (int i = 0; i < 5; ++i) gpfn::optimizer_step(params, Vec::Zero(20), state);
    EXPECT_EQ(params, before);
    EXPECT_EQ(state.step, 5u);
}

TEST(OptimizerStep, ZeroGradientAppliesDecoupledDecay) {
    AdamWConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.weight_decay = 0.1;
    Vec params = random_vector(10, 2);
    const Vec before = params;
    OptimizerState<double> state(cfg, params);
    gpfn::optimizer_step(params, Vec::Zero(10), state);
    for (Eigen::Index i = 0; i < 10; ++i) EXPECT_DOUBLE_EQ(params[i], before[i] * (1.0 - 0.01 * 0.1));
}

TEST(OptimizerStep, SingleStepHandTrace) {
    AdamWConfig cfg;
    cfg.clip_norm = 0.0;
    Vec params = Vec::Zero(4);
    OptimizerState<double> state(cfg, params);
    gpfn::optimizer_step(params, Vec::Ones(4), state);
    // m = 0.1, v = 0.001; bias corrections 0.1 and 0.001 give m_hat = v_hat = 1.
    const double expected = -2e-4 * 1.0 / (1.0 + 1e-8);
    for (Eigen::Index i = 0; i < 4; ++i) {
        EXPECT_NEAR(state.first_moment[i], 0.1, 1e-15);
        EXPECT_NEAR(state.second_moment[i], 0.001, 1e-17);
        EXPECT_NEAR(params[i], expected, 1e-18);
    }
    // Shadow moves 0.1% of the way from 0 to the new parameters.
    EXPECT_NEAR(state.ema[0], 0.001 * expected, 1e-20);
}

TEST(OptimizerStep, SingleStepWithClipping) {
    Vec params = Vec::Zero(4);
    OptimizerState<double> state(AdamWConfig{}, params);
    gpfn::optimizer_step(params, Vec::Ones(4), state);
    // g is clipped to 0.5 per entry; Adam's first step is scale free.
    EXPECT_NEAR(state.first_moment[0], 0.05, 1e-15);
    EXPECT_NEAR(params[0], -2e-4 * 0.5 / (0.5 + 1e-8), 1e-18);
}

TEST(ClipGlobalNorm, NeverExceedsLimit) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> log_scale(-6.0, 6.0);
    for (int trial = 0; trial < 500; ++trial) {
        Vec g = random_vector(1 + trial % 97, static_cast<std::uint64_t>(trial), std::pow(10.0, log_scale(rng)));
        const double before = g.norm();
        const double reported = gpfn::clip_global_norm(g, 1.0);
        EXPECT_NEAR(reported, before, 1e-12 * before);
        ASSERT_LE(g.norm(), 1.0 + 1e-12);
        if (before <= 1.0) ASSERT_DOUBLE_EQ(g.norm(), before);
    }
}

TEST(Ema, ShrinksTowardFrozenParameters) {
    Vec params = random_vector(16, 3);
    OptimizerState<double> state(AdamWConfig{}, Vec::Zero(16));
    double gap = (state.ema - params).norm();
    for (int step = 0; step < 50; ++step) {
        gpfn::optimizer_step(params, Vec::Zero(16), state);
        const double next = (state.ema - params).norm();
        ASSERT_NEAR(next, 0.999 * gap, 1e-12 * gap);
        gap = next;
    }
}

TEST(OptimizerStep, Deterministic) {
    auto run = [] {
        Vec params = random_vector(64, 4);
        AdamWConfig cfg;
        cfg.weight_decay = 0.01;
        OptimizerState<double> state(cfg, params);
        for (int k = 0; k < 25; ++k) gpfn::optimizer_step(params, random_vector(64, 100 + k), state, 1e-3);
        return std::pair{params, state.ema};
    };
    const auto a = run();
    const auto b = run();
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
}

TEST(OptimizerStep, DetectsNonFiniteParameters) {
    Vec params = Vec::Zero(3);
    OptimizerState<double> state(AdamWConfig{}, params);
    Vec grad = Vec::Zero(3);
    grad[1] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(gpfn::optimizer_step(params, grad, state), gpfn::TrainingDiverged);
}

TEST(CosineLearningRate, Endpoints) {
    EXPECT_DOUBLE_EQ(gpfn::cosine_learning_rate(1e-3, 0, 100), 1e-3);
    EXPECT_NEAR(gpfn::cosine_learning_rate(1e-3, 50, 100), 5e-4, 1e-18);
    EXPECT_NEAR(gpfn::cosine_learning_rate(1e-3, 100, 100), 0.0, 1e-18);
}

}  // namespace
