// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "gpfn/belief.hpp"

namespace {

using gpfn::cosine_schedule;
using gpfn::GaussianBelief;
using gpfn::Vector;
using Big = boost::multiprecision::cpp_bin_float_50;

TEST(CosineSchedule, EndpointsAreExact) {
    const auto s = cosine_schedule(20, 0.008);
    EXPECT_EQ(s.steps(), 20);
    EXPECT_EQ(s.gamma(0), 1.0);
    EXPECT_EQ(s.gamma(20), 0.0);
    EXPECT_EQ(s.tau(19), 1.0);
    EXPECT_TRUE(s.eta(19).infinite);
    EXPECT_FALSE(s.eta(18).infinite);
}

TEST(CosineSchedule, MidpointOfTwoStepsMatchesHighPrecision) {
    const Big pi = boost::math::constants::pi<Big>();
    const Big shift("0.008");
    const Big expected = cos((Big("0.5") + shift) / (1 + shift) * pi / 2) / cos(shift / (1 + shift) * pi / 2);
    // Frozen from an independent 50-digit evaluation.
    const double frozen = 0.70274005894116902;

    const auto s = cosine_schedule(2, 0.008);
    EXPECT_NEAR(s.gamma(1), expected.convert_to<double>(), 1e-15);
    EXPECT_NEAR(s.gamma(1), frozen, 1e-15);
    EXPECT_DOUBLE_EQ(s.tau(0), 1.0 - s.gamma(1));
}

TEST(CosineSchedule, RejectsBadArguments) {
    EXPECT_THROW(cosine_schedule(0), gpfn::InvalidArgument);
    EXPECT_THROW(cosine_schedule(-3), gpfn::InvalidArgument);
    EXPECT_THROW(cosine_schedule(10, -0.1), gpfn::InvalidArgument);
}

TEST(CosineSchedule, IdentitiesHoldForAllLengths) {
    for (int steps = 2; steps <= 200; ++steps) {
        const auto s = cosine_schedule(steps, 0.008);
        ASSERT_EQ(s.gamma(0), 1.0);
        ASSERT_EQ(s.gamma(steps), 0.0);
        double product = 1.0;
        for (int t = 0; t < steps; ++t) {
            ASSERT_LT(s.gamma(t + 1), s.gamma(t)) << "T=" << steps << " t=" << t;
            const double tau = s.tau(t);
            ASSERT_GT(tau, 0.0);
            ASSERT_LE(tau, 1.0);
            product *= 1.0 - tau;
            const double g = s.gamma(t + 1);
            if (g > 0.0) {
                ASSERT_LE(std::abs(product - g), 1e-12 * g) << "T=" << steps << " t=" << t + 1;
            } else {
                ASSERT_EQ(product, 0.0);
            }
            if (t + 1 < steps) {
                const double eta = s.eta(t).value;
                ASSERT_NEAR(eta / (1.0 + eta), tau, 1e-15);
            }
            ASSERT_DOUBLE_EQ(s.variance(t), s.gamma(t) * s.gamma(t));
        }
    }
}

TEST(BfnAccuracy, Examples) {
    EXPECT_EQ(gpfn::bfn_accuracy(0.0, 0.001), 0.0);
    EXPECT_NEAR(gpfn::bfn_accuracy(1.0, 0.001), 1.0 - 1e-6, 1e-16);

    const Big sigma("0.001");
    const Big half = 1 - pow(sigma, Big(1));
    EXPECT_NEAR(gpfn::bfn_accuracy(0.5, 0.001), half.convert_to<double>(), 1e-15);
    EXPECT_NEAR(gpfn::bfn_accuracy(0.5, 0.001), 0.999, 1e-15);
}

TEST(BfnAccuracy, MonotoneOnUnitInterval) {
    const gpfn::BfnSchedule sched(0.001, 1001);
    const auto& g = sched.gammas();
    EXPECT_EQ(g.front(), 0.0);
    EXPECT_NEAR(g.back(), 1.0 - 1e-6, 1e-16);
    for (std::size_t i = 1; i < g.size(); ++i) {
        ASSERT_GT(g[i], g[i - 1]);
        ASSERT_LE(g[i], 1.0 - 1e-6 + 1e-16);
    }
}

TEST(BfnAccuracy, RejectsOutOfRange) {
    EXPECT_THROW(gpfn::bfn_accuracy(-0.01, 0.001), gpfn::InvalidArgument);
    EXPECT_THROW(gpfn::bfn_accuracy(1.01, 0.001), gpfn::InvalidArgument);
    EXPECT_THROW(gpfn::bfn_accuracy(0.5, 1.0), gpfn::InvalidArgument);
}

TEST(BfnLossWeight, StartsAtMinusLogSigma) {
    EXPECT_NEAR(gpfn::bfn_loss_weight(0.0, 0.001), 6.907755278982137, 1e-12);
    EXPECT_NEAR(gpfn::bfn_loss_weight(1.0, 0.001), 6.907755278982137e6, 1e-4);
}

TEST(GaussianBeliefTest, Invariants) {
    EXPECT_THROW(GaussianBelief(Vector::Zero(2), -1.0), gpfn::InvalidArgument);
    EXPECT_THROW(GaussianBelief(Vector::Constant(1, NAN), 1.0), gpfn::InvalidArgument);
    EXPECT_THROW(GaussianBelief(Vector(), 1.0), gpfn::InvalidArgument);
    const auto prior = GaussianBelief::standard(3);
    EXPECT_EQ(prior.dim(), 3);
    EXPECT_EQ(prior.variance(), 1.0);
}

TEST(BeliefSample, DegenerateReturnsMean) {
    const GaussianBelief b(Vector::Zero(2), 0.0);
    const Vector z = Vector::Constant(2, 3.0);
    EXPECT_EQ(gpfn::belief_sample(b, z), Vector::Zero(2));
}

TEST(BeliefSample, FixedNoise) {
    const GaussianBelief b(Vector::Constant(1, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(gpfn::belief_sample(b, Vector::Constant(1, 0.5))[0], 2.0);
    EXPECT_THROW(gpfn::belief_sample(b, Vector::Zero(2)), gpfn::InvalidArgument);
}

TEST(BeliefSample, MomentsOfStandardNormal) {
    std::mt19937_64 rng(42);
    const auto b = GaussianBelief::standard(1);
    const int n = 100000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = gpfn::belief_sample(b, rng)[0];
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    EXPECT_NEAR(mean, 0.0, 0.02);
    EXPECT_NEAR(var, 1.0, 0.02);
}

}  // namespace
