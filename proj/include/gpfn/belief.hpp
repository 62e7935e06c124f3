// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <concepts>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpfn/error.hpp"

namespace gpfn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Isotropic Gaussian belief N(mean, variance * I).
///
/// The variance is a single scalar shared by every dimension; along a
/// W2 trajectory it is tied to the schedule as v_t = gamma_t^2.
class GaussianBelief {
public:
    GaussianBelief(Vector mean, double variance) : mean_(std::move(mean)), variance_(variance) {
        detail::require(mean_.size() > 0, "GaussianBelief: dimension must be positive");
        detail::require(mean_.allFinite(), "GaussianBelief: mean must be finite");
        detail::require(std::isfinite(variance_) && variance_ >= 0.0,
                        "GaussianBelief: variance must be finite and non-negative");
    }

    /// Standard normal prior N(0, I).
    static GaussianBelief standard(Eigen::Index dim) { return {Vector::Zero(dim), 1.0}; }

    const Vector& mean() const noexcept { return mean_; }
    double variance() const noexcept { return variance_; }
    double stddev() const noexcept { return std::sqrt(variance_); }
    Eigen::Index dim() const noexcept { return mean_.size(); }

private:
    Vector mean_;
    double variance_;
};

/// Draw x = mean + sqrt(variance) * z for a caller-supplied standard normal z.
inline Vector belief_sample(const GaussianBelief& b, const Vector& z) {
    detail::require(z.size() == b.dim(), "belief_sample: noise dimension mismatch");
    if (b.variance() == 0.0) return b.mean();
    return b.mean() + b.stddev() * z;
}

template <std::uniform_random_bit_generator Urbg>
Vector standard_normal(Eigen::Index dim, Urbg& rng) {
    std::normal_distribution<double> normal;
    Vector z(dim);
    for (Eigen::Index i = 0; i < dim; ++i) z[i] = normal(rng);
    return z;
}

template <std::uniform_random_bit_generator Urbg>
Vector belief_sample(const GaussianBelief& b, Urbg& rng) {
    return belief_sample(b, standard_normal(b.dim(), rng));
}

/// Proximal step size eta_t. At the final step tau = 1 and eta is infinite.
struct StepSize {
    double value = 0.0;
    bool infinite = false;
};

/// Discrete GPFN schedule over T steps.
///
/// gamma has T + 1 entries with gamma[0] = 1 and gamma[T] = 0; tau and eta
/// have T entries, tau[t] = 1 - gamma[t+1] / gamma[t] and eta = tau / (1 - tau).
class Schedule {
public:
    Schedule(std::vector<double> gamma, double shift) : gamma_(std::move(gamma)), shift_(shift) {
        detail::require(gamma_.size() >= 2, "Schedule: need at least one step");
        const std::size_t steps = gamma_.size() - 1;
        tau_.resize(steps);
        eta_.resize(steps);
        for (std::size_t t = 0; t < steps; ++t) {
            detail::require(gamma_[t] > 0.0, "Schedule: gamma must stay positive before the last step");
            tau_[t] = 1.0 - gamma_[t + 1] / gamma_[t];
            detail::require(tau_[t] > 0.0 && tau_[t] <= 1.0, "Schedule: tau must lie in (0, 1]");
            if (tau_[t] == 1.0) {
                eta_[t] = {0.0, true};
            } else {
                eta_[t] = {tau_[t] / (1.0 - tau_[t]), false};
            }
        }
    }

    int steps() const noexcept { return static_cast<int>(tau_.size()); }
    double shift() const noexcept { return shift_; }

    double gamma(int t) const { return gamma_.at(static_cast<std::size_t>(t)); }
    double tau(int t) const { return tau_.at(static_cast<std::size_t>(t)); }
    StepSize eta(int t) const { return eta_.at(static_cast<std::size_t>(t)); }

    /// Belief variance implied at step t along a W2 trajectory.
    double variance(int t) const { return gamma(t) * gamma(t); }

    const std::vector<double>& gammas() const noexcept { return gamma_; }
    const std::vector<double>& taus() const noexcept { return tau_; }

private:
    std::vector<double> gamma_;
    std::vector<double> tau_;
    std::vector<StepSize> eta_;
    double shift_;
};

inline constexpr double kDefaultShift = 0.008;

/// gamma_t = cos(((t/T + s) / (1 + s)) * pi/2) / cos((s / (1 + s)) * pi/2).
///
/// gamma_T is pinned to exactly 0 (cos(pi/2) only rounds to ~6e-17), which
/// makes the last tau exactly 1.
inline Schedule cosine_schedule(int steps, double shift = kDefaultShift) {
    detail::require(steps >= 1, "cosine_schedule: T must be at least 1");
    detail::require(std::isfinite(shift) && shift >= 0.0, "cosine_schedule: shift must be non-negative");
    constexpr double half_pi = std::numbers::pi / 2.0;
    const double denom = std::cos(shift / (1.0 + shift) * half_pi);
    std::vector<double> gamma(static_cast<std::size_t>(steps) + 1);
    gamma[0] = 1.0;
    for (int t = 1; t < steps; ++t) {
        const double frac = static_cast<double>(t) / steps;
        gamma[static_cast<std::size_t>(t)] = std::cos((frac + shift) / (1.0 + shift) * half_pi) / denom;
    }
    gamma[static_cast<std::size_t>(steps)] = 0.0;
    return Schedule(std::move(gamma), shift);
}

inline constexpr double kDefaultSigma1 = 0.001;

/// BFN accuracy curve gamma(t) = 1 - sigma1^(2t).
inline double bfn_accuracy(double t, double sigma1) {
    detail::require(t >= 0.0 && t <= 1.0, "bfn_accuracy: t must lie in [0, 1]");
    detail::require(sigma1 > 0.0 && sigma1 < 1.0, "bfn_accuracy: sigma1 must lie in (0, 1)");
    return -std::expm1(2.0 * t * std::log(sigma1));
}

/// Continuous-time BFN loss weight -ln(sigma1) * sigma1^(-2t).
inline double bfn_loss_weight(double t, double sigma1) {
    detail::require(t >= 0.0 && t <= 1.0, "bfn_loss_weight: t must lie in [0, 1]");
    detail::require(sigma1 > 0.0 && sigma1 < 1.0, "bfn_loss_weight: sigma1 must lie in (0, 1)");
    return -std::log(sigma1) * std::exp(-2.0 * t * std::log(sigma1));
}

/// Sampled BFN accuracy curve on a uniform grid of `points` values over [0, 1].
class BfnSchedule {
public:
    BfnSchedule(double sigma1, int points) : sigma1_(sigma1) {
        detail::require(sigma1 > 0.0 && sigma1 < 1.0, "BfnSchedule: sigma1 must lie in (0, 1)");
        detail::require(points >= 2, "BfnSchedule: need at least two grid points");
        gamma_.resize(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i) {
            gamma_[static_cast<std::size_t>(i)] = bfn_accuracy(static_cast<double>(i) / (points - 1), sigma1);
        }
    }

    double sigma1() const noexcept { return sigma1_; }
    const std::vector<double>& gammas() const noexcept { return gamma_; }

private:
    double sigma1_;
    std::vector<double> gamma_;
};

}  // namespace gpfn
