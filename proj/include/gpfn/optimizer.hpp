// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <type_traits>

#include "gpfn/predictor.hpp"

namespace gpfn {

struct AdamWConfig {
    double learning_rate = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
    double clip_norm = 1.0;  // <= 0 disables clipping
    double ema_decay = 0.999;
};

/// AdamW moments, step counter and EMA shadow weights for one parameter vector.
template <class T>
struct OptimizerState {
    AdamWConfig config;
    VectorT<T> first_moment;
    VectorT<T> second_moment;
    VectorT<T> ema;
    std::uint64_t step = 0;

    OptimizerState() = default;
    OptimizerState(const AdamWConfig& cfg, const VectorT<T>& params)
        : config(cfg),
          first_moment(VectorT<T>::Zero(params.size())),
          second_moment(VectorT<T>::Zero(params.size())),
          ema(params) {}
};

/// Rescales `grad` in place so its global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
template <class T>
double clip_global_norm(VectorT<T>& grad, double max_norm) {
    double sq = 0.0;
    for (Eigen::Index i = 0; i < grad.size(); ++i) sq += static_cast<double>(grad[i]) * static_cast<double>(grad[i]);
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) grad *= static_cast<T>(max_norm / norm);
    return norm;
}

/// Cosine annealing from `base` at step 0 to 0 at `total_steps`.
inline double cosine_learning_rate(double base, std::uint64_t step, std::uint64_t total_steps) {
    if (total_steps == 0) return base;
    const double progress = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
    return 0.5 * base * (1.0 + std::cos(std::numbers::pi * progress));
}

/// One AdamW step: clip, decoupled weight decay, bias-corrected moment update,
/// then EMA shadow update. `learning_rate` overrides the configured base rate
/// (for schedules); pass a negative value to use the configured one.
template <class T>
void optimizer_step(VectorT<T>& params, std::type_identity_t<VectorT<T>> grad, OptimizerState<T>& state, double learning_rate = -1.0) {
    detail::require(grad.size() == params.size() && state.first_moment.size() == params.size(),
                    "optimizer_step: parameter/gradient/state size mismatch");
    const AdamWConfig& c = state.config;
    const double lr = learning_rate < 0.0 ? c.learning_rate : learning_rate;
    clip_global_norm(grad, c.clip_norm);

    state.step += 1;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    const T b1 = static_cast<T>(c.beta1);
    const T b2 = static_cast<T>(c.beta2);
    const T decay = static_cast<T>(1.0 - lr * c.weight_decay);

    for (Eigen::Index i = 0; i < params.size(); ++i) {
        const T g = grad[i];
        state.first_moment[i] = b1 * state.first_moment[i] + (T(1) - b1) * g;
        state.second_moment[i] = b2 * state.second_moment[i] + (T(1) - b2) * g * g;
        const double m_hat = static_cast<double>(state.first_moment[i]) / bc1;
        const double v_hat = static_cast<double>(state.second_moment[i]) / bc2;
        params[i] = decay * params[i] - static_cast<T>(lr * m_hat / (std::sqrt(v_hat) + c.epsilon));
    }
    if (!params.allFinite()) throw TrainingDiverged("optimizer_step: non-finite parameter after update");

    const T d = static_cast<T>(c.ema_decay);
    state.ema = d * state.ema + (T(1) - d) * params;
}

}  // namespace gpfn
