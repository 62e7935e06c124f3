// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gpfn/belief.hpp"
#include "gpfn/optimizer.hpp"
#include "gpfn/predictor.hpp"

namespace gpfn {

enum class Regime { Gpfn, BfnBaseline };

inline std::string_view to_string(Regime r) { return r == Regime::Gpfn ? "gpfn" : "bfn"; }

inline Regime parse_regime(std::string_view s) {
    if (s == "gpfn") return Regime::Gpfn;
    if (s == "bfn") return Regime::BfnBaseline;
    throw InvalidArgument("unknown regime '" + std::string(s) + "' (expected gpfn or bfn)");
}

struct TrainConfig {
    Regime regime = Regime::Gpfn;
    int steps = 1000;  // discrete GPFN schedule length used for training
    double shift = kDefaultShift;
    double sigma1 = kDefaultSigma1;
    int epochs = 30;
    int batch_size = 128;
    bool cosine_annealing = true;
    AdamWConfig optimizer;
    std::uint64_t seed = 0;
};

/// One supervised example: network input (x, t_frac), target x0 and loss weight.
struct TrainingInstance {
    Vector input;
    double t_frac = 0.0;
    Vector target;
    double loss_weight = 1.0;
};

/// Sample from the true-target W2 belief at step t, starting at the N(0, I)
/// prior: x_t = (1 - gamma_t) x0 + gamma_t z. `t` may equal T (returns x0).
inline TrainingInstance make_training_instance_gpfn(const Vector& x0, const Schedule& schedule, int t,
                                                    const Vector& z) {
    detail::require(t >= 0 && t <= schedule.steps(), "make_training_instance_gpfn: step out of range");
    detail::require(z.size() == x0.size(), "make_training_instance_gpfn: noise dimension mismatch");
    const double g = schedule.gamma(t);
    Vector x = (1.0 - g) * x0 + g * z;
    return {std::move(x), static_cast<double>(t) / schedule.steps(), x0, 1.0};
}

template <std::uniform_random_bit_generator Urbg>
TrainingInstance make_training_instance_gpfn(const Vector& x0, const Schedule& schedule, int t, Urbg& rng) {
    return make_training_instance_gpfn(x0, schedule, t, standard_normal(x0.size(), rng));
}

/// BFN flow sample mu_t ~ N(gamma x0, gamma (1 - gamma) I) with the continuous-time weight.
inline TrainingInstance make_training_instance_bfn(const Vector& x0, double t, double sigma1, const Vector& z) {
    detail::require(z.size() == x0.size(), "make_training_instance_bfn: noise dimension mismatch");
    const double g = bfn_accuracy(t, sigma1);
    Vector mu = g * x0 + std::sqrt(g * (1.0 - g)) * z;
    return {std::move(mu), t, x0, bfn_loss_weight(t, sigma1)};
}

template <std::uniform_random_bit_generator Urbg>
TrainingInstance make_training_instance_bfn(const Vector& x0, double t, double sigma1, Urbg& rng) {
    return make_training_instance_bfn(x0, t, sigma1, standard_normal(x0.size(), rng));
}

template <class T>
struct TrainResult {
    Mlp<T> net;
    Mlp<T> ema;
    std::vector<double> epoch_loss;
    std::uint64_t steps = 0;
};

/// Builds the batch of instances for rows `rows` of `data` (n x d). Draw order
/// is fixed: per example, first the time, then the noise vector.
template <std::uniform_random_bit_generator Urbg>
std::vector<TrainingInstance> make_batch(const TrainConfig& config, const Schedule& schedule, const Matrix& data,
                                         const std::vector<Eigen::Index>& rows, Urbg& rng) {
    std::vector<TrainingInstance> batch;
    batch.reserve(rows.size());
    std::uniform_int_distribution<int> step_dist(0, schedule.steps() - 1);
    std::uniform_real_distribution<double> time_dist(0.0, 1.0);
    for (Eigen::Index r : rows) {
        const Vector x0 = data.row(r).transpose();
        if (config.regime == Regime::Gpfn) {
            const int t = step_dist(rng);
            batch.push_back(make_training_instance_gpfn(x0, schedule, t, rng));
        } else {
            const double t = time_dist(rng);
            batch.push_back(make_training_instance_bfn(x0, t, config.sigma1, rng));
        }
    }
    return batch;
}

inline void validate(const TrainConfig& c) {
    detail::require(c.steps >= 1, "TrainConfig: T must be >= 1");
    detail::require(c.epochs >= 0, "TrainConfig: epochs must be >= 0");
    detail::require(c.batch_size >= 1, "TrainConfig: batch size must be >= 1");
    detail::require(c.sigma1 > 0.0 && c.sigma1 < 1.0, "TrainConfig: sigma1 must lie in (0, 1)");
    detail::require(c.optimizer.learning_rate > 0.0, "TrainConfig: learning rate must be positive");
}

/// Trains `net` on rows of `data` (each row one example in [-1, 1]^d).
///
/// Belief trajectories are built from the true x0 only; predictions feed the
/// loss and never the trajectory. Returns raw and EMA weights plus the mean
/// loss of each epoch. `on_batch`, if set, observes every batch of instances.
template <class T>
TrainResult<T> train(const TrainConfig& config, const Matrix& data, Mlp<T> net,
                     const std::function<void(const std::vector<TrainingInstance>&)>& on_batch = {}) {
    validate(config);
    detail::require(data.rows() > 0, "train: dataset is empty");
    detail::require(data.cols() == net.data_dim() && net.output_dim() == net.data_dim(),
                    "train: network does not match the data dimension");
    detail::require(net.embed_dim() > 0, "train: predictor needs a time embedding");

    std::mt19937_64 rng(config.seed);
    const Schedule schedule = cosine_schedule(config.steps, config.shift);
    OptimizerState<T> state(config.optimizer, net.parameters());

    const auto n = data.rows();
    const auto batches_per_epoch = static_cast<std::uint64_t>((n + config.batch_size - 1) / config.batch_size);
    const std::uint64_t total_steps = batches_per_epoch * static_cast<std::uint64_t>(config.epochs);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    TrainResult<T> result;
    const Eigen::Index d = data.cols();
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::uint64_t loss_count = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            const std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                 order.begin() + static_cast<std::ptrdiff_t>(stop));
            const auto batch = make_batch(config, schedule, data, rows, rng);
            if (on_batch) on_batch(batch);

            const auto b = static_cast<Eigen::Index>(batch.size());
            MatrixT<T> x(d, b), target(d, b);
            std::vector<double> t_frac(batch.size()), weight(batch.size());
            for (Eigen::Index j = 0; j < b; ++j) {
                const auto& inst = batch[static_cast<std::size_t>(j)];
                x.col(j) = inst.input.cast<T>();
                target.col(j) = inst.target.cast<T>();
                t_frac[static_cast<std::size_t>(j)] = inst.t_frac;
                weight[static_cast<std::size_t>(j)] = inst.loss_weight;
            }

            LossAndGradient<T> lg;
            try {
                lg = weighted_mse_backward(net, x, t_frac, target, weight);
            } catch (const TrainingDiverged&) {
                std::ostringstream msg;
                msg << "train: non-finite loss at step " << state.step << " (epoch " << epoch << ", first t "
                    << t_frac.front() << ")";
                throw TrainingDiverged(msg.str());
            }
            if (!lg.grad.allFinite()) {
                std::ostringstream msg;
                msg << "train: non-finite gradient at step " << state.step << ", loss " << lg.loss;
                throw TrainingDiverged(msg.str());
            }
            const double lr = config.cosine_annealing
                                  ? cosine_learning_rate(config.optimizer.learning_rate, state.step, total_steps)
                                  : config.optimizer.learning_rate;
            optimizer_step(net.parameters(), std::move(lg.grad), state, lr);
            loss_sum += lg.loss;
            ++loss_count;
        }
        result.epoch_loss.push_back(loss_sum / static_cast<double>(loss_count));
    }

    result.steps = state.step;
    result.ema = net;
    result.ema.parameters() = state.ema;
    result.net = std::move(net);
    return result;
}

}  // namespace gpfn
