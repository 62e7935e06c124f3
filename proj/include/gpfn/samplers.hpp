// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "gpfn/belief.hpp"
#include "gpfn/predictor.hpp"
#include "gpfn/trainer.hpp"

namespace gpfn {

enum class SamplerKind { GpfnDet, GpfnStoch, BfnStoch, BfnDet };

inline std::string_view to_string(SamplerKind k) {
    switch (k) {
        case SamplerKind::GpfnDet: return "gpfn_det";
        case SamplerKind::GpfnStoch: return "gpfn_stoch";
        case SamplerKind::BfnStoch: return "bfn_stoch";
        case SamplerKind::BfnDet: return "bfn_det";
    }
    return "unknown";
}

inline SamplerKind parse_sampler(std::string_view s) {
    if (s == "gpfn_det") return SamplerKind::GpfnDet;
    if (s == "gpfn_stoch") return SamplerKind::GpfnStoch;
    if (s == "bfn_stoch") return SamplerKind::BfnStoch;
    if (s == "bfn_det") return SamplerKind::BfnDet;
    throw InvalidArgument("unknown sampler '" + std::string(s) +
                          "' (expected gpfn_det, gpfn_stoch, bfn_stoch or bfn_det)");
}

/// Regime a predictor must have been trained under to drive this sampler.
inline Regime required_regime(SamplerKind k) {
    return (k == SamplerKind::GpfnDet || k == SamplerKind::GpfnStoch) ? Regime::Gpfn : Regime::BfnBaseline;
}

/// A predictor maps a batch of states (d x n, one column per chain) and a time
/// fraction to predicted clean data of the same shape.
template <class F>
concept BatchPredictor = requires(F f, const Matrix& x, double t) {
    { f(x, t) } -> std::convertible_to<Matrix>;
};

/// Adapts a network of any scalar type to the double-precision predictor interface.
template <class T>
auto as_predictor(const Mlp<T>& net) {
    return [&net](const Matrix& x, double t_frac) -> Matrix {
        return net.forward(x.cast<T>(), t_frac).template cast<double>();
    };
}

/// W2 particle map x' = tau * xhat + (1 - tau) * x (an Euler step of the
/// straight-line flow toward xhat).
inline Matrix gpfn_det_step(const Matrix& x, const Matrix& x0_hat, double tau) {
    detail::require(x.rows() == x0_hat.rows() && x.cols() == x0_hat.cols(), "gpfn_det_step: shape mismatch");
    detail::require(tau > 0.0 && tau <= 1.0, "gpfn_det_step: tau must lie in (0, 1]");
    if (tau == 1.0) return x0_hat;
    return tau * x0_hat + (1.0 - tau) * x;
}

/// GPFN-stoch chain state: belief mean, persistent noise and the particle
/// x = mean + gamma * eps.
struct StochState {
    Matrix mean;
    Matrix eps;
    Matrix x;
};

/// Mean follows the W2 update; eps follows the AR(1) recursion
/// eps' = rho eps + sqrt(1 - rho^2) z with rho = sqrt(1 - tau).
inline StochState gpfn_stoch_step(const StochState& s, const Matrix& x0_hat, double tau, double gamma_next,
                                  const Matrix& z) {
    detail::require(s.mean.rows() == x0_hat.rows() && s.mean.cols() == x0_hat.cols() &&
                        z.rows() == x0_hat.rows() && z.cols() == x0_hat.cols(),
                    "gpfn_stoch_step: shape mismatch");
    detail::require(tau >= 0.0 && tau <= 1.0, "gpfn_stoch_step: tau must lie in [0, 1]");
    StochState next;
    next.mean = tau * x0_hat + (1.0 - tau) * s.mean;
    const double rho = std::sqrt(1.0 - tau);
    next.eps = rho * s.eps + std::sqrt(1.0 - rho * rho) * z;
    next.x = gamma_next == 0.0 ? next.mean : Matrix(next.mean + gamma_next * next.eps);
    return next;
}

template <std::uniform_random_bit_generator Urbg>
Matrix standard_normal_matrix(Eigen::Index rows, Eigen::Index cols, Urbg& rng) {
    std::normal_distribution<double> normal;
    Matrix z(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = normal(rng);
    return z;
}

template <std::uniform_random_bit_generator Urbg>
StochState gpfn_stoch_step(const StochState& s, const Matrix& x0_hat, double tau, double gamma_next, Urbg& rng) {
    return gpfn_stoch_step(s, x0_hat, tau, gamma_next, standard_normal_matrix(x0_hat.rows(), x0_hat.cols(), rng));
}

/// Recovers eps = (x - mean) / gamma with gamma floored at 1e-8.
inline Matrix recover_noise(const Matrix& x, const Matrix& mean, double gamma) {
    return (x - mean) / std::max(gamma, 1e-8);
}

/// BFN sender accuracy for step i in 1..n: sigma1^(-2i/n) * (1 - sigma1^(2/n)).
inline double bfn_step_accuracy(int i, int n, double sigma1) {
    detail::require(n >= 1 && i >= 1 && i <= n, "bfn_step_accuracy: step index out of range");
    detail::require(sigma1 > 0.0 && sigma1 < 1.0, "bfn_step_accuracy: sigma1 must lie in (0, 1)");
    const double log_s = std::log(sigma1);
    return std::exp(-2.0 * i * log_s / n) * -std::expm1(2.0 * log_s / n);
}

/// BFN belief: mean and shared precision (prior N(0, I) has precision 1).
struct BfnState {
    Matrix mean;
    double precision = 1.0;
};

/// Discrete-time BFN step i (1-based): y = xhat + z / sqrt(alpha_i), then the
/// conjugate update mean' = (rho mean + alpha y) / (rho + alpha), rho' = rho + alpha.
inline BfnState bfn_stoch_step(const BfnState& s, const Matrix& x0_hat, int i, int n, double sigma1,
                               const Matrix& z) {
    detail::require(s.mean.rows() == x0_hat.rows() && s.mean.cols() == x0_hat.cols() &&
                        z.rows() == x0_hat.rows() && z.cols() == x0_hat.cols(),
                    "bfn_stoch_step: shape mismatch");
    const double alpha = bfn_step_accuracy(i, n, sigma1);
    const Matrix y = x0_hat + z / std::sqrt(alpha);
    BfnState next;
    next.precision = s.precision + alpha;
    next.mean = (s.precision * s.mean + alpha * y) / next.precision;
    return next;
}

template <std::uniform_random_bit_generator Urbg>
BfnState bfn_stoch_step(const BfnState& s, const Matrix& x0_hat, int i, int n, double sigma1, Urbg& rng) {
    return bfn_stoch_step(s, x0_hat, i, n, sigma1, standard_normal_matrix(x0_hat.rows(), x0_hat.cols(), rng));
}

/// BFN-det uses the GPFN particle map on BFN predictions.
inline Matrix bfn_det_step(const Matrix& x, const Matrix& x0_hat, double tau) { return gpfn_det_step(x, x0_hat, tau); }

struct GenerateOptions {
    SamplerKind kind = SamplerKind::GpfnDet;
    int nfe = 20;
    Eigen::Index n_samples = 2000;
    Eigen::Index dim = 2;
    double shift = kDefaultShift;
    double sigma1 = kDefaultSigma1;
    std::uint64_t seed = 0;
};

/// Runs one sampler for `nfe` predictor calls over all chains at once and
/// returns the final states as rows (n_samples x dim).
///
/// GPFN kinds start from z ~ N(0, I) and use the cosine schedule with T = nfe,
/// querying the net at t/T. BFN-stoch runs the discrete-time Bayesian sampler
/// querying at (i-1)/n and returns the final belief mean. BFN-det starts at the
/// prior mean 0 and applies the W2 particle map, querying at i/nfe.
template <BatchPredictor Predictor>
Matrix generate(const GenerateOptions& opt, Regime trained_under, Predictor&& predict) {
    detail::require(opt.nfe >= 1, "generate: NFE must be >= 1");
    detail::require(opt.n_samples >= 1 && opt.dim >= 1, "generate: need at least one sample of positive dimension");
    if (required_regime(opt.kind) != trained_under) {
        throw ConfigurationError("generate: sampler " + std::string(to_string(opt.kind)) +
                                 " requires a " + std::string(to_string(required_regime(opt.kind))) +
                                 "-trained predictor, got " + std::string(to_string(trained_under)));
    }
    std::mt19937_64 rng(opt.seed);
    const Eigen::Index d = opt.dim;
    const Eigen::Index n = opt.n_samples;
    const int steps = opt.nfe;

    auto call = [&](const Matrix& x, double t) {
        Matrix out = predict(x, t);
        detail::require(out.rows() == d && out.cols() == n, "generate: predictor returned the wrong shape");
        return out;
    };

    Matrix final_state;
    switch (opt.kind) {
        case SamplerKind::GpfnDet: {
            const Schedule schedule = cosine_schedule(steps, opt.shift);
            Matrix x = standard_normal_matrix(d, n, rng);
            for (int t = 0; t < steps; ++t) {
                x = gpfn_det_step(x, call(x, static_cast<double>(t) / steps), schedule.tau(t));
            }
            final_state = std::move(x);
            break;
        }
        case SamplerKind::GpfnStoch: {
            const Schedule schedule = cosine_schedule(steps, opt.shift);
            StochState s{Matrix::Zero(d, n), standard_normal_matrix(d, n, rng), Matrix()};
            s.x = s.mean + schedule.gamma(0) * s.eps;
            for (int t = 0; t < steps; ++t) {
                const Matrix x0_hat = call(s.x, static_cast<double>(t) / steps);
                s = gpfn_stoch_step(s, x0_hat, schedule.tau(t), schedule.gamma(t + 1), rng);
            }
            final_state = std::move(s.x);
            break;
        }
        case SamplerKind::BfnStoch: {
            BfnState s{Matrix::Zero(d, n), 1.0};
            for (int i = 1; i <= steps; ++i) {
                const Matrix x0_hat = call(s.mean, static_cast<double>(i - 1) / steps);
                s = bfn_stoch_step(s, x0_hat, i, steps, opt.sigma1, rng);
            }
            final_state = std::move(s.mean);
            break;
        }
        case SamplerKind::BfnDet: {
            const Schedule schedule = cosine_schedule(steps, opt.shift);
            Matrix x = Matrix::Zero(d, n);
            for (int t = 0; t < steps; ++t) {
                x = bfn_det_step(x, call(x, static_cast<double>(t) / steps), schedule.tau(t));
            }
            final_state = std::move(x);
            break;
        }
    }
    return final_state.transpose();
}

}  // namespace gpfn
