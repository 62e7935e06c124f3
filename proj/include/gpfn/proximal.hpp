// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <variant>

#include "gpfn/belief.hpp"

namespace gpfn {

/// Clean data as a point mass delta_{x0}. Also used for predicted targets.
struct Dirac {
    Vector point;
};

/// Gaussian likelihood N(y; x, likelihood_var * I) of a noisy observation y.
struct NoisyObservation {
    Vector observation;
};

using TargetSignal = std::variant<Dirac, NoisyObservation>;

struct W2Squared {};

struct KlBayes {
    double likelihood_var = 1.0;
};

using ProximalKind = std::variant<W2Squared, KlBayes>;

/// argmin_p W2^2(p, delta_x0) + (1/eta) W2^2(p, b) over isotropic Gaussians,
/// parameterised by tau = eta / (1 + eta):
///   m' = tau * x0 + (1 - tau) * m,   sqrt(v') = (1 - tau) * sqrt(v).
inline GaussianBelief w2_update(const GaussianBelief& b, const Dirac& target, double tau) {
    detail::require(target.point.size() == b.dim(), "w2_update: target dimension mismatch");
    detail::require(tau > 0.0 && tau <= 1.0, "w2_update: tau must lie in (0, 1]");
    if (tau == 1.0) return {target.point, 0.0};
    const double keep = 1.0 - tau;
    Vector mean = tau * target.point + keep * b.mean();
    const double std = keep * b.stddev();
    return {std::move(mean), std * std};
}

/// KL-proximal step with eta = 1: the conjugate Gaussian posterior
/// p'(x) ∝ b(x) * N(y; x, likelihood_var * I).
inline GaussianBelief kl_update(const GaussianBelief& b, const NoisyObservation& target, double likelihood_var,
                                double eta = 1.0) {
    detail::require(target.observation.size() == b.dim(), "kl_update: observation dimension mismatch");
    detail::require(std::isfinite(likelihood_var) && likelihood_var > 0.0,
                    "kl_update: likelihood variance must be positive");
    if (eta != 1.0) {
        throw ConfigurationError("kl_update: only eta = 1 has a closed-form minimiser");
    }
    detail::require(b.variance() > 0.0, "kl_update: prior variance must be positive");
    const double prior_precision = 1.0 / b.variance();
    const double obs_precision = 1.0 / likelihood_var;
    const double precision = prior_precision + obs_precision;
    Vector mean = (prior_precision * b.mean() + obs_precision * target.observation) / precision;
    return {std::move(mean), 1.0 / precision};
}

}  // namespace gpfn
