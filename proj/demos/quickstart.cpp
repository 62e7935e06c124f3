// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

// Trains a small W2 predictor on the eight-mode ring and compares the
// deterministic sampler against held-out data at a few step budgets.

#include <iostream>
#include <random>

#include "gpfn/gpfn.hpp"

int main() {
    const gpfn::Dataset all = gpfn::gen_synthetic(gpfn::SyntheticKind::EightModeRing, 6000, 7);
    const gpfn::Dataset train_set = all.slice(0, 4000);
    const gpfn::Dataset held_out = all.slice(4000, 6000);

    std::mt19937_64 rng(11);
    auto net = gpfn::Mlp<float>::predictor(2, {64, 64}, 16);
    net.initialize(rng);

    gpfn::TrainConfig config;
    config.epochs = 40;
    config.batch_size = 64;
    config.optimizer.learning_rate = 1e-3;
    config.seed = 3;
    const auto trained = gpfn::train(config, train_set.samples.data, net);
    std::cout << "final epoch loss " << trained.epoch_loss.back() << " after " << trained.steps << " steps\n";

    for (int nfe : {1, 5, 20}) {
        gpfn::GenerateOptions opt;
        opt.nfe = nfe;
        opt.n_samples = 2000;
        opt.seed = 5;
        const Eigen::MatrixXd samples = gpfn::generate(opt, gpfn::Regime::Gpfn, gpfn::as_predictor(trained.ema));
        std::cout << "gpfn_det NFE " << nfe << ": SWD "
                  << gpfn::metrics::swd(held_out.samples.data, samples, 128, 1) << '\n';
    }
    return 0;
}
