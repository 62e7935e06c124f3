// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "gpfn/optimizer.hpp"
#include "gpfn/predictor.hpp"
#include "gpfn/sample_set.hpp"

namespace gpfn {

struct ExtractorConfig {
    int hidden_width = 64;
    int feature_width = 32;  // 256 for image data
    int epochs = 40;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double min_accuracy = 0.9;
    std::uint64_t seed = 0;
};

/// Classifier d -> hidden -> features -> classes; the SiLU activations of the
/// `features` layer are the embedding used by aFID, precision/recall and
/// density/coverage, and the softmax output feeds the IS-style score.
class FeatureExtractor {
public:
    FeatureExtractor(Mlp<double> net, double train_accuracy)
        : net_(std::move(net)), train_accuracy_(train_accuracy) {}

    int feature_width() const { return net_.widths()[2]; }
    int classes() const { return net_.output_dim(); }
    double train_accuracy() const noexcept { return train_accuracy_; }
    const Mlp<double>& net() const noexcept { return net_; }

    /// n x feature_width embedding of the rows of `x`.
    Eigen::MatrixXd features(const Eigen::MatrixXd& x) const {
        return net_.hidden_activations(x.transpose(), 1).transpose();
    }

    /// n x classes softmax probabilities.
    Eigen::MatrixXd probabilities(const Eigen::MatrixXd& x) const {
        Eigen::MatrixXd logits = net_.forward(Eigen::MatrixXd(x.transpose()), 0.0);
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            auto col = logits.col(j);
            col = (col.array() - col.maxCoeff()).exp().matrix();
            col /= col.sum();
        }
        return logits.transpose();
    }

    double accuracy(const Eigen::MatrixXd& x, const std::vector<int>& labels) const {
        const Eigen::MatrixXd p = probabilities(x);
        Eigen::Index correct = 0;
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            Eigen::Index arg = 0;
            p.row(i).maxCoeff(&arg);
            if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(p.rows());
    }

private:
    Mlp<double> net_;
    double train_accuracy_;
};

/// Trains the classifier with Adam on labelled rows. Throws if the training
/// accuracy stays below `min_accuracy`, since the metrics would be meaningless.
inline FeatureExtractor train_feature_extractor(const SampleSet& data, const ExtractorConfig& config) {
    detail::require(!data.labels.empty(), "train_feature_extractor: labelled data required");
    data.validate();
    const std::set<int> distinct(data.labels.begin(), data.labels.end());
    detail::require(distinct.size() >= 2, "train_feature_extractor: need at least two classes");
    detail::require(*distinct.begin() >= 0, "train_feature_extractor: labels must be non-negative");
    const int classes = *distinct.rbegin() + 1;

    std::mt19937_64 rng(config.seed);
    Mlp<double> net({static_cast<int>(data.dim()), config.hidden_width, config.feature_width, classes}, 0);
    net.initialize(rng);

    AdamWConfig opt;
    opt.learning_rate = config.learning_rate;
    opt.clip_norm = 0.0;
    OptimizerState<double> state(opt, net.parameters());

    const Eigen::MatrixXd xt = data.data.transpose();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            Eigen::MatrixXd x(xt.rows(), static_cast<Eigen::Index>(stop - start));
            std::vector<int> y(stop - start);
            for (std::size_t k = start; k < stop; ++k) {
                x.col(static_cast<Eigen::Index>(k - start)) = xt.col(order[k]);
                y[k - start] = data.labels[static_cast<std::size_t>(order[k])];
            }
            auto lg = softmax_xent_backward(net, x, y);
            optimizer_step(net.parameters(), std::move(lg.grad), state);
        }
    }

    FeatureExtractor extractor(net, 0.0);
    const double acc = extractor.accuracy(data.data, data.labels);
    if (acc < config.min_accuracy) {
        std::ostringstream msg;
        msg << "train_feature_extractor: training accuracy " << acc << " below required " << config.min_accuracy;
        throw AccuracyBelowThreshold(msg.str());
    }
    return {std::move(net), acc};
}

}  // namespace gpfn
