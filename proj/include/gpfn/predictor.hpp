// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <random>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "gpfn/error.hpp"

namespace gpfn {

template <class T>
using MatrixT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using VectorT = Eigen::Matrix<T, Eigen::Dynamic, 1>;
// Non-deduced so callers may pass plain matrices.
template <class T>
using RefMatrix = std::type_identity_t<Eigen::Ref<const MatrixT<T>>>;

/// Sinusoidal embedding of a time fraction: [sin(w_0 t), cos(w_0 t), sin(w_1 t), ...]
/// with w_k = 10000^(k / (dim/2)), so the ladder starts at unit angular frequency.
template <class T = double>
VectorT<T> time_embed(double t_frac, int dim) {
    detail::require(dim >= 2 && dim % 2 == 0, "time_embed: dimension must be even and >= 2");
    const int half = dim / 2;
    VectorT<T> out(dim);
    for (int k = 0; k < half; ++k) {
        const double freq = std::pow(10000.0, static_cast<double>(k) / half);
        out[2 * k] = static_cast<T>(std::sin(freq * t_frac));
        out[2 * k + 1] = static_cast<T>(std::cos(freq * t_frac));
    }
    return out;
}

namespace detail {

template <class T>
T sigmoid(T z) {
    return T(1) / (T(1) + std::exp(-z));
}

// SiLU: z * sigmoid(z).
template <class T>
T silu(T z) {
    return z * sigmoid(z);
}

template <class T>
T silu_grad(T z) {
    const T s = sigmoid(z);
    return s * (T(1) + z * (T(1) - s));
}

}  // namespace detail

/// Dense network with SiLU hidden layers and a linear output layer.
///
/// Input is the data vector concatenated with an optional sinusoidal time
/// embedding (embed_dim = 0 disables it, as for the feature classifier).
/// All parameters live in one contiguous vector: for each layer the weight
/// matrix (column-major, out x in) followed by its bias.
template <class T>
class Mlp {
public:
    using Mat = MatrixT<T>;
    using Vec = VectorT<T>;
    using MatMap = Eigen::Map<Mat>;
    using ConstMatMap = Eigen::Map<const Mat>;
    using VecMap = Eigen::Map<Vec>;
    using ConstVecMap = Eigen::Map<const Vec>;

    /// Intermediate values kept by forward() for backward().
    struct Tape {
        std::vector<Mat> activations;  // activations[0] is the network input
        std::vector<Mat> preactivations;
    };

    Mlp() = default;

    /// `widths` = {data_dim + embed_dim, hidden..., output_dim}.
    Mlp(std::vector<int> widths, int embed_dim) : widths_(std::move(widths)), embed_dim_(embed_dim) {
        detail::require(widths_.size() >= 2, "Mlp: need at least input and output widths");
        for (int w : widths_) detail::require(w > 0, "Mlp: layer widths must be positive");
        detail::require(embed_dim_ == 0 || (embed_dim_ >= 2 && embed_dim_ % 2 == 0),
                        "Mlp: time-embedding width must be 0 or even >= 2");
        detail::require(widths_[0] > embed_dim_, "Mlp: input width must exceed the embedding width");
        Eigen::Index total = 0;
        for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
            offsets_.push_back(total);
            total += static_cast<Eigen::Index>(widths_[l + 1]) * (widths_[l] + 1);
        }
        params_ = Vec::Zero(total);
    }

    /// Network predicting data of dimension `data_dim` from (x_t, t).
    static Mlp predictor(int data_dim, const std::vector<int>& hidden, int embed_dim) {
        std::vector<int> widths{data_dim + embed_dim};
        widths.insert(widths.end(), hidden.begin(), hidden.end());
        widths.push_back(data_dim);
        return Mlp(std::move(widths), embed_dim);
    }

    /// Scaled-normal weights (std = 1/sqrt(fan_in)), zero biases.
    template <std::uniform_random_bit_generator Urbg>
    void initialize(Urbg& rng) {
        std::normal_distribution<double> normal;
        for (int l = 0; l < layers(); ++l) {
            auto w = weight(l);
            const double scale = 1.0 / std::sqrt(static_cast<double>(w.cols()));
            for (Eigen::Index j = 0; j < w.cols(); ++j)
                for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = static_cast<T>(scale * normal(rng));
            bias(l).setZero();
        }
    }

    int layers() const noexcept { return static_cast<int>(widths_.size()) - 1; }
    const std::vector<int>& widths() const noexcept { return widths_; }
    int embed_dim() const noexcept { return embed_dim_; }
    int data_dim() const noexcept { return widths_.front() - embed_dim_; }
    int output_dim() const noexcept { return widths_.back(); }
    Eigen::Index parameter_count() const noexcept { return params_.size(); }

    Vec& parameters() noexcept { return params_; }
    const Vec& parameters() const noexcept { return params_; }

    MatMap weight(int l) { return {params_.data() + offsets_[l], widths_[l + 1], widths_[l]}; }
    ConstMatMap weight(int l) const { return {params_.data() + offsets_[l], widths_[l + 1], widths_[l]}; }
    VecMap bias(int l) { return {params_.data() + bias_offset(l), widths_[l + 1]}; }
    ConstVecMap bias(int l) const { return {params_.data() + bias_offset(l), widths_[l + 1]}; }

    /// Builds the network input [x; time_embed(t)] for a batch of columns.
    Mat assemble_input(const Eigen::Ref<const Mat>& x, const std::vector<double>& t_frac) const {
        detail::require(x.rows() == data_dim(), "Mlp: input dimension mismatch");
        if (embed_dim_ > 0) {
            detail::require(static_cast<Eigen::Index>(t_frac.size()) == x.cols(),
                            "Mlp: need one time value per column");
        }
        Mat input(widths_.front(), x.cols());
        input.topRows(data_dim()) = x;
        for (Eigen::Index j = 0; embed_dim_ > 0 && j < x.cols(); ++j) {
            input.col(j).bottomRows(embed_dim_) = time_embed<T>(t_frac[static_cast<std::size_t>(j)], embed_dim_);
        }
        return input;
    }

    /// Batched forward pass over columns of `x`, recording intermediates.
    Mat forward(const Eigen::Ref<const Mat>& x, const std::vector<double>& t_frac, Tape* tape = nullptr) const {
        Mat a = assemble_input(x, t_frac);
        if (tape) {
            tape->activations.assign(1, a);
            tape->preactivations.clear();
        }
        for (int l = 0; l < layers(); ++l) {
            Mat z = weight(l) * a;
            z.colwise() += bias(l);
            if (l + 1 == layers()) {
                if (tape) tape->preactivations.push_back(z);
                return z;
            }
            a = z.unaryExpr([](T v) { return detail::silu(v); });
            if (tape) {
                tape->preactivations.push_back(std::move(z));
                tape->activations.push_back(a);
            }
        }
        return a;
    }

    /// Same time fraction for every column.
    Mat forward(const Eigen::Ref<const Mat>& x, double t_frac) const {
        return forward(x, std::vector<double>(static_cast<std::size_t>(x.cols()), t_frac));
    }

    Vec forward_one(const Vec& x, double t_frac) const {
        Mat out = forward(Mat(x), std::vector<double>{t_frac});
        return out.col(0);
    }

    /// Activations after hidden layer `l` (0-based) for a batch without time input.
    Mat hidden_activations(const Eigen::Ref<const Mat>& x, int l) const {
        detail::require(l >= 0 && l + 1 < layers(), "Mlp: hidden layer index out of range");
        Tape tape;
        forward(x, std::vector<double>(static_cast<std::size_t>(x.cols()), 0.0), &tape);
        return tape.activations[static_cast<std::size_t>(l) + 1];
    }

    /// Reverse pass: gradient of a scalar loss w.r.t. every parameter, given
    /// dLoss/dOutput for each column.
    Vec backward(const Tape& tape, const Eigen::Ref<const Mat>& output_grad) const {
        Vec grad = Vec::Zero(params_.size());
        Mat delta = output_grad;
        for (int l = layers() - 1; l >= 0; --l) {
            const Mat& input = tape.activations[static_cast<std::size_t>(l)];
            MatMap gw(grad.data() + offsets_[l], widths_[l + 1], widths_[l]);
            VecMap gb(grad.data() + bias_offset(l), widths_[l + 1]);
            gw.noalias() = delta * input.transpose();
            gb = delta.rowwise().sum();
            if (l == 0) break;
            Mat upstream = weight(l).transpose() * delta;
            const Mat& z = tape.preactivations[static_cast<std::size_t>(l) - 1];
            delta = upstream.cwiseProduct(z.unaryExpr([](T v) { return detail::silu_grad(v); }));
        }
        return grad;
    }

private:
    Eigen::Index bias_offset(int l) const {
        return offsets_[l] + static_cast<Eigen::Index>(widths_[l + 1]) * widths_[l];
    }

    std::vector<int> widths_;
    int embed_dim_ = 0;
    std::vector<Eigen::Index> offsets_;
    Vec params_;
};

template <class T>
struct LossAndGradient {
    double loss = 0.0;
    VectorT<T> grad;
};

/// Weighted MSE: mean over columns of w_j * mean_i (x0_ij - xhat_ij)^2,
/// and its exact gradient.
template <class T>
LossAndGradient<T> weighted_mse_backward(const Mlp<T>& net, const RefMatrix<T>& x_t,
                                         const std::vector<double>& t_frac,
                                         const RefMatrix<T>& target,
                                         const std::vector<double>& loss_weight) {
    detail::require(target.rows() == net.output_dim() && target.cols() == x_t.cols(),
                    "weighted_mse_backward: target shape mismatch");
    detail::require(static_cast<Eigen::Index>(loss_weight.size()) == x_t.cols(),
                    "weighted_mse_backward: need one loss weight per column");
    typename Mlp<T>::Tape tape;
    const MatrixT<T> pred = net.forward(x_t, t_frac, &tape);
    const MatrixT<T> diff = pred - target;
    const double norm = 1.0 / (static_cast<double>(diff.rows()) * static_cast<double>(diff.cols()));
    MatrixT<T> dout(diff.rows(), diff.cols());
    double loss = 0.0;
    for (Eigen::Index j = 0; j < diff.cols(); ++j) {
        const double w = loss_weight[static_cast<std::size_t>(j)];
        detail::require(w > 0.0, "weighted_mse_backward: loss weight must be positive");
        loss += w * norm * static_cast<double>(diff.col(j).squaredNorm());
        dout.col(j) = diff.col(j) * static_cast<T>(2.0 * w * norm);
    }
    if (!std::isfinite(loss)) throw TrainingDiverged("weighted_mse_backward: non-finite loss");
    return {loss, net.backward(tape, dout)};
}

/// Softmax cross-entropy over columns of logits; returns mean loss and gradient.
template <class T>
LossAndGradient<T> softmax_xent_backward(const Mlp<T>& net, const RefMatrix<T>& x,
                                         const std::vector<int>& labels) {
    detail::require(static_cast<Eigen::Index>(labels.size()) == x.cols(), "softmax_xent_backward: label count");
    typename Mlp<T>::Tape tape;
    const std::vector<double> t(static_cast<std::size_t>(x.cols()), 0.0);
    MatrixT<T> logits = net.forward(x, t, &tape);
    double loss = 0.0;
    const T inv_n = T(1) / static_cast<T>(x.cols());
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
        auto col = logits.col(j);
        const T mx = col.maxCoeff();
        col = (col.array() - mx).exp().matrix();
        const T sum = col.sum();
        col /= sum;
        const int y = labels[static_cast<std::size_t>(j)];
        detail::require(y >= 0 && y < logits.rows(), "softmax_xent_backward: label out of range");
        loss -= std::log(std::max(static_cast<double>(col[y]), 1e-300));
        col[y] -= T(1);
        col *= inv_n;
    }
    return {loss / static_cast<double>(x.cols()), net.backward(tape, logits)};
}

}  // namespace gpfn
