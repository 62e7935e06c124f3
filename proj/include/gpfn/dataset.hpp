// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gpfn/error.hpp"
#include "gpfn/sample_set.hpp"

namespace gpfn {

/// Affine map between raw units and [-1, 1]: scaled = (raw - offset) / scale.
struct Scaling {
    Eigen::VectorXd offset;
    double scale = 1.0;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const {
        return ((raw.rowwise() - offset.transpose()) / scale).cwiseMax(-1.0).cwiseMin(1.0);
    }
    Eigen::MatrixXd invert(const Eigen::MatrixXd& scaled) const {
        return (scaled * scale).rowwise() + offset.transpose();
    }
};

/// Samples scaled into [-1, 1] together with the scaling record.
struct Dataset {
    SampleSet samples;
    Scaling scaling;

    /// Rows [begin, end) as a new dataset sharing the scaling.
    Dataset slice(Eigen::Index begin, Eigen::Index end) const {
        detail::require(begin >= 0 && begin <= end && end <= samples.size(), "Dataset::slice: bad range");
        Dataset out{SampleSet{samples.data.middleRows(begin, end - begin), samples.image, {}}, scaling};
        if (!samples.labels.empty()) {
            out.samples.labels.assign(samples.labels.begin() + begin, samples.labels.begin() + end);
        }
        return out;
    }
};

/// Centres each dimension on its midrange and divides by the largest
/// half-range, so every dimension lands in [-1, 1] with geometry preserved.
inline Scaling fit_unit_scaling(const Eigen::MatrixXd& raw) {
    detail::require(raw.rows() >= 1, "fit_unit_scaling: empty data");
    const Eigen::VectorXd lo = raw.colwise().minCoeff().transpose();
    const Eigen::VectorXd hi = raw.colwise().maxCoeff().transpose();
    Scaling s;
    s.offset = 0.5 * (lo + hi);
    s.scale = 0.5 * (hi - lo).maxCoeff();
    if (!(s.scale > 0.0)) s.scale = 1.0;
    return s;
}

enum class SyntheticKind { TwoGaussians, EightModeRing, Checkerboard };

inline SyntheticKind parse_synthetic(std::string_view s) {
    if (s == "two_gaussians") return SyntheticKind::TwoGaussians;
    if (s == "eight_mode_ring") return SyntheticKind::EightModeRing;
    if (s == "checkerboard") return SyntheticKind::Checkerboard;
    throw InvalidArgument("unknown synthetic dataset '" + std::string(s) + "'");
}

inline constexpr double kRingRadius = 2.0;
inline constexpr double kRingStd = 0.15;
inline constexpr double kTwoGaussianOffset = 2.0;
inline constexpr double kTwoGaussianStd = 0.5;

/// Raw-unit centre of mode `m` of the eight-mode ring.
inline std::array<double, 2> ring_center(int m) {
    const double angle = 2.0 * std::numbers::pi * m / 8.0;
    return {kRingRadius * std::cos(angle), kRingRadius * std::sin(angle)};
}

/// Labelled 2-D datasets; example i belongs to mode i mod (#modes).
inline Dataset gen_synthetic(SyntheticKind kind, Eigen::Index n, std::uint64_t seed) {
    detail::require(n >= 1, "gen_synthetic: n must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Eigen::MatrixXd raw(n, 2);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        switch (kind) {
            case SyntheticKind::TwoGaussians: {
                const int m = static_cast<int>(i % 2);
                raw(i, 0) = (m == 0 ? -kTwoGaussianOffset : kTwoGaussianOffset) + kTwoGaussianStd * normal(rng);
                raw(i, 1) = kTwoGaussianStd * normal(rng);
                labels[static_cast<std::size_t>(i)] = m;
                break;
            }
            case SyntheticKind::EightModeRing: {
                const int m = static_cast<int>(i % 8);
                const auto c = ring_center(m);
                raw(i, 0) = c[0] + kRingStd * normal(rng);
                raw(i, 1) = c[1] + kRingStd * normal(rng);
                labels[static_cast<std::size_t>(i)] = m;
                break;
            }
            case SyntheticKind::Checkerboard: {
                // 4x4 board over [-2, 2]^2; the 8 cells with even (col + row) are filled.
                const int m = static_cast<int>(i % 8);
                const int row = m / 2;
                const int col = 2 * (m % 2) + (row % 2);
                raw(i, 0) = -2.0 + col + uniform(rng);
                raw(i, 1) = -2.0 + row + uniform(rng);
                labels[static_cast<std::size_t>(i)] = m;
                break;
            }
        }
    }
    const Scaling scaling = fit_unit_scaling(raw);
    return {SampleSet{scaling.apply(raw), std::nullopt, std::move(labels)}, scaling};
}

// --------------------------------------------------------------------------
// IDX (MNIST) ingestion
// --------------------------------------------------------------------------

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

namespace detail {

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t at, const std::string& what) {
    if (bytes.size() < at + 4) throw TruncatedFile(what + ": truncated header");
    return (std::uint32_t{bytes[at]} << 24) | (std::uint32_t{bytes[at + 1]} << 16) |
           (std::uint32_t{bytes[at + 2]} << 8) | std::uint32_t{bytes[at + 3]};
}

}  // namespace detail

/// Decoded IDX image payload in raw pixel units (0..255), one image per row.
struct IdxImages {
    Eigen::MatrixXd pixels;
    ImageShape shape;
};

inline constexpr std::uint64_t kIdxMaxElements = std::uint64_t{1} << 34;

inline IdxImages parse_idx_images(const std::vector<unsigned char>& bytes, const std::string& what = "idx") {
    const std::uint32_t magic = detail::read_be32(bytes, 0, what);
    if (magic != kIdxImageMagic) throw BadMagic(what + ": not an IDX image file (bad magic)");
    const std::uint64_t n = detail::read_be32(bytes, 4, what);
    const std::uint64_t rows = detail::read_be32(bytes, 8, what);
    const std::uint64_t cols = detail::read_be32(bytes, 12, what);
    if (rows == 0 || cols == 0 || rows > (1u << 16) || cols > (1u << 16) || n * rows * cols > kIdxMaxElements) {
        throw DimensionOverflow(what + ": image dimensions out of range");
    }
    const std::uint64_t payload = n * rows * cols;
    if (bytes.size() < 16 + payload) throw TruncatedFile(what + ": truncated pixel payload");
    IdxImages out;
    out.shape = {static_cast<int>(rows), static_cast<int>(cols)};
    out.pixels.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rows * cols));
    std::size_t at = 16;
    for (Eigen::Index i = 0; i < out.pixels.rows(); ++i)
        for (Eigen::Index j = 0; j < out.pixels.cols(); ++j) out.pixels(i, j) = bytes[at++];
    return out;
}

inline std::vector<int> parse_idx_labels(const std::vector<unsigned char>& bytes, const std::string& what = "idx") {
    const std::uint32_t magic = detail::read_be32(bytes, 0, what);
    if (magic != kIdxLabelMagic) throw BadMagic(what + ": not an IDX label file (bad magic)");
    const std::uint64_t n = detail::read_be32(bytes, 4, what);
    if (n > kIdxMaxElements) throw DimensionOverflow(what + ": label count out of range");
    if (bytes.size() < 8 + n) throw TruncatedFile(what + ": truncated label payload");
    return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(n)};
}

/// Block-average downsampling by `factor` in both directions.
inline IdxImages downsample(const IdxImages& in, int factor) {
    detail::require(factor >= 1, "downsample: factor must be >= 1");
    if (factor == 1) return in;
    detail::require(in.shape.height % factor == 0 && in.shape.width % factor == 0,
                    "downsample: image size not divisible by the factor");
    const ImageShape out_shape{in.shape.height / factor, in.shape.width / factor};
    IdxImages out{Eigen::MatrixXd::Zero(in.pixels.rows(), out_shape.pixels()), out_shape};
    const double norm = 1.0 / (factor * factor);
    for (Eigen::Index i = 0; i < in.pixels.rows(); ++i)
        for (int r = 0; r < in.shape.height; ++r)
            for (int c = 0; c < in.shape.width; ++c)
                out.pixels(i, (r / factor) * out_shape.width + c / factor) +=
                    norm * in.pixels(i, r * in.shape.width + c);
    return out;
}

/// Pixel scaling 0 -> -1, 255 -> +1.
inline Scaling pixel_scaling(Eigen::Index dim) { return {Eigen::VectorXd::Constant(dim, 127.5), 127.5}; }

/// Reads an IDX image file (and optionally its label file), downsamples by
/// `factor` (1, 2 or 4) and scales pixels to [-1, 1].
inline Dataset read_idx(const std::filesystem::path& images, const std::optional<std::filesystem::path>& labels = {},
                        int factor = 1) {
    detail::require(factor == 1 || factor == 2 || factor == 4, "read_idx: downsample factor must be 1, 2 or 4");
    IdxImages decoded = downsample(parse_idx_images(detail::read_file(images), images.string()), factor);
    Dataset ds;
    ds.scaling = pixel_scaling(decoded.pixels.cols());
    ds.samples.data = ds.scaling.apply(decoded.pixels);
    ds.samples.image = decoded.shape;
    if (labels) {
        ds.samples.labels = parse_idx_labels(detail::read_file(*labels), labels->string());
        if (static_cast<Eigen::Index>(ds.samples.labels.size()) != ds.samples.size()) {
            throw InconsistentLayout("read_idx: label count does not match image count");
        }
    }
    return ds;
}

}  // namespace gpfn
