// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gpfn/error.hpp"

namespace gpfn {

struct ImageShape {
    int height = 0;
    int width = 0;

    int pixels() const noexcept { return height * width; }
    friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// A population of data vectors, one per row.
struct SampleSet {
    Eigen::MatrixXd data;  // n x d
    std::optional<ImageShape> image;
    std::vector<int> labels;  // empty when unlabelled

    Eigen::Index size() const noexcept { return data.rows(); }
    Eigen::Index dim() const noexcept { return data.cols(); }

    void validate() const {
        detail::require(data.allFinite(), "SampleSet: entries must be finite");
        if (image) {
            detail::require(image->pixels() == data.cols(), "SampleSet: image shape does not match the dimension");
        }
        detail::require(labels.empty() || static_cast<Eigen::Index>(labels.size()) == data.rows(),
                        "SampleSet: label count does not match the sample count");
    }
};

}  // namespace gpfn
