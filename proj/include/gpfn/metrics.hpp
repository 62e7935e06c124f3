// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpfn/error.hpp"
#include "gpfn/sample_set.hpp"

namespace gpfn {
namespace metrics {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// --------------------------------------------------------------------------
// Sliced Wasserstein distance
// --------------------------------------------------------------------------

/// Squared 1-D W2 between two empirical distributions (inputs sorted ascending).
/// Sizes may differ: the quantile functions are integrated exactly.
inline double w2_squared_1d(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t na = a.size(), nb = b.size();
    detail::require(na > 0 && nb > 0, "w2_squared_1d: empty input");
    double acc = 0.0;
    if (na == nb) {
        for (std::size_t i = 0; i < na; ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
        return acc / static_cast<double>(na);
    }
    // Breakpoints i/na and j/nb compared in integer arithmetic as i*nb vs j*na.
    std::size_t i = 0, j = 0;
    std::uint64_t prev = 0;
    const std::uint64_t total = static_cast<std::uint64_t>(na) * nb;
    while (i < na && j < nb) {
        const std::uint64_t next_a = static_cast<std::uint64_t>(i + 1) * nb;
        const std::uint64_t next_b = static_cast<std::uint64_t>(j + 1) * na;
        const std::uint64_t next = std::min(next_a, next_b);
        const double diff = a[i] - b[j];
        acc += static_cast<double>(next - prev) * diff * diff;
        prev = next;
        if (next_a == next) ++i;
        if (next_b == next) ++j;
    }
    return acc / static_cast<double>(total);
}

/// Mean over `n_proj` random unit directions of the squared 1-D W2 distance
/// between the projected sets. Directions depend only on (dim, seed).
inline double swd(const Matrix& a, const Matrix& b, int n_proj, std::uint64_t seed) {
    detail::require(a.cols() == b.cols(), "swd: dimension mismatch");
    detail::require(a.rows() >= 2 && b.rows() >= 2, "swd: need at least two samples per set");
    detail::require(n_proj >= 1, "swd: need at least one projection");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    double total = 0.0;
    Vector dir(a.cols());
    std::vector<double> pa(static_cast<std::size_t>(a.rows())), pb(static_cast<std::size_t>(b.rows()));
    for (int p = 0; p < n_proj; ++p) {
        for (Eigen::Index k = 0; k < dir.size(); ++k) dir[k] = normal(rng);
        dir.normalize();
        const Vector ua = a * dir;
        const Vector ub = b * dir;
        std::copy(ua.data(), ua.data() + ua.size(), pa.begin());
        std::copy(ub.data(), ub.data() + ub.size(), pb.begin());
        std::sort(pa.begin(), pa.end());
        std::sort(pb.begin(), pb.end());
        total += w2_squared_1d(pa, pb);
    }
    return total / n_proj;
}

// --------------------------------------------------------------------------
// Frechet distance on feature embeddings
// --------------------------------------------------------------------------

struct GaussianMoments {
    Vector mean;
    Matrix cov;
};

/// Sample mean and unbiased covariance of the rows of `x`.
inline GaussianMoments moments(const Matrix& x) {
    detail::require(x.rows() >= 2, "moments: need at least two rows");
    GaussianMoments m;
    m.mean = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - m.mean.transpose();
    m.cov = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
    return m;
}

namespace detail_fd {

// Square root of a symmetric PSD matrix; eigenvalues below zero are clipped.
inline Matrix psd_sqrt(const Matrix& s, double* min_eigenvalue) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (s + s.transpose()));
    if (eig.info() != Eigen::Success) throw NumericalError("frechet: eigendecomposition failed");
    const Vector values = eig.eigenvalues();
    if (min_eigenvalue) *min_eigenvalue = values.size() ? values.minCoeff() : 0.0;
    const Vector roots = values.cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

inline void check_psd(const Matrix& cov, const char* which) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (cov + cov.transpose()), Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (lo < -1e-8 * hi) {
        std::ostringstream msg;
        msg << "frechet: covariance " << which << " is not PSD (min eigenvalue " << lo << ", scale " << hi << ")";
        throw NumericalError(msg.str());
    }
}

}  // namespace detail_fd

/// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)).
///
/// The trace of (S_a S_b)^(1/2) is taken as the trace of the PSD root of the
/// symmetric product S_a^(1/2) S_b S_a^(1/2), which has the same spectrum.
/// Negative eigenvalues of magnitude above 1e-6 are reported in `warnings`.
inline double frechet_from_moments(const GaussianMoments& a, const GaussianMoments& b,
                                   std::vector<std::string>* warnings = nullptr) {
    detail::require(a.mean.size() == b.mean.size() && a.cov.rows() == a.mean.size() &&
                        b.cov.rows() == b.mean.size() && a.cov.cols() == a.cov.rows() && b.cov.cols() == b.cov.rows(),
                    "frechet: moment shapes do not match");
    detail_fd::check_psd(a.cov, "a");
    detail_fd::check_psd(b.cov, "b");
    double min_a = 0.0, min_prod = 0.0;
    const Matrix root_a = detail_fd::psd_sqrt(a.cov, &min_a);
    const Matrix product = root_a * b.cov * root_a;
    const Matrix root_prod = detail_fd::psd_sqrt(product, &min_prod);
    if (warnings && std::min(min_a, min_prod) < -1e-6) {
        std::ostringstream msg;
        msg << "frechet: clipped negative eigenvalue " << std::min(min_a, min_prod);
        warnings->push_back(msg.str());
    }
    const double mean_term = (a.mean - b.mean).squaredNorm();
    const double value = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * root_prod.trace();
    return std::max(0.0, value);
}

inline double frechet_distance(const Matrix& a_feats, const Matrix& b_feats,
                               std::vector<std::string>* warnings = nullptr) {
    detail::require(a_feats.cols() == b_feats.cols(), "frechet_distance: feature width mismatch");
    if (warnings && (a_feats.rows() <= a_feats.cols() || b_feats.rows() <= b_feats.cols())) {
        warnings->push_back("frechet_distance: fewer samples than feature dimensions; covariance is singular");
    }
    return frechet_from_moments(moments(a_feats), moments(b_feats), warnings);
}

// --------------------------------------------------------------------------
// Inception-style score
// --------------------------------------------------------------------------

/// exp(mean_i KL(p_i || mean_j p_j)) over rows of a class-probability matrix.
inline double is_score(const Matrix& probs) {
    detail::require(probs.rows() >= 1 && probs.cols() >= 1, "is_score: empty probability matrix");
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const double s = probs.row(i).sum();
        if (probs.row(i).minCoeff() < 0.0 || std::abs(s - 1.0) > 1e-6) {
            throw InvalidArgument("is_score: row " + std::to_string(i) + " is not a probability vector");
        }
    }
    const Vector marginal = probs.colwise().mean().transpose();
    double kl_sum = 0.0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        for (Eigen::Index c = 0; c < probs.cols(); ++c) {
            const double p = probs(i, c);
            if (p > 0.0) kl_sum += p * (std::log(p) - std::log(marginal[c]));
        }
    }
    return std::exp(kl_sum / static_cast<double>(probs.rows()));
}

// --------------------------------------------------------------------------
// k-NN manifold metrics
// --------------------------------------------------------------------------

inline Matrix squared_distances(const Matrix& a, const Matrix& b) {
    Matrix d(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
    return d;
}

/// Squared distance from each row to its k-th nearest other row of the same set.
inline Vector knn_radii_squared(const Matrix& x, int k) {
    detail::require(k >= 1 && k < x.rows(), "knn radii: need 1 <= k < n");
    const Matrix d = squared_distances(x, x);
    Vector radii(x.rows());
    std::vector<double> row;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        row.clear();
        for (Eigen::Index j = 0; j < x.rows(); ++j)
            if (j != i) row.push_back(d(i, j));
        std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
        radii[i] = row[static_cast<std::size_t>(k - 1)];
    }
    return radii;
}

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
};

/// Precision: fraction of generated points inside some real point's k-NN ball
/// (boundary included). Recall: the same with the roles swapped.
inline PrecisionRecall precision_recall(const Matrix& real, const Matrix& gen, int k) {
    detail::require(real.cols() == gen.cols(), "precision_recall: dimension mismatch");
    detail::require(k < real.rows() && k < gen.rows(), "precision_recall: k must be smaller than both set sizes");
    const Vector real_r = knn_radii_squared(real, k);
    const Vector gen_r = knn_radii_squared(gen, k);
    const Matrix d = squared_distances(real, gen);  // real x gen
    Eigen::Index inside_real = 0, inside_gen = 0;
    for (Eigen::Index j = 0; j < gen.rows(); ++j) {
        for (Eigen::Index i = 0; i < real.rows(); ++i) {
            if (d(i, j) <= real_r[i]) {
                ++inside_real;
                break;
            }
        }
    }
    for (Eigen::Index i = 0; i < real.rows(); ++i) {
        for (Eigen::Index j = 0; j < gen.rows(); ++j) {
            if (d(i, j) <= gen_r[j]) {
                ++inside_gen;
                break;
            }
        }
    }
    return {static_cast<double>(inside_real) / static_cast<double>(gen.rows()),
            static_cast<double>(inside_gen) / static_cast<double>(real.rows())};
}

struct DensityCoverage {
    double density = 0.0;
    double coverage = 0.0;
};

/// Density: (1 / (k M)) * sum over generated points of the number of real k-NN
/// balls containing them. Coverage: fraction of real points whose k-NN ball
/// contains a generated point. Ball membership is strict (d < r).
inline DensityCoverage density_coverage(const Matrix& real, const Matrix& gen, int k) {
    detail::require(real.cols() == gen.cols(), "density_coverage: dimension mismatch");
    detail::require(k < real.rows() && k < gen.rows(), "density_coverage: k must be smaller than both set sizes");
    const Vector real_r = knn_radii_squared(real, k);
    const Matrix d = squared_distances(real, gen);
    double memberships = 0.0;
    Eigen::Index covered = 0;
    for (Eigen::Index i = 0; i < real.rows(); ++i) {
        bool any = false;
        for (Eigen::Index j = 0; j < gen.rows(); ++j) {
            if (d(i, j) < real_r[i]) {
                memberships += 1.0;
                any = true;
            }
        }
        if (any) ++covered;
    }
    return {memberships / (static_cast<double>(k) * static_cast<double>(gen.rows())),
            static_cast<double>(covered) / static_cast<double>(real.rows())};
}

// --------------------------------------------------------------------------
// Intra-set diversity
// --------------------------------------------------------------------------

inline constexpr int kSsimWindow = 7;

/// Mean SSIM over all valid 7x7 windows (uniform weights, sample covariance,
/// K1 = 0.01, K2 = 0.03, data range 2 for images in [-1, 1]). Images smaller
/// than the window use the largest odd window that fits.
inline double ssim(const Vector& x, const Vector& y, ImageShape shape, double data_range = 2.0) {
    detail::require(x.size() == shape.pixels() && y.size() == shape.pixels(), "ssim: image size mismatch");
    int win = std::min({kSsimWindow, shape.height, shape.width});
    if (win % 2 == 0) --win;
    detail::require(win >= 1, "ssim: empty image");
    const double c1 = (0.01 * data_range) * (0.01 * data_range);
    const double c2 = (0.03 * data_range) * (0.03 * data_range);
    const double np = static_cast<double>(win) * win;
    const double cov_norm = np > 1.0 ? np / (np - 1.0) : 1.0;
    auto at = [&](const Vector& v, int r, int c) { return v[r * shape.width + c]; };
    double total = 0.0;
    int count = 0;
    for (int r0 = 0; r0 + win <= shape.height; ++r0) {
        for (int c0 = 0; c0 + win <= shape.width; ++c0) {
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            for (int r = r0; r < r0 + win; ++r) {
                for (int c = c0; c < c0 + win; ++c) {
                    const double a = at(x, r, c), b = at(y, r, c);
                    sx += a;
                    sy += b;
                    sxx += a * a;
                    syy += b * b;
                    sxy += a * b;
                }
            }
            const double ux = sx / np, uy = sy / np;
            const double vx = cov_norm * (sxx / np - ux * ux);
            const double vy = cov_norm * (syy / np - uy * uy);
            const double vxy = cov_norm * (sxy / np - ux * uy);
            total += ((2 * ux * uy + c1) * (2 * vxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return total / count;
}

/// Mean dissimilarity over `n_pairs` random pairs of distinct rows: 1 - SSIM
/// for image-shaped samples, Euclidean distance otherwise.
inline double diversity(const SampleSet& gen, int n_pairs, std::uint64_t seed) {
    detail::require(gen.size() >= 2, "diversity: need at least two samples");
    detail::require(n_pairs >= 1, "diversity: need at least one pair");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> first(0, gen.size() - 1);
    std::uniform_int_distribution<Eigen::Index> second(0, gen.size() - 2);
    double total = 0.0;
    for (int p = 0; p < n_pairs; ++p) {
        const Eigen::Index i = first(rng);
        Eigen::Index j = second(rng);
        if (j >= i) ++j;
        const Vector a = gen.data.row(i).transpose();
        const Vector b = gen.data.row(j).transpose();
        total += gen.image ? 1.0 - ssim(a, b, *gen.image) : (a - b).norm();
    }
    return std::max(0.0, total / n_pairs);
}

// --------------------------------------------------------------------------
// Report
// --------------------------------------------------------------------------

struct MetricsReport {
    int nfe = 0;
    std::string sampler;
    double swd = 0.0;
    double afid = 0.0;
    double is_score = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double density = 0.0;
    double coverage = 0.0;
    double diversity = 0.0;
};

inline constexpr const char* kCsvHeader = "nfe,sampler,swd,afid,is,p,r,d,c,div";

inline std::string to_csv_row(const MetricsReport& r) {
    std::ostringstream out;
    out.precision(9);
    out << r.nfe << ',' << r.sampler << ',' << r.swd << ',' << r.afid << ',' << r.is_score << ',' << r.precision
        << ',' << r.recall << ',' << r.density << ',' << r.coverage << ',' << r.diversity;
    return out.str();
}

}  // namespace metrics
}  // namespace gpfn
