#ifndef SOFTREASON_GP_SURROGATE_HPP
#define SOFTREASON_GP_SURROGATE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "softreason/errors.hpp"

namespace softreason {

/// A point in the reduced search space.
using LatentPoint = Eigen::VectorXd;

enum class BandwidthMode { fixed, median_heuristic };
enum class NoiseMode { noiseless, noisy };

/// Gaussian (squared-exponential) kernel with unit signal variance.
struct KernelSpec {
    double bandwidth = 1.0;
    BandwidthMode mode = BandwidthMode::median_heuristic;

    static KernelSpec fixed(double bandwidth) { return {bandwidth, BandwidthMode::fixed}; }
    static KernelSpec median_heuristic() { return {1.0, BandwidthMode::median_heuristic}; }

    void validate() const {
        detail::require(std::isfinite(bandwidth) && bandwidth > 0.0, "kernel bandwidth must be positive");
    }
};

struct PosteriorStat {
    double mean = 0.0;
    double variance = 1.0;

    [[nodiscard]] double stddev() const { return std::sqrt(variance); }
};

inline constexpr double kMinJitter = 1e-10;
inline constexpr double kMaxJitter = 1e-6;
inline constexpr double kDuplicateValueTolerance = 1e-9;

/// exp(-|a-b|^2 / (2 l^2)). Underflows cleanly to 0 for distant points.
inline double kernel_eval(const LatentPoint& a, const LatentPoint& b, const KernelSpec& spec) {
    detail::require(a.size() == b.size(), "kernel_eval: dimension mismatch");
    spec.validate();
    const double sq = (a - b).squaredNorm();
    const double l = spec.bandwidth;
    return std::exp(-sq / (2.0 * l * l));
}

/// Median of the nonzero pairwise Euclidean distances; 1.0 when there are none.
inline double median_pairwise_distance(std::span<const LatentPoint> points) {
    std::vector<double> dists;
    dists.reserve(points.size() * (points.size() - (points.empty() ? 0 : 1)) / 2);
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            const double dist = (points[i] - points[j]).norm();
            if (dist > 0.0) {
                dists.push_back(dist);
            }
        }
    }
    if (dists.empty()) {
        return 1.0;
    }
    const auto mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
    double median = dists[mid];
    if (dists.size() % 2 == 0) {
        const double lower = *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (median + lower);
    }
    return median;
}

/// Gram matrix K_ij = k(x_i, x_j).
inline Eigen::MatrixXd gram_matrix(std::span<const LatentPoint> points, const KernelSpec& spec) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        gram(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = kernel_eval(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)], spec);
            gram(i, j) = v;
            gram(j, i) = v;
        }
    }
    return gram;
}

class GPModel;
GPModel fit(std::vector<LatentPoint> points, std::vector<double> values, const KernelSpec& spec, double noise,
            NoiseMode mode);

/// A fitted Gaussian-process surrogate. Immutable once built by fit().
class GPModel {
public:
    [[nodiscard]] const std::vector<LatentPoint>& points() const { return points_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    /// Kernel with the bandwidth actually used (median heuristic resolved).
    [[nodiscard]] const KernelSpec& kernel() const { return kernel_; }
    [[nodiscard]] double noise() const { return noise_; }
    [[nodiscard]] NoiseMode noise_mode() const { return mode_; }
    /// Diagonal term added before factorization: lambda in noisy mode, the jitter otherwise.
    [[nodiscard]] double diagonal_shift() const { return shift_; }
    [[nodiscard]] std::size_t size() const { return points_.size(); }
    [[nodiscard]] Eigen::Index dimension() const { return points_.front().size(); }

    /// Kernel-only Gram matrix (no noise, no jitter).
    [[nodiscard]] const Eigen::MatrixXd& kernel_gram() const { return kernel_gram_; }

    /// The matrix that was factorized: K + shift * I.
    [[nodiscard]] Eigen::MatrixXd gram() const {
        Eigen::MatrixXd g = kernel_gram_;
        g.diagonal().array() += shift_;
        return g;
    }

    /// Lower-triangular Cholesky factor of gram().
    [[nodiscard]] Eigen::MatrixXd gram_factor() const { return llt_.matrixL(); }

    [[nodiscard]] Eigen::VectorXd cross_covariance(const LatentPoint& query) const {
        detail::require(query.size() == dimension(), "posterior: query dimension does not match the model");
        Eigen::VectorXd kstar(static_cast<Eigen::Index>(points_.size()));
        for (std::size_t i = 0; i < points_.size(); ++i) {
            kstar(static_cast<Eigen::Index>(i)) = kernel_eval(query, points_[i], kernel_);
        }
        return kstar;
    }

    /// Posterior mean and latent-function variance at `query`. Prior mean is 0, prior variance 1.
    [[nodiscard]] PosteriorStat posterior(const LatentPoint& query) const {
        const Eigen::VectorXd kstar = cross_covariance(query);
        const double mean = kstar.dot(alpha_);
        const Eigen::VectorXd v = llt_.matrixL().solve(kstar);
        const double variance = std::max(0.0, 1.0 - v.squaredNorm());
        return {mean, variance};
    }

    /// 1/2 log det(I + K / lambda); requires noisy mode.
    [[nodiscard]] double information_gain() const {
        detail::require(mode_ == NoiseMode::noisy && noise_ > 0.0, "information_gain requires a noisy model with lambda > 0");
        const auto n = kernel_gram_.rows();
        Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) + kernel_gram_ / noise_;
        Eigen::LLT<Eigen::MatrixXd> llt(m);
        if (llt.info() != Eigen::Success) {
            throw NumericalConditioning("information_gain: I + K/lambda is not positive definite");
        }
        const Eigen::MatrixXd l = llt.matrixL();
        return l.diagonal().array().log().sum();
    }

private:
    friend GPModel fit(std::vector<LatentPoint>, std::vector<double>, const KernelSpec&, double, NoiseMode);

    GPModel() = default;

    std::vector<LatentPoint> points_;
    std::vector<double> values_;
    KernelSpec kernel_;
    double noise_ = 0.0;
    NoiseMode mode_ = NoiseMode::noisy;
    double shift_ = 0.0;
    Eigen::MatrixXd kernel_gram_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;
};

/// Builds the Gram matrix and its Cholesky factor.
///
/// Exact duplicate points whose values agree within 1e-9 are collapsed, keeping the first.
/// Noiseless mode retries with jitter 1e-10, 1e-9, ..., 1e-6 until the factorization succeeds,
/// then refines the weights against the unjittered K while that lowers the residual.
inline GPModel fit(std::vector<LatentPoint> points, std::vector<double> values, const KernelSpec& spec, double noise,
                   NoiseMode mode) {
    detail::require(!points.empty(), "fit: at least one observation is required");
    detail::require(points.size() == values.size(), "fit: points and values differ in length");
    const auto dim = points.front().size();
    for (std::size_t i = 0; i < points.size(); ++i) {
        detail::require(points[i].size() == dim, "fit: points have inconsistent dimensions");
        detail::require(points[i].allFinite(), "fit: non-finite latent point");
        detail::require(std::isfinite(values[i]), "fit: non-finite observed value");
    }
    if (mode == NoiseMode::noisy) {
        detail::require(std::isfinite(noise) && noise > 0.0, "fit: noisy mode requires lambda > 0");
    }
    spec.validate();

    GPModel model;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool keep = true;
        for (std::size_t j = 0; j < model.points_.size(); ++j) {
            if (model.points_[j] != points[i]) {
                continue;
            }
            if (std::abs(model.values_[j] - values[i]) <= kDuplicateValueTolerance) {
                keep = false;
                break;
            }
            if (mode == NoiseMode::noiseless) {
                throw InconsistentData("fit: duplicate latent point with conflicting values in noiseless mode");
            }
        }
        if (keep) {
            model.points_.push_back(std::move(points[i]));
            model.values_.push_back(values[i]);
        }
    }

    model.kernel_ = spec;
    if (spec.mode == BandwidthMode::median_heuristic) {
        model.kernel_.bandwidth = median_pairwise_distance(model.points_);
    }
    model.noise_ = mode == NoiseMode::noisy ? noise : 0.0;
    model.mode_ = mode;
    model.kernel_gram_ = gram_matrix(model.points_, model.kernel_);

    const auto n = model.kernel_gram_.rows();
    auto try_factor = [&](double shift) {
        Eigen::MatrixXd g = model.kernel_gram_;
        g.diagonal().array() += shift;
        model.llt_.compute(g);
        if (model.llt_.info() != Eigen::Success) {
            return false;
        }
        const Eigen::MatrixXd l = model.llt_.matrixL();
        return (l.diagonal().array() > 0.0).all() && l.allFinite();
    };

    bool ok = false;
    if (mode == NoiseMode::noisy) {
        model.shift_ = model.noise_;
        ok = try_factor(model.shift_);
    } else {
        for (const double jitter : {kMinJitter, 1e-9, 1e-8, 1e-7, kMaxJitter}) {
            model.shift_ = jitter;
            if (try_factor(jitter)) {
                ok = true;
                break;
            }
        }
    }
    if (!ok) {
        throw NumericalConditioning("fit: Gram matrix could not be factorized (n = " + std::to_string(n) + ")");
    }

    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(model.values_.data(), n);
    model.alpha_ = model.llt_.solve(y);
    if (mode == NoiseMode::noiseless) {
        // refine toward K^-1 y so observed values are reproduced despite the jitter
        double residual = (y - model.kernel_gram_ * model.alpha_).norm();
        for (int step = 0; step < 5 && residual > 0.0; ++step) {
            const Eigen::VectorXd next = model.alpha_ + model.llt_.solve(y - model.kernel_gram_ * model.alpha_);
            const double r = (y - model.kernel_gram_ * next).norm();
            const double rounding = 1e-15 * static_cast<double>(n) * next.cwiseAbs().maxCoeff();
            if (!next.allFinite() || !(r < residual) || rounding > residual) break;
            model.alpha_ = next;
            residual = r;
        }
    }
    if (!model.alpha_.allFinite()) {
        throw NumericalConditioning("fit: non-finite weights after solve");
    }
    return model;
}

inline PosteriorStat posterior(const GPModel& model, const LatentPoint& query) { return model.posterior(query); }

inline double information_gain(const GPModel& model) { return model.information_gain(); }

} // namespace softreason

#endif // SOFTREASON_GP_SURROGATE_HPP
