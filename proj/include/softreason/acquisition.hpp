#ifndef SOFTREASON_ACQUISITION_HPP
#define SOFTREASON_ACQUISITION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "softreason/errors.hpp"
#include "softreason/gp_surrogate.hpp"
#include "softreason/random.hpp"

namespace softreason {

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline constexpr double kDefaultSigmaMin = 1e-12;

/// E[(F - f_best)^+] for F ~ N(mean, scale^2), with `scale` already a standard deviation.
inline double expected_improvement_at_scale(double mean, double scale, double best, double sigma_min = kDefaultSigmaMin) {
    const double delta = mean - best;
    if (!(scale > sigma_min)) {
        return std::max(delta, 0.0);
    }
    const double z = delta / scale;
    return std::max(0.0, delta * normal_cdf(z) + scale * normal_pdf(z));
}

inline double expected_improvement(double mean, double variance, double best, double sigma_min = kDefaultSigmaMin) {
    detail::require(variance >= 0.0, "expected_improvement: negative variance");
    return expected_improvement_at_scale(mean, std::sqrt(variance), best, sigma_min);
}

/// omega = sqrt(gamma + 1 + ln(1/delta)).
inline double adaptive_scale(double information_gain, double delta) {
    detail::require(delta > 0.0 && delta < 1.0, "adaptive EI: delta must lie in (0, 1)");
    detail::require(information_gain >= 0.0, "adaptive EI: information gain must be nonnegative");
    return std::sqrt(information_gain + 1.0 + std::log(1.0 / delta));
}

/// EI with the posterior standard deviation inflated by `omega`.
inline double scaled_expected_improvement(double mean, double variance, double best, double omega,
                                          double sigma_min = kDefaultSigmaMin) {
    detail::require(variance >= 0.0, "expected_improvement: negative variance");
    return expected_improvement_at_scale(mean, omega * std::sqrt(variance), best, sigma_min);
}

inline double adaptive_expected_improvement(double mean, double variance, double best, double information_gain,
                                            double delta, double sigma_min = kDefaultSigmaMin) {
    return scaled_expected_improvement(mean, variance, best, adaptive_scale(information_gain, delta), sigma_min);
}

inline double probability_of_improvement(double mean, double variance, double best, double sigma_min = kDefaultSigmaMin) {
    detail::require(variance >= 0.0, "probability_of_improvement: negative variance");
    const double sigma = std::sqrt(variance);
    if (!(sigma > sigma_min)) {
        return mean > best ? 1.0 : 0.0;
    }
    return normal_cdf((mean - best) / sigma);
}

inline double ucb(double mean, double variance, double beta) {
    detail::require(variance >= 0.0, "ucb: negative variance");
    detail::require(beta > 0.0, "ucb: beta must be positive");
    return mean + std::sqrt(beta) * std::sqrt(variance);
}

enum class AcquisitionKind { ei, adaptive_ei, pi, ucb };

inline std::string_view to_string(AcquisitionKind kind) {
    switch (kind) {
    case AcquisitionKind::ei: return "ei";
    case AcquisitionKind::adaptive_ei: return "adaptive-ei";
    case AcquisitionKind::pi: return "pi";
    case AcquisitionKind::ucb: return "ucb";
    }
    return "?";
}

inline AcquisitionKind parse_acquisition_kind(std::string_view s) {
    if (s == "ei") return AcquisitionKind::ei;
    if (s == "adaptive-ei") return AcquisitionKind::adaptive_ei;
    if (s == "pi") return AcquisitionKind::pi;
    if (s == "ucb") return AcquisitionKind::ucb;
    throw ContractViolation("unknown acquisition kind: " + std::string(s));
}

struct AcquisitionSpec {
    AcquisitionKind kind = AcquisitionKind::adaptive_ei;
    double delta = 0.1;  // adaptive-ei only
    double beta = 1.0;   // ucb only
    double sigma_min = kDefaultSigmaMin;

    void validate() const {
        detail::require(sigma_min > 0.0, "acquisition: sigma_min must be positive");
        if (kind == AcquisitionKind::adaptive_ei) {
            detail::require(delta > 0.0 && delta < 1.0, "acquisition: delta must lie in (0, 1)");
        }
        if (kind == AcquisitionKind::ucb) {
            detail::require(beta > 0.0, "acquisition: beta must be positive");
        }
    }
};

/// Everything an acquisition needs beyond the posterior at a point.
struct AcquisitionContext {
    double best = 0.0;              // f*, best observed value
    double information_gain = 0.0;  // gamma, adaptive-ei only
};

inline double acquisition_score(const AcquisitionSpec& spec, const PosteriorStat& post, const AcquisitionContext& ctx) {
    switch (spec.kind) {
    case AcquisitionKind::ei:
        return expected_improvement(post.mean, post.variance, ctx.best, spec.sigma_min);
    case AcquisitionKind::adaptive_ei:
        return adaptive_expected_improvement(post.mean, post.variance, ctx.best, ctx.information_gain, spec.delta,
                                             spec.sigma_min);
    case AcquisitionKind::pi:
        return probability_of_improvement(post.mean, post.variance, ctx.best, spec.sigma_min);
    case AcquisitionKind::ucb:
        return ucb(post.mean, post.variance, spec.beta);
    }
    return 0.0;
}

/// M standard-normal latent candidates drawn from a seeded generator.
struct CandidatePool {
    std::size_t count = 5000;
    Eigen::Index dimension = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::vector<LatentPoint> sample() const {
        detail::require(count >= 1, "candidate pool: count must be positive");
        detail::require(dimension >= 1, "candidate pool: dimension must be positive");
        Rng rng(seed);
        std::vector<LatentPoint> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(standard_normal_vector(dimension, rng));
        }
        return out;
    }
};

struct ScoredCandidate {
    LatentPoint point;
    double score = 0.0;
    std::size_t pool_index = 0;
};

/// Scores every candidate and returns the `batch` best, highest first; ties go to the lower index.
inline std::vector<ScoredCandidate> rank_candidates(const GPModel& model, std::span<const LatentPoint> candidates,
                                                    const AcquisitionSpec& spec, const AcquisitionContext& ctx,
                                                    std::size_t batch) {
    spec.validate();
    detail::require(batch >= 1 && batch <= candidates.size(), "select_batch: batch must lie in [1, M]");
    std::vector<double> scores(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        scores[i] = acquisition_score(spec, model.posterior(candidates[i]), ctx);
    }
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<ScoredCandidate> out;
    out.reserve(batch);
    for (std::size_t r = 0; r < batch; ++r) {
        const auto i = order[r];
        out.push_back({candidates[i], scores[i], i});
    }
    return out;
}

/// Draws the pool, scores it under the model's posterior and returns the top `batch` latent points.
/// f* defaults to the best stored value; gamma is computed from the model when adaptive EI needs it.
inline std::vector<LatentPoint> select_batch(const GPModel& model, const CandidatePool& pool, const AcquisitionSpec& spec,
                                             std::size_t batch) {
    detail::require(pool.dimension == model.dimension(), "select_batch: pool dimension does not match the model");
    AcquisitionContext ctx;
    ctx.best = *std::max_element(model.values().begin(), model.values().end());
    if (spec.kind == AcquisitionKind::adaptive_ei) {
        ctx.information_gain = model.information_gain();
    }
    const auto candidates = pool.sample();
    auto ranked = rank_candidates(model, candidates, spec, ctx, batch);
    std::vector<LatentPoint> out;
    out.reserve(ranked.size());
    for (auto& r : ranked) {
        out.push_back(std::move(r.point));
    }
    return out;
}

} // namespace softreason

#endif // SOFTREASON_ACQUISITION_HPP
