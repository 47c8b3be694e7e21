#ifndef SOFTREASON_LATENT_SPACE_HPP
#define SOFTREASON_LATENT_SPACE_HPP

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "softreason/errors.hpp"
#include "softreason/gp_surrogate.hpp"
#include "softreason/random.hpp"

namespace softreason {

/// A point in the generator's token-embedding space.
using EmbeddingVector = Eigen::VectorXd;

/// The greedy first answer token and its embedding; the search is centred here.
struct AnchorEmbedding {
    EmbeddingVector embedding;
    std::int64_t token_id = 0;
};

/// Random Gaussian projection from the latent space (d) to the embedding space (D).
///
/// Maps u to z + scale * A u / sqrt(d). The 1/sqrt(d) factor gives each embedding
/// coordinate unit variance for a standard-normal u, so `scale` reads directly as the
/// per-coordinate perturbation size. It does not change the column space of A.
class ProjectionMap {
public:
    ProjectionMap(Eigen::MatrixXd matrix, std::uint64_t seed, double scale)
        : matrix_(std::move(matrix)), seed_(seed), scale_(scale) {
        detail::require(matrix_.cols() >= 1 && matrix_.cols() <= matrix_.rows(), "projection: need 1 <= d <= D");
        detail::require(std::isfinite(scale_) && scale_ > 0.0, "projection: scale must be positive");
    }

    [[nodiscard]] const Eigen::MatrixXd& matrix() const { return matrix_; }
    [[nodiscard]] Eigen::Index embedding_dim() const { return matrix_.rows(); }
    [[nodiscard]] Eigen::Index latent_dim() const { return matrix_.cols(); }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] double scale() const { return scale_; }

    /// The perturbation scale * A u / sqrt(d), without the anchor.
    [[nodiscard]] EmbeddingVector offset(const LatentPoint& u) const {
        detail::require(u.size() == latent_dim(), "to_embedding: latent dimension mismatch");
        return (scale_ / std::sqrt(static_cast<double>(latent_dim()))) * (matrix_ * u);
    }

private:
    Eigen::MatrixXd matrix_;
    std::uint64_t seed_;
    double scale_;
};

/// Entries of A are i.i.d. N(0, 1), filled column by column from one seeded stream.
inline ProjectionMap make_projection(Eigen::Index embedding_dim, Eigen::Index latent_dim, std::uint64_t seed,
                                     double scale) {
    detail::require(latent_dim >= 1, "make_projection: latent dimension must be >= 1");
    detail::require(latent_dim <= embedding_dim, "make_projection: latent dimension exceeds embedding dimension");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd a(embedding_dim, latent_dim);
    for (Eigen::Index j = 0; j < latent_dim; ++j) {
        for (Eigen::Index i = 0; i < embedding_dim; ++i) {
            a(i, j) = normal(rng);
        }
    }
    return ProjectionMap(std::move(a), seed, scale);
}

inline EmbeddingVector to_embedding(const ProjectionMap& map, const AnchorEmbedding& anchor, const LatentPoint& u) {
    detail::require(anchor.embedding.size() == map.embedding_dim(), "to_embedding: anchor dimension mismatch");
    return anchor.embedding + map.offset(u);
}

/// k standard-normal latent points; with `include_anchor` the first is the origin (the unperturbed anchor).
inline std::vector<LatentPoint> sample_initial(std::size_t count, Eigen::Index latent_dim, std::uint64_t seed,
                                               bool include_anchor = false) {
    detail::require(count >= 1, "sample_initial: count must be >= 1");
    detail::require(latent_dim >= 1, "sample_initial: latent dimension must be >= 1");
    Rng rng(seed);
    std::vector<LatentPoint> out;
    out.reserve(count);
    if (include_anchor) {
        out.push_back(LatentPoint::Zero(latent_dim));
    }
    while (out.size() < count) {
        out.push_back(standard_normal_vector(latent_dim, rng));
    }
    return out;
}

} // namespace softreason

#endif // SOFTREASON_LATENT_SPACE_HPP
