#ifndef SOFTREASON_RANDOM_HPP
#define SOFTREASON_RANDOM_HPP

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace softreason {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a over bytes. Stable across platforms, unlike std::hash.
constexpr std::uint64_t hash_bytes(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) noexcept {
    return derive_seed(seed, hash_bytes(tag));
}

/// Uniform double in [0, 1) computed from a 64-bit key.
constexpr double unit_from_key(std::uint64_t key) noexcept {
    return static_cast<double>(mix64(key) >> 11) * 0x1.0p-53;
}

inline Eigen::VectorXd standard_normal_vector(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i) = normal(rng);
    }
    return v;
}

} // namespace softreason

#endif // SOFTREASON_RANDOM_HPP
