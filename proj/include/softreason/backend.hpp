#ifndef SOFTREASON_BACKEND_HPP
#define SOFTREASON_BACKEND_HPP

#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "softreason/errors.hpp"
#include "softreason/latent_space.hpp"

namespace softreason {

enum class Placement { first, middle, last };

inline std::string_view to_string(Placement p) {
    switch (p) {
    case Placement::first: return "first";
    case Placement::middle: return "middle";
    case Placement::last: return "last";
    }
    return "?";
}

inline Placement parse_placement(std::string_view s) {
    if (s == "first") return Placement::first;
    if (s == "middle") return Placement::middle;
    if (s == "last") return Placement::last;
    throw ContractViolation("unknown placement: " + std::string(s));
}

/// Character offset at which injected tokens go. "middle" is the start of the final
/// sentence of the prompt (after the last '.', '?' or '!' that is followed by more text).
inline std::size_t injection_offset(std::string_view prompt, Placement placement) {
    switch (placement) {
    case Placement::first: return 0;
    case Placement::last: return prompt.size();
    case Placement::middle: break;
    }
    std::size_t end = prompt.size();
    while (end > 0 && std::isspace(static_cast<unsigned char>(prompt[end - 1]))) --end;
    // skip the final sentence's own terminator
    if (end > 0 && std::string_view(".?!").find(prompt[end - 1]) != std::string_view::npos) --end;
    for (std::size_t i = end; i > 0; --i) {
        const char c = prompt[i - 1];
        if (c == '.' || c == '?' || c == '!' || c == '\n') {
            std::size_t start = i;
            while (start < end && std::isspace(static_cast<unsigned char>(prompt[start]))) ++start;
            return start;
        }
    }
    return 0;
}

struct DecodeSpec {
    enum class Mode { greedy, temperature };
    Mode mode = Mode::greedy;
    double tau = 1.0;
    std::uint64_t seed = 0;

    static DecodeSpec greedy() { return {}; }
    static DecodeSpec temperature(double tau, std::uint64_t seed) { return {Mode::temperature, tau, seed}; }

    [[nodiscard]] bool is_greedy() const { return mode == Mode::greedy; }

    void validate() const {
        if (mode == Mode::temperature) {
            detail::require(std::isfinite(tau) && tau > 0.0, "decode: temperature must be positive");
        }
    }
};

struct GenerationResult {
    std::string text;
    std::vector<std::string> tokens;
    std::vector<double> token_logprobs;  // natural log, each <= 0
    std::size_t prompt_token_count = 0;
    std::size_t output_token_count = 0;
    bool truncated = false;

    void validate() const {
        if (tokens.size() != token_logprobs.size() || tokens.size() != output_token_count) {
            throw ValidationError("generation result: tokens, logprobs and output_token_count disagree");
        }
        for (const double lp : token_logprobs) {
            if (!std::isfinite(lp) || lp > 0.0) {
                throw ValidationError("generation result: log-probabilities must be finite and <= 0");
            }
        }
    }
};

struct InjectionRequest {
    std::string prompt;
    std::vector<EmbeddingVector> injected_embeddings;
    Placement placement = Placement::last;
    std::size_t max_tokens = 300;
    DecodeSpec decode;

    void validate(Eigen::Index embedding_dim) const {
        detail::require(!prompt.empty(), "injection request: empty prompt");
        detail::require(!injected_embeddings.empty(), "injection request: at least one embedding is required");
        detail::require(decode.is_greedy(), "injection request: injection requires greedy decoding");
        detail::require(max_tokens >= 1, "injection request: max_tokens must be >= 1");
        for (const auto& e : injected_embeddings) {
            detail::require(e.size() == embedding_dim, "injection request: embedding dimension mismatch");
            detail::require(e.allFinite(), "injection request: non-finite embedding entry");
        }
    }
};

/// A generator that can decode greedily from an injected first-token embedding.
///
/// Implementations must be safe to call concurrently.
class GenerationBackend {
public:
    virtual ~GenerationBackend() = default;

    [[nodiscard]] virtual Eigen::Index embedding_dim() const = 0;

    /// Greedy first answer token for `prompt` and its embedding.
    [[nodiscard]] virtual AnchorEmbedding base_first_token(const std::string& prompt) const = 0;

    [[nodiscard]] virtual GenerationResult generate_with_injection(const InjectionRequest& request) const = 0;

    [[nodiscard]] virtual GenerationResult generate_plain(const std::string& prompt, const DecodeSpec& decode,
                                                          std::size_t max_tokens) const = 0;
};

/// Whitespace token count; used where a backend does not report prompt tokens.
inline std::size_t approximate_token_count(std::string_view text) {
    std::size_t count = 0;
    bool in_word = false;
    for (const char c : text) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++count;
        in_word = !space;
    }
    return count;
}

} // namespace softreason

#endif // SOFTREASON_BACKEND_HPP
