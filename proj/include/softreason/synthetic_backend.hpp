#ifndef SOFTREASON_SYNTHETIC_BACKEND_HPP
#define SOFTREASON_SYNTHETIC_BACKEND_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "softreason/answers.hpp"
#include "softreason/backend.hpp"
#include "softreason/random.hpp"

namespace softreason {

struct SyntheticWorldConfig {
    Eigen::Index embedding_dim = 64;
    std::size_t regions = 8;
    double sharpness = 1.0;  // alpha: total log-prob of an answer is -alpha * distance to its centroid
    double verifier_accuracy = 0.9;
    /// Probability that the anchor's own region carries the gold label.
    double greedy_correct_rate = 0.5;
    double anchor_offset = 0.5;  // distance from the anchor to its own centroid
    double region_distance_min = 3.0;
    double region_distance_max = 6.0;
    std::uint64_t seed = 0;

    void validate() const {
        detail::require(embedding_dim >= 2, "synthetic world: embedding_dim must be >= 2");
        detail::require(regions >= 2, "synthetic world: need at least two answer regions");
        detail::require(sharpness > 0.0, "synthetic world: sharpness must be positive");
        detail::require(verifier_accuracy > 0.0 && verifier_accuracy <= 1.0,
                        "synthetic world: verifier accuracy must lie in (0, 1]");
        detail::require(greedy_correct_rate >= 0.0 && greedy_correct_rate <= 1.0,
                        "synthetic world: greedy_correct_rate must lie in [0, 1]");
        detail::require(anchor_offset >= 0.0 && anchor_offset < region_distance_min / 2.0,
                        "synthetic world: anchor must lie inside its own region");
        detail::require(region_distance_min > 0.0 && region_distance_min <= region_distance_max,
                        "synthetic world: invalid region distance range");
    }
};

/// Geometry of one question: answer regions are the Voronoi cells of the centroids.
struct QuestionWorld {
    EmbeddingVector anchor;
    std::int64_t anchor_token = 0;
    std::vector<EmbeddingVector> centroids;  // centroids[0] is the anchor's region
    std::vector<std::string> labels;
    std::size_t gold = 0;

    [[nodiscard]] std::size_t nearest_region(const EmbeddingVector& x) const {
        std::size_t best = 0;
        double best_dist = (x - centroids[0]).squaredNorm();
        for (std::size_t j = 1; j < centroids.size(); ++j) {
            const double dist = (x - centroids[j]).squaredNorm();
            if (dist < best_dist) {
                best_dist = dist;
                best = j;
            }
        }
        return best;
    }
};

struct SyntheticQuestion {
    std::string id;
    std::string question;
    std::string gold_answer;
};

/// Verifier prompt as seen by the synthetic backend.
struct ParsedVerifierPrompt {
    enum class Kind { single_judge, multi_judge, single_generate, multi_generate };
    Kind kind = Kind::multi_generate;
    std::string question;
    std::vector<std::string> candidates;
};

namespace detail {

/// First non-empty trimmed line; questions are identified by it.
inline std::string question_key(std::string_view question) {
    for (auto line : split_lines(question)) {
        line = trim(line);
        if (!line.empty()) return std::string(line);
    }
    return std::string(trim(question));
}

/// First non-empty line after the last "Question:" marker.
inline std::optional<std::string> question_of(std::string_view prompt) {
    constexpr std::string_view marker = "Question:";
    const auto pos = prompt.rfind(marker);
    if (pos == std::string_view::npos) return std::nullopt;
    std::string_view rest = prompt.substr(pos + marker.size());
    for (auto line : split_lines(rest)) {
        line = trim(line);
        if (!line.empty()) return std::string(line);
    }
    return std::nullopt;
}

inline bool numbered(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    return i > 0 && i < line.size() && line[i] == '.';
}

} // namespace detail

/// Recognizes the four verifier layouts by their section headers; nullopt for anything else.
inline std::optional<ParsedVerifierPrompt> parse_verifier_prompt(std::string_view prompt) {
    const auto lines = detail::split_lines(prompt);
    std::size_t last = lines.size();
    while (last > 0 && detail::trim(lines[last - 1]).empty()) --last;
    if (last == 0) return std::nullopt;
    const auto terminal = detail::trim(lines[last - 1]);
    if (terminal != "Correct:" && terminal != "Analysis:") return std::nullopt;

    // locate the final "Question:" header line
    std::size_t q = last;
    for (std::size_t i = last; i > 0; --i) {
        if (detail::trim(lines[i - 1]).starts_with("Question:")) {
            q = i - 1;
            break;
        }
    }
    if (q == last) return std::nullopt;
    ParsedVerifierPrompt out;
    out.question = detail::question_of(prompt).value_or("");

    std::size_t header = last;
    for (std::size_t i = q + 1; i + 1 < last; ++i) {
        const auto t = detail::trim(lines[i]);
        if (t == "Your previous answers:" || t == "Answer:") {
            header = i;
            break;
        }
    }
    if (header == last) return std::nullopt;
    const bool judge = terminal == "Correct:";
    const bool single_header = detail::trim(lines[header]) == "Answer:";

    std::vector<std::string> entries;
    bool any_numbered = false;
    for (std::size_t i = header + 1; i + 1 < last; ++i) {
        const auto t = detail::trim(lines[i]);
        if (t.empty()) continue;
        if (detail::numbered(t)) {
            any_numbered = true;
            const auto dot = t.find('.');
            entries.emplace_back(detail::trim(t.substr(dot + 1)));
        } else if (!entries.empty()) {
            entries.back() += " ";
            entries.back() += std::string(t);
        } else {
            entries.emplace_back(t);
        }
    }
    if (judge) {
        out.kind = single_header ? ParsedVerifierPrompt::Kind::single_judge : ParsedVerifierPrompt::Kind::multi_judge;
    } else {
        out.kind = any_numbered ? ParsedVerifierPrompt::Kind::multi_generate : ParsedVerifierPrompt::Kind::single_generate;
    }
    if (out.kind == ParsedVerifierPrompt::Kind::single_judge || out.kind == ParsedVerifierPrompt::Kind::single_generate) {
        std::string joined;
        for (const auto& e : entries) {
            if (!joined.empty()) joined += " ";
            joined += e;
        }
        entries.clear();
        if (!joined.empty()) entries.push_back(std::move(joined));
    }
    out.candidates = std::move(entries);
    return out;
}

/// A deterministic stand-in for a language model.
///
/// Every question owns a set of answer regions in embedding space. The injected embedding
/// picks the region whose centroid is nearest; each of the L output tokens carries
/// log-probability -alpha * dist(x, centroid) / L. Verifier prompts are answered with the
/// configured accuracy: correct with probability p, a uniformly random candidate otherwise.
class SyntheticWorld {
public:
    explicit SyntheticWorld(SyntheticWorldConfig config) : config_(config) { config_.validate(); }

    [[nodiscard]] const SyntheticWorldConfig& config() const { return config_; }

    /// Forces the gold label for `question`; call before sharing the world across threads.
    void set_gold(std::string_view question, const std::string& label) { gold_override_[detail::question_key(question)] = label; }

    [[nodiscard]] QuestionWorld question_world(std::string_view question) const {
        const std::string id = detail::question_key(question);
        const std::uint64_t key = derive_seed(config_.seed, hash_bytes(id));
        Rng rng(key);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const auto dim = config_.embedding_dim;

        QuestionWorld w;
        w.anchor = standard_normal_vector(dim, rng);
        w.anchor_token = static_cast<std::int64_t>(key % 32000ULL);

        auto random_direction = [&] {
            Eigen::VectorXd v = standard_normal_vector(dim, rng);
            return Eigen::VectorXd(v / v.norm());
        };
        w.centroids.push_back(w.anchor + config_.anchor_offset * random_direction());
        for (std::size_t j = 1; j < config_.regions; ++j) {
            const double r = config_.region_distance_min +
                             (config_.region_distance_max - config_.region_distance_min) * unit(rng);
            w.centroids.push_back(w.anchor + r * random_direction());
        }

        std::uniform_int_distribution<int> label_dist(2, 999);
        while (w.labels.size() < config_.regions) {
            auto label = std::to_string(label_dist(rng));
            if (std::find(w.labels.begin(), w.labels.end(), label) == w.labels.end()) {
                w.labels.push_back(std::move(label));
            }
        }
        if (unit(rng) >= config_.greedy_correct_rate) {
            std::uniform_int_distribution<std::size_t> other(1, config_.regions - 1);
            w.gold = other(rng);
        }

        if (auto it = gold_override_.find(id); it != gold_override_.end()) {
            const auto clash = std::find(w.labels.begin(), w.labels.end(), it->second);
            if (clash != w.labels.end()) {
                std::swap(*clash, w.labels[w.gold]);
            } else {
                w.labels[w.gold] = it->second;
            }
        }
        return w;
    }

    /// A dataset whose gold answers agree with this world.
    [[nodiscard]] std::vector<SyntheticQuestion> make_questions(std::size_t count) const {
        std::vector<SyntheticQuestion> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            SyntheticQuestion q;
            q.id = fmt::format("synthetic-{:04d}", i);
            q.question = fmt::format("Synthetic question {} (world {}): which region holds the answer?", i, config_.seed);
            const auto w = question_world(q.question);
            q.gold_answer = w.labels[w.gold];
            out.push_back(std::move(q));
        }
        return out;
    }

private:
    SyntheticWorldConfig config_;
    std::map<std::string, std::string> gold_override_;
};

class SyntheticBackend final : public GenerationBackend {
public:
    explicit SyntheticBackend(std::shared_ptr<const SyntheticWorld> world) : world_(std::move(world)) {}

    [[nodiscard]] const SyntheticWorld& world() const { return *world_; }

    [[nodiscard]] Eigen::Index embedding_dim() const override { return world_->config().embedding_dim; }

    [[nodiscard]] AnchorEmbedding base_first_token(const std::string& prompt) const override {
        detail::require(!prompt.empty(), "base_first_token: empty prompt");
        const auto w = world_->question_world(detail::question_of(prompt).value_or(prompt));
        return {w.anchor, w.anchor_token};
    }

    [[nodiscard]] GenerationResult generate_with_injection(const InjectionRequest& request) const override {
        request.validate(embedding_dim());
        const auto w = world_->question_world(detail::question_of(request.prompt).value_or(request.prompt));
        EmbeddingVector mean = EmbeddingVector::Zero(embedding_dim());
        for (const auto& e : request.injected_embeddings) mean += e;
        mean /= static_cast<double>(request.injected_embeddings.size());
        const EmbeddingVector x = w.anchor + placement_weight(request.placement) * (mean - w.anchor);
        return answer_from(w, x, request.prompt, request.max_tokens);
    }

    [[nodiscard]] GenerationResult generate_plain(const std::string& prompt, const DecodeSpec& decode,
                                                  std::size_t max_tokens) const override {
        detail::require(!prompt.empty(), "generate_plain: empty prompt");
        detail::require(max_tokens >= 1, "generate_plain: max_tokens must be >= 1");
        decode.validate();
        if (auto parsed = parse_verifier_prompt(prompt)) {
            return verify(*parsed, prompt, max_tokens);
        }
        const auto w = world_->question_world(detail::question_of(prompt).value_or(prompt));
        if (decode.is_greedy()) {
            return answer_from(w, w.anchor, prompt, max_tokens);
        }
        Rng rng(derive_seed(decode.seed, hash_bytes(prompt, world_->config().seed)));
        const EmbeddingVector x = w.anchor + decode.tau * standard_normal_vector(embedding_dim(), rng);
        return answer_from(w, x, prompt, max_tokens);
    }

    /// Perturbations injected away from the end of the prompt have less influence.
    static double placement_weight(Placement p) {
        switch (p) {
        case Placement::last: return 1.0;
        case Placement::middle: return 0.75;
        case Placement::first: return 0.5;
        }
        return 1.0;
    }

private:
    static GenerationResult emit(std::vector<std::string> tokens, double per_token_logprob, std::string_view prompt,
                                 std::size_t max_tokens) {
        GenerationResult r;
        r.prompt_token_count = approximate_token_count(prompt);
        if (tokens.size() > max_tokens) {
            tokens.resize(max_tokens);
            r.truncated = true;
        }
        for (const auto& t : tokens) r.text += t;
        r.token_logprobs.assign(tokens.size(), per_token_logprob);
        r.output_token_count = tokens.size();
        r.tokens = std::move(tokens);
        return r;
    }

    GenerationResult answer_from(const QuestionWorld& w, const EmbeddingVector& x, std::string_view prompt,
                                 std::size_t max_tokens) const {
        const auto region = w.nearest_region(x);
        std::vector<std::string> tokens = {"Thought:", " working", " through", " the", " problem",
                                           " gives",   " a",       " value.",  " Answer:", " " + w.labels[region]};
        const double dist = (x - w.centroids[region]).norm();
        const double per_token = -world_->config().sharpness * dist / static_cast<double>(tokens.size());
        return emit(std::move(tokens), std::min(0.0, per_token), prompt, max_tokens);
    }

    GenerationResult verify(const ParsedVerifierPrompt& parsed, std::string_view prompt, std::size_t max_tokens) const {
        const auto w = world_->question_world(parsed.question);
        const double p = world_->config().verifier_accuracy;
        const std::uint64_t key = derive_seed(world_->config().seed, hash_bytes(prompt));
        const auto gold = normalize_answer(w.labels[w.gold]);

        std::vector<std::optional<NormalizedAnswer>> answers;
        for (const auto& c : parsed.candidates) answers.push_back(extract_answer(c));
        auto is_gold = [&](const std::optional<NormalizedAnswer>& a) { return a && answers_equal(*a, *gold); };

        using Kind = ParsedVerifierPrompt::Kind;
        if (parsed.kind == Kind::single_judge || parsed.kind == Kind::multi_judge) {
            std::vector<std::string> correct;
            for (std::size_t i = 0; i < answers.size(); ++i) {
                const bool truthful = unit_from_key(derive_seed(key, i)) < p;
                if (is_gold(answers[i]) == truthful) correct.push_back(std::to_string(i));
            }
            std::string text;
            if (parsed.kind == Kind::single_judge) {
                text = correct.empty() ? "0" : "1";
            } else if (correct.empty()) {
                text = "none";
            } else {
                for (std::size_t i = 0; i < correct.size(); ++i) text += (i ? ", " : "") + correct[i];
            }
            return emit({text}, -0.05, prompt, max_tokens);
        }

        std::vector<NormalizedAnswer> present;
        for (const auto& a : answers) {
            if (a) present.push_back(*a);
        }
        if (present.empty()) {
            return emit({"I", " cannot", " tell."}, -0.5, prompt, max_tokens);
        }
        const bool truthful = unit_from_key(key) < p;
        NormalizedAnswer pick;
        if (parsed.kind == Kind::single_generate) {
            pick = truthful ? *gold : present.front();
        } else if (truthful) {
            const bool has_gold = std::any_of(present.begin(), present.end(), [&](const auto& a) { return answers_equal(a, *gold); });
            pick = has_gold ? *gold : plurality(present);
        } else {
            pick = present[static_cast<std::size_t>(mix64(key ^ 0x5bd1e995ULL) % present.size())];
        }
        return emit({"Let's", " think", " step", " by", " step.", " Answer:", " " + pick.canonical()}, -0.05, prompt,
                    max_tokens);
    }

    static NormalizedAnswer plurality(const std::vector<NormalizedAnswer>& answers) {
        const auto distinct = distinct_answers(answers);
        std::size_t best = 0;
        std::size_t best_count = 0;
        for (std::size_t i = 0; i < distinct.size(); ++i) {
            const auto count = static_cast<std::size_t>(
                std::count_if(answers.begin(), answers.end(), [&](const auto& a) { return answers_equal(a, distinct[i]); }));
            if (count > best_count) {
                best = i;
                best_count = count;
            }
        }
        return distinct[best];
    }

    std::shared_ptr<const SyntheticWorld> world_;
};

} // namespace softreason

#endif // SOFTREASON_SYNTHETIC_BACKEND_HPP
