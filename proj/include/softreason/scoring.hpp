#ifndef SOFTREASON_SCORING_HPP
#define SOFTREASON_SCORING_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "softreason/answers.hpp"
#include "softreason/backend.hpp"
#include "softreason/prompt_assets.hpp"

namespace softreason {

enum class CoherenceMode { log_sum, hierarchical };

inline std::string_view to_string(CoherenceMode m) { return m == CoherenceMode::log_sum ? "log-sum" : "hierarchical"; }

inline CoherenceMode parse_coherence_mode(std::string_view s) {
    if (s == "log-sum") return CoherenceMode::log_sum;
    if (s == "hierarchical") return CoherenceMode::hierarchical;
    throw ContractViolation("unknown coherence mode: " + std::string(s));
}

/// log_sum: sum of token log-probabilities (<= 0).
/// hierarchical: exp(mean log-probability), in (0, 1], so a verifier bit always dominates.
inline double coherence(const GenerationResult& result, CoherenceMode mode) {
    if (result.token_logprobs.empty()) {
        throw EmptyOutputError("coherence: generation has no tokens");
    }
    double sum = 0.0;
    for (const double lp : result.token_logprobs) sum += lp;
    if (mode == CoherenceMode::log_sum) {
        return sum;
    }
    return std::exp(sum / static_cast<double>(result.token_logprobs.size()));
}

struct ObjectiveScore {
    int verifier_bit = 0;
    double coherence = 0.0;
    double total = 0.0;
    CoherenceMode mode = CoherenceMode::log_sum;
};

/// f = r_verifier + r_coherence.
inline double objective(int bit, double coherence_value, CoherenceMode mode) {
    detail::require(bit == 0 || bit == 1, "objective: verifier bit must be 0 or 1");
    if (mode == CoherenceMode::log_sum) {
        detail::require(coherence_value <= 0.0, "objective: log-sum coherence must be <= 0");
    } else {
        detail::require(coherence_value > 0.0 && coherence_value <= 1.0, "objective: hierarchical coherence must lie in (0, 1]");
    }
    return static_cast<double>(bit) + coherence_value;
}

inline ObjectiveScore score(int bit, double coherence_value, CoherenceMode mode) {
    return {bit, coherence_value, objective(bit, coherence_value, mode), mode};
}

enum class VerifierStrategy { single_judge, multi_judge, single_generate, multi_generate };

inline std::string_view to_string(VerifierStrategy s) {
    switch (s) {
    case VerifierStrategy::single_judge: return "single-judge";
    case VerifierStrategy::multi_judge: return "multi-judge";
    case VerifierStrategy::single_generate: return "single-generate";
    case VerifierStrategy::multi_generate: return "multi-generate";
    }
    return "?";
}

inline VerifierStrategy parse_verifier_strategy(std::string_view s) {
    if (s == "single-judge") return VerifierStrategy::single_judge;
    if (s == "multi-judge") return VerifierStrategy::multi_judge;
    if (s == "single-generate") return VerifierStrategy::single_generate;
    if (s == "multi-generate") return VerifierStrategy::multi_generate;
    throw ContractViolation("unknown verifier strategy: " + std::string(s));
}

inline bool is_multi(VerifierStrategy s) {
    return s == VerifierStrategy::multi_judge || s == VerifierStrategy::multi_generate;
}

struct Exemplar {
    std::string question;
    std::string reasoning;
    std::string answer;
};

/// What the optimizer knows about a question.
struct QuestionContext {
    std::string id;
    std::string question;
    std::vector<Exemplar> exemplars;
};

/// Replaces {name} slots in one left-to-right pass; unknown slots are kept verbatim.
inline std::string render_template(std::string_view tpl, const std::map<std::string, std::string, std::less<>>& slots) {
    std::string out;
    out.reserve(tpl.size());
    std::size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] == '{') {
            const auto close = tpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                const auto name = tpl.substr(i + 1, close - i - 1);
                if (auto it = slots.find(name); it != slots.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tpl[i]);
        ++i;
    }
    return out;
}

/// Text assets for the question prompt and the four verifier strategies.
struct PromptTemplates {
    std::string question{prompt_assets::question};
    std::string single_judge{prompt_assets::single_judge};
    std::string multi_judge{prompt_assets::multi_judge};
    std::string single_generate{prompt_assets::single_generate};
    std::string multi_generate{prompt_assets::multi_generate};

    static PromptTemplates builtin() { return {}; }

    /// Reads <dir>/{question,single_judge,...}.txt; files that are missing keep the built-in text.
    static PromptTemplates load(const std::filesystem::path& dir) {
        PromptTemplates t;
        auto read = [&](const char* name, std::string& slot) {
            const auto path = dir / (std::string(name) + ".txt");
            std::ifstream in(path, std::ios::binary);
            if (!in) return;
            std::ostringstream ss;
            ss << in.rdbuf();
            slot = ss.str();
        };
        if (!std::filesystem::is_directory(dir)) {
            throw ValidationError("prompt directory does not exist: " + dir.string());
        }
        read("question", t.question);
        read("single_judge", t.single_judge);
        read("multi_judge", t.multi_judge);
        read("single_generate", t.single_generate);
        read("multi_generate", t.multi_generate);
        return t;
    }

    [[nodiscard]] const std::string& for_strategy(VerifierStrategy s) const {
        switch (s) {
        case VerifierStrategy::single_judge: return single_judge;
        case VerifierStrategy::multi_judge: return multi_judge;
        case VerifierStrategy::single_generate: return single_generate;
        case VerifierStrategy::multi_generate: return multi_generate;
        }
        return multi_generate;
    }
};

inline constexpr std::string_view kExemplarDelimiter = "\n\n";

/// Few-shot block for the question prompt, in dataset order.
inline std::string render_question_exemplars(const std::vector<Exemplar>& exemplars) {
    std::string out;
    for (const auto& e : exemplars) {
        out += fmt::format("Question: {}\nThought: {} Answer: {}", e.question, e.reasoning, e.answer);
        out += kExemplarDelimiter;
    }
    return out;
}

/// Few-shot block for verifier prompts, laid out like the built-in demonstration.
inline std::string render_verifier_exemplars(const std::vector<Exemplar>& exemplars) {
    std::string out;
    for (const auto& e : exemplars) {
        out += fmt::format("Question:\n{}\n\nAnalysis:\n{}\n\nAnswer:\n{}", e.question, e.reasoning, e.answer);
        out += kExemplarDelimiter;
    }
    return out;
}

inline std::string build_question_prompt(const QuestionContext& q, const PromptTemplates& templates) {
    return render_template(templates.question,
                           {{"question", q.question}, {"exemplars", render_question_exemplars(q.exemplars)}});
}

/// One entry shown to the verifier.
struct VerifierCandidate {
    std::string text;
    std::optional<NormalizedAnswer> answer;
};

struct VerifierOutcome {
    VerifierStrategy strategy = VerifierStrategy::multi_generate;
    std::optional<NormalizedAnswer> verdict;  // y_v; generate strategies only
    std::vector<int> bits;                    // one per input candidate
    std::vector<GenerationResult> transcripts;
    bool degraded = false;
};

namespace detail {

inline std::string one_line(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (const char c : text) out.push_back(c == '\n' || c == '\r' ? ' ' : c);
    return std::string(trim(out));
}

inline std::string candidate_line(std::string_view text) {
    auto line = one_line(text);
    if (!line.starts_with("Thought:")) line = "Thought: " + line;
    return line;
}

/// "1, 2, 3" or "none" -> indices; nullopt when the line is neither.
inline std::optional<std::vector<std::size_t>> parse_index_list(std::string_view text, std::size_t count) {
    std::string_view line;
    for (auto l : split_lines(text)) {
        l = trim(l);
        if (!l.empty()) {
            line = l;
            break;
        }
    }
    line = strip_edges(line);
    if (line.empty()) return std::nullopt;
    if (fold_text(line) == "none") return std::vector<std::size_t>{};
    std::vector<std::size_t> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ',' || is_space(line[i]))) ++i;
        if (i >= line.size()) break;
        std::size_t j = i;
        while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
        if (j == i) return std::nullopt;
        const auto idx = static_cast<std::size_t>(std::stoul(std::string(line.substr(i, j - i))));
        if (idx >= count) return std::nullopt;
        if (std::find(out.begin(), out.end(), idx) == out.end()) out.push_back(idx);
        i = j;
    }
    return out;
}

/// Bare 0/1 (also yes/no, true/false, correct/incorrect) on the first non-empty line.
inline std::optional<int> parse_judgment(std::string_view text) {
    for (auto l : split_lines(text)) {
        l = trim(l);
        if (l.empty()) continue;
        const auto word = fold_text(strip_edges(l));
        if (word == "1" || word == "yes" || word == "true" || word == "correct") return 1;
        if (word == "0" || word == "no" || word == "false" || word == "incorrect") return 0;
        return std::nullopt;
    }
    return std::nullopt;
}

} // namespace detail

/// Asks the generator to verify `candidates` and returns one bit per candidate.
///
/// Candidates without an extracted answer are left out of the prompt and scored 0.
/// Multi strategies issue one call; single strategies issue one call per scored candidate.
/// Unparseable output scores 0 and sets `degraded`; it is never fatal.
inline VerifierOutcome run_verifier(VerifierStrategy strategy, const QuestionContext& question,
                                    const std::vector<VerifierCandidate>& candidates, const GenerationBackend& backend,
                                    const PromptTemplates& templates, std::size_t max_tokens = 300) {
    VerifierOutcome out;
    out.strategy = strategy;
    out.bits.assign(candidates.size(), 0);
    std::vector<std::size_t> shown;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i].answer) shown.push_back(i);
    }
    if (shown.empty()) {
        out.degraded = true;
        return out;
    }
    const std::string exemplars = render_verifier_exemplars(question.exemplars);
    const std::string& tpl = templates.for_strategy(strategy);

    if (is_multi(strategy)) {
        std::string block;
        for (std::size_t r = 0; r < shown.size(); ++r) {
            if (r) block += "\n";
            block += fmt::format("{}. {}", r, detail::candidate_line(candidates[shown[r]].text));
        }
        const auto prompt =
            render_template(tpl, {{"question", question.question}, {"answers", block}, {"exemplars", exemplars}});
        auto result = backend.generate_plain(prompt, DecodeSpec::greedy(), max_tokens);
        if (strategy == VerifierStrategy::multi_generate) {
            out.verdict = extract_answer(result.text);
            if (!out.verdict) {
                out.degraded = true;
            } else {
                for (const auto i : shown) out.bits[i] = answers_equal(*candidates[i].answer, *out.verdict) ? 1 : 0;
            }
        } else {
            if (auto idx = detail::parse_index_list(result.text, shown.size())) {
                for (const auto r : *idx) out.bits[shown[r]] = 1;
            } else {
                out.degraded = true;
            }
        }
        out.transcripts.push_back(std::move(result));
        return out;
    }

    for (const auto i : shown) {
        const auto prompt = render_template(tpl, {{"question", question.question},
                                                  {"answers", detail::one_line(candidates[i].text)},
                                                  {"exemplars", exemplars}});
        auto result = backend.generate_plain(prompt, DecodeSpec::greedy(), max_tokens);
        if (strategy == VerifierStrategy::single_generate) {
            if (auto regenerated = extract_answer(result.text)) {
                out.bits[i] = answers_equal(*candidates[i].answer, *regenerated) ? 1 : 0;
            } else {
                out.degraded = true;
            }
        } else if (auto j = detail::parse_judgment(result.text)) {
            out.bits[i] = *j;
        } else {
            out.degraded = true;
        }
        out.transcripts.push_back(std::move(result));
    }
    return out;
}

} // namespace softreason

#endif // SOFTREASON_SCORING_HPP
