#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "softreason/scoring.hpp"
#include "softreason/synthetic_backend.hpp"

using namespace softreason;

namespace {

/// Replies with canned text and records every prompt it receives.
class ScriptedBackend final : public GenerationBackend {
public:
    explicit ScriptedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}

    [[nodiscard]] Eigen::Index embedding_dim() const override { return 4; }
    [[nodiscard]] AnchorEmbedding base_first_token(const std::string&) const override {
        return {EmbeddingVector::Zero(4), 0};
    }
    [[nodiscard]] GenerationResult generate_with_injection(const InjectionRequest& r) const override {
        return generate_plain(r.prompt, DecodeSpec::greedy(), r.max_tokens);
    }
    [[nodiscard]] GenerationResult generate_plain(const std::string& prompt, const DecodeSpec&,
                                                  std::size_t) const override {
        std::lock_guard lock(mutex_);
        prompts.push_back(prompt);
        const auto& text = replies_[std::min(prompts.size() - 1, replies_.size() - 1)];
        return {text, {text}, {-0.1}, approximate_token_count(prompt), 1, false};
    }

    mutable std::vector<std::string> prompts;

private:
    std::vector<std::string> replies_;
    mutable std::mutex mutex_;
};

GenerationResult tokens_with(std::vector<double> logprobs) {
    GenerationResult r;
    for (std::size_t i = 0; i < logprobs.size(); ++i) r.tokens.push_back("t");
    r.token_logprobs = std::move(logprobs);
    r.output_token_count = r.tokens.size();
    return r;
}

std::vector<VerifierCandidate> candidates_from(const std::vector<std::string>& answers) {
    std::vector<VerifierCandidate> out;
    for (const auto& a : answers) {
        const std::string text = "Thought: reasoning. Answer: " + a;
        out.push_back({text, extract_answer(text)});
    }
    return out;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const QuestionContext kQuestion{"q1", "Natalia sold clips to 48 friends. How many?", {}};

} // namespace

TEST(ExtractAnswer, TakesLastMarker) {
    const auto a = extract_answer("so 0.20 x 2000 = 400, the amount of salt is 400 ml. Answer: 400");
    ASSERT_TRUE(a);
    EXPECT_EQ(a->kind, AnswerKind::numeric);
    EXPECT_EQ(a->number, 400.0);
    const auto b = extract_answer("Answer: 3\nmore thinking\nAnswer: 7");
    ASSERT_TRUE(b);
    EXPECT_EQ(b->number, 7.0);
}

TEST(ExtractAnswer, StripsSeparatorsAndPunctuation) {
    const auto a = extract_answer("Answer: 1,250.");
    ASSERT_TRUE(a);
    EXPECT_EQ(a->kind, AnswerKind::numeric);
    EXPECT_EQ(a->number, 1250.0);
    EXPECT_EQ(extract_answer("Answer: $42")->number, 42.0);
    EXPECT_EQ(extract_answer("Answer: 400 ml")->number, 400.0);
}

TEST(ExtractAnswer, MissingOrEmpty) {
    EXPECT_FALSE(extract_answer("no marker here"));
    EXPECT_FALSE(extract_answer("Answer:   "));
    EXPECT_FALSE(extract_answer("Answer: ."));
}

TEST(ExtractAnswer, TextAndBooleans) {
    EXPECT_EQ(extract_answer("Answer:  Paris  ")->text, "paris");
    EXPECT_EQ(extract_answer("Answer: True")->text, "yes");
    EXPECT_EQ(extract_answer("Answer: FALSE.")->text, "no");
    EXPECT_EQ(extract_answer("Answer: Yes")->text, "yes");
}

TEST(ExtractAnswer, CanonicalRenderingIsFixedPoint) {
    for (const char* raw : {"1,250.", "0.125", "-3", "1e6", "Paris", "New   York", "True", "400 ml", "0", "7/8"}) {
        const auto a = normalize_answer(raw);
        ASSERT_TRUE(a) << raw;
        const auto again = extract_answer("Answer: " + a->canonical());
        ASSERT_TRUE(again) << raw;
        EXPECT_TRUE(answers_equal(*a, *again)) << raw;
        EXPECT_EQ(again->canonical(), a->canonical()) << raw;
    }
}

TEST(AnswersEqual, RelativeTolerance) {
    const auto a = *normalize_answer("1000000");
    EXPECT_TRUE(answers_equal(a, *normalize_answer("1000000.5")));
    EXPECT_FALSE(answers_equal(a, *normalize_answer("1000002")));
    EXPECT_TRUE(answers_equal(*normalize_answer("0.0000001"), *normalize_answer("0")));
    EXPECT_FALSE(answers_equal(*normalize_answer("1"), *normalize_answer("one")));
}

TEST(Coherence, Examples) {
    EXPECT_EQ(coherence(tokens_with({0.0, 0.0}), CoherenceMode::log_sum), 0.0);
    EXPECT_EQ(coherence(tokens_with({0.0, 0.0}), CoherenceMode::hierarchical), 1.0);
    EXPECT_DOUBLE_EQ(coherence(tokens_with({-1.0, -1.0}), CoherenceMode::log_sum), -2.0);
    EXPECT_NEAR(coherence(tokens_with({-0.5, -1.5}), CoherenceMode::hierarchical), 0.36787944117144233, 1e-15);
    EXPECT_THROW(coherence(tokens_with({}), CoherenceMode::log_sum), EmptyOutputError);
}

TEST(Objective, Examples) {
    EXPECT_DOUBLE_EQ(objective(1, -3.0, CoherenceMode::log_sum), -2.0);
    EXPECT_NEAR(objective(1, std::exp(-1.0), CoherenceMode::hierarchical), 1.367879, 1e-6);
    EXPECT_EQ(objective(0, 0.0, CoherenceMode::log_sum), 0.0);
    EXPECT_THROW(objective(2, -1.0, CoherenceMode::log_sum), ContractViolation);
    EXPECT_THROW(objective(1, 0.5, CoherenceMode::log_sum), ContractViolation);
    EXPECT_THROW(objective(1, 0.0, CoherenceMode::hierarchical), ContractViolation);
}

TEST(Objective, HierarchicalDominance) {
    for (const double hi : {1e-12, 0.01, 0.5, 1.0}) {
        for (const double lo : {1e-12, 0.3, 1.0}) {
            EXPECT_GT(objective(1, hi, CoherenceMode::hierarchical), objective(0, lo, CoherenceMode::hierarchical));
        }
    }
}

TEST(Names, RoundTrip) {
    for (const auto s : {VerifierStrategy::single_judge, VerifierStrategy::multi_judge, VerifierStrategy::single_generate,
                         VerifierStrategy::multi_generate}) {
        EXPECT_EQ(parse_verifier_strategy(to_string(s)), s);
    }
    EXPECT_EQ(parse_coherence_mode("log-sum"), CoherenceMode::log_sum);
    EXPECT_EQ(parse_coherence_mode(to_string(CoherenceMode::hierarchical)), CoherenceMode::hierarchical);
    EXPECT_THROW(parse_verifier_strategy("oracle"), ContractViolation);
}

TEST(Templates, RenderKeepsUnknownSlots) {
    EXPECT_EQ(render_template("{a} and {b} and {a}", {{"a", "x"}}), "x and {b} and x");
    EXPECT_EQ(render_template("{a}", {{"a", "{a}"}}), "{a}");  // single pass
    EXPECT_EQ(render_template("unclosed {a", {{"a", "x"}}), "unclosed {a");
}

TEST(Templates, BuiltinsMatchShippedAssets) {
    const std::filesystem::path dir = SOFTREASON_PROMPT_DIR;
    const auto t = PromptTemplates::builtin();
    EXPECT_EQ(t.question, slurp(dir / "question.txt"));
    EXPECT_EQ(t.single_judge, slurp(dir / "single_judge.txt"));
    EXPECT_EQ(t.multi_judge, slurp(dir / "multi_judge.txt"));
    EXPECT_EQ(t.single_generate, slurp(dir / "single_generate.txt"));
    EXPECT_EQ(t.multi_generate, slurp(dir / "multi_generate.txt"));
    for (const auto s : {VerifierStrategy::single_judge, VerifierStrategy::multi_judge, VerifierStrategy::single_generate,
                         VerifierStrategy::multi_generate}) {
        const auto& tpl = t.for_strategy(s);
        EXPECT_NE(tpl.find("{question}"), std::string::npos);
        EXPECT_NE(tpl.find("{answers}"), std::string::npos);
        EXPECT_NE(tpl.find("{exemplars}"), std::string::npos);
    }
}

TEST(Templates, LoadOverridesPresentFilesOnly) {
    const auto dir = std::filesystem::temp_directory_path() / "softreason_prompt_override";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "multi_generate.txt") << "Q={question} A={answers}";
    const auto t = PromptTemplates::load(dir);
    EXPECT_EQ(t.multi_generate, "Q={question} A={answers}");
    EXPECT_EQ(t.single_judge, PromptTemplates::builtin().single_judge);
    std::filesystem::remove_all(dir);
    EXPECT_THROW(PromptTemplates::load(dir), ValidationError);
}

TEST(Templates, QuestionPromptWithExemplars) {
    const QuestionContext q{"x", "What is 2+3?", {{"What is 1+1?", "One plus one is two.", "2"}}};
    const auto p = build_question_prompt(q, PromptTemplates::builtin());
    EXPECT_NE(p.find("Question: What is 1+1?\nThought: One plus one is two. Answer: 2\n\nQuestion: What is 2+3?"),
              std::string::npos);
    EXPECT_EQ(p.find("{"), std::string::npos);
}

TEST(Judgments, Parsing) {
    EXPECT_EQ(detail::parse_judgment("1"), 1);
    EXPECT_EQ(detail::parse_judgment("\n  No.\nbecause"), 0);
    EXPECT_EQ(detail::parse_judgment("Correct"), 1);
    EXPECT_FALSE(detail::parse_judgment("maybe"));
    EXPECT_EQ(detail::parse_index_list("0, 2", 3), (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(detail::parse_index_list("None", 3), std::vector<std::size_t>{});
    EXPECT_FALSE(detail::parse_index_list("0, 5", 3));
    EXPECT_FALSE(detail::parse_index_list("first", 3));
}

TEST(RunVerifier, MultiGenerateMarksAgreement) {
    const ScriptedBackend backend({"Let's think. 12 x 3/4 = 9. Answer: 9"});
    const auto out = run_verifier(VerifierStrategy::multi_generate, kQuestion,
                                  candidates_from({"9", "72", "9", "72", "9"}), backend, PromptTemplates::builtin());
    EXPECT_EQ(out.bits, (std::vector<int>{1, 0, 1, 0, 1}));
    ASSERT_TRUE(out.verdict);
    EXPECT_EQ(out.verdict->number, 9.0);
    EXPECT_FALSE(out.degraded);
    ASSERT_EQ(backend.prompts.size(), 1u);
    EXPECT_NE(backend.prompts[0].find("0. Thought: reasoning. Answer: 9\n1. Thought: reasoning. Answer: 72"),
              std::string::npos);
    EXPECT_NE(backend.prompts[0].find(kQuestion.question), std::string::npos);
}

TEST(RunVerifier, UnanimousCandidates) {
    const ScriptedBackend backend({"Answer: 5"});
    const auto out = run_verifier(VerifierStrategy::multi_generate, kQuestion, candidates_from({"5", "5.0", "5"}),
                                  backend, PromptTemplates::builtin());
    EXPECT_EQ(out.bits, (std::vector<int>{1, 1, 1}));
}

TEST(RunVerifier, UnparseableOutputIsDegraded) {
    const ScriptedBackend backend({"I am not sure."});
    const auto out = run_verifier(VerifierStrategy::multi_generate, kQuestion, candidates_from({"1", "2"}), backend,
                                  PromptTemplates::builtin());
    EXPECT_EQ(out.bits, (std::vector<int>{0, 0}));
    EXPECT_TRUE(out.degraded);
    EXPECT_FALSE(out.verdict);
}

TEST(RunVerifier, CandidatesWithoutAnswersAreExcluded) {
    const ScriptedBackend backend({"Answer: 4"});
    auto cands = candidates_from({"4"});
    cands.insert(cands.begin(), VerifierCandidate{"rambling with no marker", std::nullopt});
    const auto out = run_verifier(VerifierStrategy::multi_generate, kQuestion, cands, backend, PromptTemplates::builtin());
    EXPECT_EQ(out.bits, (std::vector<int>{0, 1}));
    EXPECT_EQ(backend.prompts[0].find("rambling"), std::string::npos);

    const ScriptedBackend idle({"Answer: 4"});
    const auto none = run_verifier(VerifierStrategy::multi_generate, kQuestion,
                                   {VerifierCandidate{"nothing", std::nullopt}}, idle, PromptTemplates::builtin());
    EXPECT_TRUE(none.degraded);
    EXPECT_TRUE(idle.prompts.empty());
}

TEST(RunVerifier, MultiJudgeIndexList) {
    const ScriptedBackend backend({"0, 2"});
    const auto out = run_verifier(VerifierStrategy::multi_judge, kQuestion, candidates_from({"3", "4", "3"}), backend,
                                  PromptTemplates::builtin());
    EXPECT_EQ(out.bits, (std::vector<int>{1, 0, 1}));
    EXPECT_FALSE(out.verdict);
}

TEST(RunVerifier, SingleStrategiesCallOncePerCandidate) {
    const ScriptedBackend judge({"1", "0", "1"});
    const auto j = run_verifier(VerifierStrategy::single_judge, kQuestion, candidates_from({"3", "4", "3"}), judge,
                                PromptTemplates::builtin());
    EXPECT_EQ(j.bits, (std::vector<int>{1, 0, 1}));
    EXPECT_EQ(judge.prompts.size(), 3u);

    const ScriptedBackend gen({"Answer: 4"});
    const auto g = run_verifier(VerifierStrategy::single_generate, kQuestion, candidates_from({"3", "4"}), gen,
                                PromptTemplates::builtin());
    EXPECT_EQ(g.bits, (std::vector<int>{0, 1}));
    EXPECT_EQ(gen.prompts.size(), 2u);
    EXPECT_EQ(g.transcripts.size(), 2u);
}

TEST(RunVerifier, SyntheticBackendUnderstandsEveryLayout) {
    SyntheticWorldConfig c;
    c.verifier_accuracy = 1.0;
    const auto world = std::make_shared<SyntheticWorld>(c);
    const SyntheticBackend backend(world);
    const auto w = world->question_world(kQuestion.question);
    const std::string gold = w.labels[w.gold];
    const std::string wrong = w.labels[(w.gold + 1) % w.labels.size()];
    const auto cands = candidates_from({wrong, gold});
    for (const auto s : {VerifierStrategy::single_judge, VerifierStrategy::multi_judge, VerifierStrategy::single_generate,
                         VerifierStrategy::multi_generate}) {
        const auto out = run_verifier(s, kQuestion, cands, backend, PromptTemplates::builtin());
        EXPECT_EQ(out.bits, (std::vector<int>{0, 1})) << to_string(s);
        EXPECT_FALSE(out.degraded) << to_string(s);
    }
}
