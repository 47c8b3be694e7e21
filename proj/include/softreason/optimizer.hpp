#ifndef SOFTREASON_OPTIMIZER_HPP
#define SOFTREASON_OPTIMIZER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "softreason/acquisition.hpp"
#include "softreason/answers.hpp"
#include "softreason/backend.hpp"
#include "softreason/gp_surrogate.hpp"
#include "softreason/latent_space.hpp"
#include "softreason/random.hpp"
#include "softreason/scoring.hpp"

namespace softreason {

/// |f_cur - f_prev| < eps (strict).
inline bool converged(double f_prev, double f_cur, double eps) {
    detail::require(eps >= 0.0, "converged: epsilon must be >= 0");
    return std::abs(f_cur - f_prev) < eps;
}

enum class Termination { converged, max_iterations, failed };

inline std::string_view to_string(Termination t) {
    switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iterations: return "max-iterations";
    case Termination::failed: return "failed";
    }
    return "?";
}

inline Termination parse_termination(std::string_view s) {
    if (s == "converged") return Termination::converged;
    if (s == "max-iterations") return Termination::max_iterations;
    if (s == "failed") return Termination::failed;
    throw ValidationError("unknown termination: " + std::string(s));
}

/// Settings of the generic batch BO loop.
struct BayesOptSettings {
    std::size_t batch = 5;
    std::size_t max_iterations = 4;
    double epsilon = 0.01;
    AcquisitionSpec acquisition;
    KernelSpec kernel = KernelSpec::median_heuristic();
    double noise = 0.1;
    std::size_t pool_size = 5000;
    bool include_anchor = false;
    std::uint64_t seed = 0;

    void validate() const {
        detail::require(batch >= 1, "bayes-opt: batch size must be >= 1");
        detail::require(max_iterations >= 1, "bayes-opt: max iterations must be >= 1");
        detail::require(epsilon >= 0.0, "bayes-opt: epsilon must be >= 0");
        detail::require(noise > 0.0, "bayes-opt: noise constant must be positive");
        detail::require(pool_size >= batch, "bayes-opt: pool size must be >= batch size");
        acquisition.validate();
        kernel.validate();
    }
};

/// What the loop knew when it proposed an iteration's batch.
struct IterationInfo {
    std::size_t index = 1;  // 1-based; iteration 1 is the initial batch
    std::optional<double> information_gain;
    std::optional<double> bandwidth;
};

struct BayesOptIteration {
    IterationInfo info;
    std::vector<LatentPoint> points;
    std::vector<double> values;
    double best = -std::numeric_limits<double>::infinity();
};

struct BayesOptTrace {
    std::vector<BayesOptIteration> iterations;
    Termination termination = Termination::max_iterations;

    [[nodiscard]] double best() const { return iterations.empty() ? -std::numeric_limits<double>::infinity() : iterations.back().best; }
    [[nodiscard]] std::size_t evaluations() const {
        std::size_t n = 0;
        for (const auto& it : iterations) n += it.points.size();
        return n;
    }
};

inline std::uint64_t initial_batch_seed(std::uint64_t seed) { return derive_seed(seed, "initial-batch"); }
inline std::uint64_t pool_seed(std::uint64_t seed, std::size_t iteration) {
    return derive_seed(derive_seed(seed, "candidate-pool"), static_cast<std::uint64_t>(iteration));
}

/// Batch Bayesian optimization over a d-dimensional latent space.
///
/// `evaluate(points, info)` returns one objective value per point. Observations are never
/// revised. Stops once the best-so-far value moves by less than epsilon between iterations,
/// or after `max_iterations` batches.
template <typename Evaluate>
BayesOptTrace run_bayes_opt(Eigen::Index latent_dim, const BayesOptSettings& settings, Evaluate&& evaluate) {
    settings.validate();
    detail::require(latent_dim >= 1, "bayes-opt: latent dimension must be >= 1");
    BayesOptTrace trace;
    std::vector<LatentPoint> xs;
    std::vector<double> ys;
    double best = -std::numeric_limits<double>::infinity();

    for (std::size_t t = 1; t <= settings.max_iterations; ++t) {
        BayesOptIteration iter;
        iter.info.index = t;
        if (t == 1) {
            iter.points = sample_initial(settings.batch, latent_dim, initial_batch_seed(settings.seed), settings.include_anchor);
        } else {
            const auto model = fit(xs, ys, settings.kernel, settings.noise, NoiseMode::noisy);
            iter.info.information_gain = model.information_gain();
            iter.info.bandwidth = model.kernel().bandwidth;
            const CandidatePool pool{settings.pool_size, latent_dim, pool_seed(settings.seed, t)};
            iter.points = select_batch(model, pool, settings.acquisition, settings.batch);
        }
        iter.values = evaluate(static_cast<const std::vector<LatentPoint>&>(iter.points), static_cast<const IterationInfo&>(iter.info));
        detail::require(iter.values.size() == iter.points.size(), "bayes-opt: evaluate must return one value per point");
        const double prev = best;
        for (std::size_t i = 0; i < iter.points.size(); ++i) {
            detail::require(std::isfinite(iter.values[i]), "bayes-opt: objective values must be finite");
            xs.push_back(iter.points[i]);
            ys.push_back(iter.values[i]);
            best = std::max(best, iter.values[i]);
        }
        iter.best = best;
        trace.iterations.push_back(std::move(iter));
        if (t > 1 && converged(prev, best, settings.epsilon)) {
            trace.termination = Termination::converged;
            return trace;
        }
    }
    trace.termination = Termination::max_iterations;
    return trace;
}

struct OptimizerConfig {
    std::size_t k = 5;
    std::size_t max_iterations = 4;
    double epsilon = 0.01;
    Eigen::Index latent_dim = 50;
    double sigma = 1.0;
    double delta = 0.1;
    double noise = 0.1;
    std::size_t pool_size = 5000;
    AcquisitionKind acquisition = AcquisitionKind::adaptive_ei;
    double ucb_beta = 1.0;
    Placement placement = Placement::last;
    std::size_t inject_count = 1;
    VerifierStrategy verifier = VerifierStrategy::multi_generate;
    CoherenceMode coherence = CoherenceMode::log_sum;
    std::size_t max_tokens = 300;
    bool include_anchor = false;
    std::uint64_t seed = 0;

    [[nodiscard]] AcquisitionSpec acquisition_spec() const {
        AcquisitionSpec spec;
        spec.kind = acquisition;
        spec.delta = delta;
        spec.beta = ucb_beta;
        return spec;
    }

    [[nodiscard]] BayesOptSettings bayes_opt_settings(std::uint64_t run_seed) const {
        BayesOptSettings s;
        s.batch = k;
        s.max_iterations = max_iterations;
        s.epsilon = epsilon;
        s.acquisition = acquisition_spec();
        s.noise = noise;
        s.pool_size = pool_size;
        s.include_anchor = include_anchor;
        s.seed = run_seed;
        return s;
    }

    void validate() const {
        detail::require(k >= 1, "config: k must be >= 1");
        detail::require(max_iterations >= 1, "config: K must be >= 1");
        detail::require(std::isfinite(epsilon) && epsilon >= 0.0, "config: epsilon must be >= 0");
        detail::require(latent_dim >= 1, "config: d must be >= 1");
        detail::require(std::isfinite(sigma) && sigma > 0.0, "config: sigma must be positive");
        detail::require(std::isfinite(noise) && noise > 0.0, "config: lambda must be positive");
        detail::require(pool_size >= k, "config: pool size M must be >= k");
        detail::require(inject_count >= 1, "config: inject count m must be >= 1");
        detail::require(max_tokens >= 1, "config: max_tokens must be >= 1");
        acquisition_spec().validate();
    }
};

/// One generated candidate and its frozen score.
struct Candidate {
    LatentPoint latent;
    std::string text;
    std::optional<NormalizedAnswer> answer;
    int verifier_bit = 0;
    double coherence = 0.0;
    double objective = 0.0;
    std::size_t output_tokens = 0;
    bool truncated = false;
};

struct VerifierRecord {
    VerifierStrategy strategy = VerifierStrategy::multi_generate;
    std::optional<NormalizedAnswer> verdict;
    std::vector<std::string> shown_answers;  // canonical answers in prompt order
    std::vector<int> bits;                   // one per shown answer
    std::vector<std::string> transcripts;
    bool degraded = false;
};

struct IterationRecord {
    std::size_t index = 1;
    std::vector<Candidate> candidates;
    VerifierRecord verifier;
    double best_so_far = 0.0;
    std::optional<double> information_gain;
    std::optional<double> bandwidth;
};

struct RunRecord {
    std::string question_id;
    std::string method = "soft-reasoning";
    std::int64_t anchor_token = 0;
    std::uint64_t run_seed = 0;
    std::uint64_t projection_seed = 0;
    std::vector<IterationRecord> iterations;
    Termination termination = Termination::max_iterations;
    std::optional<NormalizedAnswer> final_answer;
    std::string final_source;  // "verifier", "max-objective", "majority" or "none"
    std::string failure;
    std::size_t generation_calls = 0;
    std::size_t input_tokens = 0;
    std::size_t output_tokens = 0;
    double wall_seconds = 0.0;  // not serialized into run logs

    [[nodiscard]] bool failed() const { return termination == Termination::failed; }
    [[nodiscard]] std::size_t iteration_count() const { return iterations.size(); }
};

/// Most frequent answer; ties go to the earliest first occurrence.
inline std::optional<NormalizedAnswer> majority_vote(const std::vector<NormalizedAnswer>& answers) {
    const auto distinct = distinct_answers(answers);
    std::optional<NormalizedAnswer> best;
    std::size_t best_count = 0;
    for (const auto& d : distinct) {
        const auto count = static_cast<std::size_t>(
            std::count_if(answers.begin(), answers.end(), [&](const auto& a) { return answers_equal(a, d); }));
        if (count > best_count) {
            best = d;
            best_count = count;
        }
    }
    return best;
}

inline std::uint64_t projection_seed(std::uint64_t run_seed) { return derive_seed(run_seed, "projection"); }

namespace detail {

inline void account(RunRecord& record, const GenerationResult& r) {
    ++record.generation_calls;
    record.input_tokens += r.prompt_token_count;
    record.output_tokens += r.output_token_count;
}

inline void choose_final_answer(RunRecord& record) {
    if (!record.iterations.empty()) {
        const auto& last = record.iterations.back().verifier;
        if (last.verdict && !last.degraded) {
            record.final_answer = last.verdict;
            record.final_source = "verifier";
            return;
        }
    }
    const Candidate* best = nullptr;
    std::vector<NormalizedAnswer> all;
    for (const auto& it : record.iterations) {
        for (const auto& c : it.candidates) {
            if (best == nullptr || c.objective > best->objective) best = &c;
            if (c.answer) all.push_back(*c.answer);
        }
    }
    if (best != nullptr && best->answer) {
        record.final_answer = best->answer;
        record.final_source = "max-objective";
        return;
    }
    record.final_answer = majority_vote(all);
    record.final_source = record.final_answer ? "majority" : "none";
}

} // namespace detail

/// Runs the latent-space search for one question.
///
/// Backend and contract errors end the run with termination "failed"; iterations that
/// completed before the error are kept.
inline RunRecord optimize(const QuestionContext& question, const OptimizerConfig& config, const GenerationBackend& backend,
                          const PromptTemplates& templates = PromptTemplates::builtin()) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();
    RunRecord record;
    record.question_id = question.id;
    record.run_seed = config.seed;
    record.projection_seed = projection_seed(config.seed);

    try {
        const std::string prompt = build_question_prompt(question, templates);
        const AnchorEmbedding anchor = backend.base_first_token(prompt);
        record.anchor_token = anchor.token_id;
        const ProjectionMap projection =
            make_projection(backend.embedding_dim(), config.latent_dim, record.projection_seed, config.sigma);

        // deduplicated answers seen so far, each with the first text that produced it
        std::vector<VerifierCandidate> seen;

        auto evaluate = [&](const std::vector<LatentPoint>& points, const IterationInfo& info) {
            IterationRecord iter;
            iter.index = info.index;
            iter.information_gain = info.information_gain;
            iter.bandwidth = info.bandwidth;
            std::vector<GenerationResult> outputs;
            outputs.reserve(points.size());
            for (const auto& u : points) {
                InjectionRequest req;
                req.prompt = prompt;
                req.injected_embeddings.assign(config.inject_count, to_embedding(projection, anchor, u));
                req.placement = config.placement;
                req.max_tokens = config.max_tokens;
                outputs.push_back(backend.generate_with_injection(req));
                detail::account(record, outputs.back());
            }
            for (std::size_t i = 0; i < points.size(); ++i) {
                Candidate c;
                c.latent = points[i];
                c.text = outputs[i].text;
                c.answer = extract_answer(outputs[i].text);
                c.coherence = coherence(outputs[i], config.coherence);
                c.output_tokens = outputs[i].output_token_count;
                c.truncated = outputs[i].truncated;
                iter.candidates.push_back(std::move(c));
            }

            // Multi strategies see every answer found so far; single strategies only score this batch's answers.
            std::vector<VerifierCandidate> shown;
            for (const auto& c : iter.candidates) {
                if (!c.answer) continue;
                auto same = [&](const VerifierCandidate& v) { return answers_equal(*v.answer, *c.answer); };
                if (std::none_of(seen.begin(), seen.end(), same)) seen.push_back({c.text, c.answer});
                if (!is_multi(config.verifier) && std::none_of(shown.begin(), shown.end(), same)) {
                    shown.push_back({c.text, c.answer});
                }
            }
            if (is_multi(config.verifier)) shown = seen;

            VerifierOutcome outcome;
            if (shown.empty()) {
                outcome.strategy = config.verifier;
                outcome.degraded = true;
            } else {
                outcome = run_verifier(config.verifier, question, shown, backend, templates, config.max_tokens);
            }
            for (const auto& t : outcome.transcripts) detail::account(record, t);

            iter.verifier.strategy = outcome.strategy;
            iter.verifier.verdict = outcome.verdict;
            iter.verifier.bits = outcome.bits;
            iter.verifier.degraded = outcome.degraded;
            for (const auto& s : shown) iter.verifier.shown_answers.push_back(s.answer->canonical());
            for (const auto& t : outcome.transcripts) iter.verifier.transcripts.push_back(t.text);

            std::vector<double> values;
            for (auto& c : iter.candidates) {
                if (c.answer) {
                    for (std::size_t j = 0; j < shown.size(); ++j) {
                        if (answers_equal(*shown[j].answer, *c.answer)) {
                            c.verifier_bit = outcome.bits[j];
                            break;
                        }
                    }
                }
                c.objective = objective(c.verifier_bit, c.coherence, config.coherence);
                values.push_back(c.objective);
            }
            const double prev = record.iterations.empty() ? -std::numeric_limits<double>::infinity()
                                                          : record.iterations.back().best_so_far;
            iter.best_so_far = std::max(prev, *std::max_element(values.begin(), values.end()));
            record.iterations.push_back(std::move(iter));
            return values;
        };

        const auto trace = run_bayes_opt(config.latent_dim, config.bayes_opt_settings(config.seed), evaluate);
        record.termination = trace.termination;
        detail::choose_final_answer(record);
    } catch (const Error& e) {
        record.termination = Termination::failed;
        record.failure = e.what();
        record.final_answer.reset();
        record.final_source = "none";
    }
    record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return record;
}

} // namespace softreason

#endif // SOFTREASON_OPTIMIZER_HPP
