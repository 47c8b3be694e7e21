#ifndef SOFTREASON_HARNESS_HPP
#define SOFTREASON_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "softreason/optimizer.hpp"
#include "softreason/run_log.hpp"

namespace softreason {

struct DatasetItem {
    std::string id;
    std::string question;
    std::string gold_answer;
    std::vector<Exemplar> exemplars;

    [[nodiscard]] NormalizedAnswer gold() const {
        auto g = normalize_answer(gold_answer);
        if (!g) throw ValidationError("item " + id + ": gold answer does not normalize");
        return *g;
    }

    [[nodiscard]] QuestionContext context() const { return {id, question, exemplars}; }
};

namespace detail {

inline std::string scalar_text(const nlohmann::json& j, const char* field) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
    if (j.is_number()) return fmt::format("{}", j.get<double>());
    if (j.is_boolean()) return j.get<bool>() ? "yes" : "no";
    throw std::invalid_argument(std::string("\"") + field + "\" must be a string or number");
}

} // namespace detail

/// Reads a JSONL dataset: one {"id", "question", "gold_answer", "exemplars"?} object per line.
///
/// Blank lines are skipped. All problems are collected and reported together with line
/// numbers. An empty file yields an empty list and a warning.
inline std::vector<DatasetItem> load_dataset(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read dataset: " + path.string());
    std::vector<DatasetItem> items;
    std::vector<std::string> problems;
    std::vector<std::string> bad_gold;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            if (!j.is_object()) throw std::invalid_argument("not a JSON object");
            for (const char* field : {"id", "question"}) {
                if (!j.contains(field)) throw std::invalid_argument(std::string("missing \"") + field + "\"");
            }
            const char* gold_field = j.contains("gold_answer") ? "gold_answer" : "answer";
            if (!j.contains(gold_field)) throw std::invalid_argument("missing \"gold_answer\"");
            DatasetItem item;
            item.id = detail::scalar_text(j.at("id"), "id");
            item.question = j.at("question").get<std::string>();
            item.gold_answer = detail::scalar_text(j.at(gold_field), gold_field);
            if (item.question.empty()) throw std::invalid_argument("empty \"question\"");
            if (j.contains("exemplars") && !j.at("exemplars").is_null()) {
                for (const auto& e : j.at("exemplars")) {
                    item.exemplars.push_back({e.at("question").get<std::string>(), e.value("reasoning", std::string()),
                                              detail::scalar_text(e.at("answer"), "answer")});
                }
            }
            if (!ids.insert(item.id).second) throw std::invalid_argument("duplicate id \"" + item.id + "\"");
            if (!normalize_answer(item.gold_answer)) bad_gold.push_back(item.id);
            items.push_back(std::move(item));
        } catch (const std::exception& e) {
            problems.push_back(fmt::format("line {}: {}", line_no, e.what()));
        }
    }
    if (!bad_gold.empty()) {
        std::string ids_text;
        for (const auto& id : bad_gold) ids_text += (ids_text.empty() ? "" : ", ") + id;
        problems.push_back("gold answers that do not normalize: " + ids_text);
    }
    if (!problems.empty()) {
        std::string msg = "invalid dataset " + path.string() + ":";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ValidationError(msg);
    }
    if (items.empty() && warnings != nullptr) warnings->push_back("dataset " + path.string() + " is empty");
    return items;
}

/// Answers observed for a record up to and including `through_iteration`.
struct RecordView {
    bool covered = false;         // candidates or verifier outputs
    bool strictly_covered = false;  // candidates only
    std::optional<NormalizedAnswer> final_answer;
};

/// The record as if it had stopped after `through_iteration` iterations.
inline RecordView view_at(const RunRecord& record, const NormalizedAnswer& gold, std::size_t through_iteration) {
    RecordView v;
    const auto n = std::min(through_iteration, record.iterations.size());
    auto matches = [&](const std::optional<NormalizedAnswer>& a) { return a && answers_equal(*a, gold); };
    for (std::size_t t = 0; t < n; ++t) {
        const auto& it = record.iterations[t];
        for (const auto& c : it.candidates) {
            if (matches(c.answer)) v.strictly_covered = true;
        }
        if (matches(it.verifier.verdict)) v.covered = true;
    }
    v.covered = v.covered || v.strictly_covered;
    if (record.failed()) return v;
    if (n == record.iterations.size()) {
        v.final_answer = record.final_answer;
    } else {
        RunRecord prefix;
        prefix.iterations.assign(record.iterations.begin(), record.iterations.begin() + static_cast<std::ptrdiff_t>(n));
        prefix.method = record.method;
        if (record.method == "soft-reasoning") {
            detail::choose_final_answer(prefix);
        }
        v.final_answer = prefix.final_answer;
    }
    return v;
}

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 for a single value
};

inline Summary summarize(const std::vector<double>& xs) {
    Summary s;
    if (xs.empty()) return s;
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (const double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

struct SeedMetrics {
    std::size_t seed_index = 0;
    std::size_t questions = 0;
    double accuracy = 0.0;
    double coverage = 0.0;
    double strict_coverage = 0.0;
    std::map<std::size_t, double> iteration_histogram;  // key 0: failed before any iteration finished
    std::vector<double> accuracy_by_iteration;          // entry t-1: runs cut after t iterations
    std::vector<double> coverage_by_iteration;
    std::size_t input_tokens = 0;
    std::size_t output_tokens = 0;
    std::size_t generation_calls = 0;
    double wall_seconds = 0.0;
    std::vector<std::string> failed_ids;
};

struct MetricsReport {
    std::vector<SeedMetrics> seeds;
    Summary accuracy;
    Summary coverage;
    Summary strict_coverage;
    std::map<std::size_t, double> iteration_histogram;  // pooled over seeds
    std::size_t input_tokens = 0;
    std::size_t output_tokens = 0;
    std::size_t generation_calls = 0;
    double wall_seconds = 0.0;
    std::vector<std::string> failed_ids;  // union over seeds, sorted
};

/// Metrics for one seed's records. Every record must name a dataset item.
inline SeedMetrics compute_seed_metrics(const std::vector<RunRecord>& records, const std::vector<DatasetItem>& dataset,
                                        std::size_t seed_index = 0, std::size_t max_iterations = 0) {
    std::map<std::string, const DatasetItem*> by_id;
    for (const auto& item : dataset) by_id[item.id] = &item;
    SeedMetrics m;
    m.seed_index = seed_index;
    m.questions = records.size();
    std::size_t depth = max_iterations;
    for (const auto& r : records) depth = std::max(depth, r.iterations.size());
    m.accuracy_by_iteration.assign(depth, 0.0);
    m.coverage_by_iteration.assign(depth, 0.0);

    std::size_t accurate = 0;
    std::size_t covered = 0;
    std::size_t strict = 0;
    std::map<std::size_t, std::size_t> hist;
    for (const auto& r : records) {
        const auto it = by_id.find(r.question_id);
        if (it == by_id.end()) throw ValidationError("run record names unknown question id: " + r.question_id);
        const auto gold = it->second->gold();
        const auto full = view_at(r, gold, r.iterations.size());
        const bool acc = full.final_answer && answers_equal(*full.final_answer, gold);
        accurate += acc ? 1 : 0;
        covered += full.covered ? 1 : 0;
        strict += full.strictly_covered ? 1 : 0;
        ++hist[r.iterations.size()];
        for (std::size_t t = 1; t <= depth; ++t) {
            const auto v = view_at(r, gold, t);
            if (v.final_answer && answers_equal(*v.final_answer, gold)) m.accuracy_by_iteration[t - 1] += 1.0;
            if (v.covered) m.coverage_by_iteration[t - 1] += 1.0;
        }
        m.input_tokens += r.input_tokens;
        m.output_tokens += r.output_tokens;
        m.generation_calls += r.generation_calls;
        m.wall_seconds += r.wall_seconds;
        if (r.failed()) m.failed_ids.push_back(r.question_id);
    }
    if (!records.empty()) {
        const auto n = static_cast<double>(records.size());
        m.accuracy = static_cast<double>(accurate) / n;
        m.coverage = static_cast<double>(covered) / n;
        m.strict_coverage = static_cast<double>(strict) / n;
        for (const auto& [k, c] : hist) m.iteration_histogram[k] = static_cast<double>(c) / n;
        for (auto& x : m.accuracy_by_iteration) x /= n;
        for (auto& x : m.coverage_by_iteration) x /= n;
    }
    return m;
}

inline MetricsReport aggregate(std::vector<SeedMetrics> seeds) {
    MetricsReport report;
    std::vector<double> acc;
    std::vector<double> cov;
    std::vector<double> strict;
    std::map<std::size_t, double> pooled;
    std::size_t total = 0;
    std::set<std::string> failed;
    for (const auto& s : seeds) {
        acc.push_back(s.accuracy);
        cov.push_back(s.coverage);
        strict.push_back(s.strict_coverage);
        for (const auto& [k, f] : s.iteration_histogram) pooled[k] += f * static_cast<double>(s.questions);
        total += s.questions;
        report.input_tokens += s.input_tokens;
        report.output_tokens += s.output_tokens;
        report.generation_calls += s.generation_calls;
        report.wall_seconds += s.wall_seconds;
        failed.insert(s.failed_ids.begin(), s.failed_ids.end());
    }
    report.accuracy = summarize(acc);
    report.coverage = summarize(cov);
    report.strict_coverage = summarize(strict);
    for (auto& [k, c] : pooled) report.iteration_histogram[k] = total ? c / static_cast<double>(total) : 0.0;
    report.failed_ids.assign(failed.begin(), failed.end());
    report.seeds = std::move(seeds);
    return report;
}

/// Single-seed report.
inline MetricsReport compute_metrics(const std::vector<RunRecord>& records, const std::vector<DatasetItem>& dataset) {
    return aggregate({compute_seed_metrics(records, dataset)});
}

inline nlohmann::json to_json(const SeedMetrics& s) {
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [k, f] : s.iteration_histogram) hist[std::to_string(k)] = f;
    return {{"seed_index", s.seed_index},
            {"questions", s.questions},
            {"accuracy", s.accuracy},
            {"coverage", s.coverage},
            {"strict_coverage", s.strict_coverage},
            {"iteration_histogram", hist},
            {"accuracy_by_iteration", s.accuracy_by_iteration},
            {"coverage_by_iteration", s.coverage_by_iteration},
            {"input_tokens", s.input_tokens},
            {"output_tokens", s.output_tokens},
            {"generation_calls", s.generation_calls},
            {"failed_ids", s.failed_ids}};
}

/// Report as JSON. Wall time is left out so reports are reproducible; see the timing files.
inline nlohmann::json to_json(const MetricsReport& r) {
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [k, f] : r.iteration_histogram) hist[std::to_string(k)] = f;
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& s : r.seeds) seeds.push_back(to_json(s));
    auto summary = [](const Summary& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.stddev}}; };
    return {{"accuracy", summary(r.accuracy)},
            {"coverage", summary(r.coverage)},
            {"strict_coverage", summary(r.strict_coverage)},
            {"iteration_histogram", hist},
            {"input_tokens", r.input_tokens},
            {"output_tokens", r.output_tokens},
            {"generation_calls", r.generation_calls},
            {"failed_ids", r.failed_ids},
            {"seeds", seeds}};
}

/// One-sided sign test: P(X >= wins) for X ~ Binomial(wins + losses, 1/2). Ties are dropped.
inline double sign_test_p_value(std::size_t wins, std::size_t losses) {
    const std::size_t n = wins + losses;
    if (n == 0) return 1.0;
    double p = 0.0;
    for (std::size_t x = wins; x <= n; ++x) {
        const double log_term = std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(x) + 1.0) -
                                std::lgamma(static_cast<double>(n - x) + 1.0) - static_cast<double>(n) * std::log(2.0);
        p += std::exp(log_term);
    }
    return std::min(1.0, p);
}

enum class Method { soft_reasoning, self_consistency, random_perturbation };

inline std::string_view to_string(Method m) {
    switch (m) {
    case Method::soft_reasoning: return "soft-reasoning";
    case Method::self_consistency: return "self-consistency";
    case Method::random_perturbation: return "random-perturbation";
    }
    return "?";
}

inline constexpr double kDefaultSelfConsistencyTemperature = 0.8;

namespace detail {

inline RunRecord baseline_record(const QuestionContext& question, std::uint64_t seed, std::string method) {
    RunRecord r;
    r.question_id = question.id;
    r.method = std::move(method);
    r.run_seed = seed;
    r.iterations.emplace_back();
    r.iterations.back().index = 1;
    return r;
}

inline void finish_baseline(RunRecord& r, CoherenceMode mode) {
    auto& it = r.iterations.back();
    std::vector<NormalizedAnswer> answers;
    double best = -std::numeric_limits<double>::infinity();
    for (auto& c : it.candidates) {
        c.objective = objective(0, c.coherence, mode);
        best = std::max(best, c.objective);
        if (c.answer) answers.push_back(*c.answer);
    }
    it.best_so_far = best;
    r.final_answer = majority_vote(answers);
    r.final_source = r.final_answer ? "majority" : "none";
    r.termination = Termination::max_iterations;
}

inline Candidate plain_candidate(const GenerationResult& g, CoherenceMode mode, LatentPoint latent = {}) {
    Candidate c;
    c.latent = std::move(latent);
    c.text = g.text;
    c.answer = extract_answer(g.text);
    c.coherence = coherence(g, mode);
    c.output_tokens = g.output_token_count;
    c.truncated = g.truncated;
    return c;
}

} // namespace detail

/// k*K temperature samples and a majority vote.
inline RunRecord self_consistency(const QuestionContext& question, const OptimizerConfig& config,
                                  const GenerationBackend& backend, double temperature = kDefaultSelfConsistencyTemperature,
                                  const PromptTemplates& templates = PromptTemplates::builtin()) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();
    auto r = detail::baseline_record(question, config.seed, std::string(to_string(Method::self_consistency)));
    try {
        const auto prompt = build_question_prompt(question, templates);
        const std::size_t budget = config.k * config.max_iterations;
        for (std::size_t i = 0; i < budget; ++i) {
            const auto decode = DecodeSpec::temperature(temperature, derive_seed(derive_seed(config.seed, "sc"), i));
            const auto g = backend.generate_plain(prompt, decode, config.max_tokens);
            detail::account(r, g);
            r.iterations.back().candidates.push_back(detail::plain_candidate(g, config.coherence));
        }
        detail::finish_baseline(r, config.coherence);
    } catch (const Error& e) {
        r.termination = Termination::failed;
        r.failure = e.what();
        r.final_answer.reset();
        r.final_source = "none";
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return r;
}

/// k*K random latent perturbations, no surrogate, majority vote. Uses the same projection and
/// initial-batch stream as `optimize` with the same seed, so the first k points coincide.
inline RunRecord random_perturbation(const QuestionContext& question, const OptimizerConfig& config,
                                     const GenerationBackend& backend,
                                     const PromptTemplates& templates = PromptTemplates::builtin()) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();
    auto r = detail::baseline_record(question, config.seed, std::string(to_string(Method::random_perturbation)));
    r.projection_seed = projection_seed(config.seed);
    try {
        const auto prompt = build_question_prompt(question, templates);
        const auto anchor = backend.base_first_token(prompt);
        r.anchor_token = anchor.token_id;
        const auto projection = make_projection(backend.embedding_dim(), config.latent_dim, r.projection_seed, config.sigma);
        const auto points = sample_initial(config.k * config.max_iterations, config.latent_dim,
                                           initial_batch_seed(config.seed), config.include_anchor);
        for (const auto& u : points) {
            InjectionRequest req;
            req.prompt = prompt;
            req.injected_embeddings.assign(config.inject_count, to_embedding(projection, anchor, u));
            req.placement = config.placement;
            req.max_tokens = config.max_tokens;
            const auto g = backend.generate_with_injection(req);
            detail::account(r, g);
            r.iterations.back().candidates.push_back(detail::plain_candidate(g, config.coherence, u));
        }
        detail::finish_baseline(r, config.coherence);
    } catch (const Error& e) {
        r.termination = Termination::failed;
        r.failure = e.what();
        r.final_answer.reset();
        r.final_source = "none";
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return r;
}

struct ExperimentConfig {
    OptimizerConfig optimizer;
    Method method = Method::soft_reasoning;
    std::size_t seeds = 5;
    std::uint64_t master_seed = 0;
    std::size_t parallelism = 1;
    double sc_temperature = kDefaultSelfConsistencyTemperature;
    std::string dataset_name = "dataset";

    void validate() const {
        optimizer.validate();
        detail::require(seeds >= 1, "experiment: seeds must be >= 1");
        detail::require(parallelism >= 1, "experiment: parallelism must be >= 1");
        detail::require(sc_temperature > 0.0, "experiment: SC temperature must be positive");
    }
};

/// Seed for one question under one seed index; independent of scheduling.
inline std::uint64_t question_seed(std::uint64_t master_seed, std::size_t seed_index, std::string_view question_id) {
    return derive_seed(derive_seed(master_seed, static_cast<std::uint64_t>(seed_index)), hash_bytes(question_id));
}

inline RunRecord run_question(const ExperimentConfig& config, const DatasetItem& item, const GenerationBackend& backend,
                              std::size_t seed_index, const PromptTemplates& templates) {
    OptimizerConfig oc = config.optimizer;
    oc.seed = question_seed(config.master_seed, seed_index, item.id);
    switch (config.method) {
    case Method::soft_reasoning: return optimize(item.context(), oc, backend, templates);
    case Method::self_consistency: return self_consistency(item.context(), oc, backend, config.sc_temperature, templates);
    case Method::random_perturbation: return random_perturbation(item.context(), oc, backend, templates);
    }
    throw ContractViolation("unknown method");
}

/// Runs every item for one seed with up to `parallelism` questions in flight. Results keep dataset order.
inline std::vector<RunRecord> run_seed(const ExperimentConfig& config, const std::vector<DatasetItem>& dataset,
                                       const GenerationBackend& backend, std::size_t seed_index,
                                       const PromptTemplates& templates = PromptTemplates::builtin()) {
    config.validate();
    std::vector<RunRecord> records(dataset.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= dataset.size()) return;
            try {
                records[i] = run_question(config, dataset[i], backend, seed_index, templates);
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = dataset.size();
                return;
            }
        }
    };
    const auto threads = std::min(config.parallelism, std::max<std::size_t>(dataset.size(), 1));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return records;
}

struct ExperimentResult {
    MetricsReport report;
    std::vector<std::vector<RunRecord>> runs;  // [seed][question]
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

} // namespace detail

inline std::string run_log_file_name(std::size_t seed_index) { return fmt::format("runs_seed{}.jsonl", seed_index); }

inline void write_run_log(const std::filesystem::path& path, const std::vector<RunRecord>& records) {
    std::string text;
    for (const auto& r : records) text += run_log::to_line(r) + "\n";
    detail::write_text(path, text);
}

inline std::vector<RunRecord> read_run_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read run log: " + path.string());
    std::vector<RunRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        try {
            out.push_back(run_log::from_line(line));
        } catch (const Error& e) {
            throw ValidationError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
    }
    return out;
}

/// Columns: dataset,method,seed,d,k,iteration,metric,value. `seed` is an index, "mean" or "std";
/// `iteration` is 1..K for cut-off metrics and "final" otherwise.
inline std::string plot_csv(const ExperimentConfig& config, const MetricsReport& report) {
    std::string out = "dataset,method,seed,d,k,iteration,metric,value\n";
    const auto& oc = config.optimizer;
    auto row = [&](const std::string& seed, const std::string& iteration, std::string_view metric, double value) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", config.dataset_name, to_string(config.method), seed, oc.latent_dim,
                           oc.k, iteration, metric, value);
    };
    for (const auto& s : report.seeds) {
        const auto seed = std::to_string(s.seed_index);
        for (std::size_t t = 0; t < s.accuracy_by_iteration.size(); ++t) {
            row(seed, std::to_string(t + 1), "accuracy", s.accuracy_by_iteration[t]);
            row(seed, std::to_string(t + 1), "coverage", s.coverage_by_iteration[t]);
        }
        row(seed, "final", "accuracy", s.accuracy);
        row(seed, "final", "coverage", s.coverage);
        row(seed, "final", "strict_coverage", s.strict_coverage);
        for (const auto& [k, f] : s.iteration_histogram) row(seed, std::to_string(k), "termination_fraction", f);
    }
    row("mean", "final", "accuracy", report.accuracy.mean);
    row("std", "final", "accuracy", report.accuracy.stddev);
    row("mean", "final", "coverage", report.coverage.mean);
    row("std", "final", "coverage", report.coverage.stddev);
    row("mean", "final", "strict_coverage", report.strict_coverage.mean);
    row("std", "final", "strict_coverage", report.strict_coverage.stddev);
    return out;
}

/// Runs all seeds. With `out_dir`, writes runs_seed<i>.jsonl, timing_seed<i>.jsonl, metrics.json
/// and plot_data.csv there.
inline ExperimentResult run_experiment(const ExperimentConfig& config, const std::vector<DatasetItem>& dataset,
                                       const GenerationBackend& backend,
                                       const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                                       const PromptTemplates& templates = PromptTemplates::builtin()) {
    config.validate();
    if (out_dir) std::filesystem::create_directories(*out_dir);
    ExperimentResult result;
    std::vector<SeedMetrics> per_seed;
    for (std::size_t s = 0; s < config.seeds; ++s) {
        auto records = run_seed(config, dataset, backend, s, templates);
        per_seed.push_back(compute_seed_metrics(records, dataset, s, config.optimizer.max_iterations));
        if (out_dir) {
            write_run_log(*out_dir / run_log_file_name(s), records);
            std::string timing;
            for (const auto& r : records) {
                timing += nlohmann::json{{"question_id", r.question_id}, {"wall_seconds", r.wall_seconds}}.dump() + "\n";
            }
            detail::write_text(*out_dir / fmt::format("timing_seed{}.jsonl", s), timing);
        }
        result.runs.push_back(std::move(records));
    }
    result.report = aggregate(std::move(per_seed));
    if (out_dir) {
        detail::write_text(*out_dir / "metrics.json", to_json(result.report).dump(2) + "\n");
        detail::write_text(*out_dir / "plot_data.csv", plot_csv(config, result.report));
    }
    return result;
}

struct SigmaCalibrationRow {
    double sigma = 0.0;
    double accuracy = 0.0;
    double coverage = 0.0;
};

inline const std::vector<double>& default_sigma_grid() {
    static const std::vector<double> grid = {0.1, 0.3, 1.0, 3.0};
    return grid;
}

/// Sweeps sigma on one seed. The best row has the highest accuracy, then coverage, then the smaller sigma.
inline std::vector<SigmaCalibrationRow> calibrate_sigma(ExperimentConfig config, const std::vector<DatasetItem>& dataset,
                                                        const GenerationBackend& backend, const std::vector<double>& grid,
                                                        const PromptTemplates& templates = PromptTemplates::builtin()) {
    detail::require(!grid.empty(), "calibrate-sigma: empty grid");
    config.seeds = 1;
    config.method = Method::soft_reasoning;
    std::vector<SigmaCalibrationRow> rows;
    for (const double sigma : grid) {
        config.optimizer.sigma = sigma;
        const auto records = run_seed(config, dataset, backend, 0, templates);
        const auto m = compute_seed_metrics(records, dataset);
        rows.push_back({sigma, m.accuracy, m.coverage});
    }
    return rows;
}

inline SigmaCalibrationRow best_sigma(const std::vector<SigmaCalibrationRow>& rows) {
    detail::require(!rows.empty(), "best_sigma: no rows");
    return *std::max_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.accuracy != b.accuracy) return a.accuracy < b.accuracy;
        if (a.coverage != b.coverage) return a.coverage < b.coverage;
        return a.sigma > b.sigma;
    });
}

} // namespace softreason

#endif // SOFTREASON_HARNESS_HPP
