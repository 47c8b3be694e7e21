#ifndef SOFTREASON_RUN_LOG_HPP
#define SOFTREASON_RUN_LOG_HPP

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "softreason/optimizer.hpp"

namespace softreason::run_log {

using nlohmann::json;

inline json encode(const std::optional<NormalizedAnswer>& a) {
    if (!a) return nullptr;
    return {{"raw", a->raw}, {"kind", a->kind == AnswerKind::numeric ? "numeric" : "text"}, {"canonical", a->canonical()}};
}

inline std::optional<NormalizedAnswer> decode_answer(const json& j) {
    if (j.is_null()) return std::nullopt;
    auto a = normalize_answer(j.at("raw").get<std::string>());
    if (!a) throw ValidationError("run log: answer with empty raw text");
    return a;
}

inline json encode(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<double> decode_optional_double(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

inline json encode(const LatentPoint& u) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < u.size(); ++i) arr.push_back(u(i));
    return arr;
}

inline LatentPoint decode_latent(const json& j) {
    LatentPoint u(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) u(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return u;
}

inline json encode(const Candidate& c) {
    return {{"latent", encode(c.latent)},
            {"text", c.text},
            {"answer", encode(c.answer)},
            {"verifier_bit", c.verifier_bit},
            {"coherence", c.coherence},
            {"objective", c.objective},
            {"output_tokens", c.output_tokens},
            {"truncated", c.truncated}};
}

inline Candidate decode_candidate(const json& j) {
    Candidate c;
    c.latent = decode_latent(j.at("latent"));
    c.text = j.at("text").get<std::string>();
    c.answer = decode_answer(j.at("answer"));
    c.verifier_bit = j.at("verifier_bit").get<int>();
    c.coherence = j.at("coherence").get<double>();
    c.objective = j.at("objective").get<double>();
    c.output_tokens = j.at("output_tokens").get<std::size_t>();
    c.truncated = j.at("truncated").get<bool>();
    return c;
}

inline json encode(const VerifierRecord& v) {
    return {{"strategy", std::string(to_string(v.strategy))},
            {"verdict", encode(v.verdict)},
            {"shown_answers", v.shown_answers},
            {"bits", v.bits},
            {"transcripts", v.transcripts},
            {"degraded", v.degraded}};
}

inline VerifierRecord decode_verifier(const json& j) {
    VerifierRecord v;
    v.strategy = parse_verifier_strategy(j.at("strategy").get<std::string>());
    v.verdict = decode_answer(j.at("verdict"));
    v.shown_answers = j.at("shown_answers").get<std::vector<std::string>>();
    v.bits = j.at("bits").get<std::vector<int>>();
    v.transcripts = j.at("transcripts").get<std::vector<std::string>>();
    v.degraded = j.at("degraded").get<bool>();
    return v;
}

inline json encode(const IterationRecord& it) {
    json candidates = json::array();
    for (const auto& c : it.candidates) candidates.push_back(encode(c));
    return {{"index", it.index},
            {"candidates", std::move(candidates)},
            {"verifier", encode(it.verifier)},
            {"best_so_far", it.best_so_far},
            {"information_gain", encode(it.information_gain)},
            {"bandwidth", encode(it.bandwidth)}};
}

inline IterationRecord decode_iteration(const json& j) {
    IterationRecord it;
    it.index = j.at("index").get<std::size_t>();
    for (const auto& c : j.at("candidates")) it.candidates.push_back(decode_candidate(c));
    it.verifier = decode_verifier(j.at("verifier"));
    it.best_so_far = j.at("best_so_far").get<double>();
    it.information_gain = decode_optional_double(j.at("information_gain"));
    it.bandwidth = decode_optional_double(j.at("bandwidth"));
    return it;
}

/// Everything except wall time, which lives in a separate timing file so logs stay reproducible.
inline json encode(const RunRecord& r) {
    json iterations = json::array();
    for (const auto& it : r.iterations) iterations.push_back(encode(it));
    return {{"question_id", r.question_id},
            {"method", r.method},
            {"anchor_token", r.anchor_token},
            {"run_seed", r.run_seed},
            {"projection_seed", r.projection_seed},
            {"iterations", std::move(iterations)},
            {"termination", std::string(to_string(r.termination))},
            {"final_answer", encode(r.final_answer)},
            {"final_source", r.final_source},
            {"failure", r.failure},
            {"generation_calls", r.generation_calls},
            {"input_tokens", r.input_tokens},
            {"output_tokens", r.output_tokens}};
}

inline RunRecord decode_record(const json& j) {
    RunRecord r;
    r.question_id = j.at("question_id").get<std::string>();
    r.method = j.value("method", std::string("soft-reasoning"));
    r.anchor_token = j.at("anchor_token").get<std::int64_t>();
    r.run_seed = j.at("run_seed").get<std::uint64_t>();
    r.projection_seed = j.at("projection_seed").get<std::uint64_t>();
    for (const auto& it : j.at("iterations")) r.iterations.push_back(decode_iteration(it));
    r.termination = parse_termination(j.at("termination").get<std::string>());
    r.final_answer = decode_answer(j.at("final_answer"));
    r.final_source = j.at("final_source").get<std::string>();
    r.failure = j.at("failure").get<std::string>();
    r.generation_calls = j.at("generation_calls").get<std::size_t>();
    r.input_tokens = j.at("input_tokens").get<std::size_t>();
    r.output_tokens = j.at("output_tokens").get<std::size_t>();
    return r;
}

inline std::string to_line(const RunRecord& r) { return encode(r).dump(); }

inline RunRecord from_line(const std::string& line) {
    try {
        return decode_record(json::parse(line));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("run log: ") + e.what());
    }
}

} // namespace softreason::run_log

#endif // SOFTREASON_RUN_LOG_HPP
