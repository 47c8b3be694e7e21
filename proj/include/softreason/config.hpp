#ifndef SOFTREASON_CONFIG_HPP
#define SOFTREASON_CONFIG_HPP

#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "softreason/harness.hpp"
#include "softreason/http_backend.hpp"
#include "softreason/synthetic_backend.hpp"

namespace softreason {

struct BackendSettings {
    std::string kind = "synthetic";  // "synthetic" or "http"
    HttpBackendConfig http;
    SyntheticWorldConfig world;
};

/// Everything a CLI invocation needs. JSON keys match the long flag names.
struct RunSettings {
    ExperimentConfig experiment;
    BackendSettings backend;
    std::string dataset;
    std::string out = "out";
    std::string prompts;  // directory of template overrides; empty means built-in
};

namespace detail {

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& slot) {
    if (j.contains(key)) slot = j.at(key).get<T>();
}

} // namespace detail

/// Applies the keys present in `j`; unknown keys are rejected.
inline void apply_json(RunSettings& s, const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "dataset",       "backend",        "endpoint",          "embedding-dim",  "acquisition",
        "ucb-beta",      "d",              "sigma",             "k",              "max-iters",
        "epsilon",       "delta",          "lambda",            "pool-size",      "placement",
        "inject-count",  "verifier",       "coherence",         "seeds",          "parallelism",
        "out",           "master-seed",    "max-tokens",        "sc-temperature", "include-anchor",
        "prompts",       "timeout",        "world-seed",        "regions",        "verifier-accuracy",
        "greedy-correct-rate", "sharpness", "dataset-name"};
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw ValidationError("unknown config key: " + key);
    }
    try {
        auto& oc = s.experiment.optimizer;
        auto& world = s.backend.world;
        detail::read_key(j, "dataset", s.dataset);
        detail::read_key(j, "dataset-name", s.experiment.dataset_name);
        detail::read_key(j, "backend", s.backend.kind);
        detail::read_key(j, "endpoint", s.backend.http.endpoint);
        if (j.contains("embedding-dim")) {
            s.backend.http.embedding_dim = j.at("embedding-dim").get<Eigen::Index>();
            world.embedding_dim = s.backend.http.embedding_dim;
        }
        detail::read_key(j, "timeout", s.backend.http.timeout_seconds);
        if (j.contains("acquisition")) oc.acquisition = parse_acquisition_kind(j.at("acquisition").get<std::string>());
        detail::read_key(j, "ucb-beta", oc.ucb_beta);
        detail::read_key(j, "d", oc.latent_dim);
        detail::read_key(j, "sigma", oc.sigma);
        detail::read_key(j, "k", oc.k);
        detail::read_key(j, "max-iters", oc.max_iterations);
        detail::read_key(j, "epsilon", oc.epsilon);
        detail::read_key(j, "delta", oc.delta);
        detail::read_key(j, "lambda", oc.noise);
        detail::read_key(j, "pool-size", oc.pool_size);
        if (j.contains("placement")) oc.placement = parse_placement(j.at("placement").get<std::string>());
        detail::read_key(j, "inject-count", oc.inject_count);
        if (j.contains("verifier")) oc.verifier = parse_verifier_strategy(j.at("verifier").get<std::string>());
        if (j.contains("coherence")) oc.coherence = parse_coherence_mode(j.at("coherence").get<std::string>());
        detail::read_key(j, "max-tokens", oc.max_tokens);
        detail::read_key(j, "include-anchor", oc.include_anchor);
        detail::read_key(j, "seeds", s.experiment.seeds);
        detail::read_key(j, "parallelism", s.experiment.parallelism);
        detail::read_key(j, "master-seed", s.experiment.master_seed);
        detail::read_key(j, "sc-temperature", s.experiment.sc_temperature);
        detail::read_key(j, "out", s.out);
        detail::read_key(j, "prompts", s.prompts);
        detail::read_key(j, "world-seed", world.seed);
        detail::read_key(j, "regions", world.regions);
        detail::read_key(j, "verifier-accuracy", world.verifier_accuracy);
        detail::read_key(j, "greedy-correct-rate", world.greedy_correct_rate);
        detail::read_key(j, "sharpness", world.sharpness);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    } catch (const ContractViolation& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
}

inline RunSettings load_settings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config " + path.string() + ": " + e.what());
    }
    RunSettings s;
    apply_json(s, j);
    return s;
}

inline nlohmann::json to_json(const RunSettings& s) {
    const auto& oc = s.experiment.optimizer;
    const auto& world = s.backend.world;
    return {{"dataset", s.dataset},
            {"dataset-name", s.experiment.dataset_name},
            {"backend", s.backend.kind},
            {"endpoint", s.backend.http.endpoint},
            {"embedding-dim", s.backend.kind == "http" ? s.backend.http.embedding_dim : world.embedding_dim},
            {"timeout", s.backend.http.timeout_seconds},
            {"acquisition", std::string(to_string(oc.acquisition))},
            {"ucb-beta", oc.ucb_beta},
            {"d", oc.latent_dim},
            {"sigma", oc.sigma},
            {"k", oc.k},
            {"max-iters", oc.max_iterations},
            {"epsilon", oc.epsilon},
            {"delta", oc.delta},
            {"lambda", oc.noise},
            {"pool-size", oc.pool_size},
            {"placement", std::string(to_string(oc.placement))},
            {"inject-count", oc.inject_count},
            {"verifier", std::string(to_string(oc.verifier))},
            {"coherence", std::string(to_string(oc.coherence))},
            {"max-tokens", oc.max_tokens},
            {"include-anchor", oc.include_anchor},
            {"seeds", s.experiment.seeds},
            {"parallelism", s.experiment.parallelism},
            {"master-seed", s.experiment.master_seed},
            {"sc-temperature", s.experiment.sc_temperature},
            {"out", s.out},
            {"prompts", s.prompts},
            {"world-seed", world.seed},
            {"regions", world.regions},
            {"verifier-accuracy", world.verifier_accuracy},
            {"greedy-correct-rate", world.greedy_correct_rate},
            {"sharpness", world.sharpness}};
}

/// Builds the configured backend. A synthetic world adopts the dataset's gold answers.
inline std::unique_ptr<GenerationBackend> make_backend(const BackendSettings& settings,
                                                       const std::vector<DatasetItem>& dataset = {}) {
    if (settings.kind == "http") {
        return std::make_unique<HttpBackend>(settings.http);
    }
    if (settings.kind == "synthetic") {
        auto world = std::make_shared<SyntheticWorld>(settings.world);
        for (const auto& item : dataset) world->set_gold(item.question, item.gold().canonical());
        return std::make_unique<SyntheticBackend>(std::move(world));
    }
    throw ValidationError("unknown backend: " + settings.kind);
}

inline std::vector<DatasetItem> to_dataset(const std::vector<SyntheticQuestion>& questions) {
    std::vector<DatasetItem> out;
    out.reserve(questions.size());
    for (const auto& q : questions) out.push_back({q.id, q.question, q.gold_answer, {}});
    return out;
}

} // namespace softreason

#endif // SOFTREASON_CONFIG_HPP
