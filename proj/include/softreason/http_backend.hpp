#ifndef SOFTREASON_HTTP_BACKEND_HPP
#define SOFTREASON_HTTP_BACKEND_HPP

#include <string>
#include <type_traits>
#include <utility>

// Eigen must precede httplib: <resolv.h> defines a _res macro that clashes with Eigen internals.
#include "softreason/backend.hpp"

#include <httplib.h>
#include <json.hpp>

namespace softreason {

/// JSON bodies of the injection protocol.
///
///   POST /v1/first_token  {"prompt"} -> {"token_id", "embedding": [D]}
///   POST /v1/generate     {"prompt", "injected_embeddings": [[D]...] | null, "placement",
///                          "max_tokens", "decode": {"mode": "greedy"} |
///                          {"mode": "temperature", "tau", "seed"}}
///                       -> {"text", "tokens", "token_logprobs", "truncated"}
namespace wire {

using nlohmann::json;

inline json encode_decode(const DecodeSpec& decode) {
    if (decode.is_greedy()) {
        return {{"mode", "greedy"}};
    }
    return {{"mode", "temperature"}, {"tau", decode.tau}, {"seed", decode.seed}};
}

inline DecodeSpec decode_decode(const json& j) {
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "greedy") return DecodeSpec::greedy();
    if (mode == "temperature") {
        return DecodeSpec::temperature(j.at("tau").get<double>(), j.value("seed", std::uint64_t{0}));
    }
    throw ValidationError("unknown decode mode: " + mode);
}

inline json encode_embedding(const EmbeddingVector& e) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < e.size(); ++i) arr.push_back(e(i));
    return arr;
}

inline EmbeddingVector decode_embedding(const json& arr, Eigen::Index expected_dim) {
    if (!arr.is_array()) throw ValidationError("embedding must be a JSON array");
    if (static_cast<Eigen::Index>(arr.size()) != expected_dim) {
        throw ValidationError("embedding has " + std::to_string(arr.size()) + " entries, expected " +
                              std::to_string(expected_dim));
    }
    EmbeddingVector e(expected_dim);
    for (Eigen::Index i = 0; i < expected_dim; ++i) e(i) = arr.at(static_cast<std::size_t>(i)).get<double>();
    return e;
}

inline json first_token_request(const std::string& prompt) { return {{"prompt", prompt}}; }

inline AnchorEmbedding parse_first_token_response(const json& j, Eigen::Index expected_dim) {
    if (!j.contains("embedding") || j.at("embedding").is_null()) {
        throw CapabilityError("backend did not return a first-token embedding");
    }
    AnchorEmbedding a;
    a.token_id = j.at("token_id").get<std::int64_t>();
    a.embedding = decode_embedding(j.at("embedding"), expected_dim);
    return a;
}

inline json generate_request(const std::string& prompt, const std::vector<EmbeddingVector>* injected,
                             Placement placement, std::size_t max_tokens, const DecodeSpec& decode) {
    json body = {{"prompt", prompt},
                 {"placement", std::string(to_string(placement))},
                 {"max_tokens", max_tokens},
                 {"decode", encode_decode(decode)}};
    if (injected != nullptr) {
        json arr = json::array();
        for (const auto& e : *injected) arr.push_back(encode_embedding(e));
        body["injected_embeddings"] = std::move(arr);
    } else {
        body["injected_embeddings"] = nullptr;
    }
    return body;
}

inline json generate_request(const InjectionRequest& req) {
    return generate_request(req.prompt, &req.injected_embeddings, req.placement, req.max_tokens, req.decode);
}

inline GenerationResult parse_generate_response(const json& j, const std::string& prompt) {
    GenerationResult r;
    r.text = j.at("text").get<std::string>();
    r.tokens = j.at("tokens").get<std::vector<std::string>>();
    r.token_logprobs = j.at("token_logprobs").get<std::vector<double>>();
    r.truncated = j.value("truncated", false);
    r.output_token_count = r.tokens.size();
    r.prompt_token_count = j.contains("prompt_token_count") ? j.at("prompt_token_count").get<std::size_t>()
                                                            : approximate_token_count(prompt);
    r.validate();
    return r;
}

inline json encode_result(const GenerationResult& r) {
    return {{"text", r.text},
            {"tokens", r.tokens},
            {"token_logprobs", r.token_logprobs},
            {"truncated", r.truncated},
            {"prompt_token_count", r.prompt_token_count}};
}

} // namespace wire

struct HttpBackendConfig {
    std::string endpoint = "http://127.0.0.1:8000";
    Eigen::Index embedding_dim = 4096;
    std::string auth_token;
    double timeout_seconds = 300.0;
};

/// Talks the injection protocol to a remote inference server.
class HttpBackend final : public GenerationBackend {
public:
    explicit HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
        const auto scheme_end = config_.endpoint.find("://");
        const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        const auto path_start = config_.endpoint.find('/', host_start);
        base_ = config_.endpoint.substr(0, path_start);
        if (path_start != std::string::npos) {
            prefix_ = config_.endpoint.substr(path_start);
            while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
        }
        detail::require(!base_.empty(), "http backend: empty endpoint");
        detail::require(config_.embedding_dim >= 1, "http backend: embedding_dim must be positive");
    }

    [[nodiscard]] Eigen::Index embedding_dim() const override { return config_.embedding_dim; }

    [[nodiscard]] AnchorEmbedding base_first_token(const std::string& prompt) const override {
        detail::require(!prompt.empty(), "base_first_token: empty prompt");
        const auto body = post("/v1/first_token", wire::first_token_request(prompt));
        return guarded([&] { return wire::parse_first_token_response(body, config_.embedding_dim); });
    }

    [[nodiscard]] GenerationResult generate_with_injection(const InjectionRequest& request) const override {
        request.validate(config_.embedding_dim);
        const auto body = post("/v1/generate", wire::generate_request(request));
        return guarded([&] { return wire::parse_generate_response(body, request.prompt); });
    }

    [[nodiscard]] GenerationResult generate_plain(const std::string& prompt, const DecodeSpec& decode,
                                                  std::size_t max_tokens) const override {
        detail::require(!prompt.empty(), "generate_plain: empty prompt");
        decode.validate();
        const auto body = post("/v1/generate", wire::generate_request(prompt, nullptr, Placement::last, max_tokens, decode));
        return guarded([&] { return wire::parse_generate_response(body, prompt); });
    }

private:
    template <typename F>
    static std::invoke_result_t<F> guarded(F&& parse) {
        try {
            return parse();
        } catch (const nlohmann::json::exception& e) {
            throw TransportError(std::string("malformed response body: ") + e.what());
        }
    }

    nlohmann::json post(const std::string& route, const nlohmann::json& body) const {
        httplib::Client client(base_);
        const auto secs = static_cast<time_t>(config_.timeout_seconds);
        client.set_connection_timeout(secs, 0);
        client.set_read_timeout(secs, 0);
        client.set_write_timeout(secs, 0);
        httplib::Headers headers;
        if (!config_.auth_token.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.auth_token);
        }
        auto res = client.Post(prefix_ + route, headers, body.dump(), "application/json");
        if (!res) {
            throw TransportError("POST " + base_ + prefix_ + route + " failed: " + httplib::to_string(res.error()));
        }
        if (res->status < 200 || res->status >= 300) {
            throw TransportError("POST " + base_ + prefix_ + route + " returned HTTP " + std::to_string(res->status) +
                                 ": " + res->body);
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error& e) {
            throw TransportError("POST " + route + ": malformed JSON response: " + e.what());
        }
    }

    HttpBackendConfig config_;
    std::string base_;
    std::string prefix_;
};

} // namespace softreason

#endif // SOFTREASON_HTTP_BACKEND_HPP
