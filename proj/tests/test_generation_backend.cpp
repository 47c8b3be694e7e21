#include <atomic>
#include <memory>
#include <set>
#include <string>
#include <thread>

#include "softreason/http_backend.hpp"
#include "softreason/synthetic_backend.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

using namespace softreason;

namespace {

std::shared_ptr<SyntheticWorld> make_world(std::uint64_t seed = 1) {
    SyntheticWorldConfig c;
    c.seed = seed;
    return std::make_shared<SyntheticWorld>(c);
}

const std::string kPrompt = "Question: How many apples are left if you start with 7 and eat 3?\nThought:";

/// Serves the injection protocol on a loopback port, answering through a synthetic backend.
class LoopbackServer {
public:
    explicit LoopbackServer(std::shared_ptr<const SyntheticWorld> world, std::string token = {})
        : backend_(std::move(world)), token_(std::move(token)) {
        server_.Post("/v1/first_token", [this](const httplib::Request& req, httplib::Response& res) {
            if (!authorized(req, res)) return;
            if (capability_missing) {
                res.set_content(R"({"token_id": 1, "embedding": null})", "application/json");
                return;
            }
            const auto body = nlohmann::json::parse(req.body);
            auto anchor = backend_.base_first_token(body.at("prompt").get<std::string>());
            if (truncate_embedding) anchor.embedding.conservativeResize(anchor.embedding.size() - 1);
            res.set_content(nlohmann::json{{"token_id", anchor.token_id}, {"embedding", wire::encode_embedding(anchor.embedding)}}
                                .dump(),
                            "application/json");
        });
        server_.Post("/v1/generate", [this](const httplib::Request& req, httplib::Response& res) {
            if (!authorized(req, res)) return;
            if (fail_status != 0) {
                res.status = fail_status;
                res.set_content("model overloaded", "text/plain");
                return;
            }
            if (garbage) {
                res.set_content("{not json", "application/json");
                return;
            }
            const auto body = nlohmann::json::parse(req.body);
            const auto prompt = body.at("prompt").get<std::string>();
            const auto max_tokens = body.at("max_tokens").get<std::size_t>();
            const auto decode = wire::decode_decode(body.at("decode"));
            GenerationResult r;
            if (body.at("injected_embeddings").is_null()) {
                r = backend_.generate_plain(prompt, decode, max_tokens);
            } else {
                InjectionRequest ir;
                ir.prompt = prompt;
                ir.placement = parse_placement(body.at("placement").get<std::string>());
                ir.max_tokens = max_tokens;
                for (const auto& e : body.at("injected_embeddings")) {
                    ir.injected_embeddings.push_back(wire::decode_embedding(e, backend_.embedding_dim()));
                }
                r = backend_.generate_with_injection(ir);
            }
            res.set_content(wire::encode_result(r).dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~LoopbackServer() {
        server_.stop();
        thread_.join();
    }

    [[nodiscard]] std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

    std::atomic<int> fail_status{0};
    std::atomic<bool> garbage{false};
    std::atomic<bool> capability_missing{false};
    std::atomic<bool> truncate_embedding{false};

private:
    bool authorized(const httplib::Request& req, httplib::Response& res) const {
        if (token_.empty() || req.get_header_value("Authorization") == "Bearer " + token_) return true;
        res.status = 401;
        res.set_content("unauthorized", "text/plain");
        return false;
    }

    SyntheticBackend backend_;
    std::string token_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

HttpBackend client_for(const LoopbackServer& server, const std::string& token = {}) {
    HttpBackendConfig c;
    c.endpoint = server.endpoint();
    c.embedding_dim = 64;
    c.auth_token = token;
    c.timeout_seconds = 10;
    return HttpBackend(c);
}

std::string tail_answer(const std::string& text) {
    const auto pos = text.rfind("Answer:");
    return pos == std::string::npos ? std::string() : text.substr(pos + 8);
}

} // namespace

TEST(Placement, OffsetsAndNames) {
    const std::string p = "Some context here. Another sentence! What is 2+2?";
    EXPECT_EQ(injection_offset(p, Placement::first), 0u);
    EXPECT_EQ(injection_offset(p, Placement::last), p.size());
    EXPECT_EQ(p.substr(injection_offset(p, Placement::middle)), "What is 2+2?");
    EXPECT_EQ(injection_offset("single sentence", Placement::middle), 0u);
    for (const auto pl : {Placement::first, Placement::middle, Placement::last}) {
        EXPECT_EQ(parse_placement(to_string(pl)), pl);
    }
    EXPECT_THROW(parse_placement("center"), ContractViolation);
}

TEST(InjectionRequest, Validation) {
    InjectionRequest r;
    r.prompt = "p";
    EXPECT_THROW(r.validate(4), ContractViolation);
    r.injected_embeddings = {EmbeddingVector::Zero(3)};
    EXPECT_THROW(r.validate(4), ContractViolation);
    r.injected_embeddings = {EmbeddingVector::Zero(4)};
    EXPECT_NO_THROW(r.validate(4));
    r.decode = DecodeSpec::temperature(0.8, 1);
    EXPECT_THROW(r.validate(4), ContractViolation);
}

TEST(GenerationResult, RejectsPositiveLogprob) {
    GenerationResult r{"a", {"a"}, {0.1}, 1, 1, false};
    EXPECT_THROW(r.validate(), ValidationError);
    r.token_logprobs = {-0.1};
    EXPECT_NO_THROW(r.validate());
    r.output_token_count = 2;
    EXPECT_THROW(r.validate(), ValidationError);
}

TEST(Synthetic, FirstTokenIsDeterministic) {
    const SyntheticBackend b(make_world());
    const auto a1 = b.base_first_token(kPrompt);
    const auto a2 = b.base_first_token(kPrompt);
    EXPECT_EQ(a1.embedding, a2.embedding);
    EXPECT_EQ(a1.token_id, a2.token_id);
    EXPECT_EQ(a1.embedding.size(), 64);
    EXPECT_THROW(b.base_first_token(""), ContractViolation);
}

TEST(Synthetic, InjectionAnswersWithNearestCentroidLabel) {
    const auto world = make_world(3);
    const SyntheticBackend b(world);
    const auto w = world->question_world("How many apples are left if you start with 7 and eat 3?");
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const EmbeddingVector x = w.anchor + 4.0 * standard_normal_vector(64, rng);
        std::size_t nearest = 0;
        for (std::size_t j = 0; j < w.centroids.size(); ++j) {
            if ((x - w.centroids[j]).norm() < (x - w.centroids[nearest]).norm()) nearest = j;
        }
        const auto r = b.generate_with_injection({kPrompt, {x}, Placement::last, 300, {}});
        EXPECT_EQ(tail_answer(r.text), w.labels[nearest]);
    }
}

TEST(Synthetic, AnchorInjectionEqualsPlainGreedy) {
    const SyntheticBackend b(make_world());
    const auto anchor = b.base_first_token(kPrompt);
    const auto injected = b.generate_with_injection({kPrompt, {anchor.embedding}, Placement::last, 300, {}});
    const auto plain = b.generate_plain(kPrompt, DecodeSpec::greedy(), 300);
    EXPECT_EQ(injected.text, plain.text);
    EXPECT_EQ(injected.token_logprobs, plain.token_logprobs);
}

TEST(Synthetic, InjectionIsDeterministic) {
    const SyntheticBackend b(make_world());
    const EmbeddingVector x = EmbeddingVector::Constant(64, 0.3);
    const InjectionRequest req{kPrompt, {x, x}, Placement::middle, 300, {}};
    const auto r1 = b.generate_with_injection(req);
    const auto r2 = b.generate_with_injection(req);
    EXPECT_EQ(r1.text, r2.text);
    EXPECT_EQ(r1.tokens, r2.tokens);
    EXPECT_EQ(r1.token_logprobs, r2.token_logprobs);
}

TEST(Synthetic, CoherenceDecreasesWithDistance) {
    const auto world = make_world(2);
    const SyntheticBackend b(world);
    const auto w = world->question_world("How many apples are left if you start with 7 and eat 3?");
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        EmbeddingVector dir = standard_normal_vector(64, rng);
        dir.normalize();
        const auto near = b.generate_with_injection({kPrompt, {w.centroids[0] + 0.1 * dir}, Placement::last, 300, {}});
        const auto far = b.generate_with_injection({kPrompt, {w.centroids[0] + 0.4 * dir}, Placement::last, 300, {}});
        ASSERT_EQ(tail_answer(near.text), tail_answer(far.text));
        double sn = 0.0;
        double sf = 0.0;
        for (const double lp : near.token_logprobs) sn += lp;
        for (const double lp : far.token_logprobs) sf += lp;
        EXPECT_GT(sn, sf);
        EXPECT_NO_THROW(near.validate());
    }
}

TEST(Synthetic, TemperatureIsSeeded) {
    const SyntheticBackend b(make_world());
    const auto a = b.generate_plain(kPrompt, DecodeSpec::temperature(0.8, 17), 300);
    const auto c = b.generate_plain(kPrompt, DecodeSpec::temperature(0.8, 17), 300);
    EXPECT_EQ(a.text, c.text);
    EXPECT_EQ(a.token_logprobs, c.token_logprobs);
    EXPECT_THROW(b.generate_plain(kPrompt, DecodeSpec::temperature(0.0, 1), 300), ContractViolation);
}

TEST(Synthetic, MaxTokensTruncates) {
    const SyntheticBackend b(make_world());
    const auto r = b.generate_plain(kPrompt, DecodeSpec::greedy(), 1);
    EXPECT_EQ(r.tokens.size(), 1u);
    EXPECT_EQ(r.token_logprobs.size(), 1u);
    EXPECT_EQ(r.output_token_count, 1u);
    EXPECT_TRUE(r.truncated);
}

TEST(Synthetic, GoldOverrideMovesLabel) {
    auto world = make_world(4);
    const std::string q = "What is 12 times 12?";
    world->set_gold(q, "144");
    const auto w = world->question_world(q);
    EXPECT_EQ(w.labels[w.gold], "144");
    std::set<std::string> labels(w.labels.begin(), w.labels.end());
    EXPECT_EQ(labels.size(), w.labels.size());
}

TEST(Synthetic, VerifierWithFullAccuracyPicksGold) {
    SyntheticWorldConfig c;
    c.verifier_accuracy = 1.0;
    c.seed = 8;
    const auto world = std::make_shared<SyntheticWorld>(c);
    const SyntheticBackend b(world);
    const std::string q = "How many apples are left if you start with 7 and eat 3?";
    const auto w = world->question_world(q);
    const std::string gold = w.labels[w.gold];
    const std::string wrong = w.labels[(w.gold + 1) % w.labels.size()];
    const std::string prompt = "Question:\n" + q + "\n\nYour previous answers:\n1. Thought: a Answer: " + wrong +
                               "\n2. Thought: b Answer: " + gold + "\n3. Thought: c Answer: " + wrong + "\n\nAnalysis:\n";
    const auto r = b.generate_plain(prompt, DecodeSpec::greedy(), 300);
    EXPECT_EQ(tail_answer(r.text), gold);

    // no gold among the candidates: plurality wins
    const std::string other = w.labels[(w.gold + 2) % w.labels.size()];
    const std::string prompt2 = "Question:\n" + q + "\n\nYour previous answers:\n1. Answer: " + other +
                                "\n2. Answer: " + wrong + "\n3. Answer: " + wrong + "\n\nAnalysis:\n";
    EXPECT_EQ(tail_answer(b.generate_plain(prompt2, DecodeSpec::greedy(), 300).text), wrong);
}

TEST(Http, MatchesSyntheticBackendThroughTheWire) {
    const auto world = make_world(6);
    LoopbackServer server(world);
    const auto client = client_for(server);
    const SyntheticBackend local(world);

    const auto a = client.base_first_token(kPrompt);
    EXPECT_EQ(a.embedding, local.base_first_token(kPrompt).embedding);

    const InjectionRequest req{kPrompt, {a.embedding + EmbeddingVector::Constant(64, 0.7)}, Placement::last, 300, {}};
    const auto remote = client.generate_with_injection(req);
    const auto direct = local.generate_with_injection(req);
    EXPECT_EQ(remote.text, direct.text);
    EXPECT_EQ(remote.token_logprobs, direct.token_logprobs);

    const auto sampled = client.generate_plain(kPrompt, DecodeSpec::temperature(0.8, 3), 2);
    EXPECT_EQ(sampled.tokens, local.generate_plain(kPrompt, DecodeSpec::temperature(0.8, 3), 2).tokens);
    EXPECT_TRUE(sampled.truncated);
}

TEST(Http, NonSuccessStatusIsTransportErrorWithBody) {
    LoopbackServer server(make_world());
    server.fail_status = 503;
    const auto client = client_for(server);
    try {
        (void)client.generate_plain(kPrompt, DecodeSpec::greedy(), 10);
        FAIL() << "expected a transport error";
    } catch (const TransportError& e) {
        EXPECT_NE(std::string(e.what()).find("503"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("model overloaded"), std::string::npos);
    }
}

TEST(Http, MalformedBodyIsTransportError) {
    LoopbackServer server(make_world());
    server.garbage = true;
    EXPECT_THROW((void)client_for(server).generate_plain(kPrompt, DecodeSpec::greedy(), 10), TransportError);
}

TEST(Http, MissingEmbeddingIsCapabilityError) {
    LoopbackServer server(make_world());
    server.capability_missing = true;
    EXPECT_THROW((void)client_for(server).base_first_token(kPrompt), CapabilityError);
}

TEST(Http, EmbeddingLengthIsValidated) {
    LoopbackServer server(make_world());
    server.truncate_embedding = true;
    EXPECT_THROW((void)client_for(server).base_first_token(kPrompt), ValidationError);
}

TEST(Http, BearerTokenIsSent) {
    LoopbackServer server(make_world(), "s3cret");
    EXPECT_THROW((void)client_for(server).base_first_token(kPrompt), TransportError);
    EXPECT_NO_THROW((void)client_for(server, "s3cret").base_first_token(kPrompt));
}

TEST(Http, UnreachableIsTransportError) {
    HttpBackendConfig c;
    c.endpoint = "http://127.0.0.1:1";
    c.embedding_dim = 64;
    c.timeout_seconds = 2;
    EXPECT_THROW((void)HttpBackend(c).base_first_token(kPrompt), TransportError);
}

TEST(Http, EndpointPathPrefixIsKept) {
    const auto world = make_world();
    LoopbackServer server(world);
    HttpBackendConfig c;
    c.endpoint = server.endpoint() + "/";
    c.embedding_dim = 64;
    EXPECT_NO_THROW((void)HttpBackend(c).base_first_token(kPrompt));
}
