#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <thread>

#include <httplib.h>

#include "maxshapley/judge/http.hpp"
#include "maxshapley/judge/judge_oracle.hpp"
#include "maxshapley/judge/ledger.hpp"
#include "maxshapley/judge/mock.hpp"
#include "maxshapley/judge/record_replay.hpp"
#include "maxshapley/judge/score_parse.hpp"

using Catch::Matchers::WithinAbs;
using namespace maxshapley;
using namespace maxshapley::judge;

TEST_CASE("parse_judge_score") {
    CHECK(parse_judge_score("0.7") == 0.7);
    CHECK(parse_judge_score("Score: 0.85 based on coverage") == 0.85);
    CHECK(parse_judge_score("1") == 1.0);
    CHECK(parse_judge_score("0") == 0.0);
    CHECK(parse_judge_score("I rate this 1.0") == 1.0);
    // Last in-range decimal wins.
    CHECK(parse_judge_score("first 0.2 then 0.9") == 0.9);
    CHECK(parse_judge_score("0.7 out of 10") == 0.7);

    CHECK_THROWS_WITH(parse_judge_score("one point four"),
                      Catch::Matchers::ContainsSubstring("no numeric score"));
    CHECK_THROWS_WITH(parse_judge_score("score is 7 or maybe 12"),
                      Catch::Matchers::ContainsSubstring("no score in [0,1]"));
}

TEST_CASE("token ledger conserves per-stage totals") {
    TokenLedger ledger;
    ledger.add("generate", 100, 20);
    ledger.add("judge", 50, 5);
    ledger.add("judge", 25, 5);

    CHECK(ledger.tokens_in() == 175);
    CHECK(ledger.tokens_out() == 30);
    CHECK(ledger.calls() == 3);

    auto stages = ledger.by_stage();
    long long in = 0, out = 0, calls = 0;
    for (const auto& [_, s] : stages) {
        in += s.tokens_in;
        out += s.tokens_out;
        calls += s.calls;
    }
    CHECK(in == ledger.tokens_in());
    CHECK(out == ledger.tokens_out());
    CHECK(calls == ledger.calls());
    CHECK(stages.at("judge").calls == 2);
}

TEST_CASE("estimate_cost") {
    EndpointConfig endpoint;
    endpoint.price_in = 0.001;
    endpoint.price_out = 0.002;

    TokenLedger ledger;
    SECTION("linear in the configured rate") {
        ledger.add("x", 1000, 0);
        endpoint.price_out = 0.0;
        CHECK_THAT(estimate_cost(ledger, endpoint), WithinAbs(0.001, 1e-12));
    }
    SECTION("zero ledger costs nothing") {
        CHECK(estimate_cost(ledger, endpoint) == 0.0);
    }
    SECTION("input and output priced separately") {
        ledger.add("x", 2000, 500);
        endpoint.price_in = 0.001;
        endpoint.price_out = 0.002;
        CHECK_THAT(estimate_cost(ledger, endpoint), WithinAbs(0.003, 1e-12));
    }
}

TEST_CASE("mock answer generation") {
    MockBackend backend;
    PromptTemplates templates;

    auto r = generate_answer("q", {"a", "b"}, backend, templates);
    CHECK(r.answer == "q|a|b");
    CHECK_FALSE(r.no_context);
    CHECK(r.usage.input > 0);

    auto empty = generate_answer("q", {}, backend, templates);
    CHECK(empty.answer == "q|");
    CHECK(empty.no_context);

    // Determinism.
    auto again = generate_answer("q", {"a", "b"}, backend, templates);
    CHECK(again.answer == r.answer);
    CHECK(again.usage.input == r.usage.input);
}

TEST_CASE("mock judge scoring") {
    PromptTemplates templates;

    SECTION("keyword rule without ground truth") {
        MockBackend backend("golden phrase");
        CHECK(judge_utility("q", "this contains the Golden Phrase here", std::nullopt, {},
                            backend, templates) == 1.0);
        CHECK(judge_utility("q", "nothing relevant at all", std::nullopt, {}, backend,
                            templates) == 0.0);
    }

    SECTION("fact overlap against the ground truth") {
        MockBackend backend;
        const std::string truth = "Cats purr. Dogs bark. Fish swim. Birds sing.";
        double score = judge_utility("q", "I know that cats purr and dogs bark and fish swim",
                                     truth, {}, backend, templates);
        CHECK_THAT(score, WithinAbs(0.75, 1e-9));
    }

    SECTION("empty answer is rejected") {
        MockBackend backend;
        CHECK_THROWS_AS(judge_utility("q", "", std::nullopt, {}, backend, templates), DataError);
    }
}

TEST_CASE("ground truth appears in the prompt only when provided") {
    PromptTemplates templates;
    const std::string truth = "SECRET";
    auto with =
        templates.render_judge({{"query", "q"}, {"answer", "a"}, {"sources", "s"}}, &truth);
    auto without =
        templates.render_judge({{"query", "q"}, {"answer", "a"}, {"sources", "s"}}, nullptr);
    CHECK(with.find("SECRET") != std::string::npos);
    CHECK(without.find("SECRET") == std::string::npos);
    CHECK(without.find("Reference answer") == std::string::npos);
}

TEST_CASE("judge utility oracle over the mock backend") {
    SourceList sources = {{"s1", "", "cats purr"}, {"s2", "", "dogs bark"}};
    auto backend = std::make_shared<MockBackend>();
    auto ledger = std::make_shared<TokenLedger>();

    JudgeOracleOptions opts;
    opts.ground_truth = "Cats purr. Dogs bark.";
    JudgeUtilityOracle oracle("pets", sources, backend, PromptTemplates{}, ledger, opts);

    // Full coalition: the concatenated answer covers both facts.
    CHECK(oracle.evaluate(Coalition::full(2)) == 1.0);
    // Single source covers one of two facts.
    CHECK(oracle.evaluate(Coalition({0})) == 0.5);
    // Empty coalition under the judge policy still scores (answer "pets|").
    CHECK(oracle.evaluate(Coalition{}) == 0.0);
    CHECK(oracle.call_count() == 3);
    CHECK(ledger->by_stage().at(stage::kGenerate).calls == 3);
    CHECK(ledger->by_stage().at(stage::kJudge).calls == 3);
    CHECK(oracle.token_usage().input == ledger->tokens_in());

    JudgeOracleOptions zero_opts = opts;
    zero_opts.empty_policy = EmptyCoalitionPolicy::ConstantZero;
    JudgeUtilityOracle zero_oracle("pets", sources, backend, PromptTemplates{},
                                   std::make_shared<TokenLedger>(), zero_opts);
    CHECK(zero_oracle.evaluate(Coalition{}) == 0.0);
    CHECK(zero_oracle.token_usage().input == 0);  // no backend call for U({})
}

TEST_CASE("coalition presentation order is shuffled but deterministic") {
    SourceList sources;
    for (int i = 0; i < 6; ++i) {
        sources.push_back({"s" + std::to_string(i), "", "text " + std::to_string(i)});
    }
    auto run_once = [&](std::uint64_t seed) {
        auto backend = std::make_shared<MockBackend>();
        auto ledger = std::make_shared<TokenLedger>();
        JudgeOracleOptions opts;
        opts.shuffle_seed = seed;
        opts.ground_truth = "text 0.";
        JudgeUtilityOracle oracle("q", sources, backend, PromptTemplates{}, ledger, opts);
        double score = oracle.evaluate(Coalition::full(6));
        return std::pair<double, long long>(score, ledger->tokens_in());
    };
    auto a = run_once(1);
    auto b = run_once(1);
    CHECK(a == b);  // same seed, identical score and prompt tokens
    auto c = run_once(2);
    CHECK(a.first == c.first);  // mock judge is order-insensitive
}

TEST_CASE("record then replay round-trips") {
    namespace fs = std::filesystem;
    const auto path = fs::temp_directory_path() / "transcript_roundtrip.jsonl";
    fs::remove(path);

    PromptTemplates templates;
    {
        auto recorder = std::make_shared<RecordingBackend>(std::make_shared<MockBackend>(),
                                                           path.string());
        auto r = generate_answer("q", {"alpha", "beta"}, *recorder, templates);
        CHECK(r.answer == "q|alpha|beta");
    }

    ReplayBackend replay(path.string());
    auto replayed = generate_answer("q", {"alpha", "beta"}, replay, templates);
    CHECK(replayed.answer == "q|alpha|beta");

    // A prompt that was never recorded is an error, not a fallback.
    CHECK_THROWS_AS(generate_answer("other query", {"alpha"}, replay, templates), OracleError);
    fs::remove(path);
}

namespace {

// Runs an httplib server for the scope of one test section.
class ScopedServer {
public:
    explicit ScopedServer(const std::function<void(httplib::Server&)>& setup) {
        setup(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        while (!server_.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }

    ~ScopedServer() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

EndpointConfig test_endpoint(const std::string& base_url) {
    setenv("MAXSHAPLEY_TEST_KEY", "test-key-123", 1);
    EndpointConfig cfg;
    cfg.base_url = base_url;
    cfg.model_name = "test-model";
    cfg.api_key_env = "MAXSHAPLEY_TEST_KEY";
    cfg.max_retries = 2;
    cfg.retry_backoff = std::chrono::milliseconds(5);
    return cfg;
}

}  // namespace

TEST_CASE("http backend speaks the openai chat shape") {
    ScopedServer server([](httplib::Server& s) {
        s.Post("/v1/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
            auto body = nlohmann::json::parse(req.body);
            REQUIRE(body.at("temperature").get<double>() == 0.0);
            REQUIRE(body.at("model").get<std::string>() == "test-model");
            REQUIRE(req.get_header_value("Authorization") == "Bearer test-key-123");
            nlohmann::json reply = {
                {"choices", {{{"message", {{"content", "0.8"}}}}}},
                {"usage", {{"prompt_tokens", 42}, {"completion_tokens", 3}}},
            };
            res.set_content(reply.dump(), "application/json");
        });
    });

    HttpChatBackend backend(test_endpoint(server.base_url()));
    auto res = backend.complete({"judge_utility", "prompt text", {}});
    CHECK(res.completion == "0.8");
    CHECK(res.tokens_in == 42);
    CHECK(res.tokens_out == 3);
}

TEST_CASE("http backend speaks the anthropic messages shape") {
    ScopedServer server([](httplib::Server& s) {
        s.Post("/v1/messages", [](const httplib::Request& req, httplib::Response& res) {
            auto body = nlohmann::json::parse(req.body);
            REQUIRE(body.contains("max_tokens"));
            REQUIRE(req.get_header_value("x-api-key") == "test-key-123");
            REQUIRE(!req.get_header_value("anthropic-version").empty());
            nlohmann::json reply = {
                {"content", {{{"type", "text"}, {"text", "Score: 0.6"}}}},
                {"usage", {{"input_tokens", 17}, {"output_tokens", 4}}},
            };
            res.set_content(reply.dump(), "application/json");
        });
    });

    auto cfg = test_endpoint(server.base_url());
    cfg.shape = ApiShape::AnthropicMessages;
    HttpChatBackend backend(cfg);
    auto res = backend.complete({"judge_utility", "prompt text", {}});
    CHECK(res.completion == "Score: 0.6");
    CHECK(res.tokens_in == 17);
    CHECK(res.tokens_out == 4);
}

TEST_CASE("http backend requires the key in the environment") {
    auto cfg = test_endpoint("http://127.0.0.1:9");
    cfg.api_key_env = "MAXSHAPLEY_UNSET_KEY_VAR";
    unsetenv("MAXSHAPLEY_UNSET_KEY_VAR");
    HttpChatBackend backend(cfg);
    CHECK_THROWS_WITH(backend.complete({"judge_utility", "p", {}}),
                      Catch::Matchers::ContainsSubstring("MAXSHAPLEY_UNSET_KEY_VAR"));
}

TEST_CASE("5xx responses are retried before failing") {
    std::atomic<int> hits{0};
    ScopedServer server([&](httplib::Server& s) {
        s.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.status = 500;
        });
    });

    auto cfg = test_endpoint(server.base_url());
    cfg.max_retries = 3;
    cfg.retry_backoff = std::chrono::milliseconds(1);
    HttpChatBackend backend(cfg);
    CHECK_THROWS_WITH(backend.complete({"judge_utility", "p", {}}),
                      Catch::Matchers::ContainsSubstring("after 3 attempts"));
    CHECK(hits == 3);
}

TEST_CASE("transport failure surfaces as an endpoint error after max_retries") {
    auto cfg = test_endpoint("http://127.0.0.1:9");  // nothing listens here
    cfg.max_retries = 3;
    cfg.retry_backoff = std::chrono::milliseconds(1);
    HttpChatBackend backend(cfg);
    CHECK_THROWS_WITH(backend.complete({"judge_utility", "p", {}}),
                      Catch::Matchers::ContainsSubstring("after 3 attempts"));
}

TEST_CASE("forced timeout exhausts retries") {
    ScopedServer server([](httplib::Server& s) {
        s.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
            std::this_thread::sleep_for(std::chrono::milliseconds(300));
            res.set_content("{}", "application/json");
        });
    });

    auto cfg = test_endpoint(server.base_url());
    cfg.request_timeout = std::chrono::milliseconds(50);
    cfg.max_retries = 2;
    cfg.retry_backoff = std::chrono::milliseconds(1);
    HttpChatBackend backend(cfg);
    CHECK_THROWS_WITH(backend.complete({"judge_utility", "p", {}}),
                      Catch::Matchers::ContainsSubstring("after 2 attempts"));
}

TEST_CASE("4xx responses fail immediately with the body attached") {
    std::atomic<int> hits{0};
    ScopedServer server([&](httplib::Server& s) {
        s.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.status = 401;
            res.set_content("{\"error\": \"bad key\"}", "application/json");
        });
    });

    HttpChatBackend backend(test_endpoint(server.base_url()));
    CHECK_THROWS_WITH(backend.complete({"judge_utility", "p", {}}),
                      Catch::Matchers::ContainsSubstring("HTTP 401"));
    CHECK(hits == 1);
}
