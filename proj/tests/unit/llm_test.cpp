#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <random>
#include <thread>

#include "treeqa/error.hpp"
#include "treeqa/llm/cost.hpp"
#include "treeqa/llm/gateway.hpp"
#include "treeqa/llm/prompts.hpp"
#include "treeqa/llm/provider.hpp"
#include "treeqa/text.hpp"

using namespace treeqa;
using namespace treeqa::llm;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected treeqa::Error";
    return ErrorKind::Io;
}

struct StubServer {
    httplib::Server server;
    std::thread worker;
    int port = 0;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        worker = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions"; }
    ~StubServer() {
        server.stop();
        if (worker.joinable()) worker.join();
    }
};

std::string chat_payload(const std::string& content, bool with_usage = true) {
    nlohmann::json j{{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}}}};
    if (with_usage) j["usage"] = {{"prompt_tokens", 11}, {"completion_tokens", 7}};
    return j.dump();
}

HttpProviderConfig config_for(std::string url, std::string key = "") {
    HttpProviderConfig cfg;
    cfg.url = std::move(url);
    cfg.api_key = std::move(key);
    return cfg;
}

}  // namespace

TEST(Prompts, FagMultihopCarriesFinalContract) {
    const auto p = render_prompt(TemplateId::fag_multihop, {{"question", "Q?"}, {"documents", "D"}});
    EXPECT_NE(p.find("FINAL:(BE CONCISE, ONLY a FEW phrases)"), std::string::npos);
    EXPECT_NE(p.find("Answer the following question: Q? ,"), std::string::npos);
    EXPECT_NE(p.find("with following documents: D."), std::string::npos);
    EXPECT_NE(p.find("let's think step by step"), std::string::npos);
}

TEST(Prompts, BodiesCarryVerbatimInstructions) {
    EXPECT_NE(template_body(TemplateId::qg_ambiguous).find("You're a disambiguation expert analyzing"), std::string::npos);
    EXPECT_NE(template_body(TemplateId::qg_ambiguous).find("strictly FOLLOW the format: response: question1; question2;"),
              std::string::npos);
    EXPECT_NE(template_body(TemplateId::sag).find("Response all the answers in a short paragraph (as specific as possible)."),
              std::string::npos);
    EXPECT_NE(template_body(TemplateId::sag).find("Relevant Document: {{context}}"), std::string::npos);
    EXPECT_NE(template_body(TemplateId::fag_ambiguous).find("provide a long-form answer including all correct answers"),
              std::string::npos);
    EXPECT_NE(template_body(TemplateId::fag_ambiguous).find("FINAL(Step 2):"), std::string::npos);
    EXPECT_NE(template_body(TemplateId::qg_multihop).find("response: query1; query2;"), std::string::npos);
}

TEST(Prompts, PlaceholderSets) {
    using V = std::vector<std::string>;
    EXPECT_EQ(placeholders(template_body(TemplateId::qg_multihop)), (V{"phrase", "question", "context"}));
    EXPECT_EQ(placeholders(template_body(TemplateId::qg_ambiguous)), (V{"phrase", "question", "context"}));
    EXPECT_EQ(placeholders(template_body(TemplateId::sag)), (V{"question", "context"}));
    EXPECT_EQ(placeholders(template_body(TemplateId::fag_multihop)), (V{"question", "documents"}));
    EXPECT_EQ(placeholders(template_body(TemplateId::fag_ambiguous)), (V{"question", "documents"}));
}

TEST(Prompts, ZeroPlaceholdersUnchanged) {
    EXPECT_EQ(render_template("plain { text } here", {{"unused", "x"}}), "plain { text } here");
}

TEST(Prompts, MissingBinding) {
    EXPECT_EQ(kind_of([] { render_prompt(TemplateId::sag, {{"question", "q"}}); }), ErrorKind::MissingBinding);
}

TEST(Prompts, ValuesAreNotReexpanded) {
    EXPECT_EQ(render_template("[{{a}}|{{b}}|{{a}}]", {{"a", "{{b}}"}, {"b", "x"}}), "[{{b}}|x|{{b}}]");
}

TEST(Prompts, TemplateIdsRoundTrip) {
    for (auto id : {TemplateId::qg_multihop, TemplateId::qg_ambiguous, TemplateId::sag, TemplateId::fag_multihop,
                    TemplateId::fag_ambiguous})
        EXPECT_EQ(parse_template_id(to_string(id)), id);
    EXPECT_EQ(kind_of([] { parse_template_id("nope"); }), ErrorKind::Config);
}

TEST(ParseFinal, ShortForm) {
    const auto r = parse_final("Explanations: Paris is the capital.\nFINAL: Paris");
    EXPECT_EQ(r.text, "Paris");
    EXPECT_FALSE(r.format_violation);
}

TEST(ParseFinal, StepTwoMarker) {
    const auto r = parse_final("Explanations (Step 2): ...\nFINAL(Step 2): long answer…");
    EXPECT_EQ(r.text, "long answer…");
    EXPECT_FALSE(r.format_violation);
    EXPECT_EQ(parse_final("final ( step 2 ) :  x ").text, "x");
}

TEST(ParseFinal, LastMarkerWins) {
    EXPECT_EQ(parse_final("Final: draft\nmore thinking\nfinal: real one").text, "real one");
}

TEST(ParseFinal, NoMarkerFlagged) {
    const auto r = parse_final("  no marker here \n");
    EXPECT_EQ(r.text, "no marker here");
    EXPECT_TRUE(r.format_violation);
}

TEST(ParseFinal, EmptyTailFallsBack) {
    const auto r = parse_final("Explanations: it is Rome\nFINAL:  ");
    EXPECT_EQ(r.text, "Explanations: it is Rome\nFINAL:");
    EXPECT_TRUE(r.format_violation);
}

TEST(ParseFinal, TotalOnRandomText) {
    std::mt19937_64 rng(3);
    const std::string alphabet = "FINALfinal():Step2 \n\tabc";
    for (int i = 0; i < 2000; ++i) {
        std::string s;
        const auto len = rng() % 40;
        for (std::size_t j = 0; j < len; ++j) s += alphabet[rng() % alphabet.size()];
        const auto r = parse_final(s);
        if (!s.empty()) {
            EXPECT_FALSE(r.text.empty()) << '"' << s << '"';
        }
    }
}

TEST(Mock, ReplaysByPromptHash) {
    const auto dir = std::filesystem::temp_directory_path() / "treeqa_llm_test";
    std::filesystem::create_directories(dir);
    const auto prompt = render_prompt(TemplateId::fag_multihop, {{"question", "Q?"}, {"documents", ""}});
    nlohmann::json hash_row{{"key", text::sha256_hex(prompt)}, {"response_text", "FINAL: yes"}, {"prompt_tokens", 40},
                            {"completion_tokens", 3}};
    nlohmann::json fallback_row{{"key", "sag|some phrase"}, {"response_text", "evidence text"}};
    text::write_file(dir / "t.jsonl", hash_row.dump() + "\n\n" + fallback_row.dump() + "\n");

    auto mock = MockProvider::from_file(dir / "t.jsonl");
    EXPECT_EQ(mock.size(), 2u);
    CompletionRequest req{prompt, {}, "fag_multihop", "Q?"};
    const auto c = mock.complete(req);
    EXPECT_EQ(c.text, "FINAL: yes");
    EXPECT_EQ(c.usage.prompt_tokens, 40u);
    EXPECT_EQ(c.usage.completion_tokens, 3u);
    EXPECT_FALSE(c.usage.estimated);
    EXPECT_EQ(mock.complete(req).text, c.text);

    const auto f = mock.complete({"any prompt with volatile docs", {}, "sag", "some phrase"});
    EXPECT_EQ(f.text, "evidence text");
    EXPECT_TRUE(f.usage.estimated);
    EXPECT_EQ(f.usage.completion_tokens, 3u);  // ceil(2 * 1.3)
    EXPECT_EQ(f.usage.prompt_tokens, 7u);      // ceil(5 * 1.3)

    EXPECT_EQ(kind_of([&] { mock.complete({"unknown", {}, "sag", "other"}); }), ErrorKind::TranscriptMiss);
}

TEST(Mock, BadTranscriptLine) {
    const auto dir = std::filesystem::temp_directory_path() / "treeqa_llm_test";
    std::filesystem::create_directories(dir);
    text::write_file(dir / "bad.jsonl", "{\"key\":\"a\",\"response_text\":\"x\"}\n{\"key\": 1}\n");
    try {
        MockProvider::from_file(dir / "bad.jsonl");
        FAIL();
    } catch (const LineError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.kind(), ErrorKind::SchemaMismatch);
    }
}

TEST(HttpProvider, StandardPayload) {
    StubServer stub;
    std::string seen_auth;
    nlohmann::json seen_body;
    stub.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        seen_body = nlohmann::json::parse(req.body);
        res.set_content(chat_payload("FINAL: Paris"), "application/json");
    });
    stub.start();
    HttpChatProvider provider(config_for(stub.url(), "sk-test"));
    CompletionRequest req{"What is the capital of France?", {"m-1", 0.0, 64}, "fag_multihop", ""};
    const auto c = provider.complete(req);
    EXPECT_EQ(c.text, "FINAL: Paris");
    EXPECT_EQ(c.usage.prompt_tokens, 11u);
    EXPECT_EQ(c.usage.completion_tokens, 7u);
    EXPECT_FALSE(c.usage.estimated);
    EXPECT_EQ(c.model, "m-1");
    EXPECT_EQ(seen_auth, "Bearer sk-test");
    EXPECT_EQ(seen_body["model"], "m-1");
    EXPECT_EQ(seen_body["messages"][0]["role"], "user");
    EXPECT_EQ(seen_body["messages"][0]["content"], req.prompt);
    EXPECT_EQ(seen_body["max_tokens"], 64);
    EXPECT_EQ(seen_body["temperature"], 0.0);
}

TEST(HttpProvider, MissingUsageIsEstimated) {
    StubServer stub;
    stub.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(chat_payload("one two three", false), "application/json");
    });
    stub.start();
    HttpChatProvider provider(config_for(stub.url()));
    const auto c = provider.complete({"a b", {}, "", ""});
    EXPECT_TRUE(c.usage.estimated);
    EXPECT_EQ(c.usage.completion_tokens, 4u);
    EXPECT_EQ(c.usage.prompt_tokens, 3u);
}

TEST(HttpProvider, BadRequestIsNotRetried) {
    StubServer stub;
    std::atomic<int> hits{0};
    stub.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 400;
        res.set_content("{\"error\":\"bad\"}", "application/json");
    });
    stub.start();
    std::vector<std::chrono::milliseconds> sleeps;
    HttpChatProvider provider(config_for(stub.url()), [&](auto d) { sleeps.push_back(d); });
    EXPECT_EQ(kind_of([&] { provider.complete({"x", {}, "", ""}); }), ErrorKind::ProviderError);
    EXPECT_EQ(hits.load(), 1);
    EXPECT_TRUE(sleeps.empty());
}

TEST(HttpProvider, TransientErrorsBackOffExponentially) {
    StubServer stub;
    std::atomic<int> hits{0};
    stub.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        if (++hits < 3) {
            res.status = hits == 1 ? 503 : 429;
            return;
        }
        res.set_content(chat_payload("ok"), "application/json");
    });
    stub.start();
    std::vector<std::chrono::milliseconds> sleeps;
    auto cfg = config_for(stub.url());
    cfg.retry.initial_backoff = std::chrono::milliseconds(100);
    HttpChatProvider provider(cfg, [&](auto d) { sleeps.push_back(d); });
    EXPECT_EQ(provider.complete({"x", {}, "", ""}).text, "ok");
    EXPECT_EQ(provider.attempts_made(), 3);
    EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(100), std::chrono::milliseconds(200)}));
}

TEST(HttpProvider, RetriesExhausted) {
    StubServer stub;
    std::atomic<int> hits{0};
    stub.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 502;
    });
    stub.start();
    auto cfg = config_for(stub.url());
    cfg.retry.max_attempts = 3;
    cfg.retry.initial_backoff = std::chrono::milliseconds(1000);
    cfg.retry.max_backoff = std::chrono::milliseconds(1500);
    std::vector<std::chrono::milliseconds> sleeps;
    HttpChatProvider provider(cfg, [&](auto d) { sleeps.push_back(d); });
    EXPECT_EQ(kind_of([&] { provider.complete({"x", {}, "", ""}); }), ErrorKind::RetriesExhausted);
    EXPECT_EQ(hits.load(), 3);
    EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(1000), std::chrono::milliseconds(1500)}));
}

TEST(HttpProvider, UnreachableEndpoint) {
    int port;
    {
        StubServer probe;
        probe.start();
        port = probe.port;
    }
    auto cfg = config_for("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions");
    cfg.timeout = std::chrono::milliseconds(200);
    cfg.retry.max_attempts = 2;
    HttpChatProvider provider(cfg, [](auto) {});
    EXPECT_EQ(kind_of([&] { provider.complete({"x", {}, "", ""}); }), ErrorKind::RetriesExhausted);
}

TEST(Recording, WritesReplayableTranscript) {
    auto mock = std::make_shared<MockProvider>();
    mock->add(MockProvider::fallback_key("sag", "a"), {"answer", 5, 2});
    const auto path = std::filesystem::temp_directory_path() / "treeqa_llm_recording.jsonl";
    std::filesystem::remove(path);
    RecordingProvider rec(mock, path);
    rec.complete({"prompt one", {}, "sag", "a"});
    auto replay = MockProvider::from_file(path);
    const auto c = replay.complete({"prompt one", {}, "", ""});
    EXPECT_EQ(c.text, "answer");
    EXPECT_EQ(c.usage.prompt_tokens, 5u);
}

namespace {
class SlowEcho : public Provider {
public:
    std::string id() const override { return "slow"; }
    Completion complete(const CompletionRequest& r) override {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        Completion c;
        c.text = r.prompt;
        c.model = r.params.model;
        c.usage = {10, 2, false};
        return c;
    }
};
}  // namespace

TEST(Gateway, BoundsInFlightRequestsAndLedgersEveryCall) {
    LlmGateway gw(std::make_shared<SlowEcho>(), {}, 3);
    std::vector<std::thread> threads;
    for (int t = 0; t < 12; ++t) {
        threads.emplace_back([&gw, t] {
            for (int i = 0; i < 4; ++i) gw.complete({t % 2 ? "QG" : "SAG", "toy", "treerare-dt", "q"}, {"p", {}, "", ""});
        });
    }
    for (auto& th : threads) th.join();
    EXPECT_LE(gw.peak_in_flight(), 3);
    EXPECT_GE(gw.peak_in_flight(), 1);
    EXPECT_EQ(gw.ledger().size(), 48u);
}

TEST(Gateway, RendersAndRecordsStage) {
    auto mock = std::make_shared<MockProvider>();
    mock->add(MockProvider::fallback_key("sag", "phrase"), {"E", 3, 1});
    LlmGateway gw(mock, {"m", 0.0, 16});
    const auto c = gw.complete({"SAG", "d", "m1", "q1"}, TemplateId::sag, {{"question", "q"}, {"context", "c"}}, "phrase");
    EXPECT_EQ(c.text, "E");
    const auto entries = gw.ledger().snapshot();
    ASSERT_EQ(entries.size(), 1u);
    EXPECT_EQ(entries[0].stage, "SAG");
    EXPECT_EQ(entries[0].model, "m");
    EXPECT_EQ(entries[0].prompt_tokens, 3u);
    EXPECT_EQ(kind_of([&] { gw.complete({}, TemplateId::sag, {{"question", "q"}}, ""); }), ErrorKind::MissingBinding);
    EXPECT_EQ(kind_of([&] { LlmGateway(mock, {}, 0); }), ErrorKind::Config);
}

TEST(Cost, EmptyLedgerIsFree) {
    const auto r = cost_report({}, PricingTable{});
    EXPECT_EQ(r.total.usd, 0.0);
    EXPECT_EQ(r.total.calls, 0u);
}

TEST(Cost, TwoThousandTokenCalls) {
    PricingTable pricing;
    pricing.set("gpt-4o-mini", {0.15, 0.60});
    std::vector<LedgerEntry> ledger(2, LedgerEntry{"FAG", "toy", "treerare-dt", "q", "gpt-4o-mini", 1000, 1000, false});
    const auto r = cost_report(ledger, pricing);
    EXPECT_NEAR(r.total.usd, 1.50, 1e-12);
    EXPECT_EQ(r.total.total_tokens(), 4000u);
}

TEST(Cost, UnpricedModel) {
    PricingTable pricing;
    pricing.set("a", {1, 1});
    EXPECT_EQ(kind_of([&] { cost_report({LedgerEntry{"QG", "d", "m", "q", "b", 1, 1, false}}, pricing); }),
              ErrorKind::UnpricedModel);
}

TEST(Cost, PricingFileValidation) {
    const auto p = PricingTable::from_json(nlohmann::json::parse(R"({"m": {"input_usd_per_1k": 0.5, "output_usd_per_1k": 1.5}})"));
    EXPECT_EQ(p.rate("m").output_usd_per_1k, 1.5);
    EXPECT_EQ(kind_of([] { PricingTable::from_json(nlohmann::json::parse(R"({"m": {"input_usd_per_1k": -1, "output_usd_per_1k": 1}})")); }),
              ErrorKind::Config);
}

TEST(Cost, StageSumsEqualTotal) {
    std::mt19937_64 rng(11);
    PricingTable pricing;
    pricing.set("x", {0.15, 0.60});
    pricing.set("y", {0.59, 0.79});
    const std::vector<std::string> stages{"QG", "SAG", "FAG"};
    std::vector<LedgerEntry> ledger;
    for (int i = 0; i < 100; ++i) {
        ledger.push_back({stages[rng() % 3], i % 2 ? "hotpotqa" : "musique", "treerare-dt", "q" + std::to_string(i),
                          rng() % 2 ? "x" : "y", rng() % 3000, rng() % 500, false});
    }
    const auto r = cost_report(ledger, pricing);
    CostBucket sum;
    for (const auto& [_, b] : r.by_stage) {
        sum.calls += b.calls;
        sum.prompt_tokens += b.prompt_tokens;
        sum.completion_tokens += b.completion_tokens;
        sum.usd += b.usd;
    }
    EXPECT_EQ(sum.calls, 100u);
    EXPECT_EQ(sum.prompt_tokens, r.total.prompt_tokens);
    EXPECT_EQ(sum.completion_tokens, r.total.completion_tokens);
    EXPECT_NEAR(sum.usd, r.total.usd, 1e-9);
    const auto csv = r.to_csv();
    EXPECT_EQ(csv.rfind("dataset,method,stage,calls,prompt_tokens,completion_tokens,usd\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 3);
}
