#include "treeqa/llm/provider.hpp"

#include <httplib.h>

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <thread>

#include "treeqa/error.hpp"
#include "treeqa/net.hpp"
#include "treeqa/text.hpp"

namespace treeqa::llm {

std::uint64_t estimate_tokens(std::string_view text) {
    const auto words = text::split_whitespace(text).size();
    return static_cast<std::uint64_t>(std::ceil(static_cast<double>(words) * 1.3));
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::optional<std::uint64_t> optional_count(const nlohmann::json& j, const char* field) {
    if (!j.contains(field) || j.at(field).is_null()) return std::nullopt;
    const auto v = j.at(field).get<std::int64_t>();
    if (v < 0) throw Error(ErrorKind::SchemaMismatch, std::string(field) + " must be >= 0");
    return static_cast<std::uint64_t>(v);
}

void fill_usage(Usage& usage, std::optional<std::uint64_t> prompt, std::optional<std::uint64_t> completion,
                std::string_view prompt_text, std::string_view completion_text) {
    usage.prompt_tokens = prompt ? *prompt : estimate_tokens(prompt_text);
    usage.completion_tokens = completion ? *completion : estimate_tokens(completion_text);
    usage.estimated = !prompt || !completion;
}

bool transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

MockProvider MockProvider::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open transcript " + path.string());
    MockProvider mock;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            Entry e;
            e.response_text = j.at("response_text").get<std::string>();
            e.prompt_tokens = optional_count(j, "prompt_tokens");
            e.completion_tokens = optional_count(j, "completion_tokens");
            mock.add(j.at("key").get<std::string>(), std::move(e));
        } catch (const nlohmann::json::exception& e) {
            throw LineError(ErrorKind::SchemaMismatch, line_no, std::string("transcript row: ") + e.what());
        } catch (const Error& e) {
            throw LineError(e.kind(), line_no, e.what());
        }
    }
    return mock;
}

void MockProvider::add(std::string key, Entry entry) { entries_.insert_or_assign(std::move(key), std::move(entry)); }

std::string MockProvider::prompt_key(std::string_view prompt) { return text::sha256_hex(prompt); }

std::string MockProvider::fallback_key(std::string_view template_id, std::string_view anchor) {
    return std::string(template_id) + "|" + std::string(anchor);
}

Completion MockProvider::complete(const CompletionRequest& request) {
    auto it = entries_.find(prompt_key(request.prompt));
    if (it == entries_.end()) it = entries_.find(fallback_key(request.template_id, request.anchor));
    if (it == entries_.end())
        throw Error(ErrorKind::TranscriptMiss,
                    "no transcript entry for " + fallback_key(request.template_id, request.anchor));
    Completion c;
    c.text = it->second.response_text;
    fill_usage(c.usage, it->second.prompt_tokens, it->second.completion_tokens, request.prompt, c.text);
    c.provider = id();
    c.model = request.params.model;
    return c;
}

HttpChatProvider::HttpChatProvider(HttpProviderConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleep_(std::move(sleeper)) {
    const auto ep = net::parse_endpoint(config_.url, "/v1/chat/completions");
    base_ = ep.base;
    path_ = ep.path;
    if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (config_.retry.max_attempts < 1) throw Error(ErrorKind::Config, "retry.max_attempts must be >= 1");
}

Completion HttpChatProvider::complete(const CompletionRequest& request) {
    const nlohmann::json body{{"model", request.params.model},
                              {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
                              {"temperature", request.params.temperature},
                              {"max_tokens", request.params.max_tokens}};
    const auto payload = body.dump();
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto backoff = config_.retry.initial_backoff;
    std::string last_problem;
    const auto start = Clock::now();
    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
        last_attempts_ = attempt;
        if (attempt > 1) {
            sleep_(backoff);
            const auto next = std::chrono::milliseconds(
                static_cast<std::int64_t>(static_cast<double>(backoff.count()) * config_.retry.multiplier));
            backoff = std::min(next, config_.retry.max_backoff);
        }
        httplib::Client cli(base_);
        cli.set_connection_timeout(config_.timeout);
        cli.set_read_timeout(config_.timeout);
        cli.set_write_timeout(config_.timeout);
        auto res = cli.Post(path_, headers, payload, "application/json");
        if (!res) {
            last_problem = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_problem = "HTTP " + std::to_string(res->status);
            if (transient_status(res->status)) continue;
            throw Error(ErrorKind::ProviderError, last_problem + ": " + text::truncate_utf8(res->body, 300));
        }
        try {
            const auto j = nlohmann::json::parse(res->body);
            Completion c;
            const auto& content = j.at("choices").at(0).at("message").at("content");
            c.text = content.is_null() ? std::string() : content.get<std::string>();
            std::optional<std::uint64_t> prompt, completion;
            if (j.contains("usage") && j.at("usage").is_object()) {
                prompt = optional_count(j.at("usage"), "prompt_tokens");
                completion = optional_count(j.at("usage"), "completion_tokens");
            }
            fill_usage(c.usage, prompt, completion, request.prompt, c.text);
            c.provider = id();
            // Pricing is keyed by the requested id, not the server's echo.
            c.model = request.params.model;
            c.latency_ms = elapsed_ms(start);
            return c;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::ProviderError, std::string("malformed chat completion: ") + e.what());
        }
    }
    throw Error(ErrorKind::RetriesExhausted,
                "gave up after " + std::to_string(config_.retry.max_attempts) + " attempts; last: " + last_problem);
}

RecordingProvider::RecordingProvider(std::shared_ptr<Provider> inner, std::filesystem::path transcript_path)
    : inner_(std::move(inner)), path_(std::move(transcript_path)) {}

Completion RecordingProvider::complete(const CompletionRequest& request) {
    auto c = inner_->complete(request);
    nlohmann::json row{{"key", MockProvider::prompt_key(request.prompt)},
                       {"response_text", c.text},
                       {"prompt_tokens", c.usage.prompt_tokens},
                       {"completion_tokens", c.usage.completion_tokens}};
    std::lock_guard lock(mu_);
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error(ErrorKind::Io, "cannot append to transcript " + path_.string());
    out << row.dump() << '\n';
    return c;
}

}  // namespace treeqa::llm
