#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace treeqa::llm {

struct Usage {
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    bool estimated = false;
};

struct CompletionParams {
    std::string model = "gpt-4o-mini";
    double temperature = 0.0;
    int max_tokens = 1024;
};

struct CompletionRequest {
    std::string prompt;
    CompletionParams params;
    // Used only for transcript fallback keys.
    std::string template_id;
    std::string anchor;
};

struct Completion {
    std::string text;
    Usage usage;
    std::string provider;
    std::string model;
    double latency_ms = 0.0;
};

// Whitespace token count scaled by 1.3 and rounded up.
std::uint64_t estimate_tokens(std::string_view text);

class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string id() const = 0;
    virtual Completion complete(const CompletionRequest& request) = 0;
};

// Replays a JSON-lines transcript {key, response_text, prompt_tokens,
// completion_tokens}. The lookup key is the SHA-256 hex digest of the
// rendered prompt, falling back to "<template_id>|<anchor>".
class MockProvider : public Provider {
public:
    struct Entry {
        std::string response_text;
        std::optional<std::uint64_t> prompt_tokens;
        std::optional<std::uint64_t> completion_tokens;
    };

    MockProvider() = default;
    static MockProvider from_file(const std::filesystem::path& path);

    void add(std::string key, Entry entry);
    std::size_t size() const { return entries_.size(); }

    static std::string prompt_key(std::string_view prompt);
    static std::string fallback_key(std::string_view template_id, std::string_view anchor);

    std::string id() const override { return "mock"; }
    Completion complete(const CompletionRequest& request) override;

private:
    std::unordered_map<std::string, Entry> entries_;
};

struct RetryPolicy {
    int max_attempts = 4;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{8000};
};

struct HttpProviderConfig {
    std::string url = "http://127.0.0.1:8000/v1/chat/completions";
    std::string api_key;
    std::chrono::milliseconds timeout{60000};
    RetryPolicy retry;
};

// Chat-completion client for OpenAI-compatible endpoints. Connection
// failures, 408, 429 and 5xx are retried with exponential backoff; other
// non-200 statuses raise ProviderError at once.
class HttpChatProvider : public Provider {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    explicit HttpChatProvider(HttpProviderConfig config, Sleeper sleeper = {});

    std::string id() const override { return "http"; }
    Completion complete(const CompletionRequest& request) override;

    int attempts_made() const { return last_attempts_; }

private:
    HttpProviderConfig config_;
    std::string base_;
    std::string path_;
    Sleeper sleep_;
    std::atomic<int> last_attempts_{0};
};

// Forwards to another provider and records every exchange as a transcript
// line keyed by prompt hash, so a live run can be replayed by MockProvider.
class RecordingProvider : public Provider {
public:
    RecordingProvider(std::shared_ptr<Provider> inner, std::filesystem::path transcript_path);

    std::string id() const override { return inner_->id(); }
    Completion complete(const CompletionRequest& request) override;

private:
    std::shared_ptr<Provider> inner_;
    std::filesystem::path path_;
    std::mutex mu_;
};

}  // namespace treeqa::llm
