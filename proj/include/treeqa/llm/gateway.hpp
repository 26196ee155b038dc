#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <vector>

#include "treeqa/llm/prompts.hpp"
#include "treeqa/llm/provider.hpp"

namespace treeqa::llm {

// Who asked: stage is one of QG, SAG, FAG (QA for single-shot baselines).
struct CallContext {
    std::string stage;
    std::string dataset;
    std::string method;
    std::string question_id;
};

struct LedgerEntry {
    std::string stage;
    std::string dataset;
    std::string method;
    std::string question_id;
    std::string model;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    bool estimated = false;
};

class UsageLedger {
public:
    void append(LedgerEntry entry);
    std::vector<LedgerEntry> snapshot() const;
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::vector<LedgerEntry> entries_;
};

class LlmGateway {
public:
    static constexpr int kMaxConcurrency = 256;

    LlmGateway(std::shared_ptr<Provider> provider, CompletionParams defaults = {}, int concurrency = 4);

    Completion complete(const CallContext& ctx, TemplateId id, const Bindings& bindings, std::string anchor);
    Completion complete(const CallContext& ctx, CompletionRequest request);

    const CompletionParams& defaults() const { return defaults_; }
    UsageLedger& ledger() { return ledger_; }
    int peak_in_flight() const { return peak_.load(); }

private:
    std::shared_ptr<Provider> provider_;
    CompletionParams defaults_;
    std::counting_semaphore<kMaxConcurrency> slots_;
    std::atomic<int> in_flight_{0};
    std::atomic<int> peak_{0};
    UsageLedger ledger_;
};

struct FinalAnswer {
    std::string text;
    bool format_violation = false;
};

// Text after the last "FINAL:" marker (case-insensitive, "FINAL(Step 2):"
// accepted). Without a usable marker the whole text is returned, trimmed,
// and flagged.
FinalAnswer parse_final(std::string_view completion_text);

}  // namespace treeqa::llm
