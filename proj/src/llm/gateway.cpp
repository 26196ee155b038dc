#include "treeqa/llm/gateway.hpp"

#include <regex>

#include "treeqa/error.hpp"
#include "treeqa/text.hpp"

namespace treeqa::llm {

void UsageLedger::append(LedgerEntry entry) {
    std::lock_guard lock(mu_);
    entries_.push_back(std::move(entry));
}

std::vector<LedgerEntry> UsageLedger::snapshot() const {
    std::lock_guard lock(mu_);
    return entries_;
}

std::size_t UsageLedger::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

namespace {
int checked_concurrency(int n) {
    if (n < 1 || n > LlmGateway::kMaxConcurrency)
        throw Error(ErrorKind::Config, "concurrency must be in [1, " + std::to_string(LlmGateway::kMaxConcurrency) + "]");
    return n;
}
}  // namespace

LlmGateway::LlmGateway(std::shared_ptr<Provider> provider, CompletionParams defaults, int concurrency)
    : provider_(std::move(provider)), defaults_(std::move(defaults)), slots_(checked_concurrency(concurrency)) {
    if (!provider_) throw Error(ErrorKind::Config, "gateway needs a provider");
}

Completion LlmGateway::complete(const CallContext& ctx, TemplateId id, const Bindings& bindings, std::string anchor) {
    CompletionRequest req;
    req.prompt = render_prompt(id, bindings);
    req.params = defaults_;
    req.template_id = std::string(to_string(id));
    req.anchor = std::move(anchor);
    return complete(ctx, std::move(req));
}

Completion LlmGateway::complete(const CallContext& ctx, CompletionRequest request) {
    slots_.acquire();
    const int now = ++in_flight_;
    int seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
    Completion c;
    try {
        c = provider_->complete(request);
    } catch (...) {
        --in_flight_;
        slots_.release();
        throw;
    }
    --in_flight_;
    slots_.release();

    ledger_.append(LedgerEntry{ctx.stage, ctx.dataset, ctx.method, ctx.question_id, c.model, c.usage.prompt_tokens,
                               c.usage.completion_tokens, c.usage.estimated});
    return c;
}

FinalAnswer parse_final(std::string_view completion_text) {
    static const std::regex marker(R"(final\s*(\(\s*step\s*2\s*\))?\s*:)", std::regex::icase);
    const std::string s(completion_text);
    std::size_t after = std::string::npos;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), marker); it != std::sregex_iterator(); ++it)
        after = static_cast<std::size_t>(it->position(0) + it->length(0));

    if (after != std::string::npos) {
        const auto tail = text::trim(std::string_view(s).substr(after));
        if (!tail.empty()) return {std::string(tail), false};
    }
    const auto whole = text::trim(s);
    return {whole.empty() ? s : std::string(whole), true};
}

}  // namespace treeqa::llm
