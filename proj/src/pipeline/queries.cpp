#include "treeqa/pipeline/queries.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <unordered_set>

#include "treeqa/text.hpp"

namespace treeqa::pipeline {

namespace {

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> words = {
        "a",     "an",    "the",   "of",    "in",    "on",    "at",    "to",    "for",   "from",  "by",
        "with",  "and",   "or",    "but",   "is",    "are",   "was",   "were",  "be",    "been",  "being",
        "do",    "does",  "did",   "has",   "have",  "had",   "what",  "which", "who",   "whom",  "whose",
        "when",  "where", "why",   "how",   "that",  "this",  "these", "those", "it",    "its",   "as",
        "s",     "into",  "about", "than",  "then",  "there", "their", "they",  "he",    "she",   "his",
        "her",   "him",   "them",  "any",   "some",  "all",   "also",  "not",   "no",    "can",   "could",
        "would", "should", "will", "shall", "may",   "might", "must",  "if",    "so",    "such", "both",
        "either", "neither", "other", "same", "most", "more", "many", "much", "name", "named", "called"};
    return words;
}

std::string strip_item(std::string_view raw) {
    std::string s(text::trim(raw));
    // "1." / "2)" / "- " / "* " list markers
    static const std::regex numbering(R"(^(\d+[.)]|[-*•])\s*)");
    s = std::regex_replace(s, numbering, "", std::regex_constants::format_first_only);
    s = std::string(text::trim(s));
    while (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
        s = std::string(text::trim(std::string_view(s).substr(1, s.size() - 2)));
    }
    return s;
}

}  // namespace

std::vector<std::string> parse_query_list(std::string_view completion_text, std::size_t limit) {
    static const std::regex marker(R"(response\s*:)", std::regex::icase);
    const std::string s(completion_text);
    std::size_t after = std::string::npos;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), marker); it != std::sregex_iterator(); ++it)
        after = static_cast<std::size_t>(it->position(0) + it->length(0));
    std::vector<std::string> out;
    if (after == std::string::npos) return out;

    std::string item;
    auto flush = [&] {
        auto cleaned = strip_item(item);
        item.clear();
        if (out.size() >= limit) return;
        if (index::tokenize(cleaned).empty()) return;
        out.push_back(std::move(cleaned));
    };
    for (std::size_t i = after; i < s.size(); ++i) {
        if (s[i] == ';' || s[i] == '\n') flush();
        else item += s[i];
    }
    flush();
    return out;
}

std::string query_key(std::string_view query) { return text::join(index::tokenize(query), " "); }

std::vector<std::string> content_tokens(std::string_view query) {
    std::vector<std::string> out;
    for (auto& t : index::tokenize(query)) {
        if (!stopwords().count(t)) out.push_back(std::move(t));
    }
    return out;
}

std::vector<std::string> select_queries(const std::vector<std::string>& candidates, std::size_t limit) {
    std::vector<std::size_t> pool;
    std::set<std::string> keys;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (keys.insert(query_key(candidates[i])).second) pool.push_back(i);
    }

    std::vector<std::string> selected;
    std::set<std::string> covered;
    while (selected.size() < limit && !pool.empty()) {
        std::size_t best = 0;
        std::size_t best_gain = 0;
        for (std::size_t p = 0; p < pool.size(); ++p) {
            std::set<std::string> novel;
            for (auto& t : content_tokens(candidates[pool[p]])) {
                if (!covered.count(t)) novel.insert(std::move(t));
            }
            if (p == 0 || novel.size() > best_gain) {
                best = p;
                best_gain = novel.size();
            }
        }
        const auto& chosen = candidates[pool[best]];
        for (auto& t : content_tokens(chosen)) covered.insert(std::move(t));
        selected.push_back(chosen);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return selected;
}

std::string render_documents(const std::vector<const index::Paragraph*>& docs, std::size_t char_budget) {
    std::string out;
    for (const auto* p : docs) {
        if (!out.empty()) out += '\n';
        out += "[" + p->doc_id + "] " + p->title + ": " + text::truncate_utf8(p->text, char_budget);
    }
    return out;
}

std::string render_evidence(const std::vector<EvidenceBlock>& blocks) {
    std::string out;
    for (const auto& b : blocks) {
        if (!out.empty()) out += '\n';
        out += "- [" + b.surface + "]: " + b.text;
    }
    return out;
}

}  // namespace treeqa::pipeline
