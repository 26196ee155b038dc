#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace treeqa::index {

inline constexpr std::string_view kTokenizerId = "lower-alnum-v1";
inline constexpr std::uint32_t kIndexFormatVersion = 1;

// lower-alnum-v1: ASCII-lowercase, split on ASCII non-alphanumerics. Bytes of
// multi-byte UTF-8 sequences count as token characters, so "Téa" stays whole.
std::vector<std::string> tokenize(std::string_view text);

struct Paragraph {
    std::string doc_id;
    std::string title;
    std::string text;
};

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;
};

struct Hit {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const Hit&) const = default;
};

// Hits are ordered by score descending, then doc_id ascending.
struct RetrievalResult {
    std::string query;
    std::vector<Hit> hits;
};

bool hit_order(const Hit& a, const Hit& b);

// Reads the corpus JSON-lines format {"id", "title", "text"}.
std::vector<Paragraph> load_corpus_jsonl(const std::filesystem::path& path);

class Index {
public:
    struct Posting {
        std::uint32_t doc = 0;  // ordinal in doc_id order
        std::uint32_t tf = 0;
    };

    static Index build(std::vector<Paragraph> corpus, Bm25Params params = {});
    static Index load(const std::filesystem::path& dir);

    // Writes meta.json, docs.jsonl and postings.bin. Output bytes depend only
    // on the corpus and parameters.
    void save(const std::filesystem::path& dir) const;

    RetrievalResult search(std::string_view query, std::size_t k) const;

    std::size_t doc_count() const { return docs_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    const Bm25Params& params() const { return params_; }
    std::size_t term_count() const { return postings_.size(); }

    const std::vector<Paragraph>& paragraphs() const { return docs_; }
    const Paragraph* find(std::string_view doc_id) const;
    const Paragraph& paragraph(std::string_view doc_id) const;
    std::uint32_t doc_length(std::size_t ordinal) const { return doc_lengths_.at(ordinal); }
    const std::vector<Posting>* postings(std::string_view term) const;

    double idf(std::size_t document_frequency) const;

private:
    std::vector<Paragraph> docs_;
    std::unordered_map<std::string, std::size_t> ordinal_;
    std::vector<std::uint32_t> doc_lengths_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    double avg_doc_length_ = 0.0;
    Bm25Params params_;
};

// Union by doc_id keeping each document's best score, re-sorted by hit_order.
// `cap` truncates the merged pool.
std::vector<Hit> merge_results(const std::vector<RetrievalResult>& results,
                               std::optional<std::size_t> cap = std::nullopt);

}  // namespace treeqa::index
