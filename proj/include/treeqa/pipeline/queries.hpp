#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "treeqa/index/bm25.hpp"
#include "treeqa/pipeline/trace.hpp"

namespace treeqa::pipeline {

// Items after the last "response:" marker, split on ';' and newlines, with
// list numbering and wrapping quotes removed. At most `limit` items. Empty
// when the marker is missing or nothing usable follows it.
std::vector<std::string> parse_query_list(std::string_view completion_text, std::size_t limit);

// Lowercased, punctuation-free form used to detect duplicate queries.
std::string query_key(std::string_view query);

// Query tokens minus function words.
std::vector<std::string> content_tokens(std::string_view query);

// Greedy coverage selection: drop normalized duplicates, then repeatedly take
// the candidate adding the most content tokens not yet covered (earliest
// candidate on ties) until `limit` are chosen.
std::vector<std::string> select_queries(const std::vector<std::string>& candidates, std::size_t limit);

// "[doc_id] title: text" per document, each text cut to `char_budget` bytes.
std::string render_documents(const std::vector<const index::Paragraph*>& docs, std::size_t char_budget);

// "- [<surface>]: <evidence>" bullets in the given order.
struct EvidenceBlock {
    std::string surface;
    std::string text;
};
std::string render_evidence(const std::vector<EvidenceBlock>& blocks);

}  // namespace treeqa::pipeline
