#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "treeqa/index/bm25.hpp"
#include "treeqa/index/rerank.hpp"
#include "treeqa/syntax/tree.hpp"

namespace treeqa::pipeline {

inline constexpr int kTraceSchema = 1;

struct QuerySet {
    syntax::NodeId node_id = 0;
    std::vector<std::string> candidates;
    std::vector<std::string> selected;
};

struct EvidenceSet {
    syntax::NodeId node_id = 0;
    std::string text;
    std::vector<std::string> supporting_doc_ids;
    std::vector<std::string> source_queries;
};

struct CallRecord {
    std::string stage;  // QG, SAG or FAG
    std::string template_id;
    std::string prompt_sha256;
    std::string model;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    bool estimated = false;
};

struct StepLog {
    std::vector<CallRecord> calls;
    std::vector<std::string> flags;
    std::size_t searches = 0;
};

struct NodeRecord {
    syntax::NodeId node_id = 0;
    std::string label;
    std::string surface;
    std::vector<syntax::NodeId> children;  // kept children
    bool ok = true;
    std::string error;

    QuerySet queries;
    std::vector<index::RetrievalResult> retrievals;
    std::vector<index::Hit> docs;  // D_n after merge
    std::optional<EvidenceSet> evidence;

    // Tree-Retrieval only.
    std::optional<std::size_t> pool_size;
    std::vector<index::RankedPassage> reranked;

    StepLog log;
};

struct RunTrace {
    std::string question_id;
    std::string question;
    std::string dataset;
    std::string method;
    std::optional<std::string> formalism;

    std::vector<NodeRecord> node_records;  // traversal order
    std::optional<NodeRecord> root_record;  // Tree-Retrieval root pool

    std::optional<std::string> final_answer;
    std::string final_raw;
    bool format_violation = false;
    StepLog final_log;
    std::optional<std::string> error;  // fatal

    std::size_t llm_calls() const;
    std::size_t searches() const;
    std::size_t processed_nodes() const;
    std::size_t failed_nodes() const;
    // Every call, nodes in traversal order then the final stage.
    std::vector<CallRecord> calls() const;
};

nlohmann::json to_json(const RunTrace& t);
RunTrace trace_from_json(const nlohmann::json& j);

// One compact JSON line, no trailing newline.
std::string trace_line(const RunTrace& t);

}  // namespace treeqa::pipeline
