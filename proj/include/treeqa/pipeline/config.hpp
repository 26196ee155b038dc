#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "treeqa/syntax/tree.hpp"

namespace treeqa::pipeline {

// query: a node without processed children still runs QG on its own span.
// evidence: such a node contributes its span as evidence, with no LLM call.
enum class LeafMode { query, evidence };
enum class QaStyle { multihop, ambiguous };

std::string_view to_string(LeafMode m);
std::string_view to_string(QaStyle s);
LeafMode parse_leaf_mode(std::string_view s);
QaStyle parse_qa_style(std::string_view s);

struct PipelineConfig {
    syntax::Formalism formalism = syntax::Formalism::dependency;
    int min_phrase_tokens = 3;
    std::optional<std::set<std::string>> skip_labels;  // unset: formalism defaults

    std::size_t candidates_per_node = 5;
    std::size_t selected_per_node = 3;
    std::size_t docs_per_query = 15;
    std::size_t merged_doc_cap = 45;

    std::size_t tree_retrieval_per_node_k = 10;
    std::size_t tree_retrieval_rerank_m = 15;

    LeafMode leaf_mode = LeafMode::query;
    QaStyle qa_style = QaStyle::multihop;

    std::size_t doc_char_budget = 1200;
    std::size_t prompt_char_ceiling = 60000;

    // Independent subtrees may run concurrently; 1 keeps everything serial.
    int node_parallelism = 1;

    syntax::PrunePolicy prune_policy() const;
    void validate() const;  // throws Error(Config)
};

nlohmann::json to_json(const PipelineConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

enum class MethodKind { treerare, tree_retrieval, no_qg, no_sag, no_ir, ir_only, qg_only, cot_only };

struct Method {
    MethodKind kind = MethodKind::treerare;
    syntax::Formalism formalism = syntax::Formalism::dependency;

    // treerare-dt, tree-retrieval-ct, ablation:no-qg, ...
    std::string name() const;
    bool uses_tree() const { return kind != MethodKind::ir_only && kind != MethodKind::cot_only; }
    bool is_ablation() const { return kind != MethodKind::treerare && kind != MethodKind::tree_retrieval; }

    // Ablation names carry no formalism suffix; they run on `ablation_formalism`.
    static Method parse(std::string_view name, syntax::Formalism ablation_formalism = syntax::Formalism::dependency);
};

}  // namespace treeqa::pipeline
