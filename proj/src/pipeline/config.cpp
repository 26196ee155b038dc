#include "treeqa/pipeline/config.hpp"

#include <nlohmann/json.hpp>

#include "treeqa/error.hpp"

namespace treeqa::pipeline {

std::string_view to_string(LeafMode m) { return m == LeafMode::query ? "query" : "evidence"; }
std::string_view to_string(QaStyle s) { return s == QaStyle::multihop ? "multihop" : "ambiguous"; }

LeafMode parse_leaf_mode(std::string_view s) {
    if (s == "query") return LeafMode::query;
    if (s == "evidence") return LeafMode::evidence;
    throw Error(ErrorKind::Config, "leaf_mode must be query or evidence, got '" + std::string(s) + "'");
}

QaStyle parse_qa_style(std::string_view s) {
    if (s == "multihop") return QaStyle::multihop;
    if (s == "ambiguous") return QaStyle::ambiguous;
    throw Error(ErrorKind::Config, "qa_style must be multihop or ambiguous, got '" + std::string(s) + "'");
}

syntax::PrunePolicy PipelineConfig::prune_policy() const {
    auto policy = syntax::PrunePolicy::defaults(formalism, min_phrase_tokens);
    if (skip_labels) policy.skip_labels = *skip_labels;
    return policy;
}

void PipelineConfig::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::Config, m); };
    if (min_phrase_tokens < 1) fail("min_phrase_tokens must be >= 1");
    if (candidates_per_node < 1) fail("candidates_per_node must be >= 1");
    if (selected_per_node < 1 || selected_per_node > candidates_per_node)
        fail("selected_per_node must be in [1, candidates_per_node]");
    if (docs_per_query < 1) fail("docs_per_query (k) must be >= 1");
    if (merged_doc_cap < 1) fail("merged_doc_cap must be >= 1");
    if (tree_retrieval_per_node_k < 1 || tree_retrieval_rerank_m < 1) fail("tree_retrieval k and m must be >= 1");
    if (doc_char_budget < 1) fail("doc_char_budget must be >= 1");
    if (prompt_char_ceiling < 1000) fail("prompt_char_ceiling must be >= 1000");
    if (node_parallelism < 1) fail("node_parallelism must be >= 1");
}

nlohmann::json to_json(const PipelineConfig& c) {
    nlohmann::json j{{"formalism", std::string(syntax::to_string(c.formalism))},
                     {"min_phrase_tokens", c.min_phrase_tokens},
                     {"candidates_per_node", c.candidates_per_node},
                     {"selected_per_node", c.selected_per_node},
                     {"docs_per_query", c.docs_per_query},
                     {"merged_doc_cap", c.merged_doc_cap},
                     {"tree_retrieval", {{"per_node_k", c.tree_retrieval_per_node_k}, {"rerank_m", c.tree_retrieval_rerank_m}}},
                     {"leaf_mode", std::string(to_string(c.leaf_mode))},
                     {"qa_style", std::string(to_string(c.qa_style))},
                     {"doc_char_budget", c.doc_char_budget},
                     {"prompt_char_ceiling", c.prompt_char_ceiling},
                     {"node_parallelism", c.node_parallelism}};
    j["skip_labels"] = c.skip_labels ? nlohmann::json(*c.skip_labels) : nlohmann::json(nullptr);
    return j;
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorKind::Config, "pipeline config must be an object");
    PipelineConfig c;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "formalism") c.formalism = syntax::parse_formalism(v.get<std::string>());
            else if (key == "min_phrase_tokens") c.min_phrase_tokens = v.get<int>();
            else if (key == "skip_labels") {
                if (v.is_null()) c.skip_labels.reset();
                else c.skip_labels = v.get<std::set<std::string>>();
            } else if (key == "candidates_per_node") c.candidates_per_node = v.get<std::size_t>();
            else if (key == "selected_per_node") c.selected_per_node = v.get<std::size_t>();
            else if (key == "docs_per_query") c.docs_per_query = v.get<std::size_t>();
            else if (key == "merged_doc_cap") c.merged_doc_cap = v.get<std::size_t>();
            else if (key == "tree_retrieval") {
                c.tree_retrieval_per_node_k = v.value("per_node_k", c.tree_retrieval_per_node_k);
                c.tree_retrieval_rerank_m = v.value("rerank_m", c.tree_retrieval_rerank_m);
            } else if (key == "leaf_mode") c.leaf_mode = parse_leaf_mode(v.get<std::string>());
            else if (key == "qa_style") c.qa_style = parse_qa_style(v.get<std::string>());
            else if (key == "doc_char_budget") c.doc_char_budget = v.get<std::size_t>();
            else if (key == "prompt_char_ceiling") c.prompt_char_ceiling = v.get<std::size_t>();
            else if (key == "node_parallelism") c.node_parallelism = v.get<int>();
            else throw Error(ErrorKind::Config, "unknown pipeline config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("pipeline config: ") + e.what());
    }
    c.validate();
    return c;
}

namespace {
struct NamedKind {
    std::string_view name;
    MethodKind kind;
};
constexpr NamedKind kAblations[] = {{"no-qg", MethodKind::no_qg},       {"no-sag", MethodKind::no_sag},
                                    {"no-ir", MethodKind::no_ir},       {"ir-only", MethodKind::ir_only},
                                    {"qg-only", MethodKind::qg_only},   {"cot-only", MethodKind::cot_only}};
}  // namespace

std::string Method::name() const {
    const std::string suffix = formalism == syntax::Formalism::dependency ? "dt" : "ct";
    if (kind == MethodKind::treerare) return "treerare-" + suffix;
    if (kind == MethodKind::tree_retrieval) return "tree-retrieval-" + suffix;
    for (const auto& a : kAblations) {
        if (a.kind == kind) return "ablation:" + std::string(a.name);
    }
    return "unknown";
}

Method Method::parse(std::string_view name, syntax::Formalism ablation_formalism) {
    auto with_suffix = [&](std::string_view prefix, MethodKind kind) -> std::optional<Method> {
        if (name.substr(0, prefix.size()) != prefix) return std::nullopt;
        const auto rest = name.substr(prefix.size());
        if (rest == "dt") return Method{kind, syntax::Formalism::dependency};
        if (rest == "ct") return Method{kind, syntax::Formalism::constituency};
        return std::nullopt;
    };
    if (auto m = with_suffix("treerare-", MethodKind::treerare)) return *m;
    if (auto m = with_suffix("tree-retrieval-", MethodKind::tree_retrieval)) return *m;
    constexpr std::string_view kPrefix = "ablation:";
    if (name.substr(0, kPrefix.size()) == kPrefix) {
        const auto mode = name.substr(kPrefix.size());
        for (const auto& a : kAblations) {
            if (a.name == mode) return Method{a.kind, ablation_formalism};
        }
    }
    throw Error(ErrorKind::Config, "unknown method '" + std::string(name) +
                                       "' (expected treerare-dt|ct, tree-retrieval-dt|ct or ablation:<mode>)");
}

}  // namespace treeqa::pipeline
