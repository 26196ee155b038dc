#include "treeqa/pipeline/trace.hpp"

#include <nlohmann/json.hpp>

#include "treeqa/error.hpp"

namespace treeqa::pipeline {

std::size_t RunTrace::llm_calls() const { return calls().size(); }

std::size_t RunTrace::searches() const {
    std::size_t n = final_log.searches;
    for (const auto& r : node_records) n += r.log.searches;
    if (root_record) n += root_record->log.searches;
    return n;
}

std::size_t RunTrace::processed_nodes() const { return node_records.size(); }

std::size_t RunTrace::failed_nodes() const {
    std::size_t n = 0;
    for (const auto& r : node_records) n += r.ok ? 0 : 1;
    return n;
}

std::vector<CallRecord> RunTrace::calls() const {
    std::vector<CallRecord> out;
    for (const auto& r : node_records) out.insert(out.end(), r.log.calls.begin(), r.log.calls.end());
    if (root_record) out.insert(out.end(), root_record->log.calls.begin(), root_record->log.calls.end());
    out.insert(out.end(), final_log.calls.begin(), final_log.calls.end());
    return out;
}

namespace {

using nlohmann::json;

json hits_json(const std::vector<index::Hit>& hits) {
    json a = json::array();
    for (const auto& h : hits) a.push_back({{"doc_id", h.doc_id}, {"score", h.score}});
    return a;
}

std::vector<index::Hit> hits_from(const json& a) {
    std::vector<index::Hit> out;
    for (const auto& h : a) out.push_back({h.at("doc_id").get<std::string>(), h.at("score").get<double>()});
    return out;
}

json log_json(const StepLog& log) {
    json calls = json::array();
    for (const auto& c : log.calls) {
        calls.push_back({{"stage", c.stage},
                         {"template_id", c.template_id},
                         {"prompt_sha256", c.prompt_sha256},
                         {"model", c.model},
                         {"prompt_tokens", c.prompt_tokens},
                         {"completion_tokens", c.completion_tokens},
                         {"estimated", c.estimated}});
    }
    return {{"calls", calls}, {"flags", log.flags}, {"searches", log.searches}};
}

StepLog log_from(const json& j) {
    StepLog log;
    for (const auto& c : j.at("calls")) {
        log.calls.push_back({c.at("stage").get<std::string>(), c.at("template_id").get<std::string>(),
                             c.at("prompt_sha256").get<std::string>(), c.at("model").get<std::string>(),
                             c.at("prompt_tokens").get<std::uint64_t>(), c.at("completion_tokens").get<std::uint64_t>(),
                             c.at("estimated").get<bool>()});
    }
    log.flags = j.at("flags").get<std::vector<std::string>>();
    log.searches = j.at("searches").get<std::size_t>();
    return log;
}

json node_json(const NodeRecord& r) {
    json retrievals = json::array();
    for (const auto& rr : r.retrievals) retrievals.push_back({{"query", rr.query}, {"hits", hits_json(rr.hits)}});
    json j{{"node_id", r.node_id},
           {"label", r.label},
           {"surface", r.surface},
           {"children", r.children},
           {"status", r.ok ? "ok" : "failed"},
           {"queries", {{"candidates", r.queries.candidates}, {"selected", r.queries.selected}}},
           {"retrievals", retrievals},
           {"docs", hits_json(r.docs)},
           {"log", log_json(r.log)}};
    if (!r.ok) j["error"] = r.error;
    j["evidence"] = r.evidence ? json{{"text", r.evidence->text},
                                      {"supporting_doc_ids", r.evidence->supporting_doc_ids},
                                      {"source_queries", r.evidence->source_queries}}
                               : json(nullptr);
    if (r.pool_size) {
        j["pool_size"] = *r.pool_size;
        json ranked = json::array();
        for (const auto& p : r.reranked)
            ranked.push_back({{"doc_id", p.doc_id}, {"score", p.score}, {"bm25_score", p.bm25_score}});
        j["reranked"] = ranked;
    }
    return j;
}

NodeRecord node_from(const json& j) {
    NodeRecord r;
    r.node_id = j.at("node_id").get<syntax::NodeId>();
    r.label = j.at("label").get<std::string>();
    r.surface = j.at("surface").get<std::string>();
    r.children = j.at("children").get<std::vector<syntax::NodeId>>();
    r.ok = j.at("status").get<std::string>() == "ok";
    r.error = j.value("error", std::string());
    r.queries.node_id = r.node_id;
    r.queries.candidates = j.at("queries").at("candidates").get<std::vector<std::string>>();
    r.queries.selected = j.at("queries").at("selected").get<std::vector<std::string>>();
    for (const auto& rr : j.at("retrievals"))
        r.retrievals.push_back({rr.at("query").get<std::string>(), hits_from(rr.at("hits"))});
    r.docs = hits_from(j.at("docs"));
    if (!j.at("evidence").is_null()) {
        const auto& e = j.at("evidence");
        r.evidence = EvidenceSet{r.node_id, e.at("text").get<std::string>(),
                                 e.at("supporting_doc_ids").get<std::vector<std::string>>(),
                                 e.at("source_queries").get<std::vector<std::string>>()};
    }
    if (j.contains("pool_size")) {
        r.pool_size = j.at("pool_size").get<std::size_t>();
        for (const auto& p : j.at("reranked"))
            r.reranked.push_back(
                {p.at("doc_id").get<std::string>(), p.at("score").get<double>(), p.at("bm25_score").get<double>()});
    }
    r.log = log_from(j.at("log"));
    return r;
}

}  // namespace

nlohmann::json to_json(const RunTrace& t) {
    json nodes = json::array();
    for (const auto& r : t.node_records) nodes.push_back(node_json(r));
    json j{{"trace_schema", kTraceSchema},
           {"question_id", t.question_id},
           {"question", t.question},
           {"dataset", t.dataset},
           {"method", t.method},
           {"formalism", t.formalism ? json(*t.formalism) : json(nullptr)},
           {"node_records", nodes},
           {"root_record", t.root_record ? node_json(*t.root_record) : json(nullptr)},
           {"final_answer", t.final_answer ? json(*t.final_answer) : json(nullptr)},
           {"final_raw", t.final_raw},
           {"format_violation", t.format_violation},
           {"final_log", log_json(t.final_log)},
           {"error", t.error ? json(*t.error) : json(nullptr)},
           {"counts",
            {{"processed_nodes", t.processed_nodes()},
             {"failed_nodes", t.failed_nodes()},
             {"llm_calls", t.llm_calls()},
             {"searches", t.searches()}}}};
    return j;
}

RunTrace trace_from_json(const nlohmann::json& j) {
    try {
        const int schema = j.at("trace_schema").get<int>();
        if (schema != kTraceSchema)
            throw Error(ErrorKind::SchemaMismatch, "unsupported trace_schema " + std::to_string(schema));
        RunTrace t;
        t.question_id = j.at("question_id").get<std::string>();
        t.question = j.at("question").get<std::string>();
        t.dataset = j.at("dataset").get<std::string>();
        t.method = j.at("method").get<std::string>();
        if (!j.at("formalism").is_null()) t.formalism = j.at("formalism").get<std::string>();
        for (const auto& n : j.at("node_records")) t.node_records.push_back(node_from(n));
        if (!j.at("root_record").is_null()) t.root_record = node_from(j.at("root_record"));
        if (!j.at("final_answer").is_null()) t.final_answer = j.at("final_answer").get<std::string>();
        t.final_raw = j.at("final_raw").get<std::string>();
        t.format_violation = j.at("format_violation").get<bool>();
        t.final_log = log_from(j.at("final_log"));
        if (!j.at("error").is_null()) t.error = j.at("error").get<std::string>();
        return t;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaMismatch, std::string("trace: ") + e.what());
    }
}

std::string trace_line(const RunTrace& t) { return to_json(t).dump(); }

}  // namespace treeqa::pipeline
