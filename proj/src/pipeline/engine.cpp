#include "treeqa/pipeline/engine.hpp"

#include <condition_variable>
#include <deque>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "treeqa/error.hpp"
#include "treeqa/text.hpp"

namespace treeqa::pipeline {

using syntax::NodeId;

namespace {

constexpr const char* kQG = "QG";
constexpr const char* kSAG = "SAG";
constexpr const char* kFAG = "FAG";

llm::TemplateId qg_template(QaStyle s) {
    return s == QaStyle::multihop ? llm::TemplateId::qg_multihop : llm::TemplateId::qg_ambiguous;
}

llm::TemplateId fag_template(QaStyle s) {
    return s == QaStyle::multihop ? llm::TemplateId::fag_multihop : llm::TemplateId::fag_ambiguous;
}

void add_flag(StepLog& log, std::string flag) {
    for (const auto& f : log.flags) {
        if (f == flag) return;
    }
    log.flags.push_back(std::move(flag));
}

}  // namespace

Engine::Engine(PipelineConfig config, Resources resources) : config_(std::move(config)), res_(resources) {
    config_.validate();
    if (!res_.gateway) throw Error(ErrorKind::Config, "pipeline needs an LLM gateway");
}

const index::Index& Engine::require_index() const {
    if (!res_.index) throw Error(ErrorKind::Config, "this method needs a retrieval index");
    return *res_.index;
}

std::vector<const index::Paragraph*> Engine::lookup(const std::vector<index::Hit>& hits) const {
    std::vector<const index::Paragraph*> out;
    out.reserve(hits.size());
    for (const auto& h : hits) out.push_back(&require_index().paragraph(h.doc_id));
    return out;
}

llm::Completion Engine::call(const Question& q, const std::string& method, const std::string& stage,
                             llm::TemplateId id, llm::Bindings bindings, const char* bulk_key, std::string anchor,
                             StepLog& log) const {
    std::string prompt = llm::render_prompt(id, bindings);
    if (prompt.size() > config_.prompt_char_ceiling && bulk_key) {
        auto& bulk = bindings.at(bulk_key);
        const auto over = prompt.size() - config_.prompt_char_ceiling;
        bulk = text::truncate_utf8(bulk, bulk.size() > over ? bulk.size() - over : 0);
        prompt = llm::render_prompt(id, bindings);
        add_flag(log, "prompt_truncated");
    }
    llm::CompletionRequest req;
    req.prompt = prompt;
    req.params = res_.gateway->defaults();
    req.template_id = std::string(llm::to_string(id));
    req.anchor = std::move(anchor);
    auto c = res_.gateway->complete({stage, q.dataset, method, q.id}, req);
    log.calls.push_back(CallRecord{stage, req.template_id, text::sha256_hex(prompt), c.model, c.usage.prompt_tokens,
                                   c.usage.completion_tokens, c.usage.estimated});
    return c;
}

QuerySet Engine::generate_queries(const Question& q, const std::string& method, const syntax::SyntaxNode& node,
                                  const std::vector<EvidenceBlock>& child_evidence, StepLog& log) const {
    const auto c = call(q, method, kQG, qg_template(config_.qa_style),
                        {{"phrase", node.surface}, {"question", q.text}, {"context", render_evidence(child_evidence)}},
                        "context", node.surface, log);
    QuerySet qs;
    qs.node_id = node.id;
    qs.candidates = parse_query_list(c.text, config_.candidates_per_node);
    if (qs.candidates.empty()) {
        add_flag(log, "empty_query_list");
        qs.candidates = {node.surface};
    }
    qs.selected = select_queries(qs.candidates, config_.selected_per_node);
    return qs;
}

EvidenceSet Engine::answer_subcomponent(const Question& q, const std::string& method, const syntax::SyntaxNode& node,
                                        const QuerySet& queries, const std::vector<index::Hit>& docs,
                                        const std::string& question_binding, StepLog& log) const {
    const std::string context = docs.empty() ? std::string() : render_documents(lookup(docs), config_.doc_char_budget);
    const auto c = call(q, method, kSAG, llm::TemplateId::sag, {{"question", question_binding}, {"context", context}},
                        "context", node.surface, log);
    EvidenceSet e;
    e.node_id = node.id;
    e.text = std::string(text::trim(c.text));
    if (e.text.empty()) {
        add_flag(log, "empty_evidence");
        e.text = "(no answer)";
    }
    for (const auto& h : docs) e.supporting_doc_ids.push_back(h.doc_id);
    e.source_queries = queries.selected;
    return e;
}

llm::FinalAnswer Engine::synthesize_answer(const Question& q, const std::string& method,
                                           const std::vector<EvidenceBlock>& evidence, StepLog& log,
                                           std::string* raw) const {
    const auto c = call(q, method, kFAG, fag_template(config_.qa_style),
                        {{"question", q.text}, {"documents", render_evidence(evidence)}}, "documents", q.text, log);
    if (raw) *raw = c.text;
    return llm::parse_final(c.text);
}

void Engine::finish(const Question& q, RunTrace& trace, const std::string& method, llm::TemplateId fag,
                    const std::string& documents) const {
    try {
        const auto c = call(q, method, kFAG, fag, {{"question", q.text}, {"documents", documents}}, "documents",
                            q.text, trace.final_log);
        trace.final_raw = c.text;
        const auto parsed = llm::parse_final(c.text);
        trace.final_answer = parsed.text;
        trace.format_violation = parsed.format_violation;
        if (parsed.format_violation) add_flag(trace.final_log, "format_violation");
    } catch (const Error& e) {
        trace.error = e.what();
    }
}

NodeRecord Engine::process_node(const Question& q, const Method& method, const syntax::SyntaxTree& tree, NodeId id,
                                const std::vector<EvidenceBlock>& child_blocks) const {
    const auto& node = tree.node(id);
    const auto name = method.name();
    NodeRecord rec;
    rec.node_id = id;
    rec.label = node.label;
    rec.surface = node.surface;
    rec.children = node.kept_children;
    rec.queries.node_id = id;
    try {
        if (config_.leaf_mode == LeafMode::evidence && node.kept_children.empty()) {
            rec.evidence = EvidenceSet{id, node.surface, {}, {}};
            add_flag(rec.log, "leaf_evidence");
            return rec;
        }

        if (method.kind == MethodKind::no_qg) {
            rec.queries.candidates = {node.surface};
            rec.queries.selected = {node.surface};
        } else {
            rec.queries = generate_queries(q, name, node, child_blocks, rec.log);
        }

        const bool retrieve = method.kind != MethodKind::no_ir && method.kind != MethodKind::qg_only;
        if (retrieve) {
            const auto& idx = require_index();
            for (const auto& query : rec.queries.selected) {
                try {
                    rec.retrievals.push_back(idx.search(query, config_.docs_per_query));
                    ++rec.log.searches;
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::EmptyQuery) throw;
                    add_flag(rec.log, "unsearchable_query");
                }
            }
            rec.docs = index::merge_results(rec.retrievals, config_.merged_doc_cap);
        }

        switch (method.kind) {
            case MethodKind::no_sag: {
                EvidenceSet e{id, {}, {}, rec.queries.selected};
                for (const auto* p : lookup(rec.docs)) {
                    if (!e.text.empty()) e.text += "\n\n";
                    e.text += p->text;
                    e.supporting_doc_ids.push_back(p->doc_id);
                }
                rec.evidence = std::move(e);
                break;
            }
            case MethodKind::qg_only:
                rec.evidence = EvidenceSet{id, text::join(rec.queries.selected, "; "), {}, rec.queries.selected};
                break;
            case MethodKind::no_qg:
                rec.evidence = answer_subcomponent(q, name, node, rec.queries, rec.docs, q.text, rec.log);
                break;
            default:
                rec.evidence = answer_subcomponent(q, name, node, rec.queries, rec.docs,
                                                   text::join(rec.queries.selected, "; "), rec.log);
                break;
        }
    } catch (const Error& e) {
        rec.ok = false;
        rec.error = e.what();
        rec.evidence.reset();
    }
    return rec;
}

RunTrace Engine::process_tree(const Question& q, const Method& method, const syntax::SyntaxTree& tree) const {
    RunTrace trace;
    trace.question_id = q.id;
    trace.question = q.text;
    trace.dataset = q.dataset;
    trace.method = method.name();
    trace.formalism = std::string(syntax::to_string(tree.formalism()));

    const auto order = syntax::traversal_order(tree);
    std::map<NodeId, std::size_t> position;
    for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = i;
    std::vector<NodeRecord> records(order.size());

    auto child_blocks = [&](NodeId id) {
        std::vector<EvidenceBlock> blocks;
        for (NodeId c : tree.node(id).kept_children) {
            const auto& r = records[position.at(c)];
            if (r.evidence) blocks.push_back({r.surface, r.evidence->text});
        }
        return blocks;
    };

    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config_.node_parallelism), order.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < order.size(); ++i)
            records[i] = process_node(q, method, tree, order[i], child_blocks(order[i]));
    } else {
        // Dependency-ordered scheduling: a node becomes ready once all its kept
        // children have finished.
        std::vector<std::size_t> pending(order.size());
        std::deque<std::size_t> ready;
        for (std::size_t i = 0; i < order.size(); ++i) {
            pending[i] = tree.node(order[i]).kept_children.size();
            if (pending[i] == 0) ready.push_back(i);
        }
        std::mutex mu;
        std::condition_variable cv;
        std::size_t done = 0;
        std::exception_ptr failure;
        auto worker = [&] {
            std::unique_lock lock(mu);
            while (true) {
                cv.wait(lock, [&] { return !ready.empty() || done == order.size() || failure; });
                if (done == order.size() || failure) return;
                const auto i = ready.front();
                ready.pop_front();
                auto blocks = child_blocks(order[i]);
                lock.unlock();
                NodeRecord rec;
                std::exception_ptr err;
                try {
                    rec = process_node(q, method, tree, order[i], blocks);
                } catch (...) {
                    err = std::current_exception();
                }
                lock.lock();
                if (err) {
                    failure = err;
                    cv.notify_all();
                    return;
                }
                records[i] = std::move(rec);
                ++done;
                const auto parent = tree.node(order[i]).parent;
                // the nearest unskipped ancestor is the one whose kept_children list holds this node
                for (auto p = parent; p; p = tree.node(*p).parent) {
                    if (tree.node(*p).skipped) continue;
                    auto it = position.find(*p);
                    if (it != position.end() && --pending[it->second] == 0) ready.push_back(it->second);
                    break;
                }
                cv.notify_all();
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }
    trace.node_records = std::move(records);
    return trace;
}

RunTrace Engine::run_treerare(const Question& q, const syntax::SyntaxTree& tree) const {
    return run_ablation(q, MethodKind::treerare, &tree);
}

RunTrace Engine::run_ablation(const Question& q, MethodKind mode, const syntax::SyntaxTree* tree) const {
    const Method method{mode, tree ? tree->formalism() : config_.formalism};
    const auto name = method.name();

    if (mode == MethodKind::cot_only || mode == MethodKind::ir_only) {
        RunTrace trace;
        trace.question_id = q.id;
        trace.question = q.text;
        trace.dataset = q.dataset;
        trace.method = name;
        std::string documents;
        if (mode == MethodKind::ir_only) {
            try {
                auto r = require_index().search(q.text, config_.docs_per_query);
                ++trace.final_log.searches;
                documents = render_documents(lookup(r.hits), config_.doc_char_budget);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::EmptyQuery) throw;
                add_flag(trace.final_log, "unsearchable_query");
            }
        }
        finish(q, trace, name, fag_template(config_.qa_style), documents);
        return trace;
    }
    if (mode == MethodKind::tree_retrieval) {
        if (!tree) throw Error(ErrorKind::Config, "tree-retrieval needs a parse");
        return run_tree_retrieval(q, *tree);
    }
    if (!tree) throw Error(ErrorKind::Config, name + " needs a parse");

    const auto pruned = tree->pruned() ? *tree : syntax::prune(*tree, config_.prune_policy());
    auto trace = process_tree(q, method, pruned);
    std::vector<EvidenceBlock> all;
    for (const auto& r : trace.node_records) {
        if (r.evidence) all.push_back({r.surface, r.evidence->text});
    }
    finish(q, trace, name, fag_template(config_.qa_style), render_evidence(all));
    return trace;
}

RunTrace Engine::run_tree_retrieval(const Question& q, const syntax::SyntaxTree& tree) const {
    if (!res_.scorer) throw Error(ErrorKind::ScorerUnavailable, "tree-retrieval needs a relevance scorer");
    const auto& idx = require_index();
    const auto pruned = tree.pruned() ? tree : syntax::prune(tree, config_.prune_policy());
    const Method method{MethodKind::tree_retrieval, pruned.formalism()};

    RunTrace trace;
    trace.question_id = q.id;
    trace.question = q.text;
    trace.dataset = q.dataset;
    trace.method = method.name();
    trace.formalism = std::string(syntax::to_string(pruned.formalism()));

    auto order = syntax::traversal_order(pruned);
    order.push_back(pruned.root());
    std::map<NodeId, std::vector<index::Hit>> pools;
    std::vector<NodeRecord> records;
    for (NodeId id : order) {
        const auto& node = pruned.node(id);
        const bool is_root = id == pruned.root();
        const std::string anchor = is_root ? q.text : node.surface;
        NodeRecord rec;
        rec.node_id = id;
        rec.label = node.label;
        rec.surface = node.surface;
        rec.children = node.kept_children;
        rec.queries = QuerySet{id, {anchor}, {anchor}};
        try {
            rec.retrievals.push_back(idx.search(anchor, config_.tree_retrieval_per_node_k));
            ++rec.log.searches;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::EmptyQuery) throw;
            add_flag(rec.log, "unsearchable_query");
        }
        rec.docs = rec.retrievals.empty() ? std::vector<index::Hit>{} : rec.retrievals.front().hits;

        std::vector<index::RetrievalResult> parts;
        parts.push_back({anchor, rec.docs});
        for (NodeId c : node.kept_children) parts.push_back({"", pools.at(c)});
        auto pool = index::merge_results(parts);
        rec.pool_size = pool.size();

        std::vector<index::Candidate> candidates;
        for (const auto& h : pool) {
            const auto& p = idx.paragraph(h.doc_id);
            candidates.push_back({h.doc_id, h.score, p.title + " " + text::truncate_utf8(p.text, config_.doc_char_budget)});
        }
        rec.reranked = index::rerank(candidates, anchor, *res_.scorer, config_.tree_retrieval_rerank_m);
        EvidenceSet e{id, {}, {}, rec.queries.selected};
        for (const auto& r : rec.reranked) e.supporting_doc_ids.push_back(r.doc_id);
        rec.evidence = std::move(e);
        pools.emplace(id, std::move(pool));
        records.push_back(std::move(rec));
    }
    trace.root_record = std::move(records.back());
    records.pop_back();
    trace.node_records = std::move(records);

    std::vector<index::Hit> top;
    for (const auto& r : trace.root_record->reranked) top.push_back({r.doc_id, r.score});
    const auto documents = render_documents(lookup(top), config_.doc_char_budget);
    trace.root_record->evidence->text = documents;
    finish(q, trace, trace.method, llm::TemplateId::fag_multihop, documents);
    return trace;
}

RunTrace Engine::run(const Question& q, const Method& method, const syntax::SyntaxTree* tree) const {
    if (method.uses_tree()) {
        if (!tree) throw Error(ErrorKind::Config, method.name() + " needs a parse");
        if (tree->formalism() != method.formalism)
            throw Error(ErrorKind::Config, method.name() + " got a " + std::string(syntax::to_string(tree->formalism())) +
                                               " parse");
    }
    switch (method.kind) {
        case MethodKind::treerare: return run_treerare(q, *tree);
        case MethodKind::tree_retrieval: return run_tree_retrieval(q, *tree);
        default: return run_ablation(q, method.kind, method.uses_tree() ? tree : nullptr);
    }
}

}  // namespace treeqa::pipeline
