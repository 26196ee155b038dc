#include "treeqa/cli/commands.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "treeqa/eval/dataset.hpp"
#include "treeqa/eval/report.hpp"
#include "treeqa/index/bm25.hpp"
#include "treeqa/index/rerank.hpp"
#include "treeqa/llm/cost.hpp"
#include "treeqa/llm/gateway.hpp"
#include "treeqa/llm/provider.hpp"
#include "treeqa/pipeline/engine.hpp"
#include "treeqa/syntax/parse_source.hpp"
#include "treeqa/text.hpp"

#ifndef TREEQA_VERSION
#define TREEQA_VERSION "unknown"
#endif

namespace treeqa::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version() { return TREEQA_VERSION; }

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DependencyUnavailable:
        case ErrorKind::ScorerUnavailable:
        case ErrorKind::RetriesExhausted:
        case ErrorKind::ProviderError:
            return kDependencyUnavailable;
        default:
            return kInputError;
    }
}

namespace {

template <typename Fn>
int guarded(std::ostream& log, const char* command, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        log << command << ": " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const json::exception& e) {
        log << command << ": invalid JSON: " << e.what() << "\n";
        return kInputError;
    } catch (const fs::filesystem_error& e) {
        log << command << ": " << e.what() << "\n";
        return kInputError;
    }
}

void require_file(const fs::path& p, const char* what) {
    if (!fs::is_regular_file(p)) throw Error(ErrorKind::Io, std::string(what) + " not found: " + p.string());
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::string file_sha256(const fs::path& p) { return text::sha256_hex(text::read_file(p)); }

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

template <typename T>
void take(const json& obj, const char* key, T& into) {
    if (obj.contains(key)) into = obj.at(key).get<T>();
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [k, _] : obj.items()) {
        if (!allowed.count(k)) throw Error(ErrorKind::Config, "unknown key '" + k + "' in " + where);
    }
}

std::vector<pipeline::RunTrace> read_traces(const fs::path& path) {
    require_file(path, "traces");
    std::ifstream in(path);
    std::vector<pipeline::RunTrace> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(pipeline::trace_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw LineError(ErrorKind::SchemaMismatch, line_no, std::string("trace: ") + e.what());
        } catch (const Error& e) {
            throw LineError(e.kind(), line_no, e.what());
        }
    }
    return out;
}

// Ids already in the output file. A torn last line (no newline) is cut off.
std::set<std::string> completed_ids(const fs::path& out, std::ostream& log) {
    std::set<std::string> ids;
    if (!fs::exists(out)) return ids;
    auto body = text::read_file(out);
    if (!body.empty() && body.back() != '\n') {
        const auto cut = body.rfind('\n');
        body = cut == std::string::npos ? std::string() : body.substr(0, cut + 1);
        text::write_file(out, body);
        log << "run: dropped an incomplete trailing line from " << out.string() << "\n";
    }
    std::size_t line_no = 0;
    for (const auto& line : text::split(body, '\n')) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            ids.insert(json::parse(line).at("question_id").get<std::string>());
        } catch (const json::exception& e) {
            throw LineError(ErrorKind::SchemaMismatch, line_no, "existing output: " + std::string(e.what()));
        }
    }
    return ids;
}

std::shared_ptr<llm::Provider> make_provider(const LlmSettings& s) {
    std::shared_ptr<llm::Provider> provider;
    if (s.provider == "mock") {
        require_file(s.transcript, "transcript");
        provider = std::make_shared<llm::MockProvider>(llm::MockProvider::from_file(s.transcript));
    } else if (s.provider == "http") {
        llm::HttpProviderConfig hc;
        hc.url = s.url;
        if (!s.api_key_env.empty()) {
            const char* key = std::getenv(s.api_key_env.c_str());
            if (!key || !*key) throw Error(ErrorKind::Config, "environment variable " + s.api_key_env + " is not set");
            hc.api_key = key;
        }
        hc.timeout = std::chrono::milliseconds(s.timeout_ms);
        hc.retry.max_attempts = s.max_attempts;
        provider = std::make_shared<llm::HttpChatProvider>(hc);
    } else {
        throw Error(ErrorKind::Config, "llm.provider must be mock or http, got '" + s.provider + "'");
    }
    if (s.record_transcript) provider = std::make_shared<llm::RecordingProvider>(provider, *s.record_transcript);
    return provider;
}

std::unique_ptr<index::RelevanceScorer> make_scorer(const ScorerSettings& s) {
    if (s.kind == "bm25-passthrough") return std::make_unique<index::Bm25PassthroughScorer>();
    if (s.kind == "http") return std::make_unique<index::HttpRelevanceScorer>(s.url);
    throw Error(ErrorKind::Config, "scorer.kind must be bm25-passthrough or http, got '" + s.kind + "'");
}

json index_checksums(const fs::path& dir) {
    json j = json::object();
    for (const char* f : {"meta.json", "docs.jsonl", "postings.bin"}) j[f] = file_sha256(dir / f);
    return j;
}

bool is_dependency_failure(ErrorKind k) { return exit_code_for(k) == kDependencyUnavailable; }

}  // namespace

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw Error(ErrorKind::Config, "run config must be a JSON object");
    reject_unknown(j, {"pipeline", "llm", "scorer", "dataset", "success_fraction", "ablation_formalism"}, "run config");
    RunConfig c;
    c.raw = j;
    if (j.contains("pipeline")) c.pipeline = pipeline::pipeline_config_from_json(j.at("pipeline"));
    if (j.contains("llm")) {
        const auto& l = j.at("llm");
        reject_unknown(l, {"provider", "transcript", "record_transcript", "url", "api_key_env", "model", "temperature",
                           "max_tokens", "concurrency", "timeout_ms", "max_attempts"},
                       "llm");
        take(l, "provider", c.llm.provider);
        if (l.contains("transcript")) c.llm.transcript = resolve(base_dir, l.at("transcript").get<std::string>());
        if (l.contains("record_transcript"))
            c.llm.record_transcript = resolve(base_dir, l.at("record_transcript").get<std::string>());
        take(l, "url", c.llm.url);
        take(l, "api_key_env", c.llm.api_key_env);
        take(l, "model", c.llm.model);
        take(l, "temperature", c.llm.temperature);
        take(l, "max_tokens", c.llm.max_tokens);
        take(l, "concurrency", c.llm.concurrency);
        take(l, "timeout_ms", c.llm.timeout_ms);
        take(l, "max_attempts", c.llm.max_attempts);
    }
    if (j.contains("scorer")) {
        const auto& s = j.at("scorer");
        reject_unknown(s, {"kind", "url"}, "scorer");
        take(s, "kind", c.scorer.kind);
        take(s, "url", c.scorer.url);
    }
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        reject_unknown(d, {"name", "format", "sample_size", "seed"}, "dataset");
        take(d, "name", c.dataset_name);
        take(d, "format", c.dataset_format);
        if (d.contains("sample_size")) c.sample_size = d.at("sample_size").get<std::size_t>();
        take(d, "seed", c.seed);
    }
    take(j, "success_fraction", c.success_fraction);
    if (j.contains("ablation_formalism"))
        c.ablation_formalism = syntax::parse_formalism(j.at("ablation_formalism").get<std::string>());
    if (c.success_fraction < 0.0 || c.success_fraction > 1.0)
        throw Error(ErrorKind::Config, "success_fraction must lie in [0, 1]");
    if (c.llm.concurrency < 1) throw Error(ErrorKind::Config, "llm.concurrency must be >= 1");
    c.pipeline.validate();
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    require_file(path, "config");
    json j;
    try {
        j = json::parse(text::read_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, path.string() + ": " + e.what());
    }
    try {
        return run_config_from_json(j, fs::absolute(path).parent_path());
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, path.string() + ": " + e.what());
    }
}

int cmd_index(const IndexArgs& args, std::ostream& log) {
    return guarded(log, "index build", [&] {
        require_file(args.corpus, "corpus");
        index::Bm25Params params;
        if (args.k1) params.k1 = *args.k1;
        if (args.b) params.b = *args.b;
        if (params.k1 < 0 || params.b < 0 || params.b > 1) throw Error(ErrorKind::Config, "need k1 >= 0 and 0 <= b <= 1");
        const auto idx = index::Index::build(index::load_corpus_jsonl(args.corpus), params);
        idx.save(args.out);
        log << "index build: " << idx.doc_count() << " paragraphs, " << idx.term_count() << " terms -> "
            << args.out.string() << "\n";
        return static_cast<int>(kOk);
    });
}

int cmd_run(const RunArgs& args, std::ostream& log) {
    return guarded(log, "run", [&]() -> int {
        const auto cfg = load_run_config(args.config);
        const auto method = pipeline::Method::parse(args.method, cfg.ablation_formalism);
        if (args.jobs < 1) throw Error(ErrorKind::Config, "--jobs must be >= 1");

        require_file(args.dataset, "dataset");
        auto records = eval::load_dataset(args.dataset, cfg.dataset_format);
        const auto seed = args.seed.value_or(cfg.seed);
        if (cfg.sample_size && *cfg.sample_size < records.size()) records = eval::sample(records, *cfg.sample_size, seed);
        if (args.limit && *args.limit < records.size()) records.resize(*args.limit);
        const auto dataset_name = cfg.dataset_name.empty() ? args.dataset.stem().string() : cfg.dataset_name;

        std::unique_ptr<syntax::ParseSource> parses;
        if (method.uses_tree()) {
            std::unique_ptr<syntax::FixtureParseSource> fixtures;
            std::unique_ptr<syntax::SidecarParseSource> sidecar;
            if (args.parses) {
                if (!fs::is_directory(*args.parses)) throw Error(ErrorKind::Io, "parses directory not found: " + args.parses->string());
                fixtures = std::make_unique<syntax::FixtureParseSource>(*args.parses);
            }
            if (args.sidecar) {
                sidecar = std::make_unique<syntax::SidecarParseSource>(*args.sidecar);
                if (!sidecar->healthy()) {
                    if (!fixtures) throw Error(ErrorKind::DependencyUnavailable, "sidecar " + *args.sidecar + " is not healthy");
                    log << "run: sidecar " << *args.sidecar << " unhealthy, using fixture parses only\n";
                    sidecar.reset();
                }
            }
            if (!fixtures && !sidecar) throw Error(ErrorKind::Config, method.name() + " needs --parses or --sidecar");
            parses = std::make_unique<syntax::LayeredParseSource>(std::move(fixtures), std::move(sidecar));
        }

        std::optional<index::Index> idx;
        if (method.kind != pipeline::MethodKind::cot_only) {
            if (!args.index) throw Error(ErrorKind::Config, method.name() + " needs --index");
            idx = index::Index::load(*args.index);
        }
        std::unique_ptr<index::RelevanceScorer> scorer;
        if (method.kind == pipeline::MethodKind::tree_retrieval) scorer = make_scorer(cfg.scorer);

        llm::CompletionParams params;
        params.model = cfg.llm.model;
        params.temperature = cfg.llm.temperature;
        params.max_tokens = cfg.llm.max_tokens;
        llm::LlmGateway gateway(make_provider(cfg.llm), params, cfg.llm.concurrency);

        auto pcfg = cfg.pipeline;
        pcfg.formalism = method.formalism;
        const pipeline::Engine engine(pcfg, {idx ? &*idx : nullptr, &gateway, scorer.get()});

        const auto done = completed_ids(args.out, log);
        std::vector<const eval::QuestionRecord*> todo;
        for (const auto& r : records)
            if (!done.count(r.id)) todo.push_back(&r);

        json manifest{{"version", version()},
                      {"command", "run"},
                      {"method", method.name()},
                      {"dataset", {{"id", dataset_name}, {"path", args.dataset.string()}, {"sha256", file_sha256(args.dataset)},
                                   {"format", cfg.dataset_format}, {"questions", records.size()}}},
                      {"config", cfg.raw},
                      {"pipeline", pipeline::to_json(pcfg)},
                      {"seed", seed},
                      {"jobs", args.jobs},
                      {"started_at", utc_now()},
                      {"resumed_questions", records.size() - todo.size()}};
        if (idx) manifest["index"] = {{"path", args.index->string()}, {"sha256", index_checksums(*args.index)}};
        if (cfg.llm.provider == "mock") manifest["transcript_sha256"] = file_sha256(cfg.llm.transcript);
        if (args.parses) manifest["parses"] = args.parses->string();
        if (args.sidecar) manifest["sidecar"] = *args.sidecar;
        const fs::path manifest_path = args.out.string() + ".manifest.json";
        if (args.out.has_parent_path()) fs::create_directories(args.out.parent_path());
        text::write_file(manifest_path, manifest.dump(2) + "\n");

        std::ofstream out(args.out, std::ios::app);
        if (!out) throw Error(ErrorKind::Io, "cannot open " + args.out.string());
        std::ofstream errors;

        // Results land in slots; a prefix of finished slots is flushed in
        // dataset order so output does not depend on --jobs.
        struct Slot {
            bool ready = false;
            std::optional<pipeline::RunTrace> trace;
            std::string error;
        };
        std::vector<Slot> slots(todo.size());
        std::mutex mu;
        std::size_t next_flush = 0;
        std::size_t ok = 0, failed = 0;
        std::atomic<std::size_t> next{0};
        std::atomic<bool> stop{false};
        std::optional<Error> fatal;

        auto flush = [&] {
            while (next_flush < slots.size() && slots[next_flush].ready) {
                auto& s = slots[next_flush];
                if (s.trace && !s.trace->error) {
                    out << pipeline::trace_line(*s.trace) << '\n' << std::flush;
                    ++ok;
                } else {
                    if (!errors.is_open()) errors.open(args.out.string() + ".errors.jsonl", std::ios::app);
                    json e{{"question_id", todo[next_flush]->id}, {"error", s.trace ? *s.trace->error : s.error}};
                    errors << e.dump() << '\n' << std::flush;
                    ++failed;
                }
                s.trace.reset();
                ++next_flush;
            }
        };

        auto worker = [&] {
            for (;;) {
                if (stop) return;
                const auto i = next.fetch_add(1);
                if (i >= todo.size()) return;
                const auto& rec = *todo[i];
                Slot slot;
                try {
                    std::optional<syntax::SyntaxTree> tree;
                    if (parses) tree = parses->parse(rec.id, rec.question, method.formalism);
                    slot.trace = engine.run({rec.id, rec.question, dataset_name}, method, tree ? &*tree : nullptr);
                } catch (const Error& e) {
                    if (is_dependency_failure(e.kind())) {
                        std::lock_guard lock(mu);
                        if (!fatal) fatal = e;
                        stop = true;
                        return;
                    }
                    slot.error = e.what();
                }
                slot.ready = true;
                std::lock_guard lock(mu);
                slots[i] = std::move(slot);
                flush();
            }
        };

        std::vector<std::thread> pool;
        const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(args.jobs), std::max<std::size_t>(todo.size(), 1));
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();

        manifest["finished_at"] = utc_now();
        manifest["summary"] = {{"written", ok}, {"failed", failed}, {"skipped_resume", records.size() - todo.size()},
                               {"llm_calls", gateway.ledger().size()}};
        text::write_file(manifest_path, manifest.dump(2) + "\n");

        log << "run: " << method.name() << " on " << dataset_name << ": " << ok << " written, " << failed << " failed, "
            << records.size() - todo.size() << " already done, " << gateway.ledger().size() << " LLM calls\n";
        if (fatal) {
            log << "run: aborted: " << fatal->what() << "\n";
            return kDependencyUnavailable;
        }
        const auto attempted = ok + failed;
        if (attempted > 0 && static_cast<double>(ok) / static_cast<double>(attempted) < cfg.success_fraction)
            return kPartialFailure;
        return kOk;
    });
}

int cmd_eval(const EvalArgs& args, std::ostream& log) {
    return guarded(log, "eval", [&]() -> int {
        const auto metrics = eval::parse_metric_list(args.metrics);
        const auto traces = read_traces(args.traces);
        if (traces.empty()) throw Error(ErrorKind::SchemaMismatch, "no traces in " + args.traces.string());
        require_file(args.dataset, "dataset");
        const auto records = eval::load_dataset(args.dataset, args.dataset_format);

        std::unique_ptr<eval::AnswerExtractor> extractor;
        if (args.extractor_url) {
            extractor = std::make_unique<eval::HttpAnswerExtractor>(*args.extractor_url);
        } else {
            extractor = std::make_unique<eval::ContainmentExtractor>();
        }

        std::optional<std::uint64_t> seed;
        const fs::path manifest_path = args.traces.string() + ".manifest.json";
        if (fs::exists(manifest_path)) {
            const auto m = json::parse(text::read_file(manifest_path));
            if (m.contains("seed")) seed = m.at("seed").get<std::uint64_t>();
        }

        std::map<std::pair<std::string, std::string>, std::vector<eval::Prediction>> groups;
        std::vector<std::pair<std::string, std::string>> order;
        for (const auto& t : traces) {
            const auto key = std::make_pair(t.dataset, t.method);
            if (!groups.count(key)) order.push_back(key);
            groups[key].push_back({t.question_id, t.final_answer.value_or("")});
        }
        std::vector<eval::MetricsReport> reports;
        json out{{"reports", json::array()}};
        for (const auto& key : order) {
            auto r = eval::evaluate(records, groups.at(key), metrics, *extractor);
            r.dataset = key.first;
            r.method = key.second;
            r.seed = seed;
            out["reports"].push_back(eval::to_json(r));
            reports.push_back(std::move(r));
        }
        const auto table = eval::render_table(reports);
        out["table"] = table;
        if (args.out.has_parent_path()) fs::create_directories(args.out.parent_path());
        text::write_file(args.out, out.dump(2) + "\n");
        text::write_file(args.out.string() + ".table.txt", table);
        for (const auto& r : reports) {
            log << "eval: " << r.dataset << " / " << r.method << " (n=" << r.sample_size() << ")";
            for (const auto& [m, v] : r.aggregates) log << " " << eval::to_string(m) << "=" << v;
            log << "\n";
        }
        return static_cast<int>(kOk);
    });
}

int cmd_cost(const CostArgs& args, std::ostream& log) {
    return guarded(log, "cost", [&]() -> int {
        const auto traces = read_traces(args.traces);
        require_file(args.pricing, "pricing");
        const auto pricing = llm::PricingTable::load(args.pricing);
        std::vector<llm::LedgerEntry> ledger;
        for (const auto& t : traces) {
            for (const auto& c : t.calls()) {
                ledger.push_back({c.stage, t.dataset, t.method, t.question_id, c.model, c.prompt_tokens,
                                  c.completion_tokens, c.estimated});
            }
        }
        const auto report = llm::cost_report(ledger, pricing);
        fs::path json_path = args.out;
        fs::path csv_path = args.out;
        if (args.out.extension() == ".csv") {
            json_path.replace_extension(".json");
        } else {
            csv_path.replace_extension(".csv");
        }
        if (args.out.has_parent_path()) fs::create_directories(args.out.parent_path());
        text::write_file(json_path, report.to_json().dump(2) + "\n");
        text::write_file(csv_path, report.to_csv());
        log << "cost: " << report.total.calls << " calls, " << report.total.prompt_tokens << " input / "
            << report.total.completion_tokens << " output tokens, $" << report.total.usd << "\n";
        return static_cast<int>(kOk);
    });
}

}  // namespace treeqa::cli
