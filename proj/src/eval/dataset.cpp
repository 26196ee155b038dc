#include "treeqa/eval/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <set>

#include "treeqa/error.hpp"
#include "treeqa/text.hpp"

namespace treeqa::eval {

namespace {

using nlohmann::json;

std::string string_id(const json& j, std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
        if (!j.contains(k)) continue;
        const auto& v = j.at(k);
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    }
    throw Error(ErrorKind::SchemaMismatch, "record has no id field");
}

std::vector<std::string> string_or_list(const json& v) {
    if (v.is_string()) return {v.get<std::string>()};
    return v.get<std::vector<std::string>>();
}

void push_unique(std::vector<std::string>& out, const std::string& s) {
    if (!text::trim(s).empty() && std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
}

QuestionRecord unified(const json& j) {
    QuestionRecord r;
    r.id = string_id(j, {"id"});
    r.question = j.at("question").get<std::string>();
    for (const auto& a : string_or_list(j.at("answers"))) push_unique(r.answers, a);
    if (j.contains("entities")) r.entities = j.at("entities").get<std::vector<std::string>>();
    if (j.contains("qa_pairs")) {
        for (const auto& p : j.at("qa_pairs")) r.qa_pairs.push_back({p.at("q").get<std::string>(), string_or_list(p.at("a"))});
    }
    return r;
}

QuestionRecord short_answer(const json& j) {
    QuestionRecord r;
    r.id = string_id(j, {"_id", "id"});
    r.question = j.at("question").get<std::string>();
    push_unique(r.answers, j.at("answer").get<std::string>());
    if (j.contains("answer_aliases")) {
        for (const auto& a : j.at("answer_aliases").get<std::vector<std::string>>()) push_unique(r.answers, a);
    }
    return r;
}

QuestionRecord ambigdoc(const json& j) {
    QuestionRecord r;
    r.id = string_id(j, {"qid", "id"});
    r.question = j.at("question").get<std::string>();
    for (const auto& d : j.at("documents")) {
        push_unique(r.entities, d.at("title").get<std::string>());
        push_unique(r.answers, d.at("answer").get<std::string>());
    }
    return r;
}

QuestionRecord asqa(const json& j) {
    QuestionRecord r;
    r.id = string_id(j, {"sample_id", "id"});
    r.question = j.at("ambiguous_question").get<std::string>();
    for (const auto& p : j.at("qa_pairs")) {
        QaPair pair{p.at("question").get<std::string>(), p.at("short_answers").get<std::vector<std::string>>()};
        for (const auto& a : pair.answers) push_unique(r.answers, a);
        r.qa_pairs.push_back(std::move(pair));
    }
    return r;
}

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    // Rejection sampling keeps draws identical across standard libraries.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

}  // namespace

const std::vector<std::string>& dataset_formats() {
    static const std::vector<std::string> formats{"unified", "hotpotqa", "musique", "2wikimqa", "ambigdoc", "asqa"};
    return formats;
}

QuestionRecord parse_record(std::string_view line, std::string_view format) {
    QuestionRecord r;
    try {
        const auto j = json::parse(line);
        if (format == "unified") {
            r = unified(j);
        } else if (format == "hotpotqa" || format == "musique" || format == "2wikimqa") {
            r = short_answer(j);
        } else if (format == "ambigdoc") {
            r = ambigdoc(j);
        } else if (format == "asqa") {
            r = asqa(j);
        } else {
            throw Error(ErrorKind::Config, "unknown dataset format '" + std::string(format) + "'");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaMismatch, std::string(format) + " row: " + e.what());
    }
    if (r.id.empty()) throw Error(ErrorKind::SchemaMismatch, "record id is empty");
    if (text::trim(r.question).empty()) throw Error(ErrorKind::SchemaMismatch, "record '" + r.id + "' has no question");
    if (r.answers.empty()) throw Error(ErrorKind::SchemaMismatch, "record '" + r.id + "' has no gold answer");
    for (const auto& p : r.qa_pairs) {
        if (p.answers.empty()) throw Error(ErrorKind::SchemaMismatch, "record '" + r.id + "' has a qa pair without answers");
    }
    return r;
}

std::vector<QuestionRecord> load_dataset(const std::filesystem::path& path, std::string_view format) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open dataset " + path.string());
    std::vector<QuestionRecord> out;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            auto r = parse_record(line, format);
            if (!seen.insert(r.id).second) throw Error(ErrorKind::SchemaMismatch, "duplicate question id '" + r.id + "'");
            out.push_back(std::move(r));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Config) throw;
            throw LineError(e.kind(), line_no, path.filename().string() + ": " + e.what());
        }
    }
    return out;
}

std::vector<QuestionRecord> sample(const std::vector<QuestionRecord>& records, std::size_t n, std::uint64_t seed) {
    if (n > records.size())
        throw Error(ErrorKind::Config, "sample size " + std::to_string(n) + " exceeds " + std::to_string(records.size()) + " records");
    std::vector<std::size_t> idx(records.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = i + static_cast<std::size_t>(bounded(rng, idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    std::vector<QuestionRecord> out;
    out.reserve(n);
    for (auto i : idx) out.push_back(records[i]);
    return out;
}

}  // namespace treeqa::eval
