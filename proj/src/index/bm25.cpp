#include "treeqa/index/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "treeqa/error.hpp"
#include "treeqa/text.hpp"

namespace treeqa::index {

namespace {

bool is_token_char(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

constexpr char kMagic[4] = {'T', 'Q', 'I', 'X'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
public:
    explicit Reader(std::string data) : data_(std::move(data)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) throw Error(ErrorKind::IndexFormat, "postings.bin truncated");
    }
    std::string data_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_token_char(c)) {
            cur.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool hit_order(const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
}

std::vector<Paragraph> load_corpus_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open corpus " + path.string());
    std::vector<Paragraph> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            Paragraph p;
            p.doc_id = j.at("id").get<std::string>();
            p.title = j.value("title", std::string());
            p.text = j.at("text").get<std::string>();
            out.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw LineError(ErrorKind::SchemaMismatch, line_no, std::string("corpus row: ") + e.what());
        }
    }
    return out;
}

Index Index::build(std::vector<Paragraph> corpus, Bm25Params params) {
    if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "corpus has no paragraphs");
    std::sort(corpus.begin(), corpus.end(), [](const Paragraph& a, const Paragraph& b) { return a.doc_id < b.doc_id; });
    for (std::size_t i = 1; i < corpus.size(); ++i) {
        if (corpus[i].doc_id == corpus[i - 1].doc_id)
            throw Error(ErrorKind::DuplicateDocId, "doc_id '" + corpus[i].doc_id + "' appears more than once");
    }

    Index idx;
    idx.params_ = params;
    idx.docs_ = std::move(corpus);
    idx.doc_lengths_.reserve(idx.docs_.size());
    std::uint64_t total = 0;
    for (std::size_t ord = 0; ord < idx.docs_.size(); ++ord) {
        const Paragraph& p = idx.docs_[ord];
        if (p.text.empty()) throw Error(ErrorKind::SchemaMismatch, "paragraph '" + p.doc_id + "' has empty text");
        idx.ordinal_.emplace(p.doc_id, ord);
        auto tokens = tokenize(p.title);
        auto body = tokenize(p.text);
        tokens.insert(tokens.end(), std::make_move_iterator(body.begin()), std::make_move_iterator(body.end()));
        std::map<std::string, std::uint32_t> tf;
        for (auto& t : tokens) ++tf[t];
        for (auto& [term, count] : tf)
            idx.postings_[term].push_back(Posting{static_cast<std::uint32_t>(ord), count});
        idx.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total += tokens.size();
    }
    idx.avg_doc_length_ = static_cast<double>(total) / static_cast<double>(idx.docs_.size());
    return idx;
}

double Index::idf(std::size_t df) const {
    const double n = static_cast<double>(docs_.size());
    const double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

const Paragraph* Index::find(std::string_view doc_id) const {
    auto it = ordinal_.find(std::string(doc_id));
    return it == ordinal_.end() ? nullptr : &docs_[it->second];
}

const Paragraph& Index::paragraph(std::string_view doc_id) const {
    const Paragraph* p = find(doc_id);
    if (!p) throw Error(ErrorKind::IndexFormat, "unknown doc_id '" + std::string(doc_id) + "'");
    return *p;
}

const std::vector<Index::Posting>* Index::postings(std::string_view term) const {
    auto it = postings_.find(std::string(term));
    return it == postings_.end() ? nullptr : &it->second;
}

RetrievalResult Index::search(std::string_view query, std::size_t k) const {
    if (k == 0) throw Error(ErrorKind::Config, "k must be >= 1");
    const auto terms = tokenize(query);
    if (terms.empty()) throw Error(ErrorKind::EmptyQuery, "query '" + std::string(query) + "' has no indexable tokens");

    std::vector<double> scores(docs_.size(), 0.0);
    std::vector<std::uint32_t> touched;
    std::vector<bool> seen(docs_.size(), false);
    const double k1 = params_.k1;
    const double b = params_.b;
    // Each query-token occurrence contributes once (bag-of-words query).
    for (const auto& term : terms) {
        const auto* plist = postings(term);
        if (!plist) continue;
        const double w = idf(plist->size());
        for (const Posting& p : *plist) {
            const double tf = p.tf;
            const double norm = k1 * (1.0 - b + b * doc_lengths_[p.doc] / avg_doc_length_);
            scores[p.doc] += w * tf * (k1 + 1.0) / (tf + norm);
            if (!seen[p.doc]) {
                seen[p.doc] = true;
                touched.push_back(p.doc);
            }
        }
    }

    std::vector<Hit> hits;
    hits.reserve(touched.size());
    for (auto d : touched) hits.push_back(Hit{docs_[d].doc_id, scores[d]});
    const std::size_t keep = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), hit_order);
    hits.resize(keep);
    return RetrievalResult{std::string(query), std::move(hits)};
}

void Index::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);

    std::string docs;
    for (const auto& p : docs_) {
        docs += nlohmann::json{{"id", p.doc_id}, {"title", p.title}, {"text", p.text}}.dump();
        docs += '\n';
    }
    text::write_file(dir / "docs.jsonl", docs);

    std::vector<const std::string*> terms;
    terms.reserve(postings_.size());
    for (const auto& [term, _] : postings_) terms.push_back(&term);
    std::sort(terms.begin(), terms.end(), [](const std::string* a, const std::string* b) { return *a < *b; });

    std::string bin(kMagic, 4);
    put_u32(bin, kIndexFormatVersion);
    put_u32(bin, static_cast<std::uint32_t>(docs_.size()));
    for (auto len : doc_lengths_) put_u32(bin, len);
    put_u32(bin, static_cast<std::uint32_t>(terms.size()));
    for (const std::string* term : terms) {
        put_u32(bin, static_cast<std::uint32_t>(term->size()));
        bin += *term;
        const auto& plist = postings_.at(*term);
        put_u32(bin, static_cast<std::uint32_t>(plist.size()));
        for (const auto& p : plist) {
            put_u32(bin, p.doc);
            put_u32(bin, p.tf);
        }
    }
    text::write_file(dir / "postings.bin", bin);

    const nlohmann::json meta{{"format_version", kIndexFormatVersion},
                              {"doc_count", docs_.size()},
                              {"avg_doc_length", avg_doc_length_},
                              {"k1", params_.k1},
                              {"b", params_.b},
                              {"tokenizer", std::string(kTokenizerId)},
                              {"term_count", terms.size()}};
    text::write_file(dir / "meta.json", meta.dump(2) + "\n");
}

Index Index::load(const std::filesystem::path& dir) {
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(text::read_file(dir / "meta.json"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::IndexFormat, std::string("meta.json: ") + e.what());
    }
    if (meta.value("tokenizer", "") != kTokenizerId)
        throw Error(ErrorKind::IndexFormat, "index built with unsupported tokenizer");
    if (meta.value("format_version", 0u) != kIndexFormatVersion)
        throw Error(ErrorKind::IndexFormat, "unsupported index format version");

    Index idx;
    idx.params_ = Bm25Params{meta.at("k1").get<double>(), meta.at("b").get<double>()};
    idx.docs_ = load_corpus_jsonl(dir / "docs.jsonl");
    for (std::size_t i = 0; i < idx.docs_.size(); ++i) idx.ordinal_.emplace(idx.docs_[i].doc_id, i);

    Reader r(text::read_file(dir / "postings.bin"));
    if (r.bytes(4) != std::string(kMagic, 4)) throw Error(ErrorKind::IndexFormat, "bad postings.bin magic");
    if (r.u32() != kIndexFormatVersion) throw Error(ErrorKind::IndexFormat, "postings.bin version mismatch");
    const auto n_docs = r.u32();
    if (n_docs != idx.docs_.size() || n_docs != meta.at("doc_count").get<std::size_t>())
        throw Error(ErrorKind::IndexFormat, "doc count mismatch between index files");
    std::uint64_t total = 0;
    for (std::uint32_t i = 0; i < n_docs; ++i) {
        idx.doc_lengths_.push_back(r.u32());
        total += idx.doc_lengths_.back();
    }
    const auto n_terms = r.u32();
    for (std::uint32_t i = 0; i < n_terms; ++i) {
        auto term = r.bytes(r.u32());
        auto& plist = idx.postings_[term];
        const auto n = r.u32();
        plist.reserve(n);
        for (std::uint32_t j = 0; j < n; ++j) {
            Posting p;
            p.doc = r.u32();
            p.tf = r.u32();
            if (p.doc >= n_docs) throw Error(ErrorKind::IndexFormat, "posting references unknown document");
            plist.push_back(p);
        }
    }
    if (!r.done()) throw Error(ErrorKind::IndexFormat, "trailing bytes in postings.bin");
    idx.avg_doc_length_ = static_cast<double>(total) / static_cast<double>(n_docs);
    return idx;
}

std::vector<Hit> merge_results(const std::vector<RetrievalResult>& results, std::optional<std::size_t> cap) {
    std::map<std::string, double> best;
    for (const auto& r : results) {
        for (const auto& h : r.hits) {
            auto [it, inserted] = best.emplace(h.doc_id, h.score);
            if (!inserted) it->second = std::max(it->second, h.score);
        }
    }
    std::vector<Hit> merged;
    merged.reserve(best.size());
    for (auto& [id, score] : best) merged.push_back(Hit{id, score});
    std::sort(merged.begin(), merged.end(), hit_order);
    if (cap && merged.size() > *cap) merged.resize(*cap);
    return merged;
}

}  // namespace treeqa::index
