#include "treeqa/syntax/parse_source.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "treeqa/error.hpp"
#include "treeqa/text.hpp"

namespace treeqa::syntax {

FixtureParseSource::FixtureParseSource(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path FixtureParseSource::file_for(const std::filesystem::path& dir, const std::string& question_id,
                                                   Formalism formalism) {
    return dir / (question_id + (formalism == Formalism::dependency ? ".conllu" : ".ptb"));
}

bool FixtureParseSource::has(const std::string& question_id, Formalism formalism) const {
    return std::filesystem::exists(file_for(dir_, question_id, formalism));
}

SyntaxTree FixtureParseSource::parse(const std::string& question_id, const std::string& question,
                                     Formalism formalism) {
    const auto path = file_for(dir_, question_id, formalism);
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::Io, "no fixture parse at " + path.string());
    const auto doc = text::read_file(path);
    if (formalism == Formalism::dependency) return parse_conllu(doc);
    return parse_ptb(doc, question);
}

SidecarParseSource::SidecarParseSource(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

namespace {
httplib::Client make_client(const std::string& url, std::chrono::milliseconds timeout) {
    httplib::Client cli(url);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    return cli;
}
}  // namespace

bool SidecarParseSource::healthy() const {
    auto cli = make_client(base_url_, timeout_);
    auto res = cli.Get("/healthz");
    return res && res->status == 200;
}

SyntaxTree SidecarParseSource::parse(const std::string& question_id, const std::string& question,
                                     Formalism formalism) {
    auto cli = make_client(base_url_, timeout_);
    const nlohmann::json body{{"text", question}, {"formalism", std::string(to_string(formalism))}};
    auto res = cli.Post("/parse", body.dump(), "application/json");
    if (!res)
        throw Error(ErrorKind::DependencyUnavailable,
                    "sidecar " + base_url_ + " unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw Error(ErrorKind::DependencyUnavailable, "sidecar returned HTTP " + std::to_string(res->status) +
                                                          " for question " + question_id);
    nlohmann::json reply;
    try {
        reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::DependencyUnavailable, std::string("sidecar sent invalid JSON: ") + e.what());
    }
    const auto format = reply.value("format", std::string());
    const auto payload = reply.value("payload", std::string());
    if (format == "conllu") return parse_conllu(payload);
    if (format == "ptb") return parse_ptb(payload, question);
    throw Error(ErrorKind::DependencyUnavailable, "sidecar sent unknown format '" + format + "'");
}

LayeredParseSource::LayeredParseSource(std::unique_ptr<FixtureParseSource> fixtures,
                                       std::unique_ptr<SidecarParseSource> sidecar)
    : fixtures_(std::move(fixtures)), sidecar_(std::move(sidecar)) {}

SyntaxTree LayeredParseSource::parse(const std::string& question_id, const std::string& question,
                                     Formalism formalism) {
    if (fixtures_ && (fixtures_->has(question_id, formalism) || !sidecar_))
        return fixtures_->parse(question_id, question, formalism);
    if (!sidecar_) throw Error(ErrorKind::Config, "no parse source configured");
    return sidecar_->parse(question_id, question, formalism);
}

}  // namespace treeqa::syntax
