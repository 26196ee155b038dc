#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>

#include "treeqa/syntax/tree.hpp"

namespace treeqa::syntax {

// Where question parses come from: committed fixture files or the parsing
// sidecar service.
class ParseSource {
public:
    virtual ~ParseSource() = default;
    virtual SyntaxTree parse(const std::string& question_id, const std::string& question, Formalism formalism) = 0;
};

// Reads <dir>/<qid>.conllu (dependency) or <dir>/<qid>.ptb (constituency).
class FixtureParseSource : public ParseSource {
public:
    explicit FixtureParseSource(std::filesystem::path dir);

    bool has(const std::string& question_id, Formalism formalism) const;
    SyntaxTree parse(const std::string& question_id, const std::string& question, Formalism formalism) override;

    static std::filesystem::path file_for(const std::filesystem::path& dir, const std::string& question_id,
                                          Formalism formalism);

private:
    std::filesystem::path dir_;
};

// HTTP client for the sidecar: POST /parse {text, formalism} -> {format, payload};
// GET /healthz.
class SidecarParseSource : public ParseSource {
public:
    explicit SidecarParseSource(std::string base_url,
                                std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));

    bool healthy() const;
    SyntaxTree parse(const std::string& question_id, const std::string& question, Formalism formalism) override;

private:
    std::string base_url_;
    std::chrono::milliseconds timeout_;
};

// Fixture first, sidecar for anything not on disk.
class LayeredParseSource : public ParseSource {
public:
    LayeredParseSource(std::unique_ptr<FixtureParseSource> fixtures, std::unique_ptr<SidecarParseSource> sidecar);

    SyntaxTree parse(const std::string& question_id, const std::string& question, Formalism formalism) override;

private:
    std::unique_ptr<FixtureParseSource> fixtures_;
    std::unique_ptr<SidecarParseSource> sidecar_;
};

}  // namespace treeqa::syntax
