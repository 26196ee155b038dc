#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace treeqa {

enum class ErrorKind {
    // syntax
    MalformedConllu,
    MultipleRoots,
    CyclicHeads,
    UnbalancedBrackets,
    EmptyConstituent,
    // corpus-index
    DuplicateDocId,
    EmptyCorpus,
    EmptyQuery,
    ScorerUnavailable,
    IndexFormat,
    // llm-gateway
    MissingBinding,
    ProviderError,
    RetriesExhausted,
    TranscriptMiss,
    UnpricedModel,
    // evalkit
    SchemaMismatch,
    // plumbing
    Io,
    Config,
    DependencyUnavailable,
};

std::string_view to_string(ErrorKind kind);

// Every module reports failures through this type; `kind()` is the stable
// contract, the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Dataset and transcript readers report the 1-based line that failed.
class LineError : public Error {
public:
    LineError(ErrorKind kind, std::size_t line, const std::string& message);

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace treeqa
