#include "treeqa/error.hpp"

namespace treeqa {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MalformedConllu: return "MalformedConllu";
        case ErrorKind::MultipleRoots: return "MultipleRoots";
        case ErrorKind::CyclicHeads: return "CyclicHeads";
        case ErrorKind::UnbalancedBrackets: return "UnbalancedBrackets";
        case ErrorKind::EmptyConstituent: return "EmptyConstituent";
        case ErrorKind::DuplicateDocId: return "DuplicateDocId";
        case ErrorKind::EmptyCorpus: return "EmptyCorpus";
        case ErrorKind::EmptyQuery: return "EmptyQuery";
        case ErrorKind::ScorerUnavailable: return "ScorerUnavailable";
        case ErrorKind::IndexFormat: return "IndexFormat";
        case ErrorKind::MissingBinding: return "MissingBinding";
        case ErrorKind::ProviderError: return "ProviderError";
        case ErrorKind::RetriesExhausted: return "RetriesExhausted";
        case ErrorKind::TranscriptMiss: return "TranscriptMiss";
        case ErrorKind::UnpricedModel: return "UnpricedModel";
        case ErrorKind::SchemaMismatch: return "SchemaMismatch";
        case ErrorKind::Io: return "Io";
        case ErrorKind::Config: return "Config";
        case ErrorKind::DependencyUnavailable: return "DependencyUnavailable";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

LineError::LineError(ErrorKind kind, std::size_t line, const std::string& message)
    : Error(kind, "line " + std::to_string(line) + ": " + message), line_(line) {}

}  // namespace treeqa
