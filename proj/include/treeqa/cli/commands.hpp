#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <string>

#include "treeqa/error.hpp"
#include "treeqa/pipeline/config.hpp"

namespace treeqa::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kDependencyUnavailable = 3, kPartialFailure = 4 };

int exit_code_for(ErrorKind kind);

struct LlmSettings {
    std::string provider = "mock";  // mock | http
    std::filesystem::path transcript;
    std::optional<std::filesystem::path> record_transcript;
    std::string url;
    std::string api_key_env;
    std::string model = "gpt-4o-mini";
    double temperature = 0.0;
    int max_tokens = 1024;
    int concurrency = 4;
    int timeout_ms = 60000;
    int max_attempts = 4;
};

struct ScorerSettings {
    std::string kind = "bm25-passthrough";  // bm25-passthrough | http
    std::string url;
};

// Declarative run configuration. Relative paths resolve against the config
// file's directory.
struct RunConfig {
    pipeline::PipelineConfig pipeline;
    LlmSettings llm;
    ScorerSettings scorer;
    std::string dataset_name;  // empty: dataset file stem
    std::string dataset_format = "unified";
    std::optional<std::size_t> sample_size;
    std::uint64_t seed = 0;
    double success_fraction = 1.0;
    syntax::Formalism ablation_formalism = syntax::Formalism::dependency;
    nlohmann::json raw;
};

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

struct IndexArgs {
    std::filesystem::path corpus;
    std::filesystem::path out;
    std::optional<double> k1;
    std::optional<double> b;
};

struct RunArgs {
    std::filesystem::path dataset;
    std::string method;
    std::filesystem::path config;
    std::optional<std::filesystem::path> index;
    std::optional<std::filesystem::path> parses;
    std::optional<std::string> sidecar;
    std::filesystem::path out;
    int jobs = 1;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> limit;
};

struct EvalArgs {
    std::filesystem::path traces;
    std::filesystem::path dataset;
    std::string dataset_format = "unified";
    std::string metrics = "cover_em";
    std::filesystem::path out;
    std::optional<std::string> extractor_url;
};

struct CostArgs {
    std::filesystem::path traces;
    std::filesystem::path pricing;
    std::filesystem::path out;
};

// Each command reports progress and errors on `log` and returns an exit code.
int cmd_index(const IndexArgs& args, std::ostream& log);
int cmd_run(const RunArgs& args, std::ostream& log);
int cmd_eval(const EvalArgs& args, std::ostream& log);
int cmd_cost(const CostArgs& args, std::ostream& log);

std::string version();

}  // namespace treeqa::cli
