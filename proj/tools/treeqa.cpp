#include <CLI11.hpp>

#include <iostream>

#include "treeqa/cli/commands.hpp"

int main(int argc, char** argv) {
    using namespace treeqa::cli;

    CLI::App app{"Syntax-tree guided retrieval-augmented question answering"};
    app.set_version_flag("--version", version());
    app.require_subcommand(1);

    IndexArgs index_args;
    auto* index_cmd = app.add_subcommand("index", "Corpus index commands");
    index_cmd->require_subcommand(1);
    auto* build = index_cmd->add_subcommand("build", "Build a BM25 index from a JSON-lines corpus");
    build->add_option("--corpus", index_args.corpus, "Corpus JSON-lines file {id, title, text}")->required();
    build->add_option("--out", index_args.out, "Output index directory")->required();
    build->add_option("--k1", index_args.k1, "BM25 k1 (default 0.9)");
    build->add_option("--b", index_args.b, "BM25 b (default 0.4)");

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Answer a dataset with one method, streaming traces");
    run->add_option("--dataset", run_args.dataset, "Dataset JSON-lines file")->required();
    run->add_option("--method", run_args.method, "treerare-dt|ct, tree-retrieval-dt|ct, ablation:<mode>")->required();
    run->add_option("--config", run_args.config, "Run config JSON")->required();
    run->add_option("--index", run_args.index, "Index directory");
    auto* parses = run->add_option("--parses", run_args.parses, "Directory of <qid>.conllu / <qid>.ptb parses");
    run->add_option("--sidecar", run_args.sidecar, "Parser sidecar base URL")->excludes(parses);
    run->add_option("--out", run_args.out, "Trace JSON-lines output (appended, resumable)")->required();
    run->add_option("--jobs", run_args.jobs, "Questions answered in parallel")->check(CLI::PositiveNumber);
    run->add_option("--seed", run_args.seed, "Sampling seed (overrides config)");
    run->add_option("--limit", run_args.limit, "Answer at most N questions");

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Score traces against gold answers");
    eval->add_option("--traces", eval_args.traces, "Trace JSON-lines file")->required();
    eval->add_option("--dataset", eval_args.dataset, "Dataset JSON-lines file")->required();
    eval->add_option("--format", eval_args.dataset_format, "Dataset adapter (default unified)");
    eval->add_option("--metrics", eval_args.metrics, "Comma list of cover_em, ar, er, dis_f1")->required();
    eval->add_option("--out", eval_args.out, "Report JSON path (table written next to it)")->required();
    eval->add_option("--extractor-url", eval_args.extractor_url, "Answer extractor service for Dis-F1");

    CostArgs cost_args;
    auto* cost = app.add_subcommand("cost", "Token and USD breakdown of traces");
    cost->add_option("--traces", cost_args.traces, "Trace JSON-lines file")->required();
    cost->add_option("--pricing", cost_args.pricing, "Pricing JSON")->required();
    cost->add_option("--out", cost_args.out, "Report path (.json and .csv are written)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kInputError;
    }

    if (*build) return cmd_index(index_args, std::cerr);
    if (*run) return cmd_run(run_args, std::cerr);
    if (*eval) return cmd_eval(eval_args, std::cerr);
    if (*cost) return cmd_cost(cost_args, std::cerr);
    return kInputError;
}
