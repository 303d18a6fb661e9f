#include <string>

#include <CLI11.hpp>

#include "coach/cli_app.hpp"

int main(int argc, char** argv) {
    CLI::App app{"coach - multi-agent badminton video analysis engine"};
    app.require_subcommand(1);

    coach::RunConfig config;
    std::string query_text;
    std::string predictions_path;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--annotations", config.annotations_path, "annotations CSV");
        cmd->add_option("--matches", config.match_store_path, "match store JSONL");
        cmd->add_option("--qa", config.qa_path, "QA JSONL");
        cmd->add_option("--rules", config.rules_path, "routing rules JSON");
        cmd->add_option("--backend", config.backend,
                        "oracle | scripted:<path> | remote:<endpoint>");
        cmd->add_option("--parallelism", config.dispatch.parallelism, "grounder parallelism");
        cmd->add_option("--max-chunk-strokes", config.dispatch.max_chunk_strokes,
                        "chunk size bound");
        cmd->add_option("--pad-before", config.pads.pad_before_s, "clip pad before (s)");
        cmd->add_option("--pad-after", config.pads.pad_after_s, "clip pad after (s)");
        cmd->add_option("--max-rounds", config.max_rounds, "verification revision bound");
        cmd->add_option("--seed", config.rng_seed, "rng seed");
        cmd->add_option("--out", config.out_dir, "output directory");
        cmd->add_flag("--dry-run", config.dry_run, "print would-be backend requests");
    };

    auto* ingest = app.add_subcommand("ingest", "parse and validate an annotations CSV");
    add_common(ingest);
    auto* gen = app.add_subcommand("gen-data", "synthesize gold-labeled QA and captions");
    add_common(gen);
    auto* qa = app.add_subcommand("qa", "run the Analytical Rally QA pipeline");
    add_common(qa);
    qa->add_option("--query", query_text, "single query text (otherwise --qa file is used)");
    auto* summarize = app.add_subcommand("summarize", "run the Generative Video Summarization "
                                                      "pipeline");
    add_common(summarize);
    summarize->add_option("--request", query_text, "summarization request text")->required();
    auto* eval = app.add_subcommand("eval", "score a predictions file against gold QA");
    add_common(eval);
    eval->add_option("--predictions", predictions_path, "predictions JSONL")->required();

    CLI11_PARSE(app, argc, argv);

    if (ingest->parsed()) return coach::cmd_ingest(config);
    if (gen->parsed()) return coach::cmd_gen_data(config);
    if (qa->parsed()) return coach::cmd_qa(config, query_text);
    if (summarize->parsed()) return coach::cmd_summarize(config, query_text);
    if (eval->parsed()) return coach::cmd_eval(config, predictions_path);
    return coach::exit_code::kConfigError;
}
