#include <iostream>

#include "CLI11.hpp"

#include "vulnloc/errors.hpp"
#include "vulnloc/pipeline.hpp"

using namespace vulnloc;

int main(int argc, char** argv) {
    CLI::App app{"source-to-IR vulnerability detection and line locating pipeline"};
    app.require_subcommand(1);

    std::string src_dir, api_list, out_path, ll_dir, candidates_path, index_path;
    std::string corpus_path, truth_dir, dataset_path, embedding_path, model_path;
    std::string report_path, config_path, phase = "all", candidate_id;
    double threshold = 0.5;
    int dim = 0, max_tokens = 0;

    auto* extract = app.add_subcommand("extract", "extract syntax-based candidates from C sources");
    extract->add_option("--src", src_dir, "source directory")->required();
    extract->add_option("--api-list", api_list, "library/API function name list")->required();
    extract->add_option("--out", out_path, "candidate list output")->required();

    auto* ingest = app.add_subcommand("ingest-ir", "parse textual IR files into a module index");
    ingest->add_option("--ll", ll_dir, "directory of .ll files")->required();
    ingest->add_option("--out", out_path, "module index output")->required();

    std::string dump_graph_path;
    auto* slice = app.add_subcommand("slice", "build semantic candidates by dependence slicing");
    slice->add_option("--candidates", candidates_path, "candidate list")->required();
    slice->add_option("--ir", index_path, "module index")->required();
    slice->add_option("--out", out_path, "candidate corpus output")->required();
    slice->add_option("--dump-graph", dump_graph_path,
                      "write the dependence graph as a from/to/kind edge list");

    bool first_only = false;
    auto* label = app.add_subcommand("label", "label the corpus from diffs or annotations");
    label->add_option("--corpus", corpus_path, "candidate corpus")->required();
    label->add_option("--truth", truth_dir, "truth directory")->required();
    label->add_flag("--first-only", first_only, "keep only the first labeled statement");
    label->add_option("--out", out_path, "labeled corpus output")->required();

    auto* encode = app.add_subcommand("encode", "tokenize, embed, and vectorize the corpus");
    encode->add_option("--corpus", corpus_path, "labeled corpus")->required();
    encode->add_option("--config", config_path, "pipeline config")->required();
    encode->add_option("--dim", dim, "embedding dimension override");
    encode->add_option("--max-tokens", max_tokens, "token budget override");
    encode->add_option("--embedding", embedding_path, "embedding table path");
    encode->add_option("--out", out_path, "dataset output")->required();

    auto* train_cmd = app.add_subcommand("train", "train the detection model");
    train_cmd->add_option("--data", dataset_path, "encoded dataset")->required();
    train_cmd->add_option("--embedding", embedding_path, "embedding table")->required();
    train_cmd->add_option("--config", config_path, "pipeline config")->required();
    train_cmd->add_option("--out", out_path, "model output")->required();

    auto* detect_cmd = app.add_subcommand("detect", "score candidates and locate lines");
    detect_cmd->add_option("--model", model_path, "trained model")->required();
    detect_cmd->add_option("--data", dataset_path, "encoded dataset")->required();
    detect_cmd->add_option("--embedding", embedding_path, "embedding table")->required();
    detect_cmd->add_option("--config", config_path, "pipeline config")->required();
    detect_cmd->add_option("--threshold", threshold, "line score threshold");
    detect_cmd->add_option("--report", out_path, "detection report output")->required();

    auto* eval_cmd = app.add_subcommand("eval", "compare a report against ground truth");
    eval_cmd->add_option("--report", report_path, "detection report")->required();
    eval_cmd->add_option("--truth", corpus_path, "labeled corpus with ground truth")->required();
    eval_cmd->add_option("--out", out_path, "summary output")->required();

    auto* run_cmd = app.add_subcommand("run", "run the whole pipeline from a config file");
    run_cmd->add_option("--config", config_path, "pipeline config")->required();
    run_cmd->add_option("--phase", phase, "all | train | test")
        ->check(CLI::IsMember({"all", "train", "test"}));

    auto* explain_cmd = app.add_subcommand("explain", "trace one candidate through the artifacts");
    explain_cmd->add_option("--config", config_path, "pipeline config")->required();
    explain_cmd->add_option("--id", candidate_id, "candidate id")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1; // usage problems exit with 1
    }

    try {
        if (extract->parsed()) {
            run_extract(src_dir, api_list, out_path);
        } else if (ingest->parsed()) {
            run_ingest(ll_dir, out_path);
        } else if (slice->parsed()) {
            run_slice(candidates_path, index_path, out_path, dump_graph_path);
        } else if (label->parsed()) {
            run_label(corpus_path, truth_dir, out_path, first_only);
        } else if (encode->parsed()) {
            PipelineConfig cfg = PipelineConfig::load(config_path);
            if (dim > 0)
                cfg.embed_dim = dim;
            if (max_tokens > 0)
                cfg.max_tokens = max_tokens;
            if (embedding_path.empty())
                embedding_path = out_path + ".embedding";
            run_encode(cfg, corpus_path, embedding_path, out_path);
        } else if (train_cmd->parsed()) {
            PipelineConfig cfg = PipelineConfig::load(config_path);
            run_train(cfg, dataset_path, embedding_path, out_path);
        } else if (detect_cmd->parsed()) {
            PipelineConfig cfg = PipelineConfig::load(config_path);
            cfg.threshold = threshold;
            run_detect(cfg, model_path, dataset_path, embedding_path, out_path);
        } else if (eval_cmd->parsed()) {
            run_eval(report_path, corpus_path, out_path);
        } else if (run_cmd->parsed()) {
            PipelineConfig cfg = PipelineConfig::load(config_path);
            Phase p = phase == "train" ? Phase::Train : phase == "test" ? Phase::Test : Phase::All;
            run_pipeline(cfg, p);
        } else if (explain_cmd->parsed()) {
            PipelineConfig cfg = PipelineConfig::load(config_path);
            std::cout << explain_candidate(cfg, candidate_id);
        }
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
