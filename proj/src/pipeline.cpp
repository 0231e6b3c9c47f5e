#include "vulnloc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vulnloc/corpus.hpp"
#include "vulnloc/detect.hpp"
#include "vulnloc/errors.hpp"
#include "vulnloc/lexer.hpp"
#include "vulnloc/metrics.hpp"
#include "vulnloc/train.hpp"
#include "vulnloc/text.hpp"

namespace fs = std::filesystem;

namespace vulnloc {

namespace {

std::vector<fs::path> sorted_files(const std::string& dir, const std::vector<std::string>& exts) {
    if (!fs::exists(dir))
        throw DataError("directory does not exist: " + dir);
    std::vector<fs::path> out;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file())
            continue;
        for (const auto& ext : exts)
            if (entry.path().extension() == ext)
                out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void require_artifact(const std::string& path, const std::string& producing_stage) {
    if (!fs::exists(path))
        throw DataError("missing artifact '" + path + "'; run the '" + producing_stage +
                        "' stage first");
}

std::vector<IrModule> load_modules(const std::string& index_path) {
    auto lines = split(read_file(index_path), '\n');
    if (lines.empty() || lines[0].rfind("# vulnloc-ir-index", 0) != 0)
        throw FormatError("IR index missing version header");
    std::vector<IrModule> modules;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto t = trim(lines[i]);
        if (t.empty())
            continue;
        auto fields = split_ws(t);
        if (fields[0] != "module" || fields.size() < 2)
            continue;
        modules.push_back(parse_ll(read_file(fields[1]), fields[1]));
    }
    return modules;
}

// Ground truth per candidate id, reconstructed from a labeled corpus.
std::map<std::string, CandidateTruth> truths_from_corpus(const Corpus& corpus) {
    std::map<std::string, CandidateTruth> out;
    for (const auto& c : corpus.candidates) {
        CandidateTruth truth;
        truth.vulnerable = !c.label.empty();
        for (int idx : c.label) {
            const auto& st = c.statements[static_cast<std::size_t>(idx) - 1];
            if (st.has_provenance())
                truth.lines.insert({st.source_file, st.source_line});
        }
        out[c.id] = truth;
    }
    return out;
}

} // namespace

std::vector<std::string> run_extract(const std::string& source_dir, const std::string& api_list,
                                     const std::string& out_path) {
    auto api = load_api_names(api_list);
    std::vector<SyntaxCandidate> all;
    for (const auto& path : sorted_files(source_dir, {".c", ".h"})) {
        std::string file_id = fs::relative(path, source_dir).string();
        auto tokens = tokenize_c(read_file(path.string()), file_id);
        auto root = parse_c_unit(tokens);
        auto candidates = extract_candidates(root, tokens, api);
        all.insert(all.end(), candidates.begin(), candidates.end());
    }
    write_file(out_path, write_candidate_list(all));
    return {out_path};
}

std::vector<std::string> run_ingest(const std::string& ir_dir, const std::string& out_path) {
    std::ostringstream out;
    out << "# vulnloc-ir-index v1\n";
    std::vector<IrModule> modules;
    for (const auto& path : sorted_files(ir_dir, {".ll"})) {
        modules.push_back(parse_ll(read_file(path.string()), path.string()));
        out << "module " << path.string() << ' ' << modules.back().source_file << '\n';
    }
    auto groups = group_and_link(modules);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        out << "group";
        for (int mi : groups[g].members)
            out << ' ' << mi;
        out << '\n';
    }
    write_file(out_path, out.str());
    return {out_path};
}

std::vector<std::string> run_slice(const std::string& candidates_path,
                                   const std::string& index_path, const std::string& out_path,
                                   const std::string& dump_graph_path) {
    require_artifact(candidates_path, "extract");
    require_artifact(index_path, "ingest-ir");
    auto candidates = read_candidate_list(read_file(candidates_path));
    auto modules = load_modules(index_path);
    auto groups = group_and_link(modules);
    auto batch = build_semantic_candidates(candidates, groups, modules);
    if (!dump_graph_path.empty()) {
        std::string dump;
        for (const auto& group : groups)
            dump += build_dependence_graph(group, modules).dump();
        write_file(dump_graph_path, dump);
    }

    Corpus corpus;
    corpus.labeled = false;
    corpus.candidates = std::move(batch.candidates);
    corpus.excluded.assign(corpus.candidates.size(), false);
    write_file(out_path, write_corpus(corpus));
    if (!batch.skipped.empty()) {
        std::cerr << "slice: " << batch.skipped.size() << " candidate(s) had no anchor:";
        for (const auto& id : batch.skipped)
            std::cerr << ' ' << id;
        std::cerr << '\n';
    }
    return {out_path};
}

std::vector<std::string> run_label(const std::string& corpus_path, const std::string& truth_dir,
                                   const std::string& out_path, bool first_only) {
    require_artifact(corpus_path, "slice");
    Corpus corpus = read_corpus(read_file(corpus_path));
    GroundTruth truth = load_ground_truth(truth_dir);
    corpus.labeled = true;
    for (std::size_t i = 0; i < corpus.candidates.size(); ++i) {
        auto outcome = label_candidate(corpus.candidates[i], truth);
        corpus.excluded[i] = truth.addition_only;
        if (first_only && corpus.candidates[i].label.size() > 1)
            corpus.candidates[i].label.resize(1);
        if (!outcome.warning.empty())
            std::cerr << "label: " << outcome.warning << '\n';
    }
    write_file(out_path, write_corpus(corpus));
    return {out_path};
}

std::vector<std::string> run_encode(const PipelineConfig& cfg, const std::string& corpus_path,
                                    const std::string& embedding_path,
                                    const std::string& dataset_path) {
    require_artifact(corpus_path, "slice or label");
    Corpus corpus = read_corpus(read_file(corpus_path));
    auto api = load_api_names(cfg.api_list);

    std::vector<TokenSequence> sequences;
    sequences.reserve(corpus.size());
    for (const auto& cand : corpus.candidates)
        sequences.push_back(symbolize(tokenize_ir(cand), api));

    // The embedding is trained once per corpus and reused afterwards (the
    // detection phase must encode with the training-time table).
    EmbeddingTable table;
    if (fs::exists(embedding_path)) {
        table = read_embedding(read_file(embedding_path));
    } else {
        EmbeddingConfig ecfg;
        ecfg.dim = cfg.embed_dim;
        ecfg.window = cfg.embed_window;
        ecfg.negatives = cfg.embed_negatives;
        ecfg.epochs = cfg.embed_epochs;
        ecfg.seed = cfg.seed;
        std::vector<std::vector<std::string>> docs;
        docs.reserve(sequences.size());
        for (const auto& seq : sequences)
            docs.push_back(seq.tokens);
        table = train_embedding(docs, ecfg);
        write_file(embedding_path, write_embedding(table));
    }

    EncodedDataset dataset;
    dataset.dim = table.dim;
    dataset.max_tokens = cfg.max_tokens;
    for (std::size_t i = 0; i < corpus.candidates.size(); ++i) {
        auto sample = encode_candidate(corpus.candidates[i], corpus.excluded[i], sequences[i],
                                       table, cfg.max_tokens);
        if (sample.mask_empty)
            std::cerr << "encode: " << sample.id
                      << ": labeled lines fell outside the token window; the sample is "
                         "excluded from training\n";
        dataset.samples.push_back(std::move(sample));
    }
    write_file(dataset_path, write_dataset(dataset));
    return {embedding_path, dataset_path};
}

std::vector<std::string> run_train(const PipelineConfig& cfg, const std::string& dataset_path,
                                   const std::string& embedding_path,
                                   const std::string& model_path) {
    require_artifact(dataset_path, "encode");
    require_artifact(embedding_path, "encode");
    auto dataset = read_dataset(read_file(dataset_path));
    auto table = read_embedding(read_file(embedding_path));
    auto samples = materialize_samples(dataset, table);

    ModelHyper hyper = cfg.hyper;
    hyper.input_dim = table.dim;
    TrainResult result = train(samples, hyper, cfg.train);
    if (result.single_class)
        std::cerr << "train: dataset contains a single class; training proceeded anyway\n";
    for (std::size_t e = 0; e < result.epoch_losses.size(); ++e)
        std::cout << "epoch " << e + 1 << " loss " << format_double(result.epoch_losses[e])
                  << '\n';
    write_file(model_path, write_model(result.params));
    return {model_path};
}

std::vector<std::string> run_detect(const PipelineConfig& cfg, const std::string& model_path,
                                    const std::string& dataset_path,
                                    const std::string& embedding_path,
                                    const std::string& report_path) {
    require_artifact(model_path, "train");
    require_artifact(dataset_path, "encode");
    require_artifact(embedding_path, "encode");
    auto model = read_model(read_file(model_path));
    auto dataset = read_dataset(read_file(dataset_path));
    auto table = read_embedding(read_file(embedding_path));
    auto report = detect(model, dataset, table, cfg.threshold);
    write_file(report_path, write_report(report));
    return {report_path};
}

std::vector<std::string> run_eval(const std::string& report_path,
                                  const std::string& labeled_corpus_path,
                                  const std::string& out_path) {
    require_artifact(report_path, "detect");
    require_artifact(labeled_corpus_path, "label");
    auto report = read_report(read_file(report_path));
    auto corpus = read_corpus(read_file(labeled_corpus_path));
    auto summary = aggregate_report(report, truths_from_corpus(corpus));
    write_file(out_path, write_summary(summary));
    return {out_path};
}

namespace {

void manifest_append(const PipelineConfig& cfg, const std::string& stage,
                     const std::vector<std::string>& outputs, long long millis) {
    std::ostringstream entry;
    entry << "v1 stage=" << stage;
    for (const auto& path : outputs)
        entry << " " << fs::path(path).filename().string() << "="
              << std::hex << fnv1a64(read_file(path)) << std::dec;
    entry << " ms=" << millis << '\n';
    std::ofstream out(cfg.manifest_path(), std::ios::app);
    out << entry.str();
}

} // namespace

void run_stage(const std::string& name, const PipelineConfig& cfg) {
    fs::create_directories(cfg.work_dir);
    auto started = std::chrono::steady_clock::now();
    std::vector<std::string> outputs;
    if (name == "extract")
        outputs = run_extract(cfg.source_dir, cfg.api_list, cfg.candidates_path());
    else if (name == "ingest-ir")
        outputs = run_ingest(cfg.ir_dir, cfg.ir_index_path());
    else if (name == "slice")
        outputs = run_slice(cfg.candidates_path(), cfg.ir_index_path(), cfg.corpus_path());
    else if (name == "label")
        outputs = run_label(cfg.corpus_path(), cfg.truth_dir, cfg.labeled_path(),
                            cfg.label_first_only);
    else if (name == "encode-labeled")
        outputs = run_encode(cfg, cfg.labeled_path(), cfg.embedding_path(), cfg.dataset_path());
    else if (name == "encode")
        outputs = run_encode(cfg, fs::exists(cfg.labeled_path()) ? cfg.labeled_path()
                                                                 : cfg.corpus_path(),
                             cfg.embedding_path(), cfg.dataset_path());
    else if (name == "train")
        outputs = run_train(cfg, cfg.dataset_path(), cfg.embedding_path(), cfg.model_path());
    else if (name == "detect")
        outputs = run_detect(cfg, cfg.model_path(), cfg.dataset_path(), cfg.embedding_path(),
                             cfg.report_path());
    else if (name == "eval")
        outputs = run_eval(cfg.report_path(), cfg.labeled_path(), cfg.summary_path());
    else
        throw DataError("unknown stage: " + name);
    auto millis = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - started)
                      .count();
    manifest_append(cfg, name, outputs, millis);
    std::cout << "stage " << name << " done";
    for (const auto& path : outputs)
        std::cout << ' ' << path;
    std::cout << '\n';
}

void run_pipeline(const PipelineConfig& cfg, Phase phase) {
    std::vector<std::string> stages;
    if (phase == Phase::Test) {
        stages = {"extract", "ingest-ir", "slice", "encode", "detect"};
    } else if (phase == Phase::Train) {
        stages = {"extract", "ingest-ir", "slice", "label", "encode-labeled", "train"};
    } else {
        stages = {"extract", "ingest-ir", "slice",  "label",
                  "encode-labeled", "train", "detect", "eval"};
    }
    for (const auto& stage : stages)
        run_stage(stage, cfg);
}

std::string explain_candidate(const PipelineConfig& cfg, const std::string& id) {
    require_artifact(cfg.corpus_path(), "slice");
    std::string corpus_file =
        fs::exists(cfg.labeled_path()) ? cfg.labeled_path() : cfg.corpus_path();
    Corpus corpus = read_corpus(read_file(corpus_file));

    const SemanticCandidate* found = nullptr;
    for (const auto& c : corpus.candidates)
        if (c.id == id)
            found = &c;
    if (!found) {
        std::ostringstream err;
        err << "unknown candidate id '" << id << "'; nearest ids:";
        int shown = 0;
        for (const auto& c : corpus.candidates) {
            if (c.id.substr(0, 2) == id.substr(0, 2) || shown < 3) {
                err << ' ' << c.id;
                ++shown;
            }
            if (shown >= 5)
                break;
        }
        throw DataError(err.str());
    }

    std::ostringstream out;
    out << "candidate " << found->id << " kind=" << kind_code(found->kind) << " at "
        << found->file << ':' << found->line << ':' << found->column << '\n';
    out << "functions: " << join(found->functions_involved, ", ") << '\n';
    out << "label: ";
    if (found->label.empty()) {
        out << "0\n";
    } else {
        for (std::size_t i = 0; i < found->label.size(); ++i)
            out << (i ? "," : "") << found->label[i];
        out << '\n';
    }

    std::map<int, std::pair<double, bool>> line_scores; // statement -> (score, detected)
    if (fs::exists(cfg.report_path())) {
        auto report = read_report(read_file(cfg.report_path()));
        for (const auto& entry : report.entries)
            if (entry.id == id) {
                out << "pooled score " << format_double(entry.score) << " -> "
                    << (entry.vulnerable ? "vulnerable" : "not vulnerable") << '\n';
                for (const auto& l : entry.lines)
                    line_scores[l.statement] = {l.score, l.detected};
            }
    }

    for (std::size_t i = 0; i < found->statements.size(); ++i) {
        const auto& st = found->statements[i];
        out << "  " << i + 1 << '\t';
        if (st.is_global)
            out << "global";
        else if (st.has_provenance())
            out << st.source_file << ':' << st.source_line;
        else
            out << "no-debug-info";
        auto score = line_scores.find(static_cast<int>(i) + 1);
        if (score != line_scores.end())
            out << "\tscore=" << format_double(score->second.first)
                << (score->second.second ? " DETECTED" : "");
        out << '\t' << st.text << '\n';
    }

    if (!line_scores.empty()) {
        out << "detected source lines:";
        bool any = false;
        for (std::size_t i = 0; i < found->statements.size(); ++i) {
            auto score = line_scores.find(static_cast<int>(i) + 1);
            if (score != line_scores.end() && score->second.second &&
                found->statements[i].has_provenance()) {
                out << ' ' << found->statements[i].source_file << ':'
                    << found->statements[i].source_line;
                any = true;
            }
        }
        if (!any)
            out << " none";
        out << '\n';
    }
    return out.str();
}

} // namespace vulnloc
