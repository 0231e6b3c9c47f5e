// Acceptance suite: one pass/fail line per criterion, exit code = failures.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "vulnloc/ast.hpp"
#include "vulnloc/corpus.hpp"
#include "vulnloc/detect.hpp"
#include "vulnloc/lexer.hpp"
#include "vulnloc/metrics.hpp"
#include "vulnloc/pipeline.hpp"
#include "vulnloc/text.hpp"
#include "vulnloc/train.hpp"

using namespace vulnloc;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& rel) { return std::string(FIXTURE_DIR) + "/" + rel; }

int failures = 0;

void criterion(int number, const std::string& name, double budget_seconds,
               const std::function<std::string()>& body) {
    auto started = std::chrono::steady_clock::now();
    std::string problem;
    try {
        problem = body();
    } catch (const std::exception& e) {
        problem = std::string("exception: ") + e.what();
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                         .count();
    if (problem.empty() && seconds > budget_seconds)
        problem = "time budget exceeded (" + format_double(seconds) + "s > " +
                  format_double(budget_seconds) + "s)";
    if (problem.empty()) {
        std::printf("PASS  criterion %2d  %-58s (%.2fs)\n", number, name.c_str(), seconds);
    } else {
        std::printf("FAIL  criterion %2d  %-58s (%.2fs): %s\n", number, name.c_str(), seconds,
                    problem.c_str());
        ++failures;
    }
    std::fflush(stdout);
}

// ---- criterion 1 -----------------------------------------------------------

std::string check_extraction() {
    auto src = read_file(fixture("demo/src/main.c"));
    auto tokens = tokenize_c(src, "main.c");
    auto cands =
        extract_candidates(parse_c_unit(tokens), tokens, load_api_names(fixture("api_names.txt")));
    struct Expected {
        const char* kind;
        const char* name;
        int line;
    };
    const Expected expected[8] = {{"PD", "data", 2},        {"FC", "printf", 6},
                                  {"AD", "dataBuffer", 10}, {"AD", "source", 11},
                                  {"FC", "memset", 14},     {"AE", "data", 19},
                                  {"FC", "memset", 23},     {"FC", "memmove", 25}};
    if (cands.size() != 8)
        return "expected 8 candidates, got " + std::to_string(cands.size());
    for (int i = 0; i < 8; ++i) {
        if (std::string(kind_code(cands[i].kind)) != expected[i].kind ||
            cands[i].name() != expected[i].name || cands[i].line != expected[i].line)
            return "candidate " + std::to_string(i) + " is " + kind_code(cands[i].kind) + " " +
                   cands[i].name() + "@" + std::to_string(cands[i].line);
    }
    if (cands[5].display_text() != "data = dataBuffer - 8")
        return "assignment candidate text mismatch: " + cands[5].display_text();
    return {};
}

// ---- criterion 2 -----------------------------------------------------------

std::string check_slice_oracle() {
    Rng rng(880);
    for (int round = 0; round < 200; ++round) {
        auto graph = oracle::random_graph(rng, 20);
        std::set<StatementRef> anchor;
        std::size_t picks = 1 + rng.index(3);
        for (std::size_t i = 0; i < picks; ++i)
            anchor.insert(graph.nodes[rng.index(graph.nodes.size())]);
        auto got = slice(graph, anchor);
        auto expected = oracle::closure_by_matrix(graph, anchor);
        if (std::set<StatementRef>(got.begin(), got.end()) != expected)
            return "mismatch on round " + std::to_string(round);
    }
    return {};
}

// ---- criterion 3 -----------------------------------------------------------

std::string check_control_oracle() {
    Rng rng(881);
    for (int round = 0; round < 100; ++round) {
        Cfg cfg = oracle::random_cfg(rng, 8);
        auto expected = oracle::control_dependences(cfg);
        auto got_vec = control_dependences(cfg);
        std::set<std::pair<int, int>> got(got_vec.begin(), got_vec.end());
        if (got != expected)
            return "mismatch on round " + std::to_string(round);
    }
    return {};
}

// ---- criterion 4 -----------------------------------------------------------

std::string check_inlining() {
    // The worked example: the slice of the file-scope pointer covers all of
    // main (ids 1..16); the first id appended from the callee becomes %17.
    std::vector<IrModule> modules = {parse_ll(read_file(fixture("demo/ir/main.ll")), "main.ll")};
    auto groups = group_and_link(modules);
    auto graph = build_dependence_graph(groups[0], modules);

    auto src = read_file(fixture("demo/src/main.c"));
    auto tokens = tokenize_c(src, "main.c");
    auto cands =
        extract_candidates(parse_c_unit(tokens), tokens, load_api_names(fixture("api_names.txt")));
    const SyntaxCandidate* pointer_cand = nullptr;
    for (const auto& c : cands)
        if (c.kind == CandidateKind::PointerDef && c.line == 2)
            pointer_cand = &c;
    if (!pointer_cand)
        return "pointer candidate not found";
    auto anchor = locate_anchor(*pointer_cand, groups[0], modules);
    if (!anchor)
        return "anchor not found";
    auto refs = slice(graph, anchor->statements);
    auto semantic = inline_and_renumber(*pointer_cand, refs, anchor->statements, groups[0], modules);

    long caller_max = 0;
    std::size_t call_at = semantic.statements.size();
    for (std::size_t i = 0; i < semantic.statements.size(); ++i) {
        const std::string& text = semantic.statements[i].text;
        if (text.find("call void @printLine()") != std::string::npos) {
            call_at = i;
            break;
        }
        if (text.rfind("%", 0) == 0)
            caller_max = std::max(caller_max, std::stol(text.substr(1)));
    }
    if (caller_max != 16)
        return "caller max id is " + std::to_string(caller_max) + ", expected 16";
    if (call_at + 1 >= semantic.statements.size())
        return "no appended callee statements";
    const std::string& first_appended = semantic.statements[call_at + 1].text;
    if (first_appended.rfind("%17 = ", 0) != 0)
        return "first appended id is not %17: " + first_appended;

    // Property: random call trees render with no duplicate ids and no
    // use-before-def.
    Rng rng(882);
    for (int round = 0; round < 30; ++round) {
        int fn_count = 2 + static_cast<int>(rng.index(4));
        std::string ll;
        for (int k = fn_count - 1; k >= 0; --k) {
            ll += "define i32 @fn" + std::to_string(k) + "(i32 %x) {\n";
            int id = 2;
            std::string prev = "%x";
            std::size_t chain = 1 + rng.index(3);
            for (std::size_t step = 0; step < chain; ++step) {
                ll += "  %" + std::to_string(id) + " = add i32 " + prev + ", 1\n";
                prev = "%" + std::to_string(id);
                ++id;
            }
            for (int c = k + 1; c < fn_count; ++c)
                if (rng.uniform() < 0.6) {
                    ll += "  %" + std::to_string(id) + " = call i32 @fn" + std::to_string(c) +
                          "(i32 " + prev + ")\n";
                    prev = "%" + std::to_string(id);
                    ++id;
                }
            ll += "  ret i32 " + prev + "\n}\n";
        }
        std::vector<IrModule> mods = {parse_ll(ll, "t.ll")};
        auto tree_groups = group_and_link(mods);
        auto tree_graph = build_dependence_graph(tree_groups[0], mods);
        int root_fn = -1;
        for (std::size_t fi = 0; fi < mods[0].functions.size(); ++fi)
            if (mods[0].functions[fi].name == "fn0")
                root_fn = static_cast<int>(fi);
        std::set<StatementRef> tree_anchor = {{0, root_fn, 0}};
        auto tree_refs = slice(tree_graph, tree_anchor);
        SyntaxCandidate cand;
        cand.kind = CandidateKind::AssignExpr;
        cand.file = "t.ll";
        cand.line = 1;
        SourceToken t;
        t.text = "x";
        t.kind = TokenKind::Identifier;
        cand.tokens = {t};
        auto rendered =
            inline_and_renumber(cand, tree_refs, tree_anchor, tree_groups[0], mods);
        std::string err = validate_rendered(rendered);
        if (!err.empty())
            return "round " + std::to_string(round) + ": " + err;
    }
    return {};
}

// ---- criterion 5 -----------------------------------------------------------

std::string check_gradients() {
    Rng data_rng(883);
    Matrix input(8, 4);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 4; ++j)
            input(i, j) = data_rng.uniform(-1, 1);

    for (int kappa : {1, 2, 3}) {
        ModelHyper hp;
        hp.input_dim = 4;
        hp.hidden = 5;
        hp.dense_dim = 6;
        hp.layers = 2;
        hp.kappa = kappa;
        hp.dropout = 0.0;
        ModelParams params = ModelParams::init(hp, 884 + static_cast<std::uint64_t>(kappa));

        for (double target : {1.0, 0.0}) {
            Vector mask;
            if (target > 0.5) {
                mask = Vector::Zero(8);
                mask(2) = mask(3) = mask(4) = mask(6) = 1.0;
            } else {
                mask = Vector::Ones(8);
            }
            ModelParams grads = params.zeros_like();
            auto trace = model_forward(params, input);
            loss_and_backward(params, trace, mask, target, grads);

            std::vector<double*> param_ptrs, grad_ptrs;
            params.for_each([&](double& x) { param_ptrs.push_back(&x); });
            grads.for_each([&](double& x) { grad_ptrs.push_back(&x); });
            const double h = 1e-5;
            for (std::size_t i = 0; i < param_ptrs.size(); ++i) {
                double saved = *param_ptrs[i];
                auto loss_at = [&](double v) {
                    *param_ptrs[i] = v;
                    auto tr = model_forward(params, input);
                    double o = kmax_average(multiply_layer(tr.activations, mask), kappa);
                    *param_ptrs[i] = saved;
                    return -(target * std::log(o) + (1 - target) * std::log(1 - o));
                };
                double numeric = (loss_at(saved + h) - loss_at(saved - h)) / (2 * h);
                double analytic = *grad_ptrs[i];
                if (std::abs(numeric - analytic) < 1e-10)
                    continue;
                double rel = std::abs(numeric - analytic) /
                             std::max(std::abs(numeric) + std::abs(analytic), 1e-8);
                if (rel > 1e-4)
                    return "kappa " + std::to_string(kappa) + " target " +
                           format_double(target) + " param " + std::to_string(i) + ": rel " +
                           format_double(rel);
            }
        }
    }
    return {};
}

// ---- criterion 6 -----------------------------------------------------------

std::string check_layer_identities() {
    Rng rng(885);
    for (int round = 0; round < 50; ++round) {
        int n = 1 + static_cast<int>(rng.index(24));
        Vector a(n);
        for (int i = 0; i < n; ++i)
            a(i) = rng.uniform(0, 1);

        Vector ones = Vector::Ones(n);
        if (multiply_layer(a, ones) != a)
            return "all-ones mask is not the identity";

        double mx = a.maxCoeff();
        if (kmax_average(a, 1) != mx)
            return "kappa=1 differs from max";
        if (std::abs(kmax_average(a, n) - a.mean()) > 1e-12)
            return "kappa=n differs from mean beyond 1e-12";
    }
    return {};
}

// ---- criterion 7 -----------------------------------------------------------

std::string check_metric_examples() {
    LineSet truth = {{"x.c", 1}, {"x.c", 2}, {"x.c", 3}, {"x.c", 4}};
    LineSet detected = {{"x.c", 3}, {"x.c", 4}, {"x.c", 7}};
    if (iou(truth, detected) != 2.0 / 5.0)
        return "IoU of the worked example is not exactly 2/5";

    double p = 0.981, fnr = 0.040;
    double recall = 1.0 - fnr;
    double f1 = 2 * p * recall / (p + recall);
    if (std::abs(f1 - 0.970) > 0.001)
        return "F1 from P=98.1%, FNR=4.0% is " + format_double(f1) + ", outside 0.970 +/- 0.001";
    return {};
}

// ---- criterion 8 -----------------------------------------------------------

std::string check_end_to_end() {
    Rng rng(886);
    auto generated = synthetic::make_corpus(rng, 500);

    ApiNameList api = {"printf", "strcpy", "strncpy", "memcpy", "memset", "memmove"};
    std::vector<TokenSequence> sequences;
    for (const auto& cand : generated.corpus.candidates)
        sequences.push_back(symbolize(tokenize_ir(cand), api));

    const std::size_t train_count = 400;
    EmbeddingConfig ecfg;
    ecfg.dim = 16;
    ecfg.window = 5;
    ecfg.negatives = 5;
    ecfg.epochs = 3;
    ecfg.seed = 887;
    std::vector<std::vector<std::string>> train_docs;
    for (std::size_t i = 0; i < train_count; ++i)
        train_docs.push_back(sequences[i].tokens);
    auto table = train_embedding(train_docs, ecfg);

    EncodedDataset train_ds, held_out_ds;
    train_ds.dim = held_out_ds.dim = table.dim;
    train_ds.max_tokens = held_out_ds.max_tokens = 96;
    for (std::size_t i = 0; i < generated.corpus.candidates.size(); ++i) {
        auto sample = encode_candidate(generated.corpus.candidates[i], false, sequences[i],
                                       table, 96);
        (i < train_count ? train_ds : held_out_ds).samples.push_back(std::move(sample));
    }

    ModelHyper hp;
    hp.input_dim = 16;
    hp.hidden = 32;
    hp.dense_dim = 32;
    hp.layers = 2;
    hp.kappa = 1;
    hp.dropout = 0.4;
    TrainConfig tcfg;
    tcfg.batch_size = 16;
    tcfg.learning_rate = 0.002;
    tcfg.epochs = 10;
    tcfg.seed = 888;
    auto samples = materialize_samples(train_ds, table);
    auto trained = train(samples, hp, tcfg);

    auto report = detect(trained.params, held_out_ds, table, 0.5);
    std::map<std::string, CandidateTruth> held_out_truths;
    for (const auto& entry : report.entries)
        held_out_truths[entry.id] = generated.truths.at(entry.id);
    auto summary = aggregate_report(report, held_out_truths);

    if (!summary.metrics.f1)
        return "F1 undefined on the held-out split";
    std::ostringstream detail;
    detail << "F1=" << format_double(*summary.metrics.f1)
           << " meanIoU=" << (summary.mean_iou ? format_double(*summary.mean_iou) : "undefined");
    std::cout << "      criterion  8 detail: " << detail.str() << "\n";
    if (*summary.metrics.f1 < 0.95)
        return "held-out F1 " + format_double(*summary.metrics.f1) + " < 0.95";
    if (!summary.mean_iou || *summary.mean_iou < 0.50)
        return "mean IoU " +
               (summary.mean_iou ? format_double(*summary.mean_iou) : std::string("undefined")) +
               " < 0.50";
    return {};
}

// ---- criterion 9 -----------------------------------------------------------

std::string check_determinism() {
    std::string cli = VULNLOC_CLI;
    fs::path base = fs::temp_directory_path() / "vulnloc-acceptance-det";
    fs::remove_all(base);
    fs::create_directories(base);

    for (int run = 0; run < 2; ++run) {
        fs::path work = base / ("run" + std::to_string(run));
        std::string config_text = "# vulnloc-config v1\n"
                                  "source_dir=" + fixture("demo/src") + "\n" +
                                  "ir_dir=" + fixture("demo/ir") + "\n" +
                                  "truth_dir=" + fixture("demo/truth") + "\n" +
                                  "work_dir=" + work.string() + "\n" +
                                  "api_list=" + fixture("api_names.txt") + "\n" +
                                  "embed_dim=16\nmax_tokens=320\nembed_epochs=2\n"
                                  "hidden=12\ndense_dim=12\nlayers=2\nkappa=1\ndropout=0.1\n"
                                  "batch_size=4\nlearning_rate=0.01\nepochs=2\n"
                                  "threshold=0.5\nseed=2024\n";
        fs::path config_path = base / ("config" + std::to_string(run) + ".conf");
        write_file(config_path.string(), config_text);
        std::string cmd = cli + " run --config " + config_path.string() + " >/dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0)
            return "pipeline run " + std::to_string(run) + " failed";
    }
    for (const char* artifact : {"corpus.txt", "labeled.txt", "embedding.txt", "dataset.txt",
                                 "model.txt", "report.txt", "summary.tsv"}) {
        auto a = read_file((base / "run0" / artifact).string());
        auto b = read_file((base / "run1" / artifact).string());
        if (a != b)
            return std::string(artifact) + " differs between runs";
    }
    fs::remove_all(base);
    return {};
}

// ---- criterion 10 ----------------------------------------------------------

std::string check_diff_labeling() {
    Rng rng(889);
    for (int round = 0; round < 50; ++round) {
        // Construct a diff hunk by hunk, recording the truth while building.
        std::string text;
        std::set<std::pair<std::string, int>> expected;
        bool addition_only = round % 5 == 0;
        int files = 1 + static_cast<int>(rng.index(2));
        for (int f = 0; f < files; ++f) {
            std::string name = "src" + std::to_string(f) + ".c";
            text += "--- a/" + name + "\n+++ b/" + name + "\n";
            int start = 1 + static_cast<int>(rng.index(6));
            int hunks = 1 + static_cast<int>(rng.index(3));
            for (int h = 0; h < hunks; ++h) {
                std::string ops;
                std::size_t len = 1 + rng.index(6);
                for (std::size_t k = 0; k < len; ++k) {
                    char op = "cda"[rng.index(3)];
                    if (addition_only && op == 'd')
                        op = 'a';
                    ops += op;
                }
                int old_count = 0, new_count = 0;
                for (char op : ops) {
                    old_count += op != 'a';
                    new_count += op != 'd';
                }
                text += "@@ -" + std::to_string(start) + "," + std::to_string(old_count) +
                        " +" + std::to_string(start) + "," + std::to_string(new_count) +
                        " @@\n";
                int old_line = start;
                for (char op : ops) {
                    if (op == 'c') {
                        text += " ctx\n";
                        ++old_line;
                    } else if (op == 'd') {
                        text += "-old\n";
                        expected.insert({name, old_line});
                        ++old_line;
                    } else {
                        text += "+new\n";
                    }
                }
                start = old_line + 2 + static_cast<int>(rng.index(8));
            }
        }
        auto got = parse_diff(text);
        if (got != expected)
            return "diff mismatch on round " + std::to_string(round);

        if (addition_only && !expected.empty())
            return "construction error: addition-only diff has deletions";
        if (addition_only) {
            // Addition-only truth labels nothing.
            GroundTruth truth;
            truth.is_vulnerable = true;
            truth.addition_only = true;
            SemanticCandidate cand;
            cand.id = "PD:src0.c:3:1";
            cand.kind = CandidateKind::PointerDef;
            cand.file = "src0.c";
            cand.line = 3;
            CandidateStatement st;
            st.text = "%1 = alloca i32";
            st.source_file = "src0.c";
            st.source_line = 3;
            cand.statements.push_back(st);
            truth.vulnerable_lines.insert({"src0.c", 3});
            label_candidate(cand, truth);
            if (!cand.label.empty())
                return "addition-only diff produced a labeled candidate";
        }
    }
    return {};
}

} // namespace

int main() {
    criterion(1, "worked-example extraction yields the eight candidates", 1.0,
              check_extraction);
    criterion(2, "slice equals brute-force closure on 200 random graphs", 5.0,
              check_slice_oracle);
    criterion(3, "control dependence equals path enumeration on 100 CFGs", 10.0,
              check_control_oracle);
    criterion(4, "inlining renumbers %1 to %17; call trees stay valid", 5.0, check_inlining);
    criterion(5, "analytic gradients match finite differences (kappa 1..3)", 30.0,
              check_gradients);
    criterion(6, "mask identity, kappa=1 max, kappa=n mean", 1.0, check_layer_identities);
    criterion(7, "IoU worked example 2/5; published F1 arithmetic", 1.0, check_metric_examples);
    criterion(8, "desk-scale end-to-end: held-out F1 and mean IoU", 600.0, check_end_to_end);
    criterion(9, "two pipeline runs produce bit-identical artifacts", 120.0, check_determinism);
    criterion(10, "diff labeling matches the constructed oracle", 1.0, check_diff_labeling);

    if (failures) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
