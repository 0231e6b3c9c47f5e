#include "vulnloc/config.hpp"

#include <cstdlib>
#include <sstream>

#include "vulnloc/errors.hpp"
#include "vulnloc/text.hpp"

namespace vulnloc {

PipelineConfig PipelineConfig::load(const std::string& path) {
    return parse(read_file(path));
}

PipelineConfig PipelineConfig::parse(const std::string& text) {
    PipelineConfig cfg;
    auto lines = split(text, '\n');
    if (lines.empty() || trim(lines[0]) != "# vulnloc-config v1")
        throw FormatError("config must start with '# vulnloc-config v1'");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto t = trim(lines[i]);
        if (t.empty() || t.front() == '#')
            continue;
        auto eq = t.find('=');
        if (eq == std::string_view::npos)
            throw FormatError("config line needs key=value: " + std::string(t));
        std::string key(trim(t.substr(0, eq)));
        std::string value(trim(t.substr(eq + 1)));
        if (key == "source_dir")
            cfg.source_dir = value;
        else if (key == "ir_dir")
            cfg.ir_dir = value;
        else if (key == "truth_dir")
            cfg.truth_dir = value;
        else if (key == "work_dir")
            cfg.work_dir = value;
        else if (key == "api_list")
            cfg.api_list = value;
        else if (key == "embed_dim")
            cfg.embed_dim = static_cast<int>(parse_long(value, key));
        else if (key == "max_tokens")
            cfg.max_tokens = static_cast<int>(parse_long(value, key));
        else if (key == "embed_window")
            cfg.embed_window = static_cast<int>(parse_long(value, key));
        else if (key == "embed_negatives")
            cfg.embed_negatives = static_cast<int>(parse_long(value, key));
        else if (key == "embed_epochs")
            cfg.embed_epochs = static_cast<int>(parse_long(value, key));
        else if (key == "cell")
            cfg.hyper.cell = value == "lstm" ? CellKind::Lstm : CellKind::Gru;
        else if (key == "hidden")
            cfg.hyper.hidden = static_cast<int>(parse_long(value, key));
        else if (key == "dense_dim")
            cfg.hyper.dense_dim = static_cast<int>(parse_long(value, key));
        else if (key == "layers")
            cfg.hyper.layers = static_cast<int>(parse_long(value, key));
        else if (key == "kappa")
            cfg.hyper.kappa = static_cast<int>(parse_long(value, key));
        else if (key == "dropout")
            cfg.hyper.dropout = parse_double(value, key);
        else if (key == "batch_size")
            cfg.train.batch_size = static_cast<int>(parse_long(value, key));
        else if (key == "learning_rate")
            cfg.train.learning_rate = parse_double(value, key);
        else if (key == "epochs")
            cfg.train.epochs = static_cast<int>(parse_long(value, key));
        else if (key == "folds")
            cfg.train.folds = static_cast<int>(parse_long(value, key));
        else if (key == "threshold")
            cfg.threshold = parse_double(value, key);
        else if (key == "label_first_only")
            cfg.label_first_only = value == "1" || value == "true";
        else if (key == "seed")
            cfg.seed = static_cast<std::uint64_t>(parse_long(value, key));
        else
            throw FormatError("unknown config key: " + key);
    }
    cfg.hyper.input_dim = cfg.embed_dim;
    cfg.train.seed = cfg.seed;
    // Environment override for the work directory.
    if (const char* env = std::getenv("VULNLOC_WORK_DIR"); env && *env)
        cfg.work_dir = env;
    return cfg;
}

std::string PipelineConfig::to_string() const {
    std::ostringstream out;
    out << "# vulnloc-config v1\n";
    out << "source_dir=" << source_dir << "\nir_dir=" << ir_dir << "\ntruth_dir=" << truth_dir
        << "\nwork_dir=" << work_dir << "\napi_list=" << api_list << "\n";
    out << "embed_dim=" << embed_dim << "\nmax_tokens=" << max_tokens << "\nembed_window="
        << embed_window << "\nembed_negatives=" << embed_negatives << "\nembed_epochs="
        << embed_epochs << "\n";
    out << "cell=" << (hyper.cell == CellKind::Lstm ? "lstm" : "gru") << "\nhidden="
        << hyper.hidden << "\ndense_dim=" << hyper.dense_dim << "\nlayers=" << hyper.layers
        << "\nkappa=" << hyper.kappa << "\ndropout=" << format_double(hyper.dropout) << "\n";
    out << "batch_size=" << train.batch_size << "\nlearning_rate="
        << format_double(train.learning_rate) << "\nepochs=" << train.epochs << "\nfolds="
        << train.folds << "\n";
    out << "threshold=" << format_double(threshold) << "\nseed=" << seed
        << "\nlabel_first_only=" << (label_first_only ? 1 : 0) << "\n";
    return out.str();
}

} // namespace vulnloc
