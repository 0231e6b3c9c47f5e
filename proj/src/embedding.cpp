#include "vulnloc/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vulnloc/errors.hpp"
#include "vulnloc/rng.hpp"
#include "vulnloc/text.hpp"

namespace vulnloc {

namespace {

double sigmoid(double x) {
    if (x >= 0) {
        double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

EmbeddingTable train_embedding(const std::vector<std::vector<std::string>>& documents,
                               const EmbeddingConfig& config) {
    std::map<std::string, long> freq;
    long total_tokens = 0;
    for (const auto& doc : documents)
        for (const auto& tok : doc) {
            ++freq[tok];
            ++total_tokens;
        }
    if (total_tokens == 0)
        throw DataError("embedding corpus is empty");

    // Vocabulary ordered by (frequency desc, symbol asc) so indices are
    // reproducible across runs.
    std::vector<std::pair<std::string, long>> by_freq(freq.begin(), freq.end());
    std::sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    EmbeddingTable table;
    table.dim = config.dim;
    table.seed = config.seed;
    std::vector<long> counts;
    for (const auto& [sym, count] : by_freq) {
        if (count < config.min_count)
            continue;
        table.vocab[sym] = static_cast<int>(counts.size());
        counts.push_back(count);
    }
    int vocab_size = static_cast<int>(counts.size());
    if (vocab_size == 0)
        throw DataError("embedding vocabulary is empty after min-count filtering");

    // Unigram^0.75 table for negative sampling.
    std::vector<double> cum(vocab_size);
    double acc = 0;
    for (int v = 0; v < vocab_size; ++v) {
        acc += std::pow(static_cast<double>(counts[v]), 0.75);
        cum[v] = acc;
    }
    Rng rng = Rng(config.seed).derive("embedding");
    auto sample_negative = [&]() {
        double r = rng.uniform() * acc;
        return static_cast<int>(std::lower_bound(cum.begin(), cum.end(), r) - cum.begin());
    };

    Rng init_rng = Rng(config.seed).derive("embedding-init");
    Matrix input(vocab_size, config.dim);
    Matrix output = Matrix::Zero(vocab_size, config.dim);
    for (int v = 0; v < vocab_size; ++v)
        for (int d = 0; d < config.dim; ++d)
            input(v, d) = (init_rng.uniform() - 0.5) / config.dim;

    // Token ids per document, out-of-vocabulary dropped.
    std::vector<std::vector<int>> ids;
    for (const auto& doc : documents) {
        std::vector<int> row;
        for (const auto& tok : doc) {
            auto it = table.vocab.find(tok);
            if (it != table.vocab.end())
                row.push_back(it->second);
        }
        if (!row.empty())
            ids.push_back(std::move(row));
    }

    long long pair_budget = 0;
    for (const auto& row : ids)
        pair_budget += static_cast<long long>(row.size());
    pair_budget *= config.epochs;
    long long seen = 0;

    Vector grad_center(config.dim);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (const auto& row : ids) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                ++seen;
                double lr = config.learning_rate *
                            std::max(1e-4, 1.0 - static_cast<double>(seen) /
                                                     static_cast<double>(pair_budget + 1));
                int span = 1 + static_cast<int>(rng.index(config.window));
                int center = row[i];
                grad_center.setZero();
                for (int off = -span; off <= span; ++off) {
                    if (off == 0)
                        continue;
                    long pos = static_cast<long>(i) + off;
                    if (pos < 0 || pos >= static_cast<long>(row.size()))
                        continue;
                    int context = row[pos];
                    // Positive pair plus sampled negatives.
                    for (int k = 0; k <= config.negatives; ++k) {
                        int target = k == 0 ? context : sample_negative();
                        double label = k == 0 ? 1.0 : 0.0;
                        double score = sigmoid(input.row(center).dot(output.row(target)));
                        double g = lr * (label - score);
                        grad_center += g * output.row(target).transpose();
                        output.row(target) += g * input.row(center);
                    }
                }
                input.row(center) += grad_center.transpose();
                grad_center.setZero();
            }
        }
    }
    table.vectors = std::move(input);
    return table;
}

std::string write_embedding(const EmbeddingTable& table) {
    std::ostringstream out;
    out << "# vulnloc-embedding v1\n";
    out << "dim=" << table.dim << " vocab=" << table.vocab.size() << " seed=" << table.seed
        << "\n";
    std::vector<std::string> by_row(table.vocab.size());
    for (const auto& [sym, row] : table.vocab)
        by_row[row] = sym;
    for (std::size_t row = 0; row < by_row.size(); ++row) {
        out << by_row[row] << '\t';
        for (int d = 0; d < table.dim; ++d) {
            if (d)
                out << ' ';
            out << format_double(table.vectors(static_cast<int>(row), d));
        }
        out << '\n';
    }
    return out.str();
}

EmbeddingTable read_embedding(const std::string& text) {
    auto lines = split(text, '\n');
    if (lines.size() < 2 || lines[0].rfind("# vulnloc-embedding", 0) != 0)
        throw FormatError("embedding file missing version header");
    EmbeddingTable table;
    long vocab_size = 0;
    for (const auto& field : split_ws(lines[1])) {
        auto eq = field.find('=');
        if (eq == std::string::npos)
            continue;
        auto key = field.substr(0, eq);
        auto value = field.substr(eq + 1);
        if (key == "dim")
            table.dim = static_cast<int>(parse_long(value, "embedding dim"));
        else if (key == "vocab")
            vocab_size = parse_long(value, "embedding vocab size");
        else if (key == "seed")
            table.seed = static_cast<std::uint64_t>(parse_long(value, "embedding seed"));
    }
    table.vectors = Matrix::Zero(vocab_size, table.dim);
    int row = 0;
    for (std::size_t i = 2; i < lines.size(); ++i) {
        if (trim(lines[i]).empty())
            continue;
        auto tab = lines[i].find('\t');
        if (tab == std::string::npos)
            throw FormatError("embedding row missing tab separator");
        std::string sym = lines[i].substr(0, tab);
        auto values = split_ws(lines[i].substr(tab + 1));
        if (static_cast<int>(values.size()) != table.dim)
            throw FormatError("embedding row for '" + sym + "' has wrong dimension");
        if (row >= vocab_size)
            throw FormatError("embedding file has more rows than declared");
        table.vocab[sym] = row;
        for (int d = 0; d < table.dim; ++d)
            table.vectors(row, d) = parse_double(values[d], "embedding value");
        ++row;
    }
    if (row != vocab_size)
        throw FormatError("embedding file has fewer rows than declared");
    return table;
}

} // namespace vulnloc
