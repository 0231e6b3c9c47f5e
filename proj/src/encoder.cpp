#include "vulnloc/encoder.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "vulnloc/errors.hpp"
#include "vulnloc/text.hpp"

namespace vulnloc {

EncodedSample encode_candidate(const SemanticCandidate& candidate, bool excluded,
                               const TokenSequence& seq, const EmbeddingTable& table,
                               int max_tokens) {
    EncodedSample sample;
    sample.id = candidate.id;
    sample.label = candidate.label;
    sample.excluded = excluded;

    std::size_t total = seq.tokens.size();
    std::size_t lambda = static_cast<std::size_t>(max_tokens);

    std::size_t anchor_stmt =
        candidate.anchor_index >= 0 &&
                static_cast<std::size_t>(candidate.anchor_index) < seq.line_spans.size()
            ? static_cast<std::size_t>(candidate.anchor_index)
            : 0;
    std::size_t anchor_token = seq.line_spans.empty() ? 0 : seq.line_spans[anchor_stmt].first;

    // Window: everything when it fits, else max_tokens tokens centered on the
    // anchor, shifted to stay inside the sequence.
    std::size_t window_begin = 0;
    if (total > lambda) {
        std::size_t half = lambda / 2;
        std::size_t centered = anchor_token > half ? anchor_token - half : 0;
        window_begin = std::min(centered, total - lambda);
    }
    std::size_t window_end = std::min(total, window_begin + lambda);
    sample.real_tokens = window_end - window_begin;
    sample.anchor_token = static_cast<int>(anchor_token >= window_begin &&
                                                   anchor_token < window_end
                                               ? anchor_token - window_begin
                                               : 0);

    sample.token_ids.assign(lambda, -1);
    for (std::size_t i = window_begin; i < window_end; ++i)
        sample.token_ids[i - window_begin] = table.lookup(seq.tokens[i]);

    // Clip statement spans to the window and keep their provenance.
    for (std::size_t s = 0; s < seq.line_spans.size(); ++s) {
        auto [b, e] = seq.line_spans[s];
        std::size_t cb = std::max(b, window_begin);
        std::size_t ce = std::min(e, window_end);
        if (cb >= ce)
            continue;
        EncodedSample::Span span;
        span.begin = cb - window_begin;
        span.end = ce - window_begin;
        span.statement = static_cast<int>(s) + 1;
        const CandidateStatement& st = candidate.statements[s];
        if (st.is_global) {
            span.prov = EncodedSample::Prov::Global;
        } else if (st.has_provenance()) {
            span.prov = EncodedSample::Prov::Source;
            span.file = st.source_file;
            span.line = st.source_line;
        }
        sample.spans.push_back(std::move(span));
    }

    sample.mask.assign(lambda, 0.0);
    if (sample.label.empty()) {
        // Not vulnerable: every real token participates; padding never does.
        for (std::size_t i = 0; i < sample.real_tokens; ++i)
            sample.mask[i] = 1.0;
    } else {
        std::set<int> labeled(sample.label.begin(), sample.label.end());
        double ones = 0;
        for (const auto& span : sample.spans)
            if (labeled.count(span.statement))
                for (std::size_t i = span.begin; i < span.end; ++i) {
                    sample.mask[i] = 1.0;
                    ++ones;
                }
        sample.mask_empty = ones == 0;
    }
    return sample;
}

Matrix embed_sample(const EncodedSample& sample, const EmbeddingTable& table) {
    Matrix out = Matrix::Zero(static_cast<int>(sample.token_ids.size()), table.dim);
    for (std::size_t i = 0; i < sample.token_ids.size(); ++i)
        if (sample.token_ids[i] >= 0)
            out.row(static_cast<int>(i)) = table.vectors.row(sample.token_ids[i]);
    return out;
}

namespace {

std::string label_field(const std::vector<int>& label) {
    if (label.empty())
        return "0";
    std::string out;
    for (std::size_t i = 0; i < label.size(); ++i) {
        if (i)
            out += ',';
        out += std::to_string(label[i]);
    }
    return out;
}

const char* prov_name(EncodedSample::Prov p) {
    switch (p) {
    case EncodedSample::Prov::Source: return "source";
    case EncodedSample::Prov::Global: return "global";
    case EncodedSample::Prov::NoDebug: return "no-debug-info";
    }
    return "?";
}

} // namespace

std::string write_dataset(const EncodedDataset& dataset) {
    std::ostringstream out;
    out << "# vulnloc-dataset v1\n";
    out << "dim=" << dataset.dim << " max_tokens=" << dataset.max_tokens << "\n";
    for (const auto& s : dataset.samples) {
        out << "@ " << s.id << " label=" << label_field(s.label) << " real=" << s.real_tokens
            << " anchor=" << s.anchor_token << " excluded=" << (s.excluded ? 1 : 0)
            << " maskempty=" << (s.mask_empty ? 1 : 0) << "\n";
        for (const auto& span : s.spans) {
            out << "s " << span.begin << ' ' << span.end << ' ' << span.statement << ' '
                << prov_name(span.prov);
            if (span.prov == EncodedSample::Prov::Source)
                out << ' ' << span.file << ':' << span.line;
            out << '\n';
        }
        out << "t";
        for (int id : s.token_ids)
            out << ' ' << id;
        out << "\nm";
        for (double a : s.mask)
            out << ' ' << (a > 0.5 ? 1 : 0);
        out << "\n\n";
    }
    return out.str();
}

EncodedDataset read_dataset(const std::string& text) {
    auto lines = split(text, '\n');
    if (lines.empty() || lines[0].rfind("# vulnloc-dataset", 0) != 0)
        throw FormatError("dataset file missing version header");
    EncodedDataset dataset;
    std::size_t i = 1;
    for (const auto& field : split_ws(lines[i])) {
        auto eq = field.find('=');
        if (eq == std::string::npos)
            continue;
        auto key = field.substr(0, eq);
        auto value = field.substr(eq + 1);
        if (key == "dim")
            dataset.dim = static_cast<int>(parse_long(value, "dataset dim"));
        else if (key == "max_tokens")
            dataset.max_tokens = static_cast<int>(parse_long(value, "dataset max_tokens"));
    }
    ++i;
    while (i < lines.size()) {
        if (trim(lines[i]).empty()) {
            ++i;
            continue;
        }
        if (lines[i].rfind("@ ", 0) != 0)
            throw FormatError("expected sample header, got: " + lines[i]);
        EncodedSample s;
        auto fields = split_ws(lines[i].substr(2));
        if (fields.empty())
            throw FormatError("sample header missing id");
        s.id = fields[0];
        for (std::size_t f = 1; f < fields.size(); ++f) {
            auto eq = fields[f].find('=');
            if (eq == std::string::npos)
                continue;
            auto key = fields[f].substr(0, eq);
            auto value = fields[f].substr(eq + 1);
            if (key == "label" && value != "0")
                for (const auto& part : split(value, ','))
                    s.label.push_back(static_cast<int>(parse_long(part, s.id + " label")));
            else if (key == "real")
                s.real_tokens = static_cast<std::size_t>(parse_long(value, "real token count"));
            else if (key == "anchor")
                s.anchor_token = static_cast<int>(parse_long(value, "anchor token"));
            else if (key == "excluded")
                s.excluded = value == "1";
            else if (key == "maskempty")
                s.mask_empty = value == "1";
        }
        ++i;
        while (i < lines.size() && lines[i].rfind("s ", 0) == 0) {
            auto parts = split_ws(lines[i].substr(2));
            if (parts.size() < 4)
                throw FormatError(s.id + ": span line needs 4+ fields");
            EncodedSample::Span span;
            span.begin = static_cast<std::size_t>(parse_long(parts[0], "span begin"));
            span.end = static_cast<std::size_t>(parse_long(parts[1], "span end"));
            span.statement = static_cast<int>(parse_long(parts[2], "span statement"));
            if (parts[3] == "source") {
                span.prov = EncodedSample::Prov::Source;
                if (parts.size() < 5)
                    throw FormatError(s.id + ": source span needs file:line");
                auto colon = parts[4].rfind(':');
                span.file = parts[4].substr(0, colon);
                span.line = static_cast<int>(parse_long(parts[4].substr(colon + 1), "span line"));
            } else if (parts[3] == "global") {
                span.prov = EncodedSample::Prov::Global;
            } else {
                span.prov = EncodedSample::Prov::NoDebug;
            }
            s.spans.push_back(std::move(span));
            ++i;
        }
        if (i >= lines.size() || lines[i].rfind("t", 0) != 0)
            throw FormatError(s.id + ": missing token row");
        for (const auto& tok : split_ws(lines[i].substr(1)))
            s.token_ids.push_back(static_cast<int>(parse_long(tok, "token id")));
        ++i;
        if (i >= lines.size() || lines[i].rfind("m", 0) != 0)
            throw FormatError(s.id + ": missing mask row");
        for (const auto& a : split_ws(lines[i].substr(1)))
            s.mask.push_back(parse_double(a, "mask value"));
        ++i;
        if (static_cast<int>(s.token_ids.size()) != dataset.max_tokens ||
            s.mask.size() != s.token_ids.size())
            throw FormatError(s.id + ": row lengths disagree with max_tokens");
        dataset.samples.push_back(std::move(s));
    }
    return dataset;
}

} // namespace vulnloc
