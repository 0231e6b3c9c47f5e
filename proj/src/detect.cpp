#include "vulnloc/detect.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "vulnloc/errors.hpp"
#include "vulnloc/text.hpp"

namespace vulnloc {

std::vector<std::pair<std::string, int>> CandidateReport::detected_source_lines() const {
    std::set<std::pair<std::string, int>> unique;
    for (const auto& l : lines)
        if (l.detected && l.prov == EncodedSample::Prov::Source)
            unique.insert({l.file, l.line});
    return {unique.begin(), unique.end()};
}

CandidateReport detect_sample(const ModelParams& params, const EncodedSample& sample,
                              const EmbeddingTable& table, double threshold) {
    CandidateReport report;
    report.id = sample.id;

    Matrix input = embed_sample(sample, table);
    auto trace = model_forward(params, input);
    const Vector& activations = trace.activations;

    // Candidate-level score over real tokens only (padding is an artifact of
    // batching, the mask at detection time is all ones over the tokens).
    Vector ones = Vector::Zero(activations.size());
    for (std::size_t i = 0; i < sample.real_tokens && i < static_cast<std::size_t>(ones.size());
         ++i)
        ones(static_cast<int>(i)) = 1.0;
    if (sample.real_tokens > 0)
        report.score = kmax_average(
            Vector(activations.head(static_cast<int>(sample.real_tokens))),
            std::min(params.hyper.kappa, static_cast<int>(sample.real_tokens)));

    for (const auto& span : sample.spans) {
        LineScore ls;
        ls.statement = span.statement;
        ls.prov = span.prov;
        ls.file = span.file;
        ls.line = span.line;
        int len = static_cast<int>(span.end - span.begin);
        if (len > 0) {
            Vector line_act = activations.segment(static_cast<int>(span.begin), len);
            ls.score = kmax_average(line_act, std::min(params.hyper.kappa, len));
        }
        ls.detected = ls.score > threshold;
        if (ls.detected)
            report.vulnerable = true;
        report.lines.push_back(std::move(ls));
    }
    return report;
}

DetectionReport detect(const ModelParams& params, const EncodedDataset& dataset,
                       const EmbeddingTable& table, double threshold) {
    DetectionReport report;
    report.threshold = threshold;
    report.kappa = params.hyper.kappa;
    for (const auto& sample : dataset.samples)
        report.entries.push_back(detect_sample(params, sample, table, threshold));
    return report;
}

namespace {

const char* prov_name(EncodedSample::Prov p) {
    switch (p) {
    case EncodedSample::Prov::Source: return "source";
    case EncodedSample::Prov::Global: return "global";
    case EncodedSample::Prov::NoDebug: return "no-debug-info";
    }
    return "?";
}

EncodedSample::Prov prov_from(const std::string& name) {
    if (name == "source")
        return EncodedSample::Prov::Source;
    if (name == "global")
        return EncodedSample::Prov::Global;
    return EncodedSample::Prov::NoDebug;
}

} // namespace

std::string write_report(const DetectionReport& report) {
    std::ostringstream out;
    out << "# vulnloc-report v1\n";
    out << "threshold=" << format_double(report.threshold) << " kappa=" << report.kappa << "\n";
    for (const auto& e : report.entries) {
        out << "= " << e.id << " score=" << format_double(e.score)
            << " vulnerable=" << (e.vulnerable ? 1 : 0) << "\n";
        for (const auto& l : e.lines) {
            out << "l " << l.statement << ' ' << format_double(l.score) << ' '
                << (l.detected ? 1 : 0) << ' ' << prov_name(l.prov);
            if (l.prov == EncodedSample::Prov::Source)
                out << ' ' << l.file << ':' << l.line;
            out << '\n';
        }
        out << '\n';
    }
    return out.str();
}

DetectionReport read_report(const std::string& text) {
    auto lines = split(text, '\n');
    if (lines.size() < 2 || lines[0].rfind("# vulnloc-report", 0) != 0)
        throw FormatError("report file missing version header");
    DetectionReport report;
    for (const auto& field : split_ws(lines[1])) {
        auto eq = field.find('=');
        if (eq == std::string::npos)
            continue;
        auto key = field.substr(0, eq);
        auto value = field.substr(eq + 1);
        if (key == "threshold")
            report.threshold = parse_double(value, "report threshold");
        else if (key == "kappa")
            report.kappa = static_cast<int>(parse_long(value, "report kappa"));
    }
    std::size_t i = 2;
    while (i < lines.size()) {
        if (trim(lines[i]).empty()) {
            ++i;
            continue;
        }
        if (lines[i].rfind("= ", 0) != 0)
            throw FormatError("expected report entry, got: " + lines[i]);
        CandidateReport entry;
        auto fields = split_ws(lines[i].substr(2));
        if (fields.empty())
            throw FormatError("report entry missing id");
        entry.id = fields[0];
        for (std::size_t f = 1; f < fields.size(); ++f) {
            auto eq = fields[f].find('=');
            if (eq == std::string::npos)
                continue;
            auto key = fields[f].substr(0, eq);
            auto value = fields[f].substr(eq + 1);
            if (key == "score")
                entry.score = parse_double(value, "entry score");
            else if (key == "vulnerable")
                entry.vulnerable = value == "1";
        }
        ++i;
        while (i < lines.size() && lines[i].rfind("l ", 0) == 0) {
            auto parts = split_ws(lines[i].substr(2));
            if (parts.size() < 4)
                throw FormatError(entry.id + ": line score row needs 4+ fields");
            LineScore ls;
            ls.statement = static_cast<int>(parse_long(parts[0], "line statement"));
            ls.score = parse_double(parts[1], "line score");
            ls.detected = parts[2] == "1";
            ls.prov = prov_from(parts[3]);
            if (ls.prov == EncodedSample::Prov::Source) {
                if (parts.size() < 5)
                    throw FormatError(entry.id + ": source line row needs file:line");
                auto colon = parts[4].rfind(':');
                ls.file = parts[4].substr(0, colon);
                ls.line = static_cast<int>(parse_long(parts[4].substr(colon + 1), "line number"));
            }
            entry.lines.push_back(std::move(ls));
            ++i;
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

} // namespace vulnloc
