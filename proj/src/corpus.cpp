#include "vulnloc/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "vulnloc/errors.hpp"
#include "vulnloc/text.hpp"

namespace fs = std::filesystem;

namespace vulnloc {

namespace {

std::string strip_diff_prefix(std::string path) {
    if (path.rfind("a/", 0) == 0 || path.rfind("b/", 0) == 0)
        return path.substr(2);
    return path;
}

struct HunkCounts {
    int old_start = 0;
    int old_count = 1;
    int new_count = 1;
};

// Hunk header: @@ -old[,count] +new[,count] @@
HunkCounts parse_hunk_header(const std::string& line) {
    auto fail = [&]() { throw FormatError("malformed hunk header: " + line); };
    if (line.rfind("@@ -", 0) != 0)
        fail();
    std::size_t i = 4;
    auto read_int = [&]() {
        std::size_t start = i;
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i])))
            ++i;
        if (i == start)
            fail();
        return std::stoi(line.substr(start, i - start));
    };
    HunkCounts counts;
    counts.old_start = read_int();
    if (i < line.size() && line[i] == ',') {
        ++i;
        counts.old_count = read_int();
    }
    if (i >= line.size() || line[i] != ' ')
        fail();
    ++i;
    if (i >= line.size() || line[i] != '+')
        fail();
    ++i;
    read_int();
    if (i < line.size() && line[i] == ',') {
        ++i;
        counts.new_count = read_int();
    }
    if (line.compare(i, 3, " @@") != 0)
        fail();
    return counts;
}

} // namespace

std::set<std::pair<std::string, int>> parse_diff(const std::string& diff_text) {
    std::set<std::pair<std::string, int>> deleted;
    std::string current_file;
    int old_line = 0;
    bool in_hunk = false;
    int remaining_old = 0;
    int remaining_new = 0;

    for (const auto& line : split(diff_text, '\n')) {
        if (line.rfind("--- ", 0) == 0) {
            current_file = strip_diff_prefix(std::string(trim(line.substr(4))));
            in_hunk = false;
            continue;
        }
        if (line.rfind("+++ ", 0) == 0 || line.rfind("diff ", 0) == 0 ||
            line.rfind("index ", 0) == 0) {
            in_hunk = false;
            continue;
        }
        if (line.rfind("@@", 0) == 0) {
            auto counts = parse_hunk_header(line);
            old_line = counts.old_start;
            remaining_old = counts.old_count;
            remaining_new = counts.new_count;
            in_hunk = true;
            continue;
        }
        if (!in_hunk || line.empty())
            continue;
        switch (line[0]) {
        case '-':
            deleted.insert({current_file, old_line});
            ++old_line;
            --remaining_old;
            break;
        case '+':
            --remaining_new;
            break;
        case ' ':
            ++old_line;
            --remaining_old;
            --remaining_new;
            break;
        case '\\': // "\ No newline at end of file"
            break;
        default:
            in_hunk = false;
            break;
        }
        if (remaining_old <= 0 && remaining_new <= 0)
            in_hunk = false;
    }
    return deleted;
}

bool diff_is_addition_only(const std::string& diff_text) {
    bool has_addition = false;
    for (const auto& line : split(diff_text, '\n')) {
        if (line.rfind("+++ ", 0) == 0 || line.rfind("--- ", 0) == 0)
            continue;
        if (!line.empty() && line[0] == '+')
            has_addition = true;
        if (!line.empty() && line[0] == '-')
            return false;
    }
    return has_addition;
}

GroundTruth load_ground_truth(const std::string& dir) {
    GroundTruth truth;
    truth.program_id = fs::path(dir).filename().string();
    if (!fs::exists(dir))
        return truth;

    std::vector<fs::path> entries;
    for (const auto& e : fs::directory_iterator(dir))
        entries.push_back(e.path());
    std::sort(entries.begin(), entries.end());

    bool any_diff = false;
    bool any_deletion = false;
    for (const auto& p : entries) {
        if (p.filename() == "truth.txt") {
            truth.source = GroundTruth::Source::DirectAnnotation;
            for (const auto& line : split(read_file(p.string()), '\n')) {
                auto t = trim(line);
                if (t.empty() || t.front() == '#')
                    continue;
                auto colon = t.rfind(':');
                if (colon == std::string_view::npos)
                    throw FormatError("truth.txt line needs <file>:<line>: " + std::string(t));
                truth.vulnerable_lines.insert(
                    {std::string(t.substr(0, colon)),
                     static_cast<int>(parse_long(t.substr(colon + 1), "truth line number"))});
                truth.is_vulnerable = true;
            }
        } else if (p.extension() == ".diff" || p.extension() == ".patch") {
            any_diff = true;
            std::string text = read_file(p.string());
            auto lines = parse_diff(text);
            if (!lines.empty())
                any_deletion = true;
            truth.vulnerable_lines.insert(lines.begin(), lines.end());
            truth.is_vulnerable = true;
            truth.source = GroundTruth::Source::DiffDerived;
        }
    }
    if (any_diff && !any_deletion)
        truth.addition_only = true;
    return truth;
}

LabelOutcome label_candidate(SemanticCandidate& candidate, const GroundTruth& truth) {
    LabelOutcome outcome;
    candidate.label.clear();
    if (!truth.is_vulnerable || truth.addition_only)
        return outcome;
    for (std::size_t i = 0; i < candidate.statements.size(); ++i) {
        const auto& st = candidate.statements[i];
        if (st.has_provenance() &&
            truth.vulnerable_lines.count({st.source_file, st.source_line}))
            candidate.label.push_back(static_cast<int>(i) + 1);
    }
    outcome.labeled = !candidate.label.empty();
    if (!outcome.labeled) {
        // The program is vulnerable but none of its marked lines produced a
        // statement in this slice.
        bool any_line_in_file = false;
        for (const auto& [file, line] : truth.vulnerable_lines) {
            (void)line;
            if (file == candidate.file)
                any_line_in_file = true;
        }
        if (any_line_in_file)
            outcome.warning = candidate.id + ": vulnerable line maps to no sliced statement";
    }
    return outcome;
}

namespace {

std::string label_text(const std::vector<int>& label) {
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

std::string provenance_field(const CandidateStatement& st) {
    if (st.is_global)
        return "global";
    if (!st.has_provenance())
        return "no-debug-info";
    return st.source_file + ":" + std::to_string(st.source_line);
}

} // namespace

std::string write_corpus(const Corpus& corpus) {
    std::ostringstream out;
    out << "# vulnloc-corpus v1\n";
    for (std::size_t ci = 0; ci < corpus.candidates.size(); ++ci) {
        const SemanticCandidate& c = corpus.candidates[ci];
        out << "### " << c.id << ' ' << kind_code(c.kind) << ' ' << c.file << ':' << c.line;
        if (corpus.labeled)
            out << " label=" << label_text(c.label);
        out << " anchor=" << c.anchor_index + 1
            << " functions=" << join(c.functions_involved, ",");
        if (ci < corpus.excluded.size() && corpus.excluded[ci])
            out << " excluded=1";
        out << '\n';
        for (std::size_t i = 0; i < c.statements.size(); ++i)
            out << i + 1 << '\t' << provenance_field(c.statements[i]) << '\t'
                << c.statements[i].text << '\n';
        out << '\n';
    }
    return out.str();
}

Corpus read_corpus(const std::string& text) {
    Corpus corpus;
    auto lines = split(text, '\n');
    std::size_t i = 0;
    if (i < lines.size() && lines[i].rfind("# vulnloc-corpus", 0) == 0)
        ++i;
    else
        throw FormatError("corpus file missing version header");

    while (i < lines.size()) {
        if (trim(lines[i]).empty()) {
            ++i;
            continue;
        }
        if (lines[i].rfind("### ", 0) != 0)
            throw FormatError("expected record header, got: " + lines[i]);
        auto fields = split_ws(lines[i].substr(4));
        if (fields.size() < 3)
            throw FormatError("record header needs id, kind, location: " + lines[i]);
        SemanticCandidate c;
        c.id = fields[0];
        c.kind = kind_from_code(fields[1]);
        auto colon = fields[2].rfind(':');
        if (colon == std::string::npos)
            throw FormatError(c.id + ": header location needs <file>:<line>");
        c.file = fields[2].substr(0, colon);
        c.line = static_cast<int>(parse_long(fields[2].substr(colon + 1), "record line"));
        // The id carries the anchor column: kind:file:line:column.
        auto id_colon = c.id.rfind(':');
        if (id_colon != std::string::npos)
            try {
                c.column = static_cast<int>(parse_long(c.id.substr(id_colon + 1), "id column"));
            } catch (const FormatError&) {
                c.column = 0;
            }
        bool excluded = false;
        bool has_label = false;
        for (std::size_t f = 3; f < fields.size(); ++f) {
            auto eq = fields[f].find('=');
            if (eq == std::string::npos)
                continue;
            std::string key = fields[f].substr(0, eq);
            std::string value = fields[f].substr(eq + 1);
            if (key == "label") {
                has_label = true;
                if (value != "0")
                    for (const auto& part : split(value, ','))
                        c.label.push_back(static_cast<int>(parse_long(part, c.id + " label")));
            } else if (key == "anchor") {
                c.anchor_index = static_cast<int>(parse_long(value, c.id + " anchor")) - 1;
            } else if (key == "functions") {
                if (!value.empty())
                    c.functions_involved = split(value, ',');
            } else if (key == "excluded") {
                excluded = value == "1";
            }
        }
        corpus.labeled = corpus.labeled || has_label;
        ++i;
        std::size_t expected = 1;
        while (i < lines.size() && !trim(lines[i]).empty()) {
            auto parts = split(lines[i], '\t');
            if (parts.size() != 3)
                throw FormatError(c.id + ": statement line needs 3 fields: " + lines[i]);
            if (static_cast<std::size_t>(parse_long(parts[0], c.id + " statement index")) !=
                expected)
                throw FormatError(c.id + ": statement indices must be sequential");
            CandidateStatement st;
            if (parts[1] == "global") {
                st.is_global = true;
            } else if (parts[1] != "no-debug-info") {
                auto pcolon = parts[1].rfind(':');
                if (pcolon == std::string::npos)
                    throw FormatError(c.id + ": bad provenance field: " + parts[1]);
                st.source_file = parts[1].substr(0, pcolon);
                st.source_line =
                    static_cast<int>(parse_long(parts[1].substr(pcolon + 1), "provenance line"));
            }
            st.text = parts[2];
            c.statements.push_back(std::move(st));
            ++expected;
            ++i;
        }
        for (int idx : c.label)
            if (idx < 1 || idx > static_cast<int>(c.statements.size()))
                throw FormatError(c.id + ": label index " + std::to_string(idx) +
                                  " out of range");
        corpus.candidates.push_back(std::move(c));
        corpus.excluded.push_back(excluded);
    }
    return corpus;
}

} // namespace vulnloc
