#include "vulnloc/ir.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <unordered_set>

#include "vulnloc/errors.hpp"
#include "vulnloc/text.hpp"

namespace vulnloc {

std::optional<long> IrStatement::numeric_result() const {
    if (!result)
        return std::nullopt;
    const std::string& r = *result;
    if (r.empty() || !std::all_of(r.begin(), r.end(),
                                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        return std::nullopt;
    return std::stol(r);
}

const IrFunction* IrModule::find_function(const std::string& name) const {
    for (const auto& f : functions)
        if (f.name == name)
            return &f;
    return nullptr;
}

namespace {

bool ir_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$' ||
           c == '-';
}

struct IrToken {
    enum Kind { Local, Global, Meta, Word, Number, Str, Punct } kind;
    std::string text; // sigil stripped for Local/Global/Meta
};

// One line -> tokens; trailing comment stripped.
std::vector<IrToken> lex_line(const std::string& line, const std::string& ctx) {
    std::vector<IrToken> out;
    std::size_t i = 0;
    auto name_from = [&](std::size_t start) {
        std::size_t j = start;
        if (j < line.size() && line[j] == '"') { // quoted name
            ++j;
            while (j < line.size() && line[j] != '"')
                ++j;
            ++j;
            return line.substr(start + 1, j - start - 2);
        }
        while (j < line.size() && ir_name_char(line[j]))
            ++j;
        return line.substr(start, j - start);
    };
    while (i < line.size()) {
        char c = line[i];
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        if (c == ';')
            break; // comment to end of line
        if (c == '%' || c == '@' || c == '!') {
            std::string name = name_from(i + 1);
            if (c == '%' && name.empty())
                throw ParseError(ctx + ": malformed SSA id near '" + line.substr(i, 8) + "'");
            std::size_t len = 1 + name.size();
            if (i + 1 < line.size() && line[i + 1] == '"')
                len = 1 + name.size() + 2;
            out.push_back({c == '%' ? IrToken::Local : c == '@' ? IrToken::Global : IrToken::Meta,
                           name});
            i += len;
            continue;
        }
        if (c == 'c' && i + 1 < line.size() && line[i + 1] == '"') {
            std::size_t j = i + 2;
            while (j < line.size() && line[j] != '"') {
                if (line[j] == '\\')
                    ++j;
                ++j;
            }
            out.push_back({IrToken::Str, line.substr(i, j + 1 - i)});
            i = j + 1;
            continue;
        }
        if (c == '"') {
            std::size_t j = i + 1;
            while (j < line.size() && line[j] != '"')
                ++j;
            out.push_back({IrToken::Str, line.substr(i, j + 1 - i)});
            i = j + 1;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && i + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[i + 1])))) {
            std::size_t j = i + 1;
            while (j < line.size() &&
                   (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '.' ||
                    line[j] == '+' || line[j] == '-' || line[j] == 'x'))
                ++j;
            out.push_back({IrToken::Number, line.substr(i, j - i)});
            i = j;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i + 1;
            while (j < line.size() && ir_name_char(line[j]))
                ++j;
            out.push_back({IrToken::Word, line.substr(i, j - i)});
            i = j;
            continue;
        }
        if (c == '.' && line.compare(i, 3, "...") == 0) {
            out.push_back({IrToken::Punct, "..."});
            i += 3;
            continue;
        }
        out.push_back({IrToken::Punct, std::string(1, c)});
        ++i;
    }
    return out;
}

const std::unordered_set<std::string> kTypeWords = {
    "i1",   "i8",    "i16",   "i32",  "i64",  "i128", "half", "float",
    "double", "void", "ptr",  "label", "metadata", "x86_fp80", "opaque", "fp128",
};

const std::unordered_set<std::string> kConstWords = {
    "null", "undef", "true", "false", "zeroinitializer", "none", "poison",
};

const std::unordered_set<std::string> kTerminators = {
    "br", "ret", "switch", "unreachable", "indirectbr", "resume",
};

class ModuleParser {
  public:
    ModuleParser(const std::string& text, const std::string& path) : path_(path) {
        lines_ = split(text, '\n');
    }

    IrModule run() {
        IrModule m;
        m.path = path_;
        std::size_t i = 0;
        while (i < lines_.size()) {
            std::string raw = lines_[i];
            std::string_view t = trim(raw);
            if (t.empty() || t.front() == ';') {
                ++i;
                continue;
            }
            if (t.starts_with("source_filename")) {
                auto q1 = raw.find('"');
                auto q2 = raw.rfind('"');
                if (q1 != std::string::npos && q2 > q1)
                    m.source_file = raw.substr(q1 + 1, q2 - q1 - 1);
                ++i;
                continue;
            }
            if (t.starts_with("!")) { // metadata node
                parse_metadata(std::string(t));
                ++i;
                continue;
            }
            if (t.starts_with("@")) {
                m.globals.push_back(parse_global(raw, i + 1));
                ++i;
                continue;
            }
            if (t.starts_with("declare")) {
                auto toks = lex_line(raw, ctx(i + 1));
                for (std::size_t k = 0; k + 1 < toks.size(); ++k)
                    if (toks[k].kind == IrToken::Global && toks[k + 1].text == "(") {
                        m.declared_externals.insert(toks[k].text);
                        break;
                    }
                ++i;
                continue;
            }
            if (t.starts_with("define")) {
                m.functions.push_back(parse_function(i)); // advances i past '}'
                continue;
            }
            ++i; // attributes, target lines, anything else at module level
        }
        if (m.source_file.empty()) {
            auto slash = path_.find_last_of('/');
            m.source_file = slash == std::string::npos ? path_ : path_.substr(slash + 1);
        }
        resolve_debug(m);
        check_ssa(m);
        std::set<std::string> fn_names;
        for (const auto& f : m.functions)
            if (!fn_names.insert(f.name).second)
                throw ParseError(path_ + ": duplicate definition of function @" + f.name);
        return m;
    }

  private:
    std::string path_;
    std::vector<std::string> lines_;
    std::map<std::string, int> dilocation_lines_;
    std::map<const IrStatement*, std::string> pending_dbg_; // statement -> metadata id

    std::string ctx(std::size_t line_no) const { return path_ + ":" + std::to_string(line_no); }

    void parse_metadata(const std::string& line) {
        // !N = !DILocation(line: 14, column: 5, scope: !6)
        auto toks = lex_line(line, path_);
        if (toks.size() < 3 || toks[0].kind != IrToken::Meta)
            return;
        bool is_diloc = false;
        for (const auto& tk : toks)
            if (tk.kind == IrToken::Meta && tk.text == "DILocation")
                is_diloc = true;
        if (!is_diloc)
            return;
        for (std::size_t k = 0; k + 2 < toks.size(); ++k)
            if (toks[k].text == "line" && toks[k + 1].text == ":" &&
                toks[k + 2].kind == IrToken::Number)
                dilocation_lines_[toks[0].text] = static_cast<int>(std::stol(toks[k + 2].text));
    }

    IrGlobal parse_global(const std::string& raw, std::size_t line_no) {
        auto toks = lex_line(raw, ctx(line_no));
        IrGlobal g;
        g.raw_text = raw;
        g.name = toks[0].text;
        for (std::size_t k = 1; k < toks.size(); ++k) {
            if (toks[k].kind == IrToken::Global)
                g.referenced_symbols.push_back(toks[k].text);
            if (toks[k].kind == IrToken::Word &&
                (toks[k].text == "internal" || toks[k].text == "private"))
                g.internal_linkage = true;
            if (toks[k].kind == IrToken::Word && toks[k].text == "external")
                g.is_definition = false;
        }
        return g;
    }

    IrFunction parse_function(std::size_t& i) {
        IrFunction fn;
        fn.raw_header = lines_[i];
        fn.is_definition = true;
        auto toks = lex_line(lines_[i], ctx(i + 1));
        std::size_t name_at = toks.size();
        for (std::size_t k = 0; k + 1 < toks.size(); ++k) {
            if (toks[k].kind == IrToken::Word &&
                (toks[k].text == "internal" || toks[k].text == "private"))
                fn.internal_linkage = true;
            if (toks[k].kind == IrToken::Global && toks[k + 1].text == "(" &&
                name_at == toks.size()) {
                fn.name = toks[k].text;
                name_at = k;
            }
        }
        if (fn.name.empty())
            throw ParseError(ctx(i + 1) + ": define without a function name");
        // Parameters: top-level comma groups inside the signature parens; an
        // unnamed parameter gets the next sequential number, as in LLVM.
        int depth = 0;
        int implicit = 0;
        bool saw_named = false;
        std::string pending;
        bool group_has_type = false;
        auto flush_param = [&]() {
            if (!group_has_type)
                return;
            if (!pending.empty()) {
                fn.params.push_back(pending);
                saw_named = true;
            } else if (!saw_named) {
                fn.params.push_back(std::to_string(implicit));
            }
            ++implicit;
            pending.clear();
            group_has_type = false;
        };
        for (std::size_t k = name_at + 1; k < toks.size(); ++k) {
            const auto& tk = toks[k];
            if (tk.text == "(")
                ++depth;
            else if (tk.text == ")") {
                if (--depth == 0) {
                    flush_param();
                    break;
                }
            } else if (depth == 1 && tk.text == ",") {
                flush_param();
            } else if (depth >= 1) {
                if (tk.kind == IrToken::Local)
                    pending = tk.text;
                else if (tk.kind == IrToken::Word || tk.kind == IrToken::Punct)
                    group_has_type = tk.text != "..." ? true : group_has_type;
            }
        }
        ++i;
        bool closed = false;
        while (i < lines_.size()) {
            std::string raw = lines_[i];
            std::string_view t = trim(raw);
            ++i;
            if (t.empty() || t.front() == ';')
                continue;
            if (t == "}") {
                closed = true;
                break;
            }
            // Block label: `name:` possibly with a trailing comment.
            auto colon = t.find(':');
            if (colon != std::string_view::npos && colon > 0) {
                std::string_view head = t.substr(0, colon);
                bool label = std::all_of(head.begin(), head.end(), ir_name_char);
                std::string_view rest = trim(t.substr(colon + 1));
                if (label && (rest.empty() || rest.front() == ';')) {
                    fn.labels.push_back({fn.statements.size(), std::string(head), raw});
                    continue;
                }
            }
            fn.statements.push_back(parse_statement(raw, i));
        }
        if (!closed)
            throw ParseError(ctx(i) + ": function @" + fn.name + " missing closing '}'");
        return fn;
    }

    IrStatement parse_statement(const std::string& raw, std::size_t line_no) {
        auto toks = lex_line(raw, ctx(line_no));
        IrStatement st;
        st.raw_text = raw;
        std::size_t k = 0;
        if (toks.size() >= 2 && toks[0].kind == IrToken::Local && toks[1].text == "=") {
            st.result = toks[0].text;
            k = 2;
        }
        while (k < toks.size() && toks[k].kind == IrToken::Word &&
               (toks[k].text == "tail" || toks[k].text == "musttail" || toks[k].text == "notail"))
            ++k;
        if (k >= toks.size() || toks[k].kind != IrToken::Word)
            throw ParseError(ctx(line_no) + ": expected opcode in '" + std::string(trim(raw)) + "'");
        st.opcode = toks[k].text;
        st.is_terminator = kTerminators.count(st.opcode) > 0;
        ++k;

        std::string dbg_ref;
        bool next_is_label = false;
        std::string phi_value;
        bool in_phi_pair = false;
        for (; k < toks.size(); ++k) {
            const auto& tk = toks[k];
            if (tk.kind == IrToken::Meta) {
                if (tk.text == "dbg" && k + 1 < toks.size() && toks[k + 1].kind == IrToken::Meta)
                    dbg_ref = toks[k + 1].text;
                continue; // metadata never becomes an operand
            }
            if (tk.kind == IrToken::Punct) {
                if (st.opcode == "phi") {
                    if (tk.text == "[") {
                        in_phi_pair = true;
                        phi_value.clear();
                    } else if (tk.text == "]") {
                        in_phi_pair = false;
                    }
                }
                continue;
            }
            if (tk.kind == IrToken::Word) {
                if (tk.text == "label") {
                    next_is_label = true;
                    continue;
                }
                if (tk.text == "align") { // swallow `align N`
                    if (k + 1 < toks.size() && toks[k + 1].kind == IrToken::Number)
                        ++k;
                    continue;
                }
                OperandKind kind = kTypeWords.count(tk.text) ? OperandKind::Type
                                   : kConstWords.count(tk.text) ? OperandKind::Constant
                                                                : OperandKind::Word;
                st.operands.push_back({kind, tk.text});
                continue;
            }
            if (tk.kind == IrToken::Number) {
                st.operands.push_back({OperandKind::Constant, tk.text});
                if (in_phi_pair && phi_value.empty())
                    phi_value = tk.text;
                continue;
            }
            if (tk.kind == IrToken::Str) {
                st.operands.push_back({OperandKind::Constant, tk.text});
                continue;
            }
            if (tk.kind == IrToken::Global) {
                if (st.is_call() && st.callee.empty() && k + 1 < toks.size() &&
                    toks[k + 1].text == "(")
                    st.callee = tk.text;
                st.operands.push_back({OperandKind::GlobalRef, tk.text});
                continue;
            }
            // Local reference.
            if (next_is_label) {
                st.operands.push_back({OperandKind::LabelRef, tk.text});
                if (st.is_terminator)
                    st.branch_targets.push_back(tk.text);
                next_is_label = false;
                continue;
            }
            if (st.opcode == "phi" && in_phi_pair) {
                if (phi_value.empty()) {
                    phi_value = "%" + tk.text;
                    st.operands.push_back({OperandKind::LocalRef, tk.text});
                } else {
                    st.operands.push_back({OperandKind::LabelRef, tk.text});
                    st.phi_incoming.emplace_back(phi_value, tk.text);
                }
                continue;
            }
            st.operands.push_back({OperandKind::LocalRef, tk.text});
        }
        if (st.is_call() && !st.callee.empty())
            parse_call_args(toks, st);
        // !dbg refs resolve after the whole file is read; metadata nodes may
        // appear below the functions that use them.
        dbg_for_statement_.push_back(dbg_ref);
        return st;
    }

    // Positional arguments of a direct call: the last value reference of each
    // top-level comma group, or "" for reference-free arguments.
    void parse_call_args(const std::vector<IrToken>& toks, IrStatement& st) const {
        std::size_t k = 0;
        while (k < toks.size() &&
               !(toks[k].kind == IrToken::Global && toks[k].text == st.callee &&
                 k + 1 < toks.size() && toks[k + 1].text == "("))
            ++k;
        if (k >= toks.size())
            return;
        int depth = 0;
        std::string last_ref;
        bool saw_any = false;
        for (k = k + 1; k < toks.size(); ++k) {
            const auto& tk = toks[k];
            if (tk.kind == IrToken::Punct && tk.text == "(") {
                ++depth;
                continue;
            }
            if (tk.kind == IrToken::Punct && tk.text == ")") {
                if (--depth == 0) {
                    if (saw_any)
                        st.call_args.push_back(last_ref);
                    break;
                }
                continue;
            }
            if (depth >= 1) {
                if (tk.kind == IrToken::Punct && tk.text == "," && depth == 1) {
                    st.call_args.push_back(last_ref);
                    last_ref.clear();
                    saw_any = false;
                    continue;
                }
                if (tk.kind == IrToken::Local)
                    last_ref = "%" + tk.text;
                else if (tk.kind == IrToken::Global)
                    last_ref = "@" + tk.text;
                if (tk.kind != IrToken::Punct || tk.text != ",")
                    saw_any = true;
            }
        }
    }

    void resolve_debug(IrModule& m) {
        std::size_t idx = 0;
        for (auto& fn : m.functions)
            for (auto& st : fn.statements) {
                if (idx < dbg_for_statement_.size() && !dbg_for_statement_[idx].empty()) {
                    auto it = dilocation_lines_.find(dbg_for_statement_[idx]);
                    if (it != dilocation_lines_.end())
                        st.debug = DebugLoc{m.source_file, it->second};
                }
                ++idx;
            }
    }

    void check_ssa(const IrModule& m) const {
        for (const auto& fn : m.functions) {
            std::map<std::string, std::size_t> def_at; // name -> statement index
            for (const auto& p : fn.params)
                def_at[p] = 0;
            std::set<std::string> labels;
            for (const auto& l : fn.labels)
                labels.insert(l.name);
            long last_numeric = 0;
            for (std::size_t s = 0; s < fn.statements.size(); ++s) {
                const auto& st = fn.statements[s];
                if (st.result) {
                    if (def_at.count(*st.result))
                        throw ParseError(m.path + ": duplicate definition of %" + *st.result +
                                         " in @" + fn.name);
                    if (auto n = st.numeric_result()) {
                        if (*n <= last_numeric && last_numeric != 0)
                            throw ParseError(m.path + ": malformed SSA id %" + *st.result +
                                             " in @" + fn.name + " (ids must increase)");
                        last_numeric = *n;
                    }
                    def_at[*st.result] = s + 1;
                }
            }
            for (std::size_t s = 0; s < fn.statements.size(); ++s) {
                const auto& st = fn.statements[s];
                if (st.opcode == "phi")
                    continue; // incoming values may be defined later
                for (const auto& op : st.operands) {
                    if (op.kind != OperandKind::LocalRef)
                        continue;
                    if (labels.count(op.text))
                        continue;
                    auto it = def_at.find(op.text);
                    if (it == def_at.end())
                        throw ParseError(m.path + ": use of undefined value %" + op.text +
                                         " in @" + fn.name);
                    if (it->second > s)
                        throw ParseError(m.path + ": %" + op.text + " used before definition in @" +
                                         fn.name);
                }
            }
        }
    }

    std::vector<std::string> dbg_for_statement_; // parallel to statement parse order
};

} // namespace

IrModule parse_ll(const std::string& text, const std::string& path) {
    return ModuleParser(text, path).run();
}

std::string render_statements(const IrFunction& fn) {
    std::string out;
    std::size_t label_idx = 0;
    for (std::size_t s = 0; s < fn.statements.size(); ++s) {
        while (label_idx < fn.labels.size() && fn.labels[label_idx].before_statement == s)
            out += fn.labels[label_idx++].raw_text + "\n";
        out += fn.statements[s].raw_text + "\n";
    }
    while (label_idx < fn.labels.size())
        out += fn.labels[label_idx++].raw_text + "\n";
    return out;
}

} // namespace vulnloc
