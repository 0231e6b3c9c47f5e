#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace vulnloc {

enum class OperandKind {
    LocalRef,  // %N or %name used as a value
    GlobalRef, // @name
    LabelRef,  // %N after the `label` keyword, or a phi incoming block
    Constant,
    Type,
    Word, // opcode flags, predicates, keywords
};

struct IrOperand {
    OperandKind kind;
    std::string text; // without the % / @ sigil for refs
};

struct DebugLoc {
    std::string file;
    int line = 0;
};

struct IrStatement {
    std::optional<std::string> result; // "%<result>"; numeric for temporaries
    std::string opcode;
    std::vector<IrOperand> operands;
    std::optional<DebugLoc> debug;
    std::string raw_text; // original line, byte-exact

    std::string callee;                       // direct call target, if any
    std::vector<std::string> call_args;       // positional: "%x", "@g", or "" per argument
    std::vector<std::string> branch_targets;  // label names, in order
    std::vector<std::pair<std::string, std::string>> phi_incoming; // (value, label)
    bool is_terminator = false;

    bool is_call() const { return opcode == "call"; }
    std::optional<long> numeric_result() const;
};

struct IrBlockLabel {
    std::size_t before_statement; // label sits before this statement index
    std::string name;
    std::string raw_text;
};

struct IrFunction {
    std::string name;
    bool is_definition = false;
    bool internal_linkage = false;
    std::vector<std::string> params; // names without '%'
    std::vector<IrStatement> statements;
    std::vector<IrBlockLabel> labels;
    std::string raw_header;
};

struct IrGlobal {
    std::string name;
    bool is_definition = true;
    bool internal_linkage = false;
    std::string raw_text;
    std::vector<std::string> referenced_symbols;
};

struct IrModule {
    std::string source_file; // from `source_filename`, else the .ll path stem
    std::string path;
    std::vector<IrGlobal> globals;
    std::vector<IrFunction> functions;
    std::set<std::string> declared_externals;

    const IrFunction* find_function(const std::string& name) const;
};

// Position of a statement inside a set of modules.
struct StatementRef {
    int module = -1;
    int function = -1; // -1 marks a module-level global statement
    int index = -1;

    bool operator==(const StatementRef&) const = default;
    auto operator<=>(const StatementRef&) const = default;
};

struct LinkedModule {
    std::vector<int> members; // module indices, ascending

    // name -> (module, function) for every definition in the group. External
    // definitions are unique per group; internal ones resolve module-locally.
    std::map<std::string, std::pair<int, int>> external_defs;
    std::map<std::pair<int, std::string>, int> internal_defs;

    std::optional<std::pair<int, int>> resolve_call(int from_module,
                                                    const std::string& callee) const;
};

// Parses a textual LLVM-IR subset. Unsupported instructions are preserved as
// opaque statements with operand refs extracted best-effort. Throws ParseError
// on malformed or duplicate SSA definitions.
IrModule parse_ll(const std::string& text, const std::string& path);

// Renders the parsed statements (with labels) back to text; used for the
// byte-for-byte round-trip check over the statement sequence.
std::string render_statements(const IrFunction& fn);

// Groups parsed modules by the transitive closure of symbol references and
// builds a merged function table per group. Throws LinkError when a group
// contains two externally-visible definitions of one function.
std::vector<LinkedModule> group_and_link(const std::vector<IrModule>& modules);

// All statements whose resolved debug location equals (file, line).
std::set<StatementRef> map_source_line(const LinkedModule& linked,
                                       const std::vector<IrModule>& modules,
                                       const std::string& file, int line);

} // namespace vulnloc
