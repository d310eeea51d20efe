#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <optloop/diagnostics.hpp>
#include <optloop/expr.hpp>

namespace optloop {

// ---------------------------------------------------------------------------
// Model types
// ---------------------------------------------------------------------------

// Symbolic and integer members are stored as their canonical text; the
// member's position in `members` is its dense 0-based index.
struct SetDecl {
    std::string name;
    std::vector<std::string> members;
    std::string description;

    friend bool operator==(const SetDecl& a, const SetDecl& b) {
        return a.name == b.name && a.members == b.members && a.description == b.description;
    }
};

// Scalar parameters have no index sets and exactly one value. Indexed
// parameters store values row-major over the index-set product.
struct ParamDecl {
    std::string name;
    std::vector<std::string> index_sets;
    std::vector<double> values;
    std::string description;

    friend bool operator==(const ParamDecl& a, const ParamDecl& b) {
        return a.name == b.name && a.index_sets == b.index_sets && a.values == b.values &&
               a.description == b.description;
    }
};

enum class VarDomain { Continuous, Integer, Binary };

inline const char* var_domain_name(VarDomain d) {
    switch (d) {
        case VarDomain::Continuous: return "continuous";
        case VarDomain::Integer: return "integer";
        case VarDomain::Binary: return "binary";
    }
    return "?";
}

struct VarDecl {
    std::string name;
    std::vector<std::string> index_sets;
    VarDomain domain = VarDomain::Continuous;
    std::optional<double> lower;  // declared bounds only; defaults applied by the compiler
    std::optional<double> upper;
    std::string description;

    friend bool operator==(const VarDecl& a, const VarDecl& b) {
        return a.name == b.name && a.index_sets == b.index_sets && a.domain == b.domain &&
               a.lower == b.lower && a.upper == b.upper && a.description == b.description;
    }
};

enum class ObjSense { Minimize, Maximize };
enum class Relation { Le, Ge, Eq };

inline const char* relation_text(Relation r) {
    switch (r) {
        case Relation::Le: return "<=";
        case Relation::Ge: return ">=";
        case Relation::Eq: return "==";
    }
    return "?";
}

struct Objective {
    ObjSense sense = ObjSense::Minimize;
    ExprPtr expr;

    friend bool operator==(const Objective& a, const Objective& b) {
        return a.sense == b.sense && expr_equal(a.expr, b.expr);
    }
};

struct ConstraintDecl {
    ExprPtr lhs;
    Relation rel = Relation::Le;
    ExprPtr rhs;
    std::vector<IndexBinding> quantifiers;

    friend bool operator==(const ConstraintDecl& a, const ConstraintDecl& b) {
        return expr_equal(a.lhs, b.lhs) && a.rel == b.rel && expr_equal(a.rhs, b.rhs) &&
               a.quantifiers == b.quantifiers;
    }
};

struct FiveElementModel {
    std::vector<SetDecl> sets;
    std::vector<ParamDecl> parameters;
    std::vector<VarDecl> variables;
    Objective objective;
    std::vector<ConstraintDecl> constraints;

    const SetDecl* find_set(std::string_view name) const {
        for (const auto& s : sets)
            if (s.name == name) return &s;
        return nullptr;
    }
    const ParamDecl* find_param(std::string_view name) const {
        for (const auto& p : parameters)
            if (p.name == name) return &p;
        return nullptr;
    }
    const VarDecl* find_var(std::string_view name) const {
        for (const auto& v : variables)
            if (v.name == name) return &v;
        return nullptr;
    }

    friend bool operator==(const FiveElementModel& a, const FiveElementModel& b) {
        return a.sets == b.sets && a.parameters == b.parameters && a.variables == b.variables &&
               a.objective == b.objective && a.constraints == b.constraints;
    }
};

// ---------------------------------------------------------------------------
// Tokenizer (per entry line)
// ---------------------------------------------------------------------------

namespace fe_detail {

struct Token {
    enum Type { Ident, Number, Sym, End } type = End;
    std::string text;
    int col = 0;  // 1-based
};

inline bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Tokenizes one physical line (comment already removed). On bad characters
// returns false and reports the column.
inline bool tokenize_line(const std::string& line, std::vector<Token>& out, int& bad_col) {
    size_t i = 0;
    while (i < line.size()) {
        char c = line[i];
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        int col = static_cast<int>(i) + 1;
        if (is_ident_start(c)) {
            size_t j = i;
            while (j < line.size() && is_ident_char(line[j])) ++j;
            out.push_back({Token::Ident, line.substr(i, j - i), col});
            i = j;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t j = i;
            while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
            if (j < line.size() && line[j] == '.' && j + 1 < line.size() &&
                std::isdigit(static_cast<unsigned char>(line[j + 1]))) {
                ++j;
                while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
            }
            out.push_back({Token::Number, line.substr(i, j - i), col});
            i = j;
            continue;
        }
        auto two = line.substr(i, 2);
        if (two == "==" || two == "<=" || two == ">=" || two == "..") {
            out.push_back({Token::Sym, two, col});
            i += 2;
            continue;
        }
        if (std::string("={}()[],:+-*").find(c) != std::string::npos) {
            out.push_back({Token::Sym, std::string(1, c), col});
            ++i;
            continue;
        }
        bad_col = col;
        return false;
    }
    out.push_back({Token::End, "", static_cast<int>(line.size()) + 1});
    return true;
}

// Desk-scale guardrails so hostile documents cannot blow the stack or
// memory: sets stay enumerable and expression nesting stays bounded.
inline constexpr long long kMaxSetMembers = 10000;
inline constexpr int kMaxExprDepth = 200;

inline bool is_reserved(const std::string& word) {
    static const std::set<std::string> kws = {"sum",    "in",      "forall",     "minimize",
                                              "maximize", "binary", "integer",    "continuous",
                                              "inf"};
    return kws.count(word) > 0;
}

// Normalizes an integer literal used as a set member (strips leading zeros).
inline std::string normalize_int_text(const std::string& text) {
    long long v = 0;
    std::from_chars(text.data(), text.data() + text.size(), v);
    return std::to_string(v);
}

struct TokenStream {
    const std::vector<Token>* toks;
    size_t pos = 0;
    int line = 0;

    const Token& peek() const { return (*toks)[pos]; }
    const Token& get() { return (*toks)[std::min(pos++, toks->size() - 1)]; }
    bool at_end() const { return peek().type == Token::End; }
    bool accept_sym(const std::string& s) {
        if (peek().type == Token::Sym && peek().text == s) {
            ++pos;
            return true;
        }
        return false;
    }
    bool accept_kw(const std::string& w) {
        if (peek().type == Token::Ident && peek().text == w) {
            ++pos;
            return true;
        }
        return false;
    }
};

struct ParseError {
    std::string message;
    int col = 0;
};

// Recursive-descent expression parser over a token stream.
struct ExprParser {
    TokenStream& ts;
    std::optional<ParseError> error;
    int depth = 0;

    ExprPtr fail(const std::string& msg) {
        if (!error) error = ParseError{msg, ts.peek().col};
        return nullptr;
    }

    struct DepthGuard {
        ExprParser& p;
        bool ok;
        explicit DepthGuard(ExprParser& parser) : p(parser), ok(++p.depth <= kMaxExprDepth) {
            if (!ok) p.fail("expression nesting too deep");
        }
        ~DepthGuard() { --p.depth; }
    };

    ExprPtr parse_expr() {
        DepthGuard guard(*this);
        if (!guard.ok) return nullptr;
        ExprPtr lhs = parse_term();
        if (!lhs) return nullptr;
        while (true) {
            if (ts.accept_sym("+")) {
                ExprPtr rhs = parse_term();
                if (!rhs) return nullptr;
                lhs = make_add(std::move(lhs), std::move(rhs));
            } else if (ts.accept_sym("-")) {
                ExprPtr rhs = parse_term();
                if (!rhs) return nullptr;
                lhs = make_sub(std::move(lhs), std::move(rhs));
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_term() {
        ExprPtr lhs = parse_factor();
        if (!lhs) return nullptr;
        while (ts.accept_sym("*")) {
            ExprPtr rhs = parse_factor();
            if (!rhs) return nullptr;
            lhs = make_mul(std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    ExprPtr parse_factor() {
        DepthGuard guard(*this);
        if (!guard.ok) return nullptr;
        const Token& t = ts.peek();
        if (t.type == Token::Number) {
            double v = 0;
            std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
            ts.get();
            return make_number(v);
        }
        if (ts.accept_sym("-")) {
            ExprPtr inner = parse_factor();
            if (!inner) return nullptr;
            return make_neg(std::move(inner));
        }
        if (ts.accept_sym("(")) {
            ExprPtr inner = parse_expr();
            if (!inner) return nullptr;
            if (!ts.accept_sym(")")) return fail("expected ')'");
            return inner;
        }
        if (t.type == Token::Ident && t.text == "sum") {
            ts.get();
            if (!ts.accept_sym("(")) return fail("expected '(' after sum");
            std::vector<IndexBinding> bindings;
            if (!parse_bindings(bindings, ")")) return nullptr;
            if (!ts.accept_sym(")")) return fail("expected ')' after sum bindings");
            ExprPtr body = parse_term();
            if (!body) return nullptr;
            return make_sum(std::move(bindings), std::move(body));
        }
        if (t.type == Token::Ident) {
            if (is_reserved(t.text)) return fail("unexpected keyword '" + t.text + "'");
            std::string name = ts.get().text;
            std::vector<std::string> indices;
            if (ts.accept_sym("[")) {
                while (true) {
                    const Token& it = ts.peek();
                    if (it.type == Token::Ident && !is_reserved(it.text)) {
                        indices.push_back(ts.get().text);
                    } else if (it.type == Token::Number &&
                               it.text.find('.') == std::string::npos) {
                        indices.push_back(normalize_int_text(ts.get().text));
                    } else {
                        return fail("expected index name or integer member");
                    }
                    if (ts.accept_sym(",")) continue;
                    if (ts.accept_sym("]")) break;
                    return fail("expected ',' or ']' in index list");
                }
            }
            return make_ref(std::move(name), std::move(indices));
        }
        return fail("expected expression");
    }

    // Parses `i in S [, j in T ...]` up to (but not consuming) `stop`.
    bool parse_bindings(std::vector<IndexBinding>& out, const std::string& stop) {
        while (true) {
            const Token& t = ts.peek();
            if (t.type != Token::Ident || is_reserved(t.text)) {
                fail("expected index variable name");
                return false;
            }
            std::string idx = ts.get().text;
            if (!ts.accept_kw("in")) {
                fail("expected 'in' after index variable");
                return false;
            }
            const Token& s = ts.peek();
            if (s.type != Token::Ident || is_reserved(s.text)) {
                fail("expected set name");
                return false;
            }
            out.push_back({idx, ts.get().text});
            if (ts.accept_sym(",")) continue;
            if (ts.peek().type == Token::Sym && ts.peek().text == stop) return true;
            if (stop.empty() && ts.at_end()) return true;
            if (!stop.empty()) {
                fail("expected ',' or '" + stop + "'");
                return false;
            }
            fail("unexpected token after bindings");
            return false;
        }
    }
};

}  // namespace fe_detail

// ---------------------------------------------------------------------------
// Document extraction
// ---------------------------------------------------------------------------

namespace fe_detail {

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    size_t start = 0;
    while (start <= text.size()) {
        size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        lines.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

static const char* kSectionNames[5] = {"Sets", "Parameters", "Variables", "Objective",
                                       "Constraints"};

// Returns section index (0..4) if the line is a `## Name:` header.
inline int match_section_header(const std::string& line) {
    std::string t = trim(line);
    if (t.rfind("##", 0) != 0) return -1;
    t = trim(t.substr(2));
    if (!t.empty() && t.back() == ':') t = trim(t.substr(0, t.size() - 1));
    std::string lt = lower(t);
    for (int i = 0; i < 5; ++i)
        if (lt == lower(kSectionNames[i])) return i;
    return -1;
}

inline bool contains_all_headers(const std::string& text) {
    auto lines = split_lines(text);
    bool seen[5] = {false, false, false, false, false};
    for (const auto& l : lines) {
        int s = match_section_header(l);
        if (s >= 0) seen[s] = true;
    }
    for (bool b : seen)
        if (!b) return false;
    return true;
}

}  // namespace fe_detail

// LLM responses wrap the document in prose and code fences. Extraction takes
// the last fenced block that carries all five section headers; if no such
// block exists the whole message is used.
inline std::string extract_five_element_document(std::string_view response) {
    auto lines = fe_detail::split_lines(response);
    std::string best;
    std::string current;
    bool in_fence = false;
    for (const auto& raw : lines) {
        std::string t = fe_detail::trim(raw);
        if (t.rfind("```", 0) == 0) {
            if (in_fence) {
                if (fe_detail::contains_all_headers(current)) best = current;
                current.clear();
                in_fence = false;
            } else {
                in_fence = true;
                current.clear();
            }
            continue;
        }
        if (in_fence) {
            current += raw;
            current += '\n';
        }
    }
    if (!best.empty()) return best;
    return std::string(response);
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct ParseResult {
    std::optional<FiveElementModel> model;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return model.has_value(); }
};

namespace fe_detail {

struct SectionText {
    bool present = false;
    // (line number in extracted document, entry text, description)
    std::vector<std::pair<int, std::string>> entries;
};

// Splits a raw entry line into entry text and trailing `//` description.
inline std::pair<std::string, std::string> split_comment(const std::string& line) {
    size_t pos = line.find("//");
    if (pos == std::string::npos) return {trim(line), ""};
    return {trim(line.substr(0, pos)), trim(line.substr(pos + 2))};
}

struct DocParser {
    std::vector<Diagnostic> diags;

    void fail(DiagCode code, std::string msg, int line = 0, int col = 0) {
        diags.push_back({code, std::move(msg), line, col});
    }

    bool tokens_for(const std::string& text, int line, std::vector<Token>& toks) {
        int bad_col = 0;
        if (!tokenize_line(text, toks, bad_col)) {
            fail(DiagCode::SyntaxError, "unrecognized character", line, bad_col);
            return false;
        }
        return true;
    }

    std::optional<std::string> parse_decl_name(TokenStream& ts, int line) {
        const Token& t = ts.peek();
        if (t.type != Token::Ident) {
            fail(DiagCode::SyntaxError, "expected a name", line, t.col);
            return std::nullopt;
        }
        if (is_reserved(t.text)) {
            fail(DiagCode::SyntaxError, "'" + t.text + "' is a reserved word", line, t.col);
            return std::nullopt;
        }
        return ts.get().text;
    }

    // `NAME = {m1, m2, ...}` or `NAME = {lo..hi}`
    void parse_set_entry(const std::string& text, const std::string& desc, int line,
                         FiveElementModel& model) {
        std::vector<Token> toks;
        if (!tokens_for(text, line, toks)) return;
        TokenStream ts{&toks, 0, line};
        auto name = parse_decl_name(ts, line);
        if (!name) return;
        if (!ts.accept_sym("=") || !ts.accept_sym("{")) {
            fail(DiagCode::SyntaxError, "expected '= {' in set declaration", line, ts.peek().col);
            return;
        }
        SetDecl decl;
        decl.name = *name;
        decl.description = desc;
        // Range form
        if (ts.peek().type == Token::Number && (*ts.toks)[ts.pos + 1].type == Token::Sym &&
            (*ts.toks)[ts.pos + 1].text == "..") {
            std::string lo_t = ts.get().text;
            ts.get();  // ".."
            if (ts.peek().type != Token::Number) {
                fail(DiagCode::SyntaxError, "expected range upper bound", line, ts.peek().col);
                return;
            }
            std::string hi_t = ts.get().text;
            if (lo_t.find('.') != std::string::npos || hi_t.find('.') != std::string::npos) {
                fail(DiagCode::SyntaxError, "set ranges must be integers", line, ts.peek().col);
                return;
            }
            long long lo = 0, hi = 0;
            auto lo_res = std::from_chars(lo_t.data(), lo_t.data() + lo_t.size(), lo);
            auto hi_res = std::from_chars(hi_t.data(), hi_t.data() + hi_t.size(), hi);
            if (lo_res.ec != std::errc{} || hi_res.ec != std::errc{}) {
                fail(DiagCode::SyntaxError, "set range bound out of range", line, ts.peek().col);
                return;
            }
            if (lo > hi) {
                fail(DiagCode::SyntaxError, "empty set range", line, ts.peek().col);
                return;
            }
            if (hi - lo + 1 > kMaxSetMembers) {
                fail(DiagCode::SyntaxError,
                     "set range exceeds " + std::to_string(kMaxSetMembers) + " members", line,
                     ts.peek().col);
                return;
            }
            for (long long v = lo; v <= hi; ++v) decl.members.push_back(std::to_string(v));
        } else {
            while (true) {
                const Token& t = ts.peek();
                if (t.type == Token::Ident && !is_reserved(t.text)) {
                    decl.members.push_back(ts.get().text);
                } else if (t.type == Token::Number && t.text.find('.') == std::string::npos) {
                    decl.members.push_back(normalize_int_text(ts.get().text));
                } else {
                    fail(DiagCode::SyntaxError, "expected set member", line, t.col);
                    return;
                }
                if (ts.accept_sym(",")) continue;
                break;
            }
        }
        if (!ts.accept_sym("}") || !ts.at_end()) {
            fail(DiagCode::SyntaxError, "expected '}' at end of set declaration", line,
                 ts.peek().col);
            return;
        }
        if (decl.members.empty()) {
            fail(DiagCode::SyntaxError, "set '" + decl.name + "' has no members", line, 0);
            return;
        }
        if (static_cast<long long>(decl.members.size()) > kMaxSetMembers) {
            fail(DiagCode::SyntaxError,
                 "set '" + decl.name + "' exceeds " + std::to_string(kMaxSetMembers) +
                     " members",
                 line, 0);
            return;
        }
        for (size_t i = 0; i < decl.members.size(); ++i)
            for (size_t j = i + 1; j < decl.members.size(); ++j)
                if (decl.members[i] == decl.members[j]) {
                    fail(DiagCode::DuplicateName,
                         "duplicate member '" + decl.members[i] + "' in set '" + decl.name + "'",
                         line, 0);
                    return;
                }
        model.sets.push_back(std::move(decl));
    }

    bool parse_signed_number(TokenStream& ts, int line, double& out) {
        bool neg = ts.accept_sym("-");
        if (ts.peek().type != Token::Number) {
            fail(DiagCode::SyntaxError, "expected a number", line, ts.peek().col);
            return false;
        }
        std::string t = ts.get().text;
        double v = 0;
        std::from_chars(t.data(), t.data() + t.size(), v);
        out = neg ? -v : v;
        return true;
    }

    std::optional<std::vector<std::string>> parse_index_sets(TokenStream& ts, int line) {
        std::vector<std::string> sets;
        if (!ts.accept_sym("[")) return sets;
        while (true) {
            const Token& t = ts.peek();
            if (t.type != Token::Ident || is_reserved(t.text)) {
                fail(DiagCode::SyntaxError, "expected index-set name", line, t.col);
                return std::nullopt;
            }
            sets.push_back(ts.get().text);
            if (ts.accept_sym(",")) continue;
            if (ts.accept_sym("]")) break;
            fail(DiagCode::SyntaxError, "expected ',' or ']'", line, ts.peek().col);
            return std::nullopt;
        }
        if (sets.size() > 2) {
            fail(DiagCode::SyntaxError, "at most two index sets are supported", line, 0);
            return std::nullopt;
        }
        return sets;
    }

    // `NAME = v` | `NAME[I] = (v1, ...)` | `NAME[I,J] = (... )` (row-major;
    // nested tuples are accepted and flattened)
    void parse_param_entry(const std::string& text, const std::string& desc, int line,
                           FiveElementModel& model) {
        std::vector<Token> toks;
        if (!tokens_for(text, line, toks)) return;
        TokenStream ts{&toks, 0, line};
        auto name = parse_decl_name(ts, line);
        if (!name) return;
        ParamDecl decl;
        decl.name = *name;
        decl.description = desc;
        auto sets = parse_index_sets(ts, line);
        if (!sets) return;
        decl.index_sets = *sets;
        if (!ts.accept_sym("=")) {
            fail(DiagCode::SyntaxError, "expected '=' in parameter declaration", line,
                 ts.peek().col);
            return;
        }
        if (decl.index_sets.empty() && ts.peek().type != Token::Sym) {
            double v = 0;
            if (!parse_signed_number(ts, line, v)) return;
            decl.values.push_back(v);
        } else if (ts.peek().type == Token::Sym && ts.peek().text == "-") {
            double v = 0;
            if (!parse_signed_number(ts, line, v)) return;
            decl.values.push_back(v);
        } else {
            if (!ts.accept_sym("(")) {
                fail(DiagCode::SyntaxError, "expected '(' before parameter values", line,
                     ts.peek().col);
                return;
            }
            int depth = 1;
            bool want_value = true;
            while (depth > 0) {
                if (ts.accept_sym("(")) {
                    ++depth;
                    continue;
                }
                if (ts.accept_sym(")")) {
                    --depth;
                    continue;
                }
                if (ts.accept_sym(",")) {
                    want_value = true;
                    continue;
                }
                if (ts.at_end()) {
                    fail(DiagCode::SyntaxError, "unterminated value list", line, ts.peek().col);
                    return;
                }
                if (!want_value) {
                    fail(DiagCode::SyntaxError, "expected ',' between parameter values", line,
                         ts.peek().col);
                    return;
                }
                double v = 0;
                if (!parse_signed_number(ts, line, v)) return;
                decl.values.push_back(v);
                want_value = false;
            }
            if (decl.values.empty()) {
                fail(DiagCode::SyntaxError, "parameter '" + decl.name + "' has no values", line,
                     0);
                return;
            }
        }
        if (!ts.at_end()) {
            fail(DiagCode::SyntaxError, "unexpected trailing text in parameter declaration", line,
                 ts.peek().col);
            return;
        }
        model.parameters.push_back(std::move(decl));
    }

    // `NAME : domain` | `NAME[I] : domain in lo..hi`
    void parse_var_entry(const std::string& text, const std::string& desc, int line,
                         FiveElementModel& model) {
        std::vector<Token> toks;
        if (!tokens_for(text, line, toks)) return;
        TokenStream ts{&toks, 0, line};
        auto name = parse_decl_name(ts, line);
        if (!name) return;
        VarDecl decl;
        decl.name = *name;
        decl.description = desc;
        auto sets = parse_index_sets(ts, line);
        if (!sets) return;
        decl.index_sets = *sets;
        if (!ts.accept_sym(":")) {
            fail(DiagCode::SyntaxError, "expected ':' in variable declaration", line,
                 ts.peek().col);
            return;
        }
        if (ts.accept_kw("binary")) {
            decl.domain = VarDomain::Binary;
        } else if (ts.accept_kw("integer")) {
            decl.domain = VarDomain::Integer;
        } else if (ts.accept_kw("continuous")) {
            decl.domain = VarDomain::Continuous;
        } else {
            fail(DiagCode::SyntaxError, "expected domain (binary|integer|continuous)", line,
                 ts.peek().col);
            return;
        }
        if (ts.accept_kw("in")) {
            // A bounds clause always sets both sides; `inf`/`-inf` mark an
            // unbounded side. Absent clause = defaults applied at compile.
            auto bound = [&](std::optional<double>& out) -> bool {
                bool neg = ts.accept_sym("-");
                if (ts.accept_kw("inf")) {
                    out = neg ? -std::numeric_limits<double>::infinity()
                              : std::numeric_limits<double>::infinity();
                    return true;
                }
                if (ts.peek().type != Token::Number) {
                    fail(DiagCode::SyntaxError, "expected bound value or inf", line,
                         ts.peek().col);
                    return false;
                }
                std::string t = ts.get().text;
                double v = 0;
                std::from_chars(t.data(), t.data() + t.size(), v);
                out = neg ? -v : v;
                return true;
            };
            if (!bound(decl.lower)) return;
            if (!ts.accept_sym("..")) {
                fail(DiagCode::SyntaxError, "expected '..' in bounds", line, ts.peek().col);
                return;
            }
            if (!bound(decl.upper)) return;
        }
        if (!ts.at_end()) {
            fail(DiagCode::SyntaxError, "unexpected trailing text in variable declaration", line,
                 ts.peek().col);
            return;
        }
        model.variables.push_back(std::move(decl));
    }

    void parse_objective_entry(const std::string& text, int line, FiveElementModel& model,
                               bool& have_objective) {
        std::vector<Token> toks;
        if (!tokens_for(text, line, toks)) return;
        TokenStream ts{&toks, 0, line};
        ObjSense sense;
        if (ts.accept_kw("minimize")) {
            sense = ObjSense::Minimize;
        } else if (ts.accept_kw("maximize")) {
            sense = ObjSense::Maximize;
        } else {
            fail(DiagCode::SyntaxError, "objective must start with minimize or maximize", line,
                 ts.peek().col);
            return;
        }
        ExprParser ep{ts, {}};
        ExprPtr e = ep.parse_expr();
        if (!e || !ts.at_end()) {
            auto err = ep.error ? *ep.error : ParseError{"unexpected trailing text", ts.peek().col};
            fail(DiagCode::SyntaxError, err.message, line, err.col);
            return;
        }
        if (have_objective) {
            fail(DiagCode::SyntaxError, "multiple objective lines", line, 0);
            return;
        }
        model.objective = Objective{sense, std::move(e)};
        have_objective = true;
    }

    void parse_constraint_entry(const std::string& text, int line, FiveElementModel& model) {
        std::vector<Token> toks;
        if (!tokens_for(text, line, toks)) return;
        TokenStream ts{&toks, 0, line};
        ExprParser ep{ts, {}};
        ExprPtr lhs = ep.parse_expr();
        if (!lhs) {
            auto err = *ep.error;
            fail(DiagCode::SyntaxError, err.message, line, err.col);
            return;
        }
        Relation rel;
        if (ts.accept_sym("<=")) {
            rel = Relation::Le;
        } else if (ts.accept_sym(">=")) {
            rel = Relation::Ge;
        } else if (ts.accept_sym("==") || ts.accept_sym("=")) {
            rel = Relation::Eq;
        } else {
            fail(DiagCode::SyntaxError, "expected relation (<=, >=, ==)", line, ts.peek().col);
            return;
        }
        ExprPtr rhs = ep.parse_expr();
        if (!rhs) {
            auto err = *ep.error;
            fail(DiagCode::SyntaxError, err.message, line, err.col);
            return;
        }
        ConstraintDecl decl;
        decl.lhs = std::move(lhs);
        decl.rel = rel;
        decl.rhs = std::move(rhs);
        if (ts.accept_kw("forall")) {
            if (!ep.parse_bindings(decl.quantifiers, "")) {
                auto err = *ep.error;
                fail(DiagCode::SyntaxError, err.message, line, err.col);
                return;
            }
        }
        if (!ts.at_end()) {
            fail(DiagCode::SyntaxError, "unexpected trailing text after constraint", line,
                 ts.peek().col);
            return;
        }
        model.constraints.push_back(std::move(decl));
    }
};

}  // namespace fe_detail

// Structural parse only; section contents are checked but cross-references
// are not resolved (see `validate`).
inline ParseResult parse_five_element_structure(std::string_view text) {
    using namespace fe_detail;
    std::string doc = extract_five_element_document(text);
    auto lines = split_lines(doc);

    SectionText sections[5];
    int current = -1;
    DocParser dp;
    for (size_t li = 0; li < lines.size(); ++li) {
        const std::string& raw = lines[li];
        int header = match_section_header(raw);
        if (header >= 0) {
            if (sections[header].present) {
                dp.fail(DiagCode::SyntaxError,
                        std::string("duplicate section '") + kSectionNames[header] + "'",
                        static_cast<int>(li + 1), 0);
            }
            sections[header].present = true;
            current = header;
            continue;
        }
        std::string entry = trim(raw);
        if (entry.empty()) continue;
        if (current < 0) continue;  // prose before the first header is ignored
        sections[current].entries.push_back({static_cast<int>(li + 1), raw});
    }

    for (int s = 0; s < 5; ++s)
        if (!sections[s].present)
            dp.fail(DiagCode::MissingSection, std::string("section '") + kSectionNames[s] +
                                                  "' not found");
    if (!dp.diags.empty()) return {std::nullopt, std::move(dp.diags)};

    FiveElementModel model;
    bool have_objective = false;
    for (auto& [line, raw] : sections[0].entries) {
        auto [entry, desc] = split_comment(raw);
        if (!entry.empty()) dp.parse_set_entry(entry, desc, line, model);
    }
    for (auto& [line, raw] : sections[1].entries) {
        auto [entry, desc] = split_comment(raw);
        if (!entry.empty()) dp.parse_param_entry(entry, desc, line, model);
    }
    for (auto& [line, raw] : sections[2].entries) {
        auto [entry, desc] = split_comment(raw);
        if (!entry.empty()) dp.parse_var_entry(entry, desc, line, model);
    }
    for (auto& [line, raw] : sections[3].entries) {
        auto [entry, desc] = split_comment(raw);
        if (!entry.empty()) dp.parse_objective_entry(entry, line, model, have_objective);
    }
    for (auto& [line, raw] : sections[4].entries) {
        auto [entry, desc] = split_comment(raw);
        if (!entry.empty()) dp.parse_constraint_entry(entry, line, model);
    }
    if (!have_objective && dp.diags.empty())
        dp.fail(DiagCode::SyntaxError, "objective section has no objective line");
    if (!dp.diags.empty()) return {std::nullopt, std::move(dp.diags)};
    return {std::move(model), {}};
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace fe_detail {

struct Validator {
    const FiveElementModel& model;
    std::vector<Diagnostic> diags;

    void fail(DiagCode code, std::string msg) { diags.push_back({code, std::move(msg), 0, 0}); }

    bool set_is_subset(const SetDecl& inner, const SetDecl& outer) {
        for (const auto& m : inner.members)
            if (std::find(outer.members.begin(), outer.members.end(), m) == outer.members.end())
                return false;
        return true;
    }

    // env maps bound index variables to the set they range over.
    void check_ref(const ExprPtr& e, const std::map<std::string, std::string>& env,
                   bool& saw_variable) {
        const ParamDecl* param = model.find_param(e->name);
        const VarDecl* var = model.find_var(e->name);
        if (!param && !var) {
            if (env.count(e->name) && e->indices.empty()) {
                fail(DiagCode::SyntaxError,
                     "index variable '" + e->name + "' used as a value");
                return;
            }
            fail(DiagCode::UnresolvedReference, "'" + e->name + "' is not declared");
            return;
        }
        if (var) saw_variable = true;
        const auto& index_sets = param ? param->index_sets : var->index_sets;
        if (e->indices.size() != index_sets.size()) {
            fail(DiagCode::UnresolvedReference,
                 "'" + e->name + "' expects " + std::to_string(index_sets.size()) +
                     " indices, got " + std::to_string(e->indices.size()));
            return;
        }
        for (size_t k = 0; k < e->indices.size(); ++k) {
            const std::string& idx = e->indices[k];
            const SetDecl* target = model.find_set(index_sets[k]);
            if (!target) continue;  // reported at the declaration
            auto bound = env.find(idx);
            if (bound != env.end()) {
                const SetDecl* from = model.find_set(bound->second);
                if (from && !set_is_subset(*from, *target))
                    fail(DiagCode::UnresolvedReference,
                         "index '" + idx + "' ranges over '" + bound->second +
                             "' which is not contained in '" + index_sets[k] + "' (required by '" +
                             e->name + "')");
                continue;
            }
            if (model.find_var(idx)) {
                // Table lookup by a decision variable: the parameter's value
                // would not be a number at compile time.
                fail(DiagCode::NonNumericParameter,
                     "'" + e->name + "' is indexed by decision variable '" + idx + "'");
                continue;
            }
            const auto& members = target->members;
            if (std::find(members.begin(), members.end(), idx) == members.end())
                fail(DiagCode::UnresolvedReference,
                     "'" + idx + "' is not a member of set '" + index_sets[k] + "'");
        }
    }

    void check_expr(const ExprPtr& e, std::map<std::string, std::string> env,
                    bool& saw_variable) {
        if (!e) return;
        switch (e->kind) {
            case ExprKind::Number:
                return;
            case ExprKind::Ref:
                check_ref(e, env, saw_variable);
                return;
            case ExprKind::Neg:
                check_expr(e->a, env, saw_variable);
                return;
            case ExprKind::Add:
            case ExprKind::Sub:
            case ExprKind::Mul:
                check_expr(e->a, env, saw_variable);
                check_expr(e->b, env, saw_variable);
                return;
            case ExprKind::Sum: {
                for (const auto& b : e->bindings) {
                    if (env.count(b.index)) {
                        fail(DiagCode::DuplicateIndexBinding,
                             "index variable '" + b.index + "' is already bound");
                        continue;
                    }
                    if (model.find_set(b.index) || model.find_param(b.index) ||
                        model.find_var(b.index))
                        fail(DiagCode::DuplicateName,
                             "index variable '" + b.index + "' collides with a declared name");
                    if (!model.find_set(b.set))
                        fail(DiagCode::UnresolvedReference,
                             "summation set '" + b.set + "' is not declared");
                    env[b.index] = b.set;
                }
                check_expr(e->a, env, saw_variable);
                return;
            }
        }
    }

    void run() {
        // Unique names across sets, parameters, variables.
        std::map<std::string, int> seen;
        auto check_name = [&](const std::string& n) {
            if (++seen[n] == 2) fail(DiagCode::DuplicateName, "'" + n + "' is declared twice");
        };
        for (const auto& s : model.sets) check_name(s.name);
        for (const auto& p : model.parameters) check_name(p.name);
        for (const auto& v : model.variables) check_name(v.name);

        // Parameter index sets and value shapes.
        for (const auto& p : model.parameters) {
            size_t expected = 1;
            bool resolved = true;
            for (const auto& sname : p.index_sets) {
                const SetDecl* s = model.find_set(sname);
                if (!s) {
                    fail(DiagCode::UnresolvedReference,
                         "parameter '" + p.name + "' is indexed by undeclared set '" + sname +
                             "'");
                    resolved = false;
                    continue;
                }
                expected *= s->members.size();
            }
            if (resolved && p.values.size() != expected)
                fail(DiagCode::ShapeMismatch, "parameter '" + p.name + "' expects " +
                                                  std::to_string(expected) + " values, got " +
                                                  std::to_string(p.values.size()));
        }

        // Variable index sets and bounds.
        for (const auto& v : model.variables) {
            for (const auto& sname : v.index_sets)
                if (!model.find_set(sname))
                    fail(DiagCode::UnresolvedReference,
                         "variable '" + v.name + "' is indexed by undeclared set '" + sname +
                             "'");
            if (v.lower && v.upper && *v.lower > *v.upper)
                fail(DiagCode::SyntaxError,
                     "variable '" + v.name + "': lower bound exceeds upper bound");
        }

        if (model.variables.empty()) fail(DiagCode::NoVariables, "no variables are declared");

        bool obj_has_var = false;
        size_t diags_before = diags.size();
        check_expr(model.objective.expr, {}, obj_has_var);
        // Only meaningful when the objective itself resolved cleanly.
        if (model.objective.expr && !obj_has_var && diags.size() == diags_before)
            fail(DiagCode::ObjectiveHasNoVariable, "objective references no variable");

        for (const auto& c : model.constraints) {
            std::map<std::string, std::string> env;
            for (const auto& q : c.quantifiers) {
                if (env.count(q.index)) {
                    fail(DiagCode::DuplicateIndexBinding,
                         "quantifier index '" + q.index + "' is already bound");
                    continue;
                }
                if (model.find_set(q.index) || model.find_param(q.index) ||
                    model.find_var(q.index))
                    fail(DiagCode::DuplicateName,
                         "index variable '" + q.index + "' collides with a declared name");
                if (!model.find_set(q.set))
                    fail(DiagCode::UnresolvedReference,
                         "quantifier set '" + q.set + "' is not declared");
                env[q.index] = q.set;
            }
            bool unused = false;
            check_expr(c.lhs, env, unused);
            check_expr(c.rhs, env, unused);
        }
    }
};

}  // namespace fe_detail

// Returns the empty list iff every model invariant holds.
inline std::vector<Diagnostic> validate(const FiveElementModel& model) {
    fe_detail::Validator v{model, {}};
    v.run();
    return std::move(v.diags);
}

// Structural parse followed by validation; never throws. A model is
// returned only when the diagnostic list would be empty.
inline ParseResult parse_five_element(std::string_view text) {
    ParseResult r = parse_five_element_structure(text);
    if (!r.ok()) return r;
    auto diags = validate(*r.model);
    if (!diags.empty()) return {std::nullopt, std::move(diags)};
    return r;
}

// Standalone expression parser, mainly for tests and tooling.
inline ParseResult parse_expression_checked(const std::string& text, ExprPtr& out) {
    std::vector<fe_detail::Token> toks;
    int bad_col = 0;
    if (!fe_detail::tokenize_line(text, toks, bad_col))
        return {std::nullopt, {{DiagCode::SyntaxError, "unrecognized character", 1, bad_col}}};
    fe_detail::TokenStream ts{&toks, 0, 1};
    fe_detail::ExprParser ep{ts, {}};
    ExprPtr e = ep.parse_expr();
    if (!e || !ts.at_end()) {
        auto err = ep.error ? *ep.error
                            : fe_detail::ParseError{"unexpected trailing text", ts.peek().col};
        return {std::nullopt, {{DiagCode::SyntaxError, err.message, 1, err.col}}};
    }
    out = std::move(e);
    return {FiveElementModel{}, {}};
}

inline ExprPtr parse_expression(const std::string& text) {
    ExprPtr e;
    auto r = parse_expression_checked(text, e);
    return r.ok() ? e : nullptr;
}

// ---------------------------------------------------------------------------
// Canonical rendering
// ---------------------------------------------------------------------------

namespace fe_detail {

inline void append_description(std::string& line, const std::string& desc) {
    if (!desc.empty()) line += " // " + desc;
}

}  // namespace fe_detail

// Emits the five sections in fixed order; parse_five_element of the result
// is structurally equal to the input model.
inline std::string render_five_element(const FiveElementModel& m) {
    std::string out;
    out += "## Sets:\n";
    for (const auto& s : m.sets) {
        std::string line = s.name + " = {";
        for (size_t i = 0; i < s.members.size(); ++i) {
            if (i) line += ", ";
            line += s.members[i];
        }
        line += "}";
        fe_detail::append_description(line, s.description);
        out += line + "\n";
    }
    out += "\n## Parameters:\n";
    for (const auto& p : m.parameters) {
        std::string line = p.name;
        if (!p.index_sets.empty()) {
            line += "[";
            for (size_t i = 0; i < p.index_sets.size(); ++i) {
                if (i) line += ",";
                line += p.index_sets[i];
            }
            line += "]";
        }
        line += " = ";
        if (p.index_sets.empty() && p.values.size() == 1) {
            line += format_number(p.values[0]);
        } else {
            line += "(";
            for (size_t i = 0; i < p.values.size(); ++i) {
                if (i) line += ", ";
                line += format_number(p.values[i]);
            }
            line += ")";
        }
        fe_detail::append_description(line, p.description);
        out += line + "\n";
    }
    out += "\n## Variables:\n";
    for (const auto& v : m.variables) {
        std::string line = v.name;
        if (!v.index_sets.empty()) {
            line += "[";
            for (size_t i = 0; i < v.index_sets.size(); ++i) {
                if (i) line += ",";
                line += v.index_sets[i];
            }
            line += "]";
        }
        line += " : ";
        line += var_domain_name(v.domain);
        if (v.lower || v.upper) {
            line += " in ";
            line += format_number(v.lower.value_or(-std::numeric_limits<double>::infinity()));
            line += "..";
            line += format_number(v.upper.value_or(std::numeric_limits<double>::infinity()));
        }
        fe_detail::append_description(line, v.description);
        out += line + "\n";
    }
    out += "\n## Objective:\n";
    out += (m.objective.sense == ObjSense::Minimize ? "minimize " : "maximize ");
    out += m.objective.expr ? render_expression(m.objective.expr) : "0";
    out += "\n";
    out += "\n## Constraints:\n";
    for (const auto& c : m.constraints) {
        std::string line = render_expression(c.lhs);
        line += " ";
        line += relation_text(c.rel);
        line += " ";
        line += render_expression(c.rhs);
        if (!c.quantifiers.empty()) {
            line += " forall ";
            line += detail::render_binding_list(c.quantifiers);
        }
        out += line + "\n";
    }
    return out;
}

}  // namespace optloop
