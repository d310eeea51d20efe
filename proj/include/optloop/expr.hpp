#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace optloop {

// Arithmetic tree over model declarations. References are not classified
// as parameter vs. variable here; that resolution happens against the
// enclosing model (see five_element.hpp). Number literals are non-negative
// by construction; negative quantities are Neg nodes.
enum class ExprKind { Number, Ref, Neg, Add, Sub, Mul, Sum };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// One `index in Set` binding, used by summations and constraint quantifiers.
struct IndexBinding {
    std::string index;
    std::string set;

    friend bool operator==(const IndexBinding& a, const IndexBinding& b) {
        return a.index == b.index && a.set == b.set;
    }
};

struct Expr {
    ExprKind kind;
    double number = 0.0;               // Number
    std::string name;                  // Ref
    std::vector<std::string> indices;  // Ref: member literals or bound index names
    ExprPtr a, b;                      // binary children; Neg/Sum use `a` only
    std::vector<IndexBinding> bindings;  // Sum
};

inline ExprPtr make_number(double v) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Number;
    e->number = v;
    return e;
}

inline ExprPtr make_ref(std::string name, std::vector<std::string> indices = {}) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Ref;
    e->name = std::move(name);
    e->indices = std::move(indices);
    return e;
}

inline ExprPtr make_unary(ExprKind k, ExprPtr a) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->a = std::move(a);
    return e;
}

inline ExprPtr make_binary(ExprKind k, ExprPtr a, ExprPtr b) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->a = std::move(a);
    e->b = std::move(b);
    return e;
}

inline ExprPtr make_neg(ExprPtr a) { return make_unary(ExprKind::Neg, std::move(a)); }
inline ExprPtr make_add(ExprPtr a, ExprPtr b) { return make_binary(ExprKind::Add, std::move(a), std::move(b)); }
inline ExprPtr make_sub(ExprPtr a, ExprPtr b) { return make_binary(ExprKind::Sub, std::move(a), std::move(b)); }
inline ExprPtr make_mul(ExprPtr a, ExprPtr b) { return make_binary(ExprKind::Mul, std::move(a), std::move(b)); }

inline ExprPtr make_sum(std::vector<IndexBinding> bindings, ExprPtr body) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Sum;
    e->bindings = std::move(bindings);
    e->a = std::move(body);
    return e;
}

inline bool expr_equal(const ExprPtr& x, const ExprPtr& y) {
    if (x == y) return true;
    if (!x || !y) return false;
    if (x->kind != y->kind) return false;
    switch (x->kind) {
        case ExprKind::Number:
            return x->number == y->number;
        case ExprKind::Ref:
            return x->name == y->name && x->indices == y->indices;
        case ExprKind::Neg:
            return expr_equal(x->a, y->a);
        case ExprKind::Add:
        case ExprKind::Sub:
        case ExprKind::Mul:
            return expr_equal(x->a, y->a) && expr_equal(x->b, y->b);
        case ExprKind::Sum:
            return x->bindings == y->bindings && expr_equal(x->a, y->a);
    }
    return false;
}

// Plain decimal rendering; the five-element grammar has no scientific
// notation, so fall back to fixed notation when the shortest round-trip
// form would use an exponent.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    std::string s(buf, res.ptr);
    if (s.find('e') == std::string::npos && s.find('E') == std::string::npos) return s;
    // Fixed fallback: enough digits to round-trip desk-scale values.
    std::snprintf(buf, sizeof(buf), "%.12f", v);
    std::string f(buf);
    while (!f.empty() && f.back() == '0') f.pop_back();
    if (!f.empty() && f.back() == '.') f.pop_back();
    return f;
}

namespace detail {

// Rendering context. The grammar is left-associative with `+`/`-` binding
// loosest, `*` next, and unary minus at factor level; a summation body
// greedily consumes the remainder of its term. Parentheses are inserted
// exactly where the bare text would re-parse to a different tree shape:
//   addsub_ok — an additive chain may appear bare in this slot
//   mul_ok    — a product may appear bare in this slot
//   trailing  — more `* factor` text follows within the enclosing term,
//               so a bare summation here would swallow it
struct RenderCtx {
    bool addsub_ok = true;
    bool mul_ok = true;
    bool trailing = false;
};

inline std::string render_binding_list(const std::vector<IndexBinding>& bs) {
    std::string out;
    for (size_t i = 0; i < bs.size(); ++i) {
        if (i) out += ", ";
        out += bs[i].index + " in " + bs[i].set;
    }
    return out;
}

inline std::string render_expr_impl(const ExprPtr& e, RenderCtx ctx) {
    switch (e->kind) {
        case ExprKind::Number:
            return format_number(e->number);
        case ExprKind::Ref: {
            std::string s = e->name;
            if (!e->indices.empty()) {
                s += "[";
                for (size_t i = 0; i < e->indices.size(); ++i) {
                    if (i) s += ",";
                    s += e->indices[i];
                }
                s += "]";
            }
            return s;
        }
        case ExprKind::Neg:
            // Operand sits in factor position and inherits `trailing`.
            return "-" + render_expr_impl(e->a, {false, false, ctx.trailing});
        case ExprKind::Add:
        case ExprKind::Sub: {
            if (!ctx.addsub_ok)
                return "(" + render_expr_impl(e, {true, true, false}) + ")";
            std::string op = e->kind == ExprKind::Add ? " + " : " - ";
            std::string l = render_expr_impl(e->a, {true, true, false});
            std::string r = render_expr_impl(e->b, {false, true, false});
            return l + op + r;
        }
        case ExprKind::Mul: {
            if (!ctx.mul_ok)
                return "(" + render_expr_impl(e, {true, true, false}) + ")";
            std::string l = render_expr_impl(e->a, {false, true, true});
            std::string r = render_expr_impl(e->b, {false, false, ctx.trailing});
            return l + " * " + r;
        }
        case ExprKind::Sum: {
            std::string body = render_expr_impl(e->a, {false, true, false});
            std::string s = "sum(" + render_binding_list(e->bindings) + ") " + body;
            return ctx.trailing ? "(" + s + ")" : s;
        }
    }
    return "";
}

}  // namespace detail

// Canonical text form; parse_expression(render_expression(e)) yields a
// structurally equal tree.
inline std::string render_expression(const ExprPtr& e) {
    return detail::render_expr_impl(e, {});
}

}  // namespace optloop
