#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <optloop/five_element.hpp>

namespace optloop {

// ---------------------------------------------------------------------------
// Grounded expressions: parameters substituted, variables resolved to flat
// indices. This is the form solvers and the evaluator work on.
// ---------------------------------------------------------------------------

enum class GKind { Const, Var, Neg, Add, Sub, Mul };

struct GExpr;
using GExprPtr = std::shared_ptr<const GExpr>;

struct GExpr {
    GKind kind;
    double value = 0.0;  // Const
    int var = -1;        // Var (flat index)
    GExprPtr a, b;
};

inline GExprPtr g_const(double v) {
    auto e = std::make_shared<GExpr>();
    e->kind = GKind::Const;
    e->value = v;
    return e;
}
inline GExprPtr g_var(int i) {
    auto e = std::make_shared<GExpr>();
    e->kind = GKind::Var;
    e->var = i;
    return e;
}
inline GExprPtr g_node(GKind k, GExprPtr a, GExprPtr b = nullptr) {
    auto e = std::make_shared<GExpr>();
    e->kind = k;
    e->a = std::move(a);
    e->b = std::move(b);
    return e;
}

inline double g_eval(const GExprPtr& e, std::span<const double> x) {
    switch (e->kind) {
        case GKind::Const: return e->value;
        case GKind::Var: return x[static_cast<size_t>(e->var)];
        case GKind::Neg: return -g_eval(e->a, x);
        case GKind::Add: return g_eval(e->a, x) + g_eval(e->b, x);
        case GKind::Sub: return g_eval(e->a, x) - g_eval(e->b, x);
        case GKind::Mul: return g_eval(e->a, x) * g_eval(e->b, x);
    }
    return 0.0;
}

// Linear extraction: constant + sparse coefficients, or "not linear".
struct LinearForm {
    bool linear = true;
    double constant = 0.0;
    std::map<int, double> coeffs;
};

inline LinearForm g_linearize(const GExprPtr& e) {
    switch (e->kind) {
        case GKind::Const:
            return {true, e->value, {}};
        case GKind::Var: {
            LinearForm f;
            f.coeffs[e->var] = 1.0;
            return f;
        }
        case GKind::Neg: {
            LinearForm f = g_linearize(e->a);
            if (!f.linear) return f;
            f.constant = -f.constant;
            for (auto& [i, c] : f.coeffs) c = -c;
            return f;
        }
        case GKind::Add:
        case GKind::Sub: {
            LinearForm l = g_linearize(e->a);
            LinearForm r = g_linearize(e->b);
            if (!l.linear || !r.linear) return {false, 0.0, {}};
            double sign = e->kind == GKind::Add ? 1.0 : -1.0;
            l.constant += sign * r.constant;
            for (auto& [i, c] : r.coeffs) l.coeffs[i] += sign * c;
            return l;
        }
        case GKind::Mul: {
            LinearForm l = g_linearize(e->a);
            LinearForm r = g_linearize(e->b);
            if (!l.linear || !r.linear) return {false, 0.0, {}};
            bool l_const = l.coeffs.empty();
            bool r_const = r.coeffs.empty();
            if (!l_const && !r_const) return {false, 0.0, {}};  // variable * variable
            const LinearForm& varside = l_const ? r : l;
            double k = l_const ? l.constant : r.constant;
            LinearForm f;
            f.constant = varside.constant * k;
            for (auto& [i, c] : varside.coeffs) f.coeffs[i] = c * k;
            return f;
        }
    }
    return {false, 0.0, {}};
}

inline std::vector<std::pair<int, double>> to_sparse(const std::map<int, double>& m) {
    std::vector<std::pair<int, double>> out;
    for (const auto& [i, c] : m)
        if (c != 0.0) out.emplace_back(i, c);
    return out;
}

// ---------------------------------------------------------------------------
// Canonical model
// ---------------------------------------------------------------------------

struct VarInstance {
    std::string name;  // display name, e.g. "x[A,B]"
    std::string decl_name;
    std::vector<std::string> indices;
    VarDomain domain = VarDomain::Continuous;
    double lower = 0.0;  // +-infinity marks an unbounded side
    double upper = std::numeric_limits<double>::infinity();
};

// One grounded constraint row: `lhs REL rhs` as expression trees, plus the
// extracted sparse form `coeffs . x REL rhs_value` when linear.
struct Row {
    GExprPtr lhs;
    GExprPtr rhs;
    Relation rel = Relation::Le;
    bool linear = false;
    std::vector<std::pair<int, double>> coeffs;
    double rhs_value = 0.0;
};

struct CanonicalObjective {
    GExprPtr expr;  // sense-normalized: always a minimization
    bool linear = false;
    std::vector<std::pair<int, double>> coeffs;
    double constant = 0.0;
    bool maximized = false;  // original sense was maximize (sign note)
};

struct CanonicalModel {
    std::vector<VarInstance> variables;
    CanonicalObjective objective;
    std::vector<Row> rows;

    bool all_linear() const {
        if (!objective.linear) return false;
        for (const auto& r : rows)
            if (!r.linear) return false;
        return true;
    }
    bool has_integer_vars() const {
        for (const auto& v : variables)
            if (v.domain != VarDomain::Continuous) return true;
        return false;
    }
};

struct CompileOptions {
    size_t max_rows = 100000;  // grounding guardrail
};

struct CompileResult {
    std::optional<CanonicalModel> model;
    std::vector<Diagnostic> diagnostics;
    bool ok() const { return model.has_value(); }
};

// ---------------------------------------------------------------------------
// Compilation
// ---------------------------------------------------------------------------

namespace compile_detail {

struct SetIndex {
    const SetDecl* decl = nullptr;
    std::map<std::string, int> pos;
};

struct Grounder {
    const FiveElementModel& model;
    std::map<std::string, SetIndex> sets;
    std::map<std::string, int> var_index;  // display name -> flat index
    std::vector<Diagnostic> diags;

    void fail(DiagCode code, std::string msg) { diags.push_back({code, std::move(msg), 0, 0}); }

    static std::string display_name(const std::string& base,
                                    const std::vector<std::string>& idx) {
        if (idx.empty()) return base;
        std::string s = base + "[";
        for (size_t i = 0; i < idx.size(); ++i) {
            if (i) s += ",";
            s += idx[i];
        }
        return s + "]";
    }

    // Iterates the member product of `set_names` row-major.
    bool for_each_tuple(const std::vector<std::string>& set_names,
                        const std::function<void(const std::vector<std::string>&)>& fn) {
        std::vector<const std::vector<std::string>*> members;
        for (const auto& sn : set_names) {
            auto it = sets.find(sn);
            if (it == sets.end()) {
                fail(DiagCode::UnresolvedReference, "set '" + sn + "' is not declared");
                return false;
            }
            members.push_back(&it->second.decl->members);
        }
        std::vector<std::string> tuple(set_names.size());
        std::function<void(size_t)> rec = [&](size_t d) {
            if (d == set_names.size()) {
                fn(tuple);
                return;
            }
            for (const auto& m : *members[d]) {
                tuple[d] = m;
                rec(d + 1);
            }
        };
        rec(0);
        return true;
    }

    // Resolves one index position of a reference to a member text.
    std::optional<std::string> resolve_index(const std::string& idx,
                                             const std::map<std::string, std::string>& env,
                                             const std::string& ref_name) {
        auto it = env.find(idx);
        if (it != env.end()) return it->second;
        if (model.find_var(idx)) {
            fail(DiagCode::NonNumericParameter,
                 "'" + ref_name + "' is indexed by decision variable '" + idx + "'");
            return std::nullopt;
        }
        return idx;  // member literal; membership checked at lookup
    }

    std::optional<double> param_value(const ParamDecl& p, const std::vector<std::string>& members) {
        size_t flat = 0;
        for (size_t k = 0; k < p.index_sets.size(); ++k) {
            const auto& si = sets.at(p.index_sets[k]);
            auto it = si.pos.find(members[k]);
            if (it == si.pos.end()) {
                fail(DiagCode::IndexOutOfRange, "'" + members[k] + "' is not a member of set '" +
                                                    p.index_sets[k] + "' (parameter '" + p.name +
                                                    "')");
                return std::nullopt;
            }
            flat = flat * si.decl->members.size() + static_cast<size_t>(it->second);
        }
        if (flat >= p.values.size()) {
            fail(DiagCode::IndexOutOfRange, "parameter '" + p.name + "' index out of range");
            return std::nullopt;
        }
        return p.values[flat];
    }

    GExprPtr ground(const ExprPtr& e, std::map<std::string, std::string> env) {
        if (!e) return nullptr;
        switch (e->kind) {
            case ExprKind::Number:
                return g_const(e->number);
            case ExprKind::Ref: {
                std::vector<std::string> members;
                for (const auto& idx : e->indices) {
                    auto m = resolve_index(idx, env, e->name);
                    if (!m) return nullptr;
                    members.push_back(*m);
                }
                if (const ParamDecl* p = model.find_param(e->name)) {
                    if (members.size() != p->index_sets.size()) {
                        fail(DiagCode::UnresolvedReference,
                             "'" + e->name + "' index arity mismatch");
                        return nullptr;
                    }
                    auto v = param_value(*p, members);
                    if (!v) return nullptr;
                    return g_const(*v);
                }
                if (model.find_var(e->name)) {
                    auto it = var_index.find(display_name(e->name, members));
                    if (it == var_index.end()) {
                        fail(DiagCode::IndexOutOfRange,
                             "variable instance '" + display_name(e->name, members) +
                                 "' does not exist");
                        return nullptr;
                    }
                    return g_var(it->second);
                }
                fail(DiagCode::UnresolvedReference, "'" + e->name + "' is not declared");
                return nullptr;
            }
            case ExprKind::Neg: {
                auto a = ground(e->a, env);
                return a ? g_node(GKind::Neg, std::move(a)) : nullptr;
            }
            case ExprKind::Add:
            case ExprKind::Sub:
            case ExprKind::Mul: {
                auto a = ground(e->a, env);
                auto b = ground(e->b, env);
                if (!a || !b) return nullptr;
                GKind k = e->kind == ExprKind::Add   ? GKind::Add
                          : e->kind == ExprKind::Sub ? GKind::Sub
                                                     : GKind::Mul;
                return g_node(k, std::move(a), std::move(b));
            }
            case ExprKind::Sum: {
                std::vector<std::string> set_names;
                for (const auto& b : e->bindings) set_names.push_back(b.set);
                GExprPtr acc;
                bool inner_ok = true;
                bool ok = for_each_tuple(set_names, [&](const std::vector<std::string>& tuple) {
                    if (!inner_ok) return;
                    auto env2 = env;
                    for (size_t k = 0; k < e->bindings.size(); ++k)
                        env2[e->bindings[k].index] = tuple[k];
                    auto t = ground(e->a, std::move(env2));
                    if (!t) {
                        inner_ok = false;
                        return;
                    }
                    acc = acc ? g_node(GKind::Add, std::move(acc), std::move(t)) : t;
                });
                if (!ok || !inner_ok) return nullptr;
                return acc ? acc : g_const(0.0);
            }
        }
        return nullptr;
    }
};

}  // namespace compile_detail

// Flattens a validated model into the canonical minimize-only instance:
// summations expanded, parameters substituted, quantifiers grounded one row
// per element of their set product.
inline CompileResult compile(const FiveElementModel& model, const CompileOptions& opt = {}) {
    {
        auto diags = validate(model);
        if (!diags.empty()) return {std::nullopt, std::move(diags)};
    }

    compile_detail::Grounder g{model, {}, {}, {}};
    for (const auto& s : model.sets) {
        compile_detail::SetIndex si;
        si.decl = &s;
        for (size_t i = 0; i < s.members.size(); ++i)
            si.pos[s.members[i]] = static_cast<int>(i);
        g.sets[s.name] = std::move(si);
    }

    CanonicalModel out;

    // Variable instances: declaration order, index tuples row-major.
    for (const auto& v : model.variables) {
        bool ok = g.for_each_tuple(v.index_sets, [&](const std::vector<std::string>& tuple) {
            VarInstance inst;
            inst.decl_name = v.name;
            inst.indices = tuple;
            inst.name = compile_detail::Grounder::display_name(v.name, tuple);
            inst.domain = v.domain;
            constexpr double inf = std::numeric_limits<double>::infinity();
            if (v.domain == VarDomain::Binary) {
                // Binary is {0,1}; declared bounds can only tighten.
                inst.lower = std::max(0.0, v.lower.value_or(0.0));
                inst.upper = std::min(1.0, v.upper.value_or(1.0));
            } else {
                // Default domain is [0, +inf) unless bounds are declared.
                inst.lower = v.lower.value_or(0.0);
                inst.upper = v.upper.value_or(inf);
            }
            g.var_index[inst.name] = static_cast<int>(out.variables.size());
            out.variables.push_back(std::move(inst));
        });
        if (!ok) return {std::nullopt, std::move(g.diags)};
    }

    // Objective (sense-normalized to minimize).
    GExprPtr obj = g.ground(model.objective.expr, {});
    if (!obj) return {std::nullopt, std::move(g.diags)};
    if (model.objective.sense == ObjSense::Maximize) {
        obj = g_node(GKind::Neg, std::move(obj));
        out.objective.maximized = true;
    }
    out.objective.expr = obj;
    LinearForm lf = g_linearize(obj);
    out.objective.linear = lf.linear;
    if (lf.linear) {
        out.objective.coeffs = to_sparse(lf.coeffs);
        out.objective.constant = lf.constant;
    }

    // Constraint rows.
    size_t total_rows = 0;
    for (const auto& c : model.constraints) {
        size_t count = 1;
        for (const auto& q : c.quantifiers) {
            auto it = g.sets.find(q.set);
            if (it == g.sets.end()) {
                g.fail(DiagCode::UnresolvedReference, "quantifier set '" + q.set +
                                                          "' is not declared");
                return {std::nullopt, std::move(g.diags)};
            }
            count *= it->second.decl->members.size();
        }
        total_rows += count;
        if (total_rows > opt.max_rows) {
            g.fail(DiagCode::GroundingExplosion,
                   "grounded row count exceeds cap of " + std::to_string(opt.max_rows));
            return {std::nullopt, std::move(g.diags)};
        }
        std::vector<std::string> set_names;
        for (const auto& q : c.quantifiers) set_names.push_back(q.set);
        bool inner_ok = true;
        bool ok = g.for_each_tuple(set_names, [&](const std::vector<std::string>& tuple) {
            if (!inner_ok) return;
            std::map<std::string, std::string> env;
            for (size_t k = 0; k < c.quantifiers.size(); ++k)
                env[c.quantifiers[k].index] = tuple[k];
            Row row;
            row.rel = c.rel;
            row.lhs = g.ground(c.lhs, env);
            row.rhs = g.ground(c.rhs, env);
            if (!row.lhs || !row.rhs) {
                inner_ok = false;
                return;
            }
            LinearForm l = g_linearize(row.lhs);
            LinearForm r = g_linearize(row.rhs);
            if (l.linear && r.linear) {
                row.linear = true;
                for (const auto& [i, cv] : r.coeffs) l.coeffs[i] -= cv;
                row.coeffs = to_sparse(l.coeffs);
                row.rhs_value = r.constant - l.constant;
            }
            out.rows.push_back(std::move(row));
        });
        if (!ok || !inner_ok) return {std::nullopt, std::move(g.diags)};
    }

    return {std::move(out), {}};
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct RowCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool satisfied = false;
};

struct Evaluation {
    double objective = 0.0;  // canonical (minimize) sense
    std::vector<RowCheck> rows;
    bool feasible = true;
};

inline constexpr double kFeasibilityTol = 1e-9;

// Exact expression-tree evaluation of the objective and every row; a row is
// satisfied when its relation holds within absolute tolerance 1e-9.
inline Evaluation evaluate(const CanonicalModel& m, std::span<const double> assignment,
                           double tol = kFeasibilityTol) {
    if (assignment.size() != m.variables.size())
        throw std::invalid_argument("evaluate: assignment length " +
                                    std::to_string(assignment.size()) + " != variable count " +
                                    std::to_string(m.variables.size()));
    Evaluation ev;
    ev.objective = g_eval(m.objective.expr, assignment);
    ev.rows.reserve(m.rows.size());
    for (const auto& r : m.rows) {
        RowCheck rc;
        rc.lhs = g_eval(r.lhs, assignment);
        rc.rhs = g_eval(r.rhs, assignment);
        switch (r.rel) {
            case Relation::Le: rc.satisfied = rc.lhs <= rc.rhs + tol; break;
            case Relation::Ge: rc.satisfied = rc.lhs >= rc.rhs - tol; break;
            case Relation::Eq: rc.satisfied = std::abs(rc.lhs - rc.rhs) <= tol; break;
        }
        if (!rc.satisfied) ev.feasible = false;
        ev.rows.push_back(rc);
    }
    return ev;
}

// Evaluates a linear row/objective through the sparse form (used by solvers
// and by the linear/tree agreement checks).
inline double sparse_value(const std::vector<std::pair<int, double>>& coeffs, double constant,
                           std::span<const double> x) {
    double v = constant;
    for (const auto& [i, c] : coeffs) v += c * x[static_cast<size_t>(i)];
    return v;
}

// ---------------------------------------------------------------------------
// Solve-spec JSON (the artifact's executable artifact format)
// ---------------------------------------------------------------------------

namespace spec_json_detail {

inline nlohmann::json gexpr_to_json(const GExprPtr& e) {
    switch (e->kind) {
        case GKind::Const: return {{"num", e->value}};
        case GKind::Var: return {{"var", e->var}};
        case GKind::Neg: return {{"op", "neg"}, {"a", gexpr_to_json(e->a)}};
        case GKind::Add:
            return {{"op", "add"}, {"a", gexpr_to_json(e->a)}, {"b", gexpr_to_json(e->b)}};
        case GKind::Sub:
            return {{"op", "sub"}, {"a", gexpr_to_json(e->a)}, {"b", gexpr_to_json(e->b)}};
        case GKind::Mul:
            return {{"op", "mul"}, {"a", gexpr_to_json(e->a)}, {"b", gexpr_to_json(e->b)}};
    }
    return {};
}

inline GExprPtr gexpr_from_json(const nlohmann::json& j, int var_count, std::string& err) {
    if (!j.is_object()) {
        err = "expression node must be an object";
        return nullptr;
    }
    if (j.contains("num")) {
        if (!j["num"].is_number()) {
            err = "'num' must be a number";
            return nullptr;
        }
        return g_const(j["num"].get<double>());
    }
    if (j.contains("var")) {
        if (!j["var"].is_number_integer()) {
            err = "'var' must be an integer index";
            return nullptr;
        }
        int v = j["var"].get<int>();
        if (v < 0 || v >= var_count) {
            err = "variable index " + std::to_string(v) + " out of range";
            return nullptr;
        }
        return g_var(v);
    }
    if (!j.contains("op")) {
        err = "expression node needs 'num', 'var' or 'op'";
        return nullptr;
    }
    std::string op = j["op"].get<std::string>();
    if (op == "neg") {
        auto a = j.contains("a") ? gexpr_from_json(j["a"], var_count, err) : nullptr;
        if (!a) {
            if (err.empty()) err = "'neg' needs operand 'a'";
            return nullptr;
        }
        return g_node(GKind::Neg, std::move(a));
    }
    GKind k;
    if (op == "add") {
        k = GKind::Add;
    } else if (op == "sub") {
        k = GKind::Sub;
    } else if (op == "mul") {
        k = GKind::Mul;
    } else {
        err = "unknown op '" + op + "'";
        return nullptr;
    }
    auto a = j.contains("a") ? gexpr_from_json(j["a"], var_count, err) : nullptr;
    auto b = j.contains("b") ? gexpr_from_json(j["b"], var_count, err) : nullptr;
    if (!a || !b) {
        if (err.empty()) err = "'" + op + "' needs operands 'a' and 'b'";
        return nullptr;
    }
    return g_node(k, std::move(a), std::move(b));
}

inline nlohmann::json coeffs_to_json(const std::vector<std::pair<int, double>>& coeffs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [i, c] : coeffs) arr.push_back(nlohmann::json::array({i, c}));
    return arr;
}

// Builds the expression tree equivalent of a sparse linear form so that
// models loaded from JSON remain tree-evaluable.
inline GExprPtr tree_from_sparse(const std::vector<std::pair<int, double>>& coeffs,
                                 double constant) {
    GExprPtr acc;
    if (constant != 0.0 || coeffs.empty()) acc = g_const(constant);
    for (const auto& [i, c] : coeffs) {
        GExprPtr term = c == 1.0 ? g_var(i) : g_node(GKind::Mul, g_const(c), g_var(i));
        acc = acc ? g_node(GKind::Add, std::move(acc), std::move(term)) : term;
    }
    return acc;
}

}  // namespace spec_json_detail

inline nlohmann::json to_solve_spec_json(const CanonicalModel& m) {
    nlohmann::json j;
    j["variables"] = nlohmann::json::array();
    for (const auto& v : m.variables) {
        nlohmann::json vj;
        vj["name"] = v.name;
        vj["domain"] = var_domain_name(v.domain);
        vj["lo"] = std::isinf(v.lower) ? nlohmann::json(nullptr) : nlohmann::json(v.lower);
        vj["hi"] = std::isinf(v.upper) ? nlohmann::json(nullptr) : nlohmann::json(v.upper);
        j["variables"].push_back(std::move(vj));
    }
    nlohmann::json obj;
    obj["linear"] = m.objective.linear;
    if (m.objective.linear) {
        obj["coeffs"] = spec_json_detail::coeffs_to_json(m.objective.coeffs);
        obj["constant"] = m.objective.constant;
    } else {
        obj["expr"] = spec_json_detail::gexpr_to_json(m.objective.expr);
    }
    obj["maximized"] = m.objective.maximized;
    j["objective"] = std::move(obj);
    j["constraints"] = nlohmann::json::array();
    for (const auto& r : m.rows) {
        nlohmann::json rj;
        rj["relation"] = relation_text(r.rel);
        if (r.linear) {
            rj["coeffs"] = spec_json_detail::coeffs_to_json(r.coeffs);
            rj["rhs"] = r.rhs_value;
        } else {
            rj["expr"] = spec_json_detail::gexpr_to_json(
                g_node(GKind::Sub, r.lhs, r.rhs));
            rj["rhs"] = 0.0;
        }
        j["constraints"].push_back(std::move(rj));
    }
    return j;
}

struct SpecParseResult {
    std::optional<CanonicalModel> model;
    std::string error;
    bool ok() const { return model.has_value(); }
};

inline SpecParseResult parse_solve_spec(const nlohmann::json& j) {
    using namespace spec_json_detail;
    auto err = [](std::string m) { return SpecParseResult{std::nullopt, std::move(m)}; };
    if (!j.is_object()) return err("solve-spec must be a JSON object");
    if (!j.contains("variables") || !j["variables"].is_array() || j["variables"].empty())
        return err("solve-spec needs a non-empty 'variables' array");
    CanonicalModel m;
    for (const auto& vj : j["variables"]) {
        if (!vj.is_object() || !vj.contains("name") || !vj.contains("domain"))
            return err("each variable needs 'name' and 'domain'");
        VarInstance v;
        v.name = vj["name"].get<std::string>();
        std::string dom = vj["domain"].get<std::string>();
        if (dom == "continuous") {
            v.domain = VarDomain::Continuous;
        } else if (dom == "integer") {
            v.domain = VarDomain::Integer;
        } else if (dom == "binary") {
            v.domain = VarDomain::Binary;
        } else {
            return err("unknown domain '" + dom + "'");
        }
        constexpr double inf = std::numeric_limits<double>::infinity();
        auto bound = [&](const char* key, double fallback) -> std::optional<double> {
            if (!vj.contains(key) || vj[key].is_null()) return fallback;
            if (!vj[key].is_number()) return std::nullopt;
            return vj[key].get<double>();
        };
        auto lo = bound("lo", -inf);
        auto hi = bound("hi", inf);
        if (!lo || !hi) return err("variable '" + v.name + "': bounds must be numbers or null");
        v.lower = *lo;
        v.upper = *hi;
        if (v.domain == VarDomain::Binary) {
            v.lower = std::max(0.0, v.lower);
            v.upper = std::min(1.0, v.upper);
        }
        if (v.lower > v.upper) return err("variable '" + v.name + "': lo > hi");
        auto bracket = v.name.find('[');
        v.decl_name = v.name.substr(0, bracket);
        m.variables.push_back(std::move(v));
    }
    int n = static_cast<int>(m.variables.size());

    if (!j.contains("objective") || !j["objective"].is_object())
        return err("solve-spec needs an 'objective' object");
    const auto& oj = j["objective"];
    m.objective.maximized = oj.value("maximized", false);
    std::string eerr;
    auto parse_coeffs = [&](const nlohmann::json& cj,
                            std::vector<std::pair<int, double>>& out) -> bool {
        if (!cj.is_array()) return false;
        for (const auto& e : cj) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
                !e[1].is_number())
                return false;
            int i = e[0].get<int>();
            if (i < 0 || i >= n) return false;
            out.emplace_back(i, e[1].get<double>());
        }
        return true;
    };
    bool obj_linear = oj.value("linear", oj.contains("coeffs"));
    if (obj_linear) {
        if (!oj.contains("coeffs") || !parse_coeffs(oj["coeffs"], m.objective.coeffs))
            return err("objective 'coeffs' must be [[index, value], ...] with indices in range");
        m.objective.constant = oj.value("constant", 0.0);
        m.objective.linear = true;
        m.objective.expr = tree_from_sparse(m.objective.coeffs, m.objective.constant);
    } else {
        if (!oj.contains("expr")) return err("nonlinear objective needs 'expr'");
        m.objective.expr = gexpr_from_json(oj["expr"], n, eerr);
        if (!m.objective.expr) return err("objective expr: " + eerr);
        LinearForm lf = g_linearize(m.objective.expr);
        m.objective.linear = lf.linear;
        if (lf.linear) {
            m.objective.coeffs = to_sparse(lf.coeffs);
            m.objective.constant = lf.constant;
        }
    }

    if (j.contains("constraints")) {
        if (!j["constraints"].is_array()) return err("'constraints' must be an array");
        for (const auto& rj : j["constraints"]) {
            if (!rj.is_object() || !rj.contains("relation"))
                return err("each constraint needs a 'relation'");
            Row row;
            std::string rel = rj["relation"].get<std::string>();
            if (rel == "<=") {
                row.rel = Relation::Le;
            } else if (rel == ">=") {
                row.rel = Relation::Ge;
            } else if (rel == "==" || rel == "=") {
                row.rel = Relation::Eq;
            } else {
                return err("unknown relation '" + rel + "'");
            }
            if (rj.contains("coeffs")) {
                if (!parse_coeffs(rj["coeffs"], row.coeffs))
                    return err("constraint 'coeffs' must be [[index, value], ...]");
                if (!rj.contains("rhs") || !rj["rhs"].is_number())
                    return err("linear constraint needs numeric 'rhs'");
                row.rhs_value = rj["rhs"].get<double>();
                row.linear = true;
                row.lhs = tree_from_sparse(row.coeffs, 0.0);
                row.rhs = g_const(row.rhs_value);
            } else if (rj.contains("expr")) {
                row.lhs = gexpr_from_json(rj["expr"], n, eerr);
                if (!row.lhs) return err("constraint expr: " + eerr);
                row.rhs = g_const(rj.value("rhs", 0.0));
                LinearForm l = g_linearize(row.lhs);
                if (l.linear) {
                    row.linear = true;
                    for (auto& [i, c] : l.coeffs)
                        if (c != 0.0) row.coeffs.emplace_back(i, c);
                    row.rhs_value = rj.value("rhs", 0.0) - l.constant;
                }
            } else {
                return err("each constraint needs 'coeffs' or 'expr'");
            }
            m.rows.push_back(std::move(row));
        }
    }
    return {std::move(m), ""};
}

inline SpecParseResult parse_solve_spec_text(const std::string& text) {
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) return {std::nullopt, "invalid JSON"};
    return parse_solve_spec(j);
}

}  // namespace optloop
