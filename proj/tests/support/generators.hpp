#pragma once

#include <random>
#include <string>
#include <vector>

#include <optloop/compiler.hpp>
#include <optloop/five_element.hpp>

namespace optloop::test {

// Random valid FiveElementModels for the parse/render roundtrip property.
// Numbers stay grammar-representable (plain decimals, negatives as Neg
// nodes) and every reference resolves by construction.
class ModelGen {
public:
    explicit ModelGen(std::uint32_t seed) : rng_(seed) {}

    FiveElementModel gen() {
        FiveElementModel m;
        gen_sets(m);
        gen_params(m);
        gen_vars(m);
        m.objective.sense = flip() ? ObjSense::Minimize : ObjSense::Maximize;
        m.objective.expr = ensure_var(m, gen_expr(m, 0, {}));
        int ncons = pick(0, 3);
        for (int c = 0; c < ncons; ++c) {
            ConstraintDecl decl;
            std::map<std::string, std::string> env;
            if (!m.sets.empty() && chance(0.4)) {
                int nq = pick(1, 2);
                const char* names[] = {"i", "j"};
                for (int q = 0; q < nq; ++q) {
                    std::string set = m.sets[pick(0, (int)m.sets.size() - 1)].name;
                    decl.quantifiers.push_back({names[q], set});
                    env[names[q]] = set;
                }
            }
            decl.lhs = gen_expr(m, 0, env);
            decl.rhs = gen_expr(m, 0, env);
            decl.rel = static_cast<Relation>(pick(0, 2));
            m.constraints.push_back(std::move(decl));
        }
        return m;
    }

private:
    std::mt19937 rng_;

    bool flip() { return rng_() & 1; }
    bool chance(double p) { return std::uniform_real_distribution<>(0, 1)(rng_) < p; }
    int pick(int lo, int hi) { return std::uniform_int_distribution<>(lo, hi)(rng_); }

    double nice_number() {
        if (chance(0.5)) return pick(0, 99);
        return pick(0, 9999) / 100.0;
    }

    void gen_sets(FiveElementModel& m) {
        int n = pick(0, 2);
        const char* names[] = {"Sa", "Sb"};
        for (int s = 0; s < n; ++s) {
            SetDecl decl;
            decl.name = names[s];
            if (flip()) {
                int lo = pick(0, 5), count = pick(1, 4);
                for (int v = lo; v < lo + count; ++v) decl.members.push_back(std::to_string(v));
            } else {
                const char* pool[] = {"ma", "mb", "mc", "md"};
                int count = pick(1, 4);
                for (int v = 0; v < count; ++v) decl.members.push_back(pool[v]);
            }
            if (chance(0.3)) decl.description = "generated set";
            m.sets.push_back(std::move(decl));
        }
    }

    std::vector<std::string> gen_index_sets(const FiveElementModel& m) {
        if (m.sets.empty()) return {};
        int n = pick(0, 2);
        std::vector<std::string> out;
        for (int k = 0; k < n; ++k) out.push_back(m.sets[pick(0, (int)m.sets.size() - 1)].name);
        return out;
    }

    size_t product_size(const FiveElementModel& m, const std::vector<std::string>& sets) {
        size_t n = 1;
        for (const auto& s : sets) n *= m.find_set(s)->members.size();
        return n;
    }

    void gen_params(FiveElementModel& m) {
        int n = pick(0, 3);
        const char* names[] = {"p0", "p1", "p2"};
        for (int k = 0; k < n; ++k) {
            ParamDecl decl;
            decl.name = names[k];
            decl.index_sets = gen_index_sets(m);
            size_t count = product_size(m, decl.index_sets);
            for (size_t v = 0; v < count; ++v) {
                double value = nice_number();
                decl.values.push_back(chance(0.25) ? -value : value);
            }
            if (chance(0.3)) decl.description = "generated parameter";
            m.parameters.push_back(std::move(decl));
        }
    }

    void gen_vars(FiveElementModel& m) {
        int n = pick(1, 3);
        const char* names[] = {"x0", "x1", "x2"};
        for (int k = 0; k < n; ++k) {
            VarDecl decl;
            decl.name = names[k];
            decl.index_sets = gen_index_sets(m);
            decl.domain = static_cast<VarDomain>(pick(0, 2));
            if (chance(0.3)) {
                double lo = pick(-3, 3);
                decl.lower = chance(0.15) ? -std::numeric_limits<double>::infinity() : lo;
                decl.upper = chance(0.15) ? std::numeric_limits<double>::infinity()
                                          : lo + pick(0, 9);
            }
            if (chance(0.3)) decl.description = "generated variable";
            m.variables.push_back(std::move(decl));
        }
    }

    ExprPtr gen_ref(const FiveElementModel& m, const std::map<std::string, std::string>& env) {
        // Pick any parameter or variable declaration.
        int nparams = (int)m.parameters.size();
        int total = nparams + (int)m.variables.size();
        int idx = pick(0, total - 1);
        const std::string& name =
            idx < nparams ? m.parameters[idx].name : m.variables[idx - nparams].name;
        const auto& index_sets =
            idx < nparams ? m.parameters[idx].index_sets : m.variables[idx - nparams].index_sets;
        std::vector<std::string> indices;
        for (const auto& sname : index_sets) {
            // Prefer a bound index over the same set, else a member literal.
            std::string bound;
            for (const auto& [iv, is] : env)
                if (is == sname && (bound.empty() || flip())) bound = iv;
            if (!bound.empty() && chance(0.7)) {
                indices.push_back(bound);
            } else {
                const auto& members = m.find_set(sname)->members;
                indices.push_back(members[pick(0, (int)members.size() - 1)]);
            }
        }
        return make_ref(name, std::move(indices));
    }

    ExprPtr gen_expr(const FiveElementModel& m, int depth,
                     std::map<std::string, std::string> env) {
        bool leaf = depth >= 4 || chance(0.35 + 0.15 * depth);
        if (leaf) {
            if (chance(0.4) || (m.parameters.empty() && m.variables.empty()))
                return make_number(nice_number());
            return gen_ref(m, env);
        }
        switch (pick(0, m.sets.empty() ? 3 : 4)) {
            case 0:
                return make_neg(gen_expr(m, depth + 1, env));
            case 1:
                return make_add(gen_expr(m, depth + 1, env), gen_expr(m, depth + 1, env));
            case 2:
                return make_sub(gen_expr(m, depth + 1, env), gen_expr(m, depth + 1, env));
            case 3:
                return make_mul(gen_expr(m, depth + 1, env), gen_expr(m, depth + 1, env));
            default: {
                const char* pool[] = {"i", "j", "k", "l"};
                std::string iv;
                for (const char* cand : pool)
                    if (!env.count(cand)) {
                        iv = cand;
                        break;
                    }
                if (iv.empty()) return make_number(nice_number());
                std::string set = m.sets[pick(0, (int)m.sets.size() - 1)].name;
                auto env2 = env;
                env2[iv] = set;
                return make_sum({{iv, set}}, gen_expr(m, depth + 1, env2));
            }
        }
    }

    static bool contains_var(const FiveElementModel& m, const ExprPtr& e) {
        if (!e) return false;
        if (e->kind == ExprKind::Ref) return m.find_var(e->name) != nullptr;
        return contains_var(m, e->a) || contains_var(m, e->b);
    }

    ExprPtr ensure_var(const FiveElementModel& m, ExprPtr e) {
        if (contains_var(m, e)) return e;
        const auto& v = m.variables[pick(0, (int)m.variables.size() - 1)];
        std::vector<std::string> indices;
        for (const auto& sname : v.index_sets) {
            const auto& members = m.find_set(sname)->members;
            indices.push_back(members[pick(0, (int)members.size() - 1)]);
        }
        return make_add(std::move(e), make_ref(v.name, std::move(indices)));
    }
};

// Random general-integer MILPs on small finite boxes (bounds may be
// negative), enumerable for oracle agreement.
inline CanonicalModel gen_random_int_milp(std::mt19937& rng, int max_vars = 6,
                                          int max_rows = 5) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<>(lo, hi)(rng); };
    CanonicalModel m;
    int n = pick(1, max_vars);
    double grid = 1.0;
    for (int i = 0; i < n; ++i) {
        VarInstance v;
        v.name = "z" + std::to_string(i);
        v.decl_name = v.name;
        v.domain = VarDomain::Integer;
        int lo = pick(-4, 3);
        v.lower = lo;
        v.upper = lo + pick(0, 5);
        grid *= v.upper - v.lower + 1;
        m.variables.push_back(std::move(v));
        if (grid > 50000) break;  // keep the enumeration cheap
    }
    n = static_cast<int>(m.variables.size());
    std::vector<std::pair<int, double>> obj;
    for (int i = 0; i < n; ++i) {
        int c = pick(-9, 9);
        if (c != 0) obj.emplace_back(i, (double)c);
    }
    m.objective.linear = true;
    m.objective.coeffs = obj;
    m.objective.constant = pick(-5, 5);
    m.objective.expr = spec_json_detail::tree_from_sparse(obj, m.objective.constant);
    int rows = pick(0, max_rows);
    for (int r = 0; r < rows; ++r) {
        Row row;
        double min_val = 0.0, max_val = 0.0;
        for (int i = 0; i < n; ++i) {
            if (pick(0, 9) < 7) {
                int c = pick(-5, 5);
                if (c == 0) continue;
                row.coeffs.emplace_back(i, (double)c);
                double lo_c = c * (c > 0 ? m.variables[i].lower : m.variables[i].upper);
                double hi_c = c * (c > 0 ? m.variables[i].upper : m.variables[i].lower);
                min_val += lo_c;
                max_val += hi_c;
            }
        }
        row.rel = static_cast<Relation>(pick(0, 2));
        row.rhs_value = pick((int)min_val - 2, (int)max_val + 2);
        row.linear = true;
        row.lhs = spec_json_detail::tree_from_sparse(row.coeffs, 0.0);
        row.rhs = g_const(row.rhs_value);
        m.rows.push_back(std::move(row));
    }
    return m;
}

// Random dense-ish binary MILPs in canonical form, for solver/oracle
// agreement checks.
inline CanonicalModel gen_random_binary_milp(std::mt19937& rng, int max_vars = 12,
                                             int max_rows = 6) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<>(lo, hi)(rng); };
    CanonicalModel m;
    int n = pick(1, max_vars);
    for (int i = 0; i < n; ++i) {
        VarInstance v;
        v.name = "b" + std::to_string(i);
        v.decl_name = v.name;
        v.domain = VarDomain::Binary;
        v.lower = 0.0;
        v.upper = 1.0;
        m.variables.push_back(std::move(v));
    }
    std::vector<std::pair<int, double>> obj;
    for (int i = 0; i < n; ++i) {
        int c = pick(-9, 9);
        if (c != 0) obj.emplace_back(i, (double)c);
    }
    m.objective.linear = true;
    m.objective.coeffs = obj;
    m.objective.constant = pick(-5, 5);
    m.objective.expr = spec_json_detail::tree_from_sparse(obj, m.objective.constant);

    int rows = pick(0, max_rows);
    for (int r = 0; r < rows; ++r) {
        Row row;
        double min_val = 0.0, max_val = 0.0;
        for (int i = 0; i < n; ++i) {
            if (pick(0, 9) < 7) {
                int c = pick(-5, 5);
                if (c == 0) continue;
                row.coeffs.emplace_back(i, (double)c);
                if (c > 0)
                    max_val += c;
                else
                    min_val += c;
            }
        }
        row.rel = static_cast<Relation>(pick(0, 2));
        row.rhs_value = pick((int)min_val - 2, (int)max_val + 2);
        row.linear = true;
        row.lhs = spec_json_detail::tree_from_sparse(row.coeffs, 0.0);
        row.rhs = g_const(row.rhs_value);
        m.rows.push_back(std::move(row));
    }
    return m;
}

}  // namespace optloop::test
