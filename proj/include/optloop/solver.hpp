#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <optloop/compiler.hpp>

namespace optloop {

// ---------------------------------------------------------------------------
// Outcomes
// ---------------------------------------------------------------------------

enum class SolveStatus { Optimal, Infeasible, Unbounded, NotExecutable, Exhausted };

inline const char* solve_status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::NotExecutable: return "not_executable";
        case SolveStatus::Exhausted: return "exhausted";
    }
    return "?";
}

struct SolveStats {
    long iterations = 0;  // simplex pivots
    long nodes = 0;       // branch-and-bound nodes
    long points = 0;      // enumerated grid points
    double wall_ms = 0.0;
};

// Objective is reported in the ORIGINAL sense of the source model (the
// canonical minimize value is sign-restored for maximize models).
struct SolveOutcome {
    SolveStatus status = SolveStatus::NotExecutable;
    std::optional<double> objective;
    std::vector<std::pair<std::string, double>> assignment;
    SolveStats stats;
    std::string log;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["status"] = solve_status_name(status);
        j["objective"] = objective ? nlohmann::json(*objective) : nlohmann::json(nullptr);
        nlohmann::json a = nlohmann::json::object();
        for (const auto& [k, v] : assignment) a[k] = v;
        j["assignment"] = std::move(a);
        j["stats"] = {{"iterations", stats.iterations},
                      {"nodes", stats.nodes},
                      {"points", stats.points},
                      {"wall_ms", stats.wall_ms}};
        j["log"] = log;
        return j;
    }
};

struct SolveOptions {
    double pivot_tol = 1e-11;
    double reduced_cost_tol = 1e-9;
    double integrality_tol = 1e-6;
    double phase1_tol = 1e-7;
    long lp_iteration_limit = 200000;
    long node_limit = 100000;
    long enumerate_limit = 1000000;
};

// ---------------------------------------------------------------------------
// Dense two-phase primal simplex with Bland's anti-cycling rule
// ---------------------------------------------------------------------------

namespace simplex_detail {

enum class LpStatus { Optimal, Infeasible, Unbounded, Breakdown };

struct LpResult {
    LpStatus status = LpStatus::Breakdown;
    std::vector<double> x;  // model-variable space
    double objective = 0.0;  // canonical (minimize) value
    long iterations = 0;
    std::string note;
};

// How each model variable maps into nonnegative standard-form columns.
struct VarTransform {
    enum Kind { Shift, Mirror, Split } kind = Shift;
    double offset = 0.0;  // Shift: x = offset + s; Mirror: x = offset - s
    int col = -1;
    int col_neg = -1;  // Split: x = s(col) - s(col_neg)
};

struct Tableau {
    int rows = 0, cols = 0;
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    std::vector<int> basis;

    void pivot(int r, int c) {
        double p = a[r][c];
        double inv = 1.0 / p;
        for (int j = 0; j < cols; ++j) a[r][j] *= inv;
        b[r] *= inv;
        a[r][c] = 1.0;
        for (int i = 0; i < rows; ++i) {
            if (i == r) continue;
            double f = a[i][c];
            if (f == 0.0) continue;
            for (int j = 0; j < cols; ++j) a[i][j] -= f * a[r][j];
            a[i][c] = 0.0;
            b[i] -= f * b[r];
        }
        basis[r] = c;
    }
};

inline LpResult solve_lp_bounded(const CanonicalModel& m, std::span<const double> lo,
                                 std::span<const double> hi, const SolveOptions& opt) {
    const int n = static_cast<int>(m.variables.size());
    LpResult res;

    for (int i = 0; i < n; ++i)
        if (lo[i] > hi[i]) {
            res.status = LpStatus::Infeasible;
            res.note = "empty bound interval on " + m.variables[i].name;
            return res;
        }

    // Column layout: structural columns from variable transforms, then one
    // slack per inequality (model rows and upper-bound rows), then
    // artificials as needed.
    std::vector<VarTransform> tf(n);
    int next_col = 0;
    int upper_rows = 0;
    for (int i = 0; i < n; ++i) {
        bool lo_fin = std::isfinite(lo[i]);
        bool hi_fin = std::isfinite(hi[i]);
        if (lo_fin) {
            tf[i] = {VarTransform::Shift, lo[i], next_col++, -1};
            if (hi_fin) ++upper_rows;
        } else if (hi_fin) {
            tf[i] = {VarTransform::Mirror, hi[i], next_col++, -1};
        } else {
            tf[i] = {VarTransform::Split, 0.0, next_col, next_col + 1};
            next_col += 2;
        }
    }
    const int structural = next_col;

    struct RawRow {
        std::vector<double> a;
        double b = 0.0;
        Relation rel = Relation::Le;
    };
    std::vector<RawRow> raw;
    raw.reserve(m.rows.size() + static_cast<size_t>(upper_rows));
    auto add_row = [&](const std::vector<std::pair<int, double>>& coeffs, Relation rel,
                       double rhs) {
        RawRow rr;
        rr.a.assign(static_cast<size_t>(structural), 0.0);
        rr.rel = rel;
        rr.b = rhs;
        for (const auto& [vi, c] : coeffs) {
            const VarTransform& t = tf[vi];
            switch (t.kind) {
                case VarTransform::Shift:
                    rr.a[t.col] += c;
                    rr.b -= c * t.offset;
                    break;
                case VarTransform::Mirror:
                    rr.a[t.col] -= c;
                    rr.b -= c * t.offset;
                    break;
                case VarTransform::Split:
                    rr.a[t.col] += c;
                    rr.a[t.col_neg] -= c;
                    break;
            }
        }
        raw.push_back(std::move(rr));
    };
    for (const auto& row : m.rows) {
        if (!row.linear) throw std::invalid_argument("solve_lp: nonlinear row");
        add_row(row.coeffs, row.rel, row.rhs_value);
    }
    for (int i = 0; i < n; ++i)
        if (tf[i].kind == VarTransform::Shift && std::isfinite(hi[i]))
            add_row({{i, 1.0}}, Relation::Le, hi[i]);

    const int mrows = static_cast<int>(raw.size());
    int slack_count = 0;
    for (const auto& rr : raw)
        if (rr.rel != Relation::Eq) ++slack_count;

    Tableau t;
    t.rows = mrows;
    t.cols = structural + slack_count;  // artificials appended below
    t.a.assign(mrows, std::vector<double>(t.cols, 0.0));
    t.b.assign(mrows, 0.0);
    t.basis.assign(mrows, -1);

    int slack_at = structural;
    std::vector<int> needs_artificial;
    for (int i = 0; i < mrows; ++i) {
        for (int j = 0; j < structural; ++j) t.a[i][j] = raw[i].a[j];
        t.b[i] = raw[i].b;
        int scol = -1;
        double scoef = 0.0;
        if (raw[i].rel != Relation::Eq) {
            scol = slack_at++;
            scoef = raw[i].rel == Relation::Le ? 1.0 : -1.0;
            t.a[i][scol] = scoef;
        }
        if (t.b[i] < 0.0) {
            for (int j = 0; j < t.cols; ++j) t.a[i][j] = -t.a[i][j];
            t.b[i] = -t.b[i];
            scoef = -scoef;
        }
        if (scol >= 0 && scoef > 0.0) {
            t.basis[i] = scol;
        } else {
            needs_artificial.push_back(i);
        }
    }
    const int non_artificial = t.cols;
    if (!needs_artificial.empty()) {
        int extra = static_cast<int>(needs_artificial.size());
        for (auto& row : t.a) row.resize(row.size() + static_cast<size_t>(extra), 0.0);
        int acol = t.cols;
        t.cols += extra;
        for (int i : needs_artificial) {
            t.a[i][acol] = 1.0;
            t.basis[i] = acol;
            ++acol;
        }
    }

    // Reduced costs and objective value priced out against the current basis.
    auto price = [&](const std::vector<double>& costs, std::vector<double>& zrow,
                     double& zval) {
        zrow.assign(static_cast<size_t>(t.cols), 0.0);
        zval = 0.0;
        for (int j = 0; j < t.cols && j < static_cast<int>(costs.size()); ++j) zrow[j] = costs[j];
        for (int i = 0; i < mrows; ++i) {
            double cb = t.basis[i] < static_cast<int>(costs.size()) ? costs[t.basis[i]] : 0.0;
            if (cb == 0.0) continue;
            for (int j = 0; j < t.cols; ++j) zrow[j] -= cb * t.a[i][j];
            zval += cb * t.b[i];
        }
    };

    auto run_phase = [&](const std::vector<double>& costs, bool allow_artificial_entering,
                         std::vector<double>& zrow, double& zval) -> LpStatus {
        price(costs, zrow, zval);
        while (true) {
            if (res.iterations > opt.lp_iteration_limit) {
                res.note = "simplex iteration limit exceeded";
                return LpStatus::Breakdown;
            }
            int enter = -1;
            int limit = allow_artificial_entering ? t.cols : non_artificial;
            for (int j = 0; j < limit; ++j)
                if (zrow[j] < -opt.reduced_cost_tol) {
                    enter = j;  // Bland: lowest column index
                    break;
                }
            if (enter < 0) return LpStatus::Optimal;
            int leave = -1;
            double best_ratio = 0.0;
            for (int i = 0; i < mrows; ++i) {
                if (t.a[i][enter] > opt.pivot_tol) {
                    double ratio = t.b[i] / t.a[i][enter];
                    if (leave < 0 || ratio < best_ratio - 1e-12 ||
                        (std::abs(ratio - best_ratio) <= 1e-12 &&
                         t.basis[i] < t.basis[leave])) {
                        leave = i;
                        best_ratio = ratio;
                    }
                }
            }
            if (leave < 0) return LpStatus::Unbounded;
            double p = t.a[leave][enter];
            if (!(std::abs(p) >= opt.pivot_tol) || !std::isfinite(p)) {
                res.note = "pivot magnitude below tolerance";
                return LpStatus::Breakdown;
            }
            double f = zrow[enter];
            t.pivot(leave, enter);
            ++res.iterations;
            if (f != 0.0) {
                for (int j = 0; j < t.cols; ++j) zrow[j] -= f * t.a[leave][j];
                zrow[enter] = 0.0;
                zval += f * t.b[leave];
            }
        }
    };

    std::vector<double> zrow;
    double zval = 0.0;

    if (!needs_artificial.empty()) {
        std::vector<double> phase1_costs(static_cast<size_t>(t.cols), 0.0);
        for (int j = non_artificial; j < t.cols; ++j) phase1_costs[j] = 1.0;
        LpStatus st = run_phase(phase1_costs, true, zrow, zval);
        if (st == LpStatus::Breakdown) {
            res.status = LpStatus::Breakdown;
            return res;
        }
        if (st == LpStatus::Unbounded) {
            res.status = LpStatus::Breakdown;
            res.note = "phase-1 unbounded";
            return res;
        }
        if (zval > opt.phase1_tol) {
            res.status = LpStatus::Infeasible;
            return res;
        }
        // Drive remaining artificial variables out of the basis.
        for (int i = 0; i < mrows; ++i) {
            if (t.basis[i] < non_artificial) continue;
            int piv = -1;
            for (int j = 0; j < non_artificial; ++j)
                if (std::abs(t.a[i][j]) > opt.pivot_tol) {
                    piv = j;
                    break;
                }
            if (piv >= 0) {
                t.pivot(i, piv);
                ++res.iterations;
            }
            // else: redundant row; the artificial stays basic at value 0.
        }
    }

    // Phase 2 costs over structural columns (the objective constant plays
    // no role in pivoting; the final value is recomputed from x).
    std::vector<double> costs(static_cast<size_t>(t.cols), 0.0);
    for (const auto& [vi, c] : m.objective.coeffs) {
        const VarTransform& tv = tf[vi];
        switch (tv.kind) {
            case VarTransform::Shift:
                costs[tv.col] += c;
                break;
            case VarTransform::Mirror:
                costs[tv.col] -= c;
                break;
            case VarTransform::Split:
                costs[tv.col] += c;
                costs[tv.col_neg] -= c;
                break;
        }
    }
    LpStatus st = run_phase(costs, false, zrow, zval);
    if (st == LpStatus::Breakdown || st == LpStatus::Unbounded) {
        res.status = st;
        return res;
    }

    std::vector<double> sol(static_cast<size_t>(t.cols), 0.0);
    for (int i = 0; i < mrows; ++i)
        if (t.basis[i] >= 0 && t.basis[i] < t.cols) sol[t.basis[i]] = t.b[i];
    res.x.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const VarTransform& tv = tf[i];
        switch (tv.kind) {
            case VarTransform::Shift: res.x[i] = tv.offset + sol[tv.col]; break;
            case VarTransform::Mirror: res.x[i] = tv.offset - sol[tv.col]; break;
            case VarTransform::Split: res.x[i] = sol[tv.col] - sol[tv.col_neg]; break;
        }
    }
    res.objective = sparse_value(m.objective.coeffs, m.objective.constant, res.x);
    res.status = LpStatus::Optimal;
    return res;
}

}  // namespace simplex_detail

// ---------------------------------------------------------------------------
// Public solver operations
// ---------------------------------------------------------------------------

namespace solver_detail {

inline std::vector<std::pair<std::string, double>> named_assignment(
    const CanonicalModel& m, std::span<const double> x) {
    std::vector<std::pair<std::string, double>> out;
    out.reserve(m.variables.size());
    for (size_t i = 0; i < m.variables.size(); ++i) out.emplace_back(m.variables[i].name, x[i]);
    return out;
}

inline double restore_sense(const CanonicalModel& m, double canonical_value) {
    return m.objective.maximized ? -canonical_value : canonical_value;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

}  // namespace solver_detail

// Primal simplex for pure LPs (all variables continuous, all rows linear).
inline SolveOutcome solve_lp(const CanonicalModel& m, const SolveOptions& opt = {}) {
    using namespace simplex_detail;
    if (!m.all_linear()) throw std::invalid_argument("solve_lp: model is not linear");
    if (m.has_integer_vars())
        throw std::invalid_argument("solve_lp: model has integer variables");
    solver_detail::Timer timer;
    std::vector<double> lo, hi;
    for (const auto& v : m.variables) {
        lo.push_back(v.lower);
        hi.push_back(v.upper);
    }
    LpResult r = solve_lp_bounded(m, lo, hi, opt);
    SolveOutcome out;
    out.stats.iterations = r.iterations;
    out.stats.wall_ms = timer.ms();
    switch (r.status) {
        case LpStatus::Optimal:
            out.status = SolveStatus::Optimal;
            out.objective = solver_detail::restore_sense(m, r.objective);
            out.assignment = solver_detail::named_assignment(m, r.x);
            out.log = "simplex: optimal after " + std::to_string(r.iterations) + " pivots";
            break;
        case LpStatus::Infeasible:
            out.status = SolveStatus::Infeasible;
            out.log = "simplex: infeasible (phase-1 optimum positive)";
            break;
        case LpStatus::Unbounded:
            out.status = SolveStatus::Unbounded;
            out.log = "simplex: unbounded (no leaving row for entering column)";
            break;
        case LpStatus::Breakdown:
            out.status = SolveStatus::NotExecutable;
            out.log = "simplex: numerical breakdown: " + (r.note.empty() ? "pivot" : r.note);
            break;
    }
    return out;
}

// Branch-and-bound over LP relaxations: best-first on the relaxation bound,
// branching on the most-fractional integer variable (ties: lowest index).
inline SolveOutcome solve_milp(const CanonicalModel& m, const SolveOptions& opt = {}) {
    using namespace simplex_detail;
    if (!m.all_linear()) throw std::invalid_argument("solve_milp: model is not linear");
    if (!m.has_integer_vars())
        throw std::invalid_argument("solve_milp: model has no integer variables");
    solver_detail::Timer timer;
    const int n = static_cast<int>(m.variables.size());
    std::vector<int> int_vars;
    for (int i = 0; i < n; ++i)
        if (m.variables[i].domain != VarDomain::Continuous) int_vars.push_back(i);
    bool has_continuous = static_cast<size_t>(n) != int_vars.size();

    struct Node {
        double bound;
        long id;
        std::vector<double> lo, hi;
    };
    auto cmp = [](const Node& a, const Node& b) {
        return a.bound > b.bound || (a.bound == b.bound && a.id > b.id);
    };
    std::priority_queue<Node, std::vector<Node>, decltype(cmp)> queue(cmp);

    SolveOutcome out;
    Node root;
    root.id = 0;
    root.bound = -std::numeric_limits<double>::infinity();
    for (const auto& v : m.variables) {
        double lo = v.lower, hi = v.upper;
        if (v.domain != VarDomain::Continuous) {
            lo = std::isfinite(lo) ? std::ceil(lo - opt.integrality_tol) : lo;
            hi = std::isfinite(hi) ? std::floor(hi + opt.integrality_tol) : hi;
        }
        root.lo.push_back(lo);
        root.hi.push_back(hi);
    }
    queue.push(std::move(root));

    long next_id = 1;
    long nodes = 0;
    bool have_incumbent = false;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<double> best_x;

    while (!queue.empty()) {
        if (nodes >= opt.node_limit) {
            out.status = SolveStatus::NotExecutable;
            out.log = "branch-and-bound: node limit of " + std::to_string(opt.node_limit) +
                      " exceeded" +
                      (have_incumbent ? "; best incumbent " + format_number(best_value) : "");
            out.stats.nodes = nodes;
            out.stats.wall_ms = timer.ms();
            return out;
        }
        Node node = queue.top();
        queue.pop();
        if (have_incumbent && node.bound >= best_value - 1e-9) continue;
        ++nodes;
        LpResult r = solve_lp_bounded(m, node.lo, node.hi, opt);
        out.stats.iterations += r.iterations;
        if (r.status == LpStatus::Breakdown) {
            out.status = SolveStatus::NotExecutable;
            out.log = "branch-and-bound: LP breakdown at node " + std::to_string(nodes) + ": " +
                      r.note;
            out.stats.nodes = nodes;
            out.stats.wall_ms = timer.ms();
            return out;
        }
        if (r.status == LpStatus::Infeasible) continue;
        if (r.status == LpStatus::Unbounded) {
            // Desk-scale policy: an unbounded relaxation is reported as
            // unbounded (integrality cannot repair an unbounded ray here).
            out.status = SolveStatus::Unbounded;
            out.log = "branch-and-bound: LP relaxation unbounded";
            out.stats.nodes = nodes;
            out.stats.wall_ms = timer.ms();
            return out;
        }
        if (have_incumbent && r.objective >= best_value - 1e-9) continue;

        // Most-fractional integer variable.
        int branch_var = -1;
        double branch_frac = -1.0;
        for (int vi : int_vars) {
            double v = r.x[vi];
            double frac = std::abs(v - std::round(v));
            if (frac > opt.integrality_tol && frac > branch_frac + 1e-12) {
                branch_frac = frac;
                branch_var = vi;
            }
        }
        if (branch_var < 0) {
            // Integral candidate: fix the integers and re-solve the
            // continuous part so the reported point is exactly feasible.
            std::vector<double> xi = r.x;
            for (int vi : int_vars) xi[vi] = std::round(xi[vi]);
            double value;
            if (has_continuous) {
                std::vector<double> flo = node.lo, fhi = node.hi;
                for (int vi : int_vars) flo[vi] = fhi[vi] = xi[vi];
                LpResult fixed = solve_lp_bounded(m, flo, fhi, opt);
                out.stats.iterations += fixed.iterations;
                if (fixed.status != LpStatus::Optimal) continue;
                xi = fixed.x;
                for (int vi : int_vars) xi[vi] = std::round(xi[vi]);
                value = fixed.objective;
            } else {
                Evaluation ev = evaluate(m, xi);
                if (!ev.feasible) continue;
                value = ev.objective;
            }
            if (!have_incumbent || value < best_value - 1e-9) {
                have_incumbent = true;
                best_value = value;
                best_x = xi;
            }
            continue;
        }

        double v = r.x[branch_var];
        Node down = node, up = node;
        down.hi[branch_var] = std::floor(v);
        down.bound = r.objective;
        down.id = next_id++;
        up.lo[branch_var] = std::ceil(v);
        up.bound = r.objective;
        up.id = next_id++;
        if (down.lo[branch_var] <= down.hi[branch_var]) queue.push(std::move(down));
        if (up.lo[branch_var] <= up.hi[branch_var]) queue.push(std::move(up));
    }

    out.stats.nodes = nodes;
    out.stats.wall_ms = timer.ms();
    if (have_incumbent) {
        out.status = SolveStatus::Optimal;
        out.objective = solver_detail::restore_sense(m, best_value);
        out.assignment = solver_detail::named_assignment(m, best_x);
        out.log = "branch-and-bound: optimal after " + std::to_string(nodes) + " nodes";
    } else {
        out.status = SolveStatus::Infeasible;
        out.log = "branch-and-bound: no feasible integer point";
    }
    return out;
}

// Exhaustive evaluation over the full finite grid; doubles as the oracle for
// the other solvers and handles small nonlinear instances.
inline SolveOutcome solve_enumerate(const CanonicalModel& m, long limit = 1000000) {
    solver_detail::Timer timer;
    SolveOutcome out;
    const size_t n = m.variables.size();
    std::vector<long> lo(n), size(n);
    double grid = 1.0;
    for (size_t i = 0; i < n; ++i) {
        const auto& v = m.variables[i];
        if (v.domain == VarDomain::Continuous)
            throw std::invalid_argument("solve_enumerate: continuous variable " + v.name);
        if (!std::isfinite(v.lower) || !std::isfinite(v.upper))
            throw std::invalid_argument("solve_enumerate: unbounded domain on " + v.name);
        lo[i] = static_cast<long>(std::ceil(v.lower - 1e-9));
        long hi = static_cast<long>(std::floor(v.upper + 1e-9));
        size[i] = std::max<long>(0, hi - lo[i] + 1);
        grid *= static_cast<double>(size[i]);
    }
    if (grid > static_cast<double>(limit)) {
        out.status = SolveStatus::Exhausted;
        out.log = "enumeration: grid of " + format_number(grid) + " points exceeds limit " +
                  std::to_string(limit);
        out.stats.wall_ms = timer.ms();
        return out;
    }

    std::vector<long> counter(n, 0);
    std::vector<double> x(n);
    bool have_best = false;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_x;
    long points = 0;
    bool done = false;
    for (size_t i = 0; i < n; ++i)
        if (size[i] == 0) done = true;  // empty domain: no grid points
    while (!done) {
        for (size_t i = 0; i < n; ++i) x[i] = static_cast<double>(lo[i] + counter[i]);
        ++points;
        Evaluation ev = evaluate(m, x);
        if (ev.feasible && (!have_best || ev.objective < best)) {
            have_best = true;
            best = ev.objective;
            best_x = x;
        }
        // Row-major odometer: last variable fastest; the first feasible
        // point of equal value wins, which fixes tie-breaking.
        size_t d = n;
        while (d > 0) {
            --d;
            if (++counter[d] < size[d]) break;
            counter[d] = 0;
            if (d == 0) done = true;
        }
        if (n == 0) done = true;
    }

    out.stats.points = points;
    out.stats.wall_ms = timer.ms();
    if (have_best) {
        out.status = SolveStatus::Optimal;
        out.objective = solver_detail::restore_sense(m, best);
        out.assignment = solver_detail::named_assignment(m, best_x);
        out.log = "enumeration: optimal over " + std::to_string(points) + " points";
    } else {
        out.status = SolveStatus::Infeasible;
        out.log = "enumeration: no feasible point among " + std::to_string(points);
    }
    return out;
}

// Routes a canonical model to the appropriate engine. Never throws for
// well-formed models; unsupported shapes come back NotExecutable with a log.
inline SolveOutcome solve_model(const CanonicalModel& m, const SolveOptions& opt = {}) {
    if (m.variables.empty()) {
        SolveOutcome out;
        out.status = SolveStatus::NotExecutable;
        out.log = "solve: model has no variables";
        return out;
    }
    if (m.all_linear())
        return m.has_integer_vars() ? solve_milp(m, opt) : solve_lp(m, opt);
    // Nonlinear: only finite grids are supported.
    for (const auto& v : m.variables) {
        if (v.domain == VarDomain::Continuous || !std::isfinite(v.lower) ||
            !std::isfinite(v.upper)) {
            SolveOutcome out;
            out.status = SolveStatus::NotExecutable;
            out.log = "solve: nonlinear model with non-enumerable variable " + v.name;
            return out;
        }
    }
    return solve_enumerate(m, opt.enumerate_limit);
}

}  // namespace optloop
