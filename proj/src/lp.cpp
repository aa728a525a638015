#include "tcbubble/lp.hpp"

#include <algorithm>
#include <ostream>

namespace tcbubble {

std::string to_string(LpStatus status) {
    switch (status) {
        case LpStatus::Optimal: return "Optimal";
        case LpStatus::Infeasible: return "Infeasible";
        case LpStatus::Unbounded: return "Unbounded";
    }
    return "?";
}

template <class T>
std::size_t LpProblem<T>::add_row(const std::vector<std::pair<std::size_t, T>>& terms, Relation rel, T rhs) {
    LinearConstraint<T> row{std::vector<T>(num_vars, T(0)), rel, std::move(rhs)};
    for (const auto& [j, a] : terms) {
        if (j >= num_vars) throw ShapeMismatch("row term references variable " + std::to_string(j));
        row.coeffs[j] += a;
    }
    constraints.push_back(std::move(row));
    return constraints.size() - 1;
}

template <class T>
void LpProblem<T>::validate() const {
    if (objective.size() != num_vars) throw ShapeMismatch("objective length differs from num_vars");
    if (bounds.size() != num_vars) throw ShapeMismatch("bounds length differs from num_vars");
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        if (constraints[i].coeffs.size() != num_vars) {
            throw ShapeMismatch("constraint " + std::to_string(i) + " has wrong length");
        }
    }
}

namespace {

inline void sub_mul(double& a, double f, double p, double&) { a -= f * p; }
inline void sub_mul(Rational& a, const Rational& f, const Rational& p, Rational& tmp) {
    mpq_mul(tmp.get_mpq_t(), f.get_mpq_t(), p.get_mpq_t());
    mpq_sub(a.get_mpq_t(), a.get_mpq_t(), tmp.get_mpq_t());
}

template <class T>
struct Numerics {
    double eps;
    bool positive(const T& x) const {
        if constexpr (is_exact_v<T>) return sgn(x) > 0;
        else return x > eps;
    }
    bool negative(const T& x) const {
        if constexpr (is_exact_v<T>) return sgn(x) < 0;
        else return x < -eps;
    }
    bool nonzero(const T& x) const {
        if constexpr (is_exact_v<T>) return sgn(x) != 0;
        else return std::fabs(x) > eps;
    }
};

constexpr std::size_t kNoColumn = static_cast<std::size_t>(-1);

enum class ColumnKind { Structural, Slack, Surplus, Artificial };

// Where an original variable lives in the standard form: x = shift + s*(x+)
// (- x- when free).
template <class T>
struct VarMap {
    std::size_t plus = 0;
    std::size_t minus = kNoColumn;
    T shift{};
    int direction = 1;
};

template <class T>
class Simplex {
public:
    Simplex(const LpProblem<T>& problem, const SolveOptions& options)
        : problem_(problem), options_(options), num_{options.tolerance} {
        build();
    }

    LpSolution<T> run();

private:
    void build();
    void compute_reduced_costs();
    bool iterate(bool phase_one);
    void pivot(std::size_t row, std::size_t col);

    const LpProblem<T>& problem_;
    SolveOptions options_;
    Numerics<T> num_;

    std::vector<VarMap<T>> vars_;
    std::vector<std::vector<T>> tab_;
    std::vector<T> rhs_;
    std::vector<int> row_sign_;
    std::vector<std::size_t> identity_col_;
    std::vector<ColumnKind> kind_;
    std::vector<std::size_t> basis_;
    std::vector<T> cost_;
    std::vector<T> reduced_;
    T value_{};
    std::size_t pivots_ = 0;
    std::size_t num_original_rows_ = 0;
};

template <class T>
void Simplex<T>::build() {
    const auto& p = problem_;
    std::size_t cols = 0;
    std::vector<std::pair<std::size_t, T>> upper_rows;  // (column, u - l)
    for (std::size_t j = 0; j < p.num_vars; ++j) {
        VarMap<T> m;
        const auto& b = p.bounds[j];
        m.plus = cols++;
        if (b.lower) {
            m.shift = *b.lower;
            if (b.upper) upper_rows.emplace_back(m.plus, T(*b.upper - *b.lower));
        } else if (b.upper) {
            m.shift = *b.upper;
            m.direction = -1;
        } else {
            m.minus = cols++;
        }
        vars_.push_back(m);
    }
    const std::size_t num_struct = cols;

    struct Row {
        std::vector<T> a;
        Relation rel;
        T b;
    };
    std::vector<Row> rows;
    for (const auto& c : p.constraints) {
        Row r{std::vector<T>(num_struct, T(0)), c.relation, c.rhs};
        for (std::size_t j = 0; j < p.num_vars; ++j) {
            if (sign(c.coeffs[j]) == 0) continue;
            const auto& m = vars_[j];
            r.a[m.plus] = m.direction > 0 ? T(c.coeffs[j]) : T(-c.coeffs[j]);
            if (m.minus != kNoColumn) r.a[m.minus] = -c.coeffs[j];
            r.b -= c.coeffs[j] * m.shift;
        }
        rows.push_back(std::move(r));
    }
    num_original_rows_ = rows.size();
    for (const auto& [col, width] : upper_rows) {
        Row r{std::vector<T>(num_struct, T(0)), Relation::LessEqual, width};
        r.a[col] = T(1);
        rows.push_back(std::move(r));
    }

    const std::size_t m = rows.size();
    row_sign_.assign(m, 1);
    for (std::size_t i = 0; i < m; ++i) {
        if (sign(rows[i].b) < 0) {
            row_sign_[i] = -1;
            for (auto& a : rows[i].a) a = -a;
            rows[i].b = -rows[i].b;
            if (rows[i].rel == Relation::LessEqual) rows[i].rel = Relation::GreaterEqual;
            else if (rows[i].rel == Relation::GreaterEqual) rows[i].rel = Relation::LessEqual;
        }
    }

    kind_.assign(num_struct, ColumnKind::Structural);
    std::vector<std::pair<std::size_t, int>> aux;  // (row, coefficient) per auxiliary column
    identity_col_.assign(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
        if (rows[i].rel == Relation::LessEqual) {
            identity_col_[i] = num_struct + aux.size();
            aux.emplace_back(i, 1);
            kind_.push_back(ColumnKind::Slack);
        } else {
            if (rows[i].rel == Relation::GreaterEqual) {
                aux.emplace_back(i, -1);
                kind_.push_back(ColumnKind::Surplus);
            }
            identity_col_[i] = num_struct + aux.size();
            aux.emplace_back(i, 1);
            kind_.push_back(ColumnKind::Artificial);
        }
    }
    const std::size_t n = num_struct + aux.size();
    tab_.assign(m, std::vector<T>(n, T(0)));
    rhs_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::copy(rows[i].a.begin(), rows[i].a.end(), tab_[i].begin());
        rhs_[i] = rows[i].b;
    }
    for (std::size_t k = 0; k < aux.size(); ++k) tab_[aux[k].first][num_struct + k] = T(aux[k].second);
    basis_ = identity_col_;
}

template <class T>
void Simplex<T>::compute_reduced_costs() {
    const std::size_t n = kind_.size();
    reduced_.assign(n, T(0));
    for (std::size_t j = 0; j < n; ++j) reduced_[j] = -cost_[j];
    value_ = T(0);
    T tmp;
    for (std::size_t i = 0; i < tab_.size(); ++i) {
        const T& cb = cost_[basis_[i]];
        if (!num_.nonzero(cb)) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (sign(tab_[i][j]) != 0) {
                T neg = -cb;
                sub_mul(reduced_[j], neg, tab_[i][j], tmp);
            }
        }
        value_ += cb * rhs_[i];
    }
}

template <class T>
void Simplex<T>::pivot(std::size_t row, std::size_t col) {
    ++pivots_;
    auto& prow = tab_[row];
    const T piv = prow[col];
    std::vector<std::size_t> nz;
    for (std::size_t j = 0; j < prow.size(); ++j) {
        if (sign(prow[j]) != 0) {
            prow[j] /= piv;
            nz.push_back(j);
        }
    }
    rhs_[row] /= piv;
    prow[col] = T(1);
    T tmp;
    for (std::size_t i = 0; i < tab_.size(); ++i) {
        if (i == row) continue;
        auto& r = tab_[i];
        if (sign(r[col]) == 0) continue;
        const T f = r[col];
        for (std::size_t j : nz) sub_mul(r[j], f, prow[j], tmp);
        sub_mul(rhs_[i], f, rhs_[row], tmp);
        r[col] = T(0);
        if constexpr (!is_exact_v<T>) {
            if (rhs_[i] < 0 && rhs_[i] > -options_.tolerance) rhs_[i] = 0;
        }
    }
    if (sign(reduced_[col]) != 0) {
        const T f = reduced_[col];
        for (std::size_t j : nz) sub_mul(reduced_[j], f, prow[j], tmp);
        sub_mul(value_, f, rhs_[row], tmp);
        reduced_[col] = T(0);
    }
    basis_[row] = col;
}

// Returns false on unboundedness.
template <class T>
bool Simplex<T>::iterate(bool phase_one) {
    const std::size_t n = kind_.size();
    while (true) {
        std::size_t enter = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (!phase_one && kind_[j] == ColumnKind::Artificial) continue;
            if (num_.negative(reduced_[j])) {
                enter = j;
                break;
            }
        }
        if (enter == n) return true;

        std::size_t leave = tab_.size();
        for (std::size_t i = 0; i < tab_.size(); ++i) {
            const T& a = tab_[i][enter];
            if (!num_.positive(a)) continue;
            if (leave == tab_.size()) {
                leave = i;
                continue;
            }
            // rhs_i / a_i versus rhs_l / a_l, cross-multiplied (both a > 0).
            const T lhs = rhs_[i] * tab_[leave][enter];
            const T rhs = rhs_[leave] * a;
            bool smaller, tie;
            if constexpr (is_exact_v<T>) {
                smaller = lhs < rhs;
                tie = lhs == rhs;
            } else {
                const double scale = options_.tolerance * (1.0 + std::fabs(lhs) + std::fabs(rhs));
                smaller = lhs < rhs - scale;
                tie = !smaller && lhs <= rhs + scale;
            }
            if (smaller || (tie && basis_[i] < basis_[leave])) leave = i;
        }
        if (leave == tab_.size()) return false;
        if (pivots_ >= options_.max_pivots) throw NumericalFailure("simplex pivot limit reached");
        pivot(leave, enter);
    }
}

template <class T>
LpSolution<T> Simplex<T>::run() {
    LpSolution<T> out;
    const std::size_t n = kind_.size();
    const std::size_t m = tab_.size();

    const bool has_artificial = std::any_of(kind_.begin(), kind_.end(),
                                            [](ColumnKind k) { return k == ColumnKind::Artificial; });
    if (has_artificial) {
        cost_.assign(n, T(0));
        for (std::size_t j = 0; j < n; ++j) {
            if (kind_[j] == ColumnKind::Artificial) cost_[j] = T(-1);
        }
        compute_reduced_costs();
        iterate(true);
        T scale(1);
        if constexpr (!is_exact_v<T>) {
            for (const auto& b : rhs_) scale = std::max(scale, std::fabs(b));
        }
        if (num_.negative(T(value_ / scale))) {
            out.status = LpStatus::Infeasible;
            out.farkas.assign(num_original_rows_, T(0));
            for (std::size_t i = 0; i < num_original_rows_; ++i) {
                const std::size_t c = identity_col_[i];
                T y = reduced_[c] + cost_[c];
                out.farkas[i] = row_sign_[i] > 0 ? y : T(-y);
            }
            out.pivots = pivots_;
            return out;
        }
        for (std::size_t i = 0; i < m; ++i) {
            if (kind_[basis_[i]] != ColumnKind::Artificial) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (kind_[j] != ColumnKind::Artificial && num_.nonzero(tab_[i][j])) {
                    pivot(i, j);
                    break;
                }
            }
        }
    }

    cost_.assign(n, T(0));
    const T dir = problem_.sense == Sense::Maximize ? T(1) : T(-1);
    for (std::size_t j = 0; j < problem_.num_vars; ++j) {
        const auto& v = vars_[j];
        const T c = dir * problem_.objective[j];
        cost_[v.plus] = v.direction > 0 ? c : T(-c);
        if (v.minus != kNoColumn) cost_[v.minus] = -c;
    }
    compute_reduced_costs();
    if (!iterate(false)) {
        out.status = LpStatus::Unbounded;
        out.pivots = pivots_;
        return out;
    }

    std::vector<T> x(n, T(0));
    for (std::size_t i = 0; i < m; ++i) x[basis_[i]] = rhs_[i];
    out.status = LpStatus::Optimal;
    out.primal.resize(problem_.num_vars);
    for (std::size_t j = 0; j < problem_.num_vars; ++j) {
        const auto& v = vars_[j];
        T val = v.direction > 0 ? T(v.shift + x[v.plus]) : T(v.shift - x[v.plus]);
        if (v.minus != kNoColumn) val -= x[v.minus];
        out.primal[j] = val;
    }
    out.dual.assign(num_original_rows_, T(0));
    for (std::size_t i = 0; i < num_original_rows_; ++i) {
        const T y = reduced_[identity_col_[i]];
        T oriented = row_sign_[i] > 0 ? y : T(-y);
        out.dual[i] = problem_.sense == Sense::Maximize ? oriented : T(-oriented);
    }
    out.objective_value = T(0);
    for (std::size_t j = 0; j < problem_.num_vars; ++j) out.objective_value += problem_.objective[j] * out.primal[j];
    out.pivots = pivots_;
    return out;
}

LpProblem<Rational> exact_copy(const LpProblem<double>& p) {
    LpProblem<Rational> q(p.num_vars, p.sense);
    for (std::size_t j = 0; j < p.num_vars; ++j) {
        q.objective[j] = p.objective[j];
        if (p.bounds[j].lower) q.bounds[j].lower = Rational(*p.bounds[j].lower);
        else q.bounds[j].lower.reset();
        if (p.bounds[j].upper) q.bounds[j].upper = Rational(*p.bounds[j].upper);
    }
    for (const auto& c : p.constraints) {
        LinearConstraint<Rational> row{{}, c.relation, Rational(c.rhs)};
        for (double a : c.coeffs) row.coeffs.emplace_back(a);
        q.constraints.push_back(std::move(row));
    }
    return q;
}

std::vector<double> rounded(const std::vector<Rational>& v) {
    std::vector<double> out;
    for (const auto& x : v) out.push_back(to_double(x));
    return out;
}

LpSolution<double> round_solution(const LpSolution<Rational>& s) {
    LpSolution<double> out;
    out.status = s.status;
    out.primal = rounded(s.primal);
    out.dual = rounded(s.dual);
    out.objective_value = to_double(s.objective_value);
    out.farkas = rounded(s.farkas);
    out.pivots = s.pivots;
    return out;
}

// verify_farkas covers finite lower bounds and no upper bounds.
template <class T>
bool farkas_applicable(const LpProblem<T>& p) {
    for (const auto& b : p.bounds) {
        if (!b.lower || b.upper) return false;
    }
    return true;
}

template <class T>
T row_activity(const LinearConstraint<T>& c, const std::vector<T>& x) {
    T s(0);
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (sign(c.coeffs[j]) != 0) s += c.coeffs[j] * x[j];
    }
    return s;
}

}  // namespace

template <class T>
LpSolution<T> solve(const LpProblem<T>& problem, const SolveOptions& options) {
    problem.validate();
    Simplex<T> simplex(problem, options);
    auto sol = simplex.run();
    if constexpr (!is_exact_v<T>) {
        const double tol = std::max(options.tolerance * 1e3, 1e-7);
        bool suspect = sol.status == LpStatus::Optimal && !certify(problem, sol, tol);
        if (sol.status == LpStatus::Infeasible && farkas_applicable(problem)) {
            suspect = !verify_farkas(problem, sol.farkas, tol);
        }
        if (suspect) {
            if (!options.exact_fallback) throw NumericalFailure("float simplex result failed certification");
            return solve_exact(problem, options);
        }
    }
    return sol;
}

LpSolution<double> solve_exact(const LpProblem<double>& problem, const SolveOptions& options) {
    problem.validate();
    return round_solution(solve(exact_copy(problem), options));
}

template <class T>
bool certify(const LpProblem<T>& p, const LpSolution<T>& s, double tol) {
    if (s.status != LpStatus::Optimal) return false;
    if (s.primal.size() != p.num_vars || s.dual.size() != p.constraints.size()) return false;
    const T dir = p.sense == Sense::Maximize ? T(1) : T(-1);

    for (std::size_t j = 0; j < p.num_vars; ++j) {
        const auto& b = p.bounds[j];
        if (b.lower && !approx_le(*b.lower, s.primal[j], tol)) return false;
        if (b.upper && !approx_le(s.primal[j], *b.upper, tol)) return false;
    }
    std::vector<T> reduced(p.num_vars);
    for (std::size_t j = 0; j < p.num_vars; ++j) reduced[j] = dir * p.objective[j];
    for (std::size_t i = 0; i < p.constraints.size(); ++i) {
        const auto& c = p.constraints[i];
        const T act = row_activity(c, s.primal);
        const T y = dir * s.dual[i];  // multiplier of the maximisation form
        switch (c.relation) {
            case Relation::LessEqual:
                if (!approx_le(act, c.rhs, tol) || (sign(y) < 0 && !approx_zero(y, tol))) return false;
                break;
            case Relation::GreaterEqual:
                if (!approx_le(c.rhs, act, tol) || (sign(y) > 0 && !approx_zero(y, tol))) return false;
                break;
            case Relation::Equal:
                if (!approx_eq(act, c.rhs, tol)) return false;
                break;
        }
        if (!approx_eq(act, c.rhs, tol) && !approx_zero(y, tol)) return false;
        for (std::size_t j = 0; j < p.num_vars; ++j) {
            if (sign(c.coeffs[j]) != 0) reduced[j] -= y * c.coeffs[j];
        }
    }
    for (std::size_t j = 0; j < p.num_vars; ++j) {
        const auto& b = p.bounds[j];
        const bool at_lower = b.lower && approx_eq(s.primal[j], *b.lower, tol);
        const bool at_upper = b.upper && approx_eq(s.primal[j], *b.upper, tol);
        const T& d = reduced[j];
        if (at_lower && at_upper) continue;
        if (at_lower) {
            if (sign(d) > 0 && !approx_zero(d, tol)) return false;
        } else if (at_upper) {
            if (sign(d) < 0 && !approx_zero(d, tol)) return false;
        } else if (!approx_zero(d, tol)) {
            return false;
        }
    }
    T value(0);
    for (std::size_t j = 0; j < p.num_vars; ++j) value += p.objective[j] * s.primal[j];
    return approx_eq(value, s.objective_value, tol);
}

template <class T>
T dual_objective(const LpProblem<T>& p, const LpSolution<T>& s) {
    T total(0);
    std::vector<T> reduced(p.objective);
    for (std::size_t i = 0; i < p.constraints.size(); ++i) {
        total += p.constraints[i].rhs * s.dual[i];
        for (std::size_t j = 0; j < p.num_vars; ++j) reduced[j] -= s.dual[i] * p.constraints[i].coeffs[j];
    }
    // Remaining reduced costs are carried by active bounds.
    for (std::size_t j = 0; j < p.num_vars; ++j) {
        if (sign(reduced[j]) == 0) continue;
        const auto& b = p.bounds[j];
        if (b.lower && (!b.upper || s.primal[j] == *b.lower)) total += reduced[j] * *b.lower;
        else if (b.upper) total += reduced[j] * *b.upper;
    }
    return total;
}

template <class T>
bool verify_farkas(const LpProblem<T>& p, const std::vector<T>& y, double tol) {
    if (y.size() != p.constraints.size()) return false;
    std::vector<T> col(p.num_vars, T(0));
    T rhs(0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto& c = p.constraints[i];
        if (c.relation == Relation::LessEqual && sign(y[i]) < 0 && !approx_zero(y[i], tol)) return false;
        if (c.relation == Relation::GreaterEqual && sign(y[i]) > 0 && !approx_zero(y[i], tol)) return false;
        T shifted = c.rhs;
        for (std::size_t j = 0; j < p.num_vars; ++j) {
            if (!p.bounds[j].lower || p.bounds[j].upper) return false;
            shifted -= c.coeffs[j] * *p.bounds[j].lower;
            col[j] += y[i] * c.coeffs[j];
        }
        rhs += y[i] * shifted;
    }
    for (const auto& v : col) {
        if (sign(v) < 0 && !approx_zero(v, tol)) return false;
    }
    if constexpr (is_exact_v<T>) return sgn(rhs) < 0;
    else return rhs < -tol;
}

template <class T>
void write_lp(std::ostream& out, const LpProblem<T>& p) {
    auto term = [&](const T& a, std::size_t j, bool first) {
        if (sign(a) == 0) return false;
        const T mag = abs_value(a);
        out << (sign(a) < 0 ? " - " : (first ? " " : " + "));
        if (mag != T(1)) out << to_string(mag) << ' ';
        out << 'x' << j;
        return true;
    };
    out << (p.sense == Sense::Maximize ? "Maximize\n" : "Minimize\n") << " obj:";
    bool any = false;
    for (std::size_t j = 0; j < p.num_vars; ++j) any |= term(p.objective[j], j, !any);
    if (!any) out << " 0 x0";
    out << "\nSubject To\n";
    for (std::size_t i = 0; i < p.constraints.size(); ++i) {
        const auto& c = p.constraints[i];
        out << " c" << i << ':';
        bool first = true;
        for (std::size_t j = 0; j < p.num_vars; ++j) {
            if (term(c.coeffs[j], j, first)) first = false;
        }
        if (first) out << " 0 x0";
        out << (c.relation == Relation::LessEqual ? " <= " : c.relation == Relation::Equal ? " = " : " >= ")
            << to_string(c.rhs) << '\n';
    }
    out << "Bounds\n";
    for (std::size_t j = 0; j < p.num_vars; ++j) {
        const auto& b = p.bounds[j];
        if (!b.lower && !b.upper) {
            out << " x" << j << " free\n";
            continue;
        }
        out << ' ' << (b.lower ? to_string(*b.lower) : std::string("-inf")) << " <= x" << j << " <= "
            << (b.upper ? to_string(*b.upper) : std::string("+inf")) << '\n';
    }
    out << "End\n";
}

template struct LpProblem<double>;
template struct LpProblem<Rational>;
template LpSolution<double> solve(const LpProblem<double>&, const SolveOptions&);
template LpSolution<Rational> solve(const LpProblem<Rational>&, const SolveOptions&);
template bool certify(const LpProblem<double>&, const LpSolution<double>&, double);
template bool certify(const LpProblem<Rational>&, const LpSolution<Rational>&, double);
template double dual_objective(const LpProblem<double>&, const LpSolution<double>&);
template Rational dual_objective(const LpProblem<Rational>&, const LpSolution<Rational>&);
template bool verify_farkas(const LpProblem<double>&, const std::vector<double>&, double);
template bool verify_farkas(const LpProblem<Rational>&, const std::vector<Rational>&, double);
template void write_lp(std::ostream&, const LpProblem<double>&);
template void write_lp(std::ostream&, const LpProblem<Rational>&);

}  // namespace tcbubble
