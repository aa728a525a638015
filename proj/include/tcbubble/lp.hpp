#pragma once

// Dense two-phase simplex over either `double` or exact rationals.
//
// Pivoting follows Bland's rule (lowest eligible column enters, lowest basic
// index leaves on ratio ties), which rules out cycling and makes every solve
// reproducible bit for bit.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tcbubble/errors.hpp"
#include "tcbubble/numeric.hpp"

namespace tcbubble {

enum class Relation { LessEqual, Equal, GreaterEqual };
enum class Sense { Maximize, Minimize };
enum class LpStatus { Optimal, Infeasible, Unbounded };

std::string to_string(LpStatus status);

template <class T>
struct LinearConstraint {
    std::vector<T> coeffs;
    Relation relation = Relation::LessEqual;
    T rhs{};
};

template <class T>
struct VarBound {
    std::optional<T> lower = T(0);
    std::optional<T> upper;
};

template <class T>
struct LpProblem {
    std::size_t num_vars = 0;
    Sense sense = Sense::Maximize;
    std::vector<T> objective;
    std::vector<LinearConstraint<T>> constraints;
    std::vector<VarBound<T>> bounds;

    LpProblem() = default;
    explicit LpProblem(std::size_t n, Sense s = Sense::Maximize)
        : num_vars(n), sense(s), objective(n, T(0)), bounds(n) {}

    /// Adds a row given as sparse (index, coefficient) terms; returns its index.
    std::size_t add_row(const std::vector<std::pair<std::size_t, T>>& terms, Relation rel, T rhs);
    void set_free(std::size_t var) { bounds.at(var) = {std::nullopt, std::nullopt}; }

    /// Throws ShapeMismatch if a coefficient vector has the wrong length.
    void validate() const;
};

template <class T>
struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<T> primal;
    /// One multiplier per constraint: the sensitivity of the optimal value to
    /// the row's right-hand side.
    std::vector<T> dual;
    T objective_value{};
    /// For Infeasible results: row multipliers y with y'A >= 0 on the
    /// (lower-bound shifted) columns and y'b < 0, respecting row signs.
    std::vector<T> farkas;
    std::size_t pivots = 0;
};

struct SolveOptions {
    /// Float mode only: pivot / feasibility tolerance.
    double tolerance = 1e-9;
    /// Float mode only: hard cap on pivots before NumericalFailure.
    std::size_t max_pivots = 1'000'000;
    /// Float mode only: when a float optimum fails certification, or an
    /// infeasibility ray does not verify, re-solve in exact arithmetic and
    /// round the result. Off: throw NumericalFailure instead.
    bool exact_fallback = true;
};

/// Solves the problem. Exact mode when T is Rational. Float results are
/// checked against their own residuals (see SolveOptions::exact_fallback).
template <class T>
LpSolution<T> solve(const LpProblem<T>& problem, const SolveOptions& options = {});

/// Solves a float problem in exact arithmetic (the coefficients are exact
/// binary fractions) and rounds the solution to nearest.
LpSolution<double> solve_exact(const LpProblem<double>& problem, const SolveOptions& options = {});

/// Primal feasibility, dual feasibility and complementary slackness, all
/// exactly for rationals and within `tol` (relative) for doubles.
template <class T>
bool certify(const LpProblem<T>& problem, const LpSolution<T>& solution, double tol = 1e-9);

/// b'y plus the bound terms: equals the primal objective for a certified
/// optimum (strong duality).
template <class T>
T dual_objective(const LpProblem<T>& problem, const LpSolution<T>& solution);

/// Checks an infeasibility certificate (problems whose variables have finite
/// lower bounds and no upper bounds).
template <class T>
bool verify_farkas(const LpProblem<T>& problem, const std::vector<T>& y, double tol = 1e-9);

/// CPLEX-style LP text dump. Rationals are written as "p/q".
template <class T>
void write_lp(std::ostream& out, const LpProblem<T>& problem);

}  // namespace tcbubble
