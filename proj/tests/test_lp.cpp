#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "tcbubble/cps.hpp"
#include "tcbubble/io.hpp"
#include "tcbubble/lp.hpp"

using namespace tcbubble;

namespace {

template <class T>
LpProblem<T> two_by_two() {
    // max x + y  s.t.  x + 2y <= 4,  3x + y <= 6,  x, y >= 0
    LpProblem<T> p(2, Sense::Maximize);
    p.objective = {T(1), T(1)};
    p.add_row({{0, T(1)}, {1, T(2)}}, Relation::LessEqual, T(4));
    p.add_row({{0, T(3)}, {1, T(1)}}, Relation::LessEqual, T(6));
    return p;
}

// Brute-force vertex enumeration: every choice of `n` tight rows among the
// constraints and variable bounds, solved by Gaussian elimination, kept when
// feasible. Valid for bounded problems with only <= rows and box bounds.
Rational vertex_oracle(const LpProblem<Rational>& p) {
    const std::size_t n = p.num_vars;
    std::vector<std::vector<Rational>> rows;
    std::vector<Rational> rhs;
    for (const auto& c : p.constraints) {
        rows.push_back(c.coeffs);
        rhs.push_back(c.rhs);
    }
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<Rational> e(n, Rational(0));
        e[j] = 1;
        rows.push_back(e);
        rhs.push_back(*p.bounds[j].upper);
        e[j] = -1;
        rows.push_back(e);
        rhs.push_back(-*p.bounds[j].lower);
    }
    const std::size_t m = rows.size();
    std::optional<Rational> best;
    std::vector<std::size_t> pick(n);
    std::function<void(std::size_t, std::size_t)> choose = [&](std::size_t k, std::size_t from) {
        if (k == n) {
            std::vector<std::vector<Rational>> a(n, std::vector<Rational>(n + 1));
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) a[i][j] = rows[pick[i]][j];
                a[i][n] = rhs[pick[i]];
            }
            for (std::size_t c = 0; c < n; ++c) {
                std::size_t r = c;
                while (r < n && a[r][c] == 0) ++r;
                if (r == n) return;  // singular
                std::swap(a[r], a[c]);
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == c || a[i][c] == 0) continue;
                    const Rational f = a[i][c] / a[c][c];
                    for (std::size_t j = c; j <= n; ++j) a[i][j] -= f * a[c][j];
                }
            }
            std::vector<Rational> x(n);
            for (std::size_t i = 0; i < n; ++i) x[i] = a[i][n] / a[i][i];
            for (std::size_t i = 0; i < m; ++i) {
                Rational act = 0;
                for (std::size_t j = 0; j < n; ++j) act += rows[i][j] * x[j];
                if (act > rhs[i]) return;
            }
            Rational value = 0;
            for (std::size_t j = 0; j < n; ++j) value += p.objective[j] * x[j];
            if (!best || value > *best) best = value;
            return;
        }
        for (std::size_t i = from; i < m; ++i) {
            pick[k] = i;
            choose(k + 1, i + 1);
        }
    };
    choose(0, 0);
    return *best;
}

}  // namespace

TEST(Lp, OneVariable) {
    LpProblem<Rational> p(1);
    p.objective = {Rational(1)};
    p.add_row({{0, Rational(1)}}, Relation::LessEqual, Rational(1));
    auto s = solve(p);
    ASSERT_EQ(s.status, LpStatus::Optimal);
    EXPECT_EQ(s.primal[0], 1);
    EXPECT_EQ(s.objective_value, 1);
    EXPECT_TRUE(certify(p, s));
}

TEST(Lp, ContradictoryBoundsAreInfeasibleWithFarkasRay) {
    LpProblem<Rational> p(1);
    p.objective = {Rational(1)};
    p.add_row({{0, Rational(1)}}, Relation::LessEqual, Rational(-1));
    auto s = solve(p);
    EXPECT_EQ(s.status, LpStatus::Infeasible);
    ASSERT_EQ(s.farkas.size(), 1u);
    EXPECT_TRUE(verify_farkas(p, s.farkas));
    EXPECT_FALSE(verify_farkas(p, {Rational(0)}));
}

TEST(Lp, TwoByTwoVertexExact) {
    auto p = two_by_two<Rational>();
    auto s = solve(p);
    ASSERT_EQ(s.status, LpStatus::Optimal);
    EXPECT_EQ(s.objective_value, Rational(14, 5));
    EXPECT_EQ(s.primal[0], Rational(8, 5));
    EXPECT_EQ(s.primal[1], Rational(6, 5));
    EXPECT_TRUE(certify(p, s));
    EXPECT_EQ(dual_objective(p, s), s.objective_value);
    // duals of the two binding rows: y = (2/5, 1/5)
    EXPECT_EQ(s.dual[0], Rational(2, 5));
    EXPECT_EQ(s.dual[1], Rational(1, 5));
}

TEST(Lp, TwoByTwoVertexFloat) {
    auto p = two_by_two<double>();
    auto s = solve(p);
    ASSERT_EQ(s.status, LpStatus::Optimal);
    EXPECT_NEAR(s.objective_value, 2.8, 1e-12);
    EXPECT_NEAR(s.primal[0], 1.6, 1e-12);
    EXPECT_NEAR(s.primal[1], 1.2, 1e-12);
    EXPECT_TRUE(certify(p, s, 1e-9));
}

TEST(Lp, CertifyRejectsPerturbedPrimal) {
    auto p = two_by_two<double>();
    auto s = solve(p);
    const double tol = 1e-9;
    ASSERT_TRUE(certify(p, s, tol));
    // Both rows are binding at (8/5, 6/5); pushing x up violates them.
    s.primal[0] += 10 * tol * (1 + 4);
    EXPECT_FALSE(certify(p, s, tol));
}

TEST(Lp, EmptyObjectiveZeroSolution) {
    LpProblem<Rational> p(3);
    p.add_row({{0, Rational(1)}, {1, Rational(1)}}, Relation::LessEqual, Rational(5));
    auto s = solve(p);
    ASSERT_EQ(s.status, LpStatus::Optimal);
    EXPECT_EQ(s.objective_value, 0);
    LpSolution<Rational> zero{LpStatus::Optimal, {0, 0, 0}, {0}, Rational(0), {}, 0};
    EXPECT_TRUE(certify(p, zero));
}

TEST(Lp, DetectsUnbounded) {
    LpProblem<Rational> p(2);
    p.objective = {Rational(1), Rational(0)};
    p.add_row({{0, Rational(1)}, {1, Rational(-1)}}, Relation::LessEqual, Rational(1));
    EXPECT_EQ(solve(p).status, LpStatus::Unbounded);
}

TEST(Lp, MinimisationWithEqualityFreeAndBoundedVariables) {
    // min x - y  s.t.  x + y = 3,  x - y >= -5,  x free, -2 <= y <= 4
    LpProblem<Rational> p(2, Sense::Minimize);
    p.objective = {Rational(1), Rational(-1)};
    p.set_free(0);
    p.bounds[1] = {Rational(-2), Rational(4)};
    p.add_row({{0, Rational(1)}, {1, Rational(1)}}, Relation::Equal, Rational(3));
    p.add_row({{0, Rational(1)}, {1, Rational(-1)}}, Relation::GreaterEqual, Rational(-5));
    auto s = solve(p);
    ASSERT_EQ(s.status, LpStatus::Optimal);
    // y = 4 (upper bound), x = -1, objective -5, second row binding too.
    EXPECT_EQ(s.primal[0], -1);
    EXPECT_EQ(s.primal[1], 4);
    EXPECT_EQ(s.objective_value, -5);
    EXPECT_TRUE(certify(p, s));
    EXPECT_EQ(dual_objective(p, s), s.objective_value);
}

TEST(Lp, DeterministicAcrossCalls) {
    auto p = two_by_two<Rational>();
    auto a = solve(p);
    auto b = solve(p);
    EXPECT_EQ(a.primal, b.primal);
    EXPECT_EQ(a.dual, b.dual);
    EXPECT_EQ(a.pivots, b.pivots);
}

TEST(Lp, WriteLpUsesFractions) {
    LpProblem<Rational> p(1);
    p.objective = {Rational(1, 3)};
    p.add_row({{0, Rational(2, 7)}}, Relation::LessEqual, Rational(1));
    std::ostringstream os;
    write_lp(os, p);
    EXPECT_NE(os.str().find("1/3 x0"), std::string::npos);
    EXPECT_NE(os.str().find("2/7 x0 <= 1"), std::string::npos);
}

TEST(LpProperty, MatchesVertexEnumerationOnRandomBoxedProblems) {
    std::mt19937_64 rng(20240611);
    std::uniform_int_distribution<int> coef(-6, 6);
    std::uniform_int_distribution<int> rhs(0, 12);
    for (int trial = 0; trial < 150; ++trial) {
        const std::size_t n = 2 + trial % 2;
        LpProblem<Rational> p(n);
        for (std::size_t j = 0; j < n; ++j) {
            p.objective[j] = Rational(coef(rng), 1 + trial % 3);
            p.objective[j].canonicalize();
            p.bounds[j] = {Rational(-3), Rational(4)};
        }
        for (int i = 0; i < 3; ++i) {
            std::vector<std::pair<std::size_t, Rational>> terms;
            for (std::size_t j = 0; j < n; ++j) terms.emplace_back(j, Rational(coef(rng)));
            p.add_row(terms, Relation::LessEqual, Rational(rhs(rng)));
        }
        auto s = solve(p);
        ASSERT_EQ(s.status, LpStatus::Optimal) << "trial " << trial;
        EXPECT_EQ(s.objective_value, vertex_oracle(p)) << "trial " << trial;
        EXPECT_TRUE(certify(p, s)) << "trial " << trial;
        EXPECT_EQ(dual_objective(p, s), s.objective_value) << "trial " << trial;

        // Positive scaling of the objective scales the value and keeps the
        // returned point optimal.
        auto scaled = p;
        for (auto& c : scaled.objective) c *= Rational(7, 3);
        auto t = solve(scaled);
        EXPECT_EQ(t.objective_value, Rational(7, 3) * s.objective_value);
        Rational at_old(0);
        for (std::size_t j = 0; j < n; ++j) at_old += scaled.objective[j] * s.primal[j];
        EXPECT_EQ(at_old, t.objective_value);

        // Float mode agrees.
        LpProblem<double> f(n);
        for (std::size_t j = 0; j < n; ++j) {
            f.objective[j] = p.objective[j].get_d();
            f.bounds[j] = {-3.0, 4.0};
        }
        for (const auto& c : p.constraints) {
            LinearConstraint<double> row{{}, c.relation, c.rhs.get_d()};
            for (const auto& a : c.coeffs) row.coeffs.push_back(a.get_d());
            f.constraints.push_back(row);
        }
        auto fs = solve(f);
        ASSERT_EQ(fs.status, LpStatus::Optimal);
        EXPECT_NEAR(fs.objective_value, s.objective_value.get_d(), 1e-9);
    }
}

TEST(Lp, FloatDriftFallsBackToExact) {
    // a 5-stage tree whose float density program drifts off its own constraints
    const auto doc = tcbubble::read_tree_file(std::string(TCBUBBLE_TEST_DATA) + "/drifting_float_tree.json");
    const auto exact = tcbubble::tree_from_json<Rational>(doc);
    const auto tree = tcbubble::tree_from_json<double>(doc);
    const tcbubble::TransactionCost<double> tc(0.4);
    tcbubble::CpsOptions strict;
    strict.lp.exact_fallback = false;
    strict.floor_values = true;
    EXPECT_THROW(tcbubble::fundamental_value(tree, tc, 0, tcbubble::Scope::Subtree, strict), tcbubble::NumericalFailure);
    strict.lp.exact_fallback = true;
    const double floored = tcbubble::fundamental_value(tree, tc, 0, tcbubble::Scope::Subtree, strict);
    const double f = tcbubble::fundamental_value(tree, tc, 0);
    const Rational expected = tcbubble::fundamental_value(exact, tcbubble::TransactionCost<Rational>(Rational(2, 5)), 0);
    EXPECT_NEAR(f, tcbubble::to_double(expected), 1e-12 * tcbubble::to_double(expected));
    EXPECT_NEAR(floored, tcbubble::to_double(expected), 1e-9 * tcbubble::to_double(expected));
}
