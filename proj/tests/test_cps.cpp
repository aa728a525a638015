#include <gtest/gtest.h>

#include "support.hpp"
#include "tcbubble/cps.hpp"

using namespace tcbubble;
using support::q;

namespace {

TransactionCost<Rational> cost(long a, long b) { return TransactionCost<Rational>(q(a, b)); }

EventTree<Rational> binomial() { return make_binomial<Rational>(100, 120, 80, q(1, 2)); }

EventTree<Rational> falling_chain() { return make_chain<Rational>({q(1), q(1, 2)}); }

}  // namespace

TEST(Cps, MartingaleTreeHasNoBubbles) {
    const auto t = make_binomial<Rational>(100, 110, 90, q(1, 2));
    const auto tc = cost(1, 100);
    const auto r = bubble_report(t, tc);
    ASSERT_TRUE(r.frictionless_fundamental.has_value());
    for (NodeId v = 0; v < t.size(); ++v) {
        EXPECT_EQ((*r.frictionless_fundamental)[v], t.price(v));
        EXPECT_EQ((*r.frictionless_bubble)[v], 0);
        EXPECT_EQ(r.fundamental[v], tc.ask(t.price(v)));
        EXPECT_EQ(r.bubble[v], 0);
        EXPECT_EQ((*r.delta)[v], 0);
    }
    // P is a martingale measure, so (P, S) is a price system with S~ = S.
    const auto cps = embed_emm(t, {q(1, 2), q(1, 2)}, Rational(1), tc);
    EXPECT_TRUE(verify_cps(t, tc, cps));
    EXPECT_EQ(cps.shadow, (std::vector<Rational>{100, 110, 90}));
}

TEST(Cps, DisjointSpreadsHaveNoPriceSystem) {
    const auto t = falling_chain();
    try {
        find_cps(t, cost(1, 5));
        FAIL() << "expected NoCps";
    } catch (const NoCps& e) {
        EXPECT_FALSE(e.certificate.empty());
    }
    EXPECT_THROW(fundamental_value(t, cost(1, 5), 0), NoCps);
    EXPECT_THROW(bubble_report(t, cost(1, 5)), NoCps);
}

TEST(Cps, TouchingSpreadsOnlyAdmitTheClosure) {
    // lambda = 1/3: root spread [2/3, 4/3], leaf spread [1/3, 2/3]. They meet
    // in a single point, which a chain can use since its only child carries
    // all the mass.
    const auto t = falling_chain();
    const auto cps = find_cps(t, cost(1, 3));
    EXPECT_EQ(cps.shadow[0], q(2, 3));
    EXPECT_EQ(fundamental_value(t, cost(1, 3), 0), q(2, 3));
}

TEST(Cps, FallingChainFundamentalValue) {
    const auto t = falling_chain();
    const auto tc = cost(1, 2);
    EXPECT_EQ(fundamental_value(t, tc, 0), q(3, 4));
    const auto r = bubble_report(t, tc);
    EXPECT_EQ(r.bubble[0], q(3, 4));
    EXPECT_EQ(r.bubble[1], 0);
    EXPECT_FALSE(r.frictionless_fundamental.has_value());
}

TEST(Cps, ValueInsideSpreadIsAttained) {
    const auto t = binomial();
    const auto tc = cost(1, 100);
    const auto cps = cps_with_value(t, tc, 0, Rational(101));
    EXPECT_EQ(cps.shadow[0], 101);
    EXPECT_TRUE(verify_cps(t, tc, cps));
    EXPECT_THROW(cps_with_value(t, tc, 0, Rational(102)), BandViolation);
    EXPECT_THROW(cps_with_value(t, tc, 0, Rational(98)), BandViolation);
}

TEST(Cps, FrictionlessBinomial) {
    const auto t = binomial();
    EXPECT_TRUE(has_emm(t));
    EXPECT_EQ(frictionless_fundamental(t, 0), 100);
    const auto q_emm = find_emm(t);
    EXPECT_EQ(q_emm, (std::vector<Rational>{q(1, 2), q(1, 2)}));
}

TEST(Cps, EmbeddingOutsideSpreadFails) {
    const auto t = binomial();
    const auto tc = cost(1, 100);
    EXPECT_THROW(embed_emm(t, {q(1, 2), q(1, 2)}, Rational(1 + 2 * tc.lambda()), tc), BandViolation);
    EXPECT_NO_THROW(embed_emm(t, {q(1, 2), q(1, 2)}, Rational(1 + tc.lambda()), tc));
    EXPECT_THROW(embed_emm(t, {q(1, 4), q(3, 4)}, Rational(1), tc), NotMartingale);
}

TEST(Cps, NoEmmWhenPriceIsAnEndpoint) {
    // 100 -> {100, 80}: only the degenerate measure on the up node is a martingale.
    const auto t = make_binomial<Rational>(100, 100, 80, q(1, 2));
    EXPECT_FALSE(has_emm(t));
    EXPECT_THROW(frictionless_fundamental(t, 0), NoEmm);
    EXPECT_THROW(find_emm(t), NoEmm);
    const auto tc = cost(1, 10);
    EXPECT_NO_THROW(find_cps(t, tc));
    EXPECT_EQ(fundamental_value(t, tc, 0), 110);
    EXPECT_FALSE(bubble_report(t, tc).frictionless_fundamental.has_value());
}

TEST(Cps, DensityFloorConvergesByDecade) {
    // The closure optimum puts zero mass on the down node; the float floor
    // perturbs it by O(epsilon).
    const auto t = make_binomial<double>(100, 100, 80, 0.5);
    const TransactionCost<double> tc(0.1);
    double previous = 1e300;
    for (double eps : {1e-4, 1e-5, 1e-6, 1e-7, 1e-8}) {
        CpsOptions o;
        o.density_floor = eps;
        o.floor_values = true;
        const double err = 110.0 - fundamental_value(t, tc, 0, Scope::Subtree, o);
        EXPECT_GE(err, -1e-9);
        EXPECT_LE(err, 100 * eps) << eps;
        EXPECT_LE(err, previous + 1e-12);
        previous = err;
    }
    EXPECT_NEAR(fundamental_value(t, tc, 0), 110.0, 1e-12);
}

TEST(Cps, RoundTripThroughMeasure) {
    const auto t = binomial();
    const auto tc = cost(1, 100);
    const auto cps = find_cps(t, tc);
    const auto back = ConsistentPriceSystem<Rational>::from_measure(t, cps.q, cps.shadow);
    EXPECT_EQ(back.z1, cps.z1);
    EXPECT_EQ(back.z2, cps.z2);
    const auto again = ConsistentPriceSystem<Rational>::from_z(t, back.z1, back.z2);
    EXPECT_EQ(again.q, cps.q);
    EXPECT_EQ(again.shadow, cps.shadow);
}

TEST(Cps, VerifyRejectsBrokenSystems) {
    const auto t = binomial();
    const auto tc = cost(1, 100);
    auto cps = find_cps(t, tc);
    ASSERT_TRUE(verify_cps(t, tc, cps));
    auto off_band = cps;
    off_band.shadow[1] = 200;
    off_band.z2[1] = 200 * off_band.z1[1];
    EXPECT_FALSE(verify_cps(t, tc, off_band));
    auto not_mg = cps;
    not_mg.z1[1] *= 2;
    EXPECT_FALSE(verify_cps(t, tc, not_mg));
    auto short_q = cps;
    short_q.q.pop_back();
    EXPECT_THROW(verify_cps(t, tc, short_q), ShapeMismatch);
}

TEST(Cps, FundamentalClaimValueMatchesFundamentalValue) {
    const auto t = binomial();
    const auto tc = cost(1, 100);
    EXPECT_EQ(dual_claim_value(t, Claim<Rational>::fundamental(t), tc, 0), fundamental_value(t, tc, 0));
    EXPECT_EQ(dual_claim_value(t, Claim<Rational>::cash(t, Rational(7)), tc, 0), 7);
}

TEST(Cps, FullTreeScopeCanBeSmallerThanSubtree) {
    // Rising chain 1 -> 2 at lambda = 1/2. On its own the leaf is worth its
    // ask 3; inside the whole tree the shadow at the root caps it at 3/2.
    const auto t = make_chain<Rational>({q(1), q(2)});
    const auto tc = cost(1, 2);
    EXPECT_EQ(fundamental_value(t, tc, 1, Scope::Subtree), 3);
    EXPECT_EQ(fundamental_value(t, tc, 1, Scope::FullTree), q(3, 2));
}

TEST(Sweep, FallingChain) {
    const auto t = falling_chain();
    const auto res = lambda_sweep<Rational>(t, {q(1, 5), q(2, 5), q(1, 2), q(3, 5)});
    ASSERT_EQ(res.entries.size(), 4u);
    EXPECT_FALSE(res.entries[0].cps_exists);
    EXPECT_EQ(*res.entries[1].fundamental_root, q(7, 10));
    EXPECT_EQ(*res.entries[1].bubble_root, q(7, 10));
    EXPECT_EQ(*res.entries[2].fundamental_root, q(3, 4));
    EXPECT_EQ(*res.entries[2].bubble_root, q(3, 4));
    EXPECT_EQ(*res.entries[3].fundamental_root, q(4, 5));
    EXPECT_EQ(*res.entries[3].bubble_root, q(4, 5));
    EXPECT_EQ(res.monotonicity_violations, 0u);
}

TEST(Sweep, RejectsBadLists) {
    const auto t = falling_chain();
    EXPECT_THROW(lambda_sweep<Rational>(t, {}), BadConfig);
    EXPECT_THROW(lambda_sweep<Rational>(t, {q(1, 2), q(1, 5)}), BadConfig);
    EXPECT_THROW(lambda_sweep<Rational>(t, {q(1, 2), Rational(1)}), BadConfig);
}

TEST(CpsProperty, MatchesIntervalOracleOnRandomTrees) {
    std::mt19937_64 rng(314159);
    const std::vector<Rational> lambdas{q(1, 20), q(1, 5), q(2, 5)};
    int with_cps = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto t = support::random_tree(rng, {3, 3});
        const Rational lambda = lambdas[trial % lambdas.size()];
        const TransactionCost<Rational> tc(lambda);
        const auto strict = support::shadow_intervals(t, 1 - lambda, 1 + lambda, true);
        const bool exists = !support::is_empty(strict[0]);
        bool found = true;
        try {
            const auto cps = find_cps(t, tc);
            EXPECT_TRUE(verify_cps(t, tc, cps)) << trial;
        } catch (const NoCps&) {
            found = false;
        }
        ASSERT_EQ(found, exists) << "trial " << trial;
        if (!exists) continue;
        ++with_cps;
        const auto closed = support::shadow_intervals(t, 1 - lambda, 1 + lambda, false);
        const auto tf = t.convert<double>();
        const TransactionCost<double> tcf(lambda.get_d());
        for (NodeId v = 0; v < t.size(); ++v) {
            const Rational f = fundamental_value(t, tc, v);
            EXPECT_EQ(f, closed[v].hi) << "trial " << trial << " node " << v;
            EXPECT_NEAR(fundamental_value(tf, tcf, v), f.get_d(), 1e-5 * (1 + f.get_d()));
        }
    }
    EXPECT_GT(with_cps, 20);
}

TEST(CpsProperty, LambdaMonotonicity) {
    std::mt19937_64 rng(2718);
    std::vector<Rational> grid;
    for (int k = 1; k < 20; ++k) grid.push_back(q(k, 20));
    for (int trial = 0; trial < 20; ++trial) {
        const auto t = support::random_tree(rng, {3, 2});
        const auto res = lambda_sweep(t, grid);
        EXPECT_EQ(res.monotonicity_violations, 0u) << trial;
        // F = (1+lambda) times a lambda-free quantity, so it rises with lambda.
        std::optional<Rational> last;
        for (const auto& e : res.entries) {
            if (!e.cps_exists) continue;
            EXPECT_GE(*e.bubble_root, 0);
            if (last) EXPECT_GE(*e.fundamental_root, *last);
            last = e.fundamental_root;
        }
    }
}

TEST(CpsProperty, MartingaleTreesCarryNoBubble) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        const auto t = support::random_martingale_tree(rng, {3, 3});
        const auto tc = cost(1, 20);
        const auto r = bubble_report(t, tc);
        ASSERT_TRUE(r.frictionless_fundamental.has_value());
        for (NodeId v = 0; v < t.size(); ++v) {
            EXPECT_EQ((*r.frictionless_fundamental)[v], t.price(v));
            EXPECT_EQ(r.bubble[v], 0);
        }
    }
}

TEST(Cps, AskShadowOnFallingTreeIsNotConsistent) {
    // the ask price is in the band but (1+lambda)S loses mass along the chain
    const auto t = make_chain<Rational>({q(1), q(1, 2)});
    const TransactionCost<Rational> tc(q(1, 2));
    std::vector<Rational> shadow;
    for (NodeId v = 0; v < t.size(); ++v) shadow.push_back(tc.ask(t.price(v)));
    EXPECT_FALSE(verify_cps(t, tc, ConsistentPriceSystem<Rational>::from_measure(t, {q(1)}, shadow)));
}

TEST(Cps, BidScaledEmmIsConsistent) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 10; ++i) {
        const auto t = support::random_martingale_tree(rng);
        const TransactionCost<Rational> tc(q(1, 10));
        std::vector<Rational> p;
        for (NodeId leaf : t.leaves()) p.push_back(t.path_prob(leaf));
        const auto cps = embed_emm(t, p, Rational(1 - tc.lambda()), tc);
        EXPECT_TRUE(verify_cps(t, tc, cps));
        EXPECT_EQ(cps.shadow[0], Rational((1 - tc.lambda()) * t.price(0)));
    }
}
