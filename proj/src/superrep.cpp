#include "tcbubble/superrep.hpp"

#include <algorithm>

namespace tcbubble {

namespace {

template <class T>
void check_claim(const EventTree<T>& tree, const Claim<T>& claim) {
    const std::size_t n = tree.leaves().size();
    if (claim.bond_leg.size() != n || claim.asset_leg.size() != n) {
        throw ShapeMismatch("claim has " + std::to_string(claim.bond_leg.size()) + "/" +
                            std::to_string(claim.asset_leg.size()) + " entries, tree has " + std::to_string(n) +
                            " leaves");
    }
}

// Float LPs may return -1e-17 for a quantity bounded below by zero.
template <class T>
T nonnegative(const T& x) {
    if constexpr (is_exact_v<T>) return x;
    else return std::max(x, 0.0);
}

}  // namespace

template <class T>
bool dominates(const Strategy<T>& s, const EventTree<T>& tree, const Claim<T>& claim, const TransactionCost<T>& tc,
               double tol) {
    check_claim(tree, claim);
    for (NodeId v : tree.subtree(s.start)) {
        if (!tree.is_leaf(v)) continue;
        const std::size_t i = tree.leaf_index(v);
        const T surplus = liquidation_value(T(s.bond[v] - claim.bond_leg[i]), T(s.shares[v] - claim.asset_leg[i]),
                                            tree.price(v), tc);
        if (!approx_le<T>(T(0), surplus, tol)) return false;
    }
    return true;
}

template <class T>
T admissibility_bound(const Strategy<T>& s, const EventTree<T>& tree, const TransactionCost<T>& tc,
                      AdmissibilityMode mode) {
    T worst(0);
    auto visit = [&](const T& bond, const T& shares, const T& price) {
        T deficit = -liquidation_value(bond, shares, price, tc);
        if (mode == AdmissibilityMode::NumeraireFree) deficit /= T(1) + price;
        worst = std::max(worst, deficit);
    };
    visit(s.initial_bond, s.initial_shares, tree.price(s.start));
    for (NodeId v : tree.subtree(s.start)) visit(s.bond[v], s.shares[v], tree.price(v));
    return worst;
}

template <class T>
SuperRepResult<T> superrep_price(const EventTree<T>& tree, const Claim<T>& claim, const TransactionCost<T>& tc,
                                 NodeId start, const SuperRepOptions& options) {
    check_claim(tree, claim);
    if (start >= tree.size()) throw ShapeMismatch("start node outside the tree");
    const auto nodes = tree.subtree(start);
    std::vector<std::size_t> local(tree.size(), kNoNode);
    for (std::size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = i;
    // x0 = initial cash; per node: cash, buy, sell.
    auto cash = [&](NodeId v) { return 1 + 3 * local[v]; };
    auto buy = [&](NodeId v) { return 2 + 3 * local[v]; };
    auto sell = [&](NodeId v) { return 3 + 3 * local[v]; };

    LpProblem<T> lp(1 + 3 * nodes.size(), Sense::Minimize);
    lp.objective[0] = T(1);
    lp.set_free(0);
    for (NodeId v : nodes) {
        lp.set_free(cash(v));
        const std::size_t prev = v == start ? 0 : cash(tree.parent(v));
        lp.add_row({{cash(v), T(1)}, {prev, T(-1)}, {buy(v), tc.ask(tree.price(v))}, {sell(v), -tc.bid(tree.price(v))}},
                   Relation::LessEqual, T(0));
    }
    for (NodeId v : nodes) {
        if (!tree.is_leaf(v)) continue;
        const std::size_t i = tree.leaf_index(v);
        // shares at v: sum of trades along the path from start
        std::vector<std::pair<std::size_t, T>> shares;
        for (NodeId w = v;; w = tree.parent(w)) {
            shares.emplace_back(buy(w), T(1));
            shares.emplace_back(sell(w), T(-1));
            if (w == start) break;
        }
        if (options.terminal == TerminalCondition::Equality) {
            lp.add_row({{cash(v), T(1)}}, Relation::Equal, claim.bond_leg[i]);
            lp.add_row(shares, Relation::Equal, claim.asset_leg[i]);
            continue;
        }
        for (const T& p : {tc.bid(tree.price(v)), tc.ask(tree.price(v))}) {
            auto terms = shares;
            for (auto& [j, a] : terms) a *= p;
            terms.emplace_back(cash(v), T(1));
            lp.add_row(terms, Relation::GreaterEqual, T(claim.bond_leg[i] + p * claim.asset_leg[i]));
        }
    }

    auto assemble = [&](const LpSolution<T>& sol) {
        if (sol.status == LpStatus::Unbounded) {
            throw NoCps("super-replication is unbounded below: no price system below node " + std::to_string(start));
        }
        if (sol.status == LpStatus::Infeasible) {
            std::vector<std::string> c;
            for (const auto& y : sol.farkas) c.push_back(to_string(y));
            throw NoCps("no dominating strategy below node " + std::to_string(start), std::move(c));
        }
        SuperRepResult<T> r;
        r.price = sol.objective_value;
        r.mode = options.mode;
        r.start_node = start;
        auto& s = r.strategy = Strategy<T>::zero(tree.size(), start);
        s.initial_bond = sol.primal[0];
        for (NodeId v : nodes) {
            s.bond[v] = sol.primal[cash(v)];
            s.buys[v] = nonnegative(sol.primal[buy(v)]);
            s.sells[v] = nonnegative(sol.primal[sell(v)]);
            const T before = v == start ? s.initial_shares : s.shares[tree.parent(v)];
            s.shares[v] = before + s.buys[v] - s.sells[v];
        }
        r.admissibility_bound = admissibility_bound(s, tree, tc, options.mode);
        r.certified = certify(lp, sol, options.tolerance) && check_self_financing(s, tree, tc, options.tolerance) &&
                      dominates(s, tree, claim, tc, options.tolerance);
        return r;
    };
    auto r = assemble(solve(lp, options.lp));
    if constexpr (!is_exact_v<T>) {
        // a drifted float basis can pass the solver's own check yet miss ours
        if (!r.certified && options.lp.exact_fallback) r = assemble(solve_exact(lp, options.lp));
    }
    return r;
}

template <class T>
ConvexPiecewiseLinear<T> ConvexPiecewiseLinear<T>::envelope(std::vector<Piece> pieces) {
    std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) {
        return a.slope < b.slope || (a.slope == b.slope && a.intercept < b.intercept);
    });
    ConvexPiecewiseLinear out;
    auto& hull = out.pieces_;
    for (std::size_t k = 0; k < pieces.size(); ++k) {
        // equal slopes: keep the highest (last after sorting)
        if (k + 1 < pieces.size() && pieces[k + 1].slope == pieces[k].slope) continue;
        const Piece& p = pieces[k];
        while (hull.size() >= 2) {
            const Piece& a = hull[hull.size() - 2];
            const Piece& b = hull.back();
            // b is useless when a and p cross at or left of where a and b cross:
            // (a.c - p.c)/(p.s - a.s) <= (a.c - b.c)/(b.s - a.s)
            const T lhs = (a.intercept - p.intercept) * (b.slope - a.slope);
            const T rhs = (a.intercept - b.intercept) * (p.slope - a.slope);
            if (lhs <= rhs) hull.pop_back();
            else break;
        }
        hull.push_back(p);
    }
    return out;
}

template <class T>
std::vector<std::pair<T, T>> ConvexPiecewiseLinear<T>::vertices() const {
    std::vector<std::pair<T, T>> out;
    for (std::size_t k = 1; k < pieces_.size(); ++k) {
        const Piece& a = pieces_[k - 1];
        const Piece& b = pieces_[k];
        const T h = (a.intercept - b.intercept) / (b.slope - a.slope);
        out.emplace_back(h, T(a.slope * h + a.intercept));
    }
    return out;
}

template <class T>
T ConvexPiecewiseLinear<T>::operator()(const T& h) const {
    if (pieces_.empty()) throw NoCps("value function is -infinity");
    T best = pieces_.front().slope * h + pieces_.front().intercept;
    for (const Piece& p : pieces_) best = std::max(best, T(p.slope * h + p.intercept));
    return best;
}

template <class T>
ConvexPiecewiseLinear<T> ConvexPiecewiseLinear<T>::max(const ConvexPiecewiseLinear& a, const ConvexPiecewiseLinear& b) {
    if (a.is_minus_infinity()) return b;
    if (b.is_minus_infinity()) return a;
    auto all = a.pieces_;
    all.insert(all.end(), b.pieces_.begin(), b.pieces_.end());
    return envelope(std::move(all));
}

template <class T>
ConvexPiecewiseLinear<T> ConvexPiecewiseLinear<T>::trade_closure(const T& bid, const T& ask) const {
    if (is_minus_infinity()) return {};
    const T lo = -ask, hi = -bid;
    if (pieces_.back().slope < lo || pieces_.front().slope > hi) return {};
    const auto vs = vertices();
    std::vector<Piece> kept;
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
        const Piece& p = pieces_[k];
        if (p.slope < lo) {
            // the subgradient crosses lo at the right end of this piece
            if (k + 1 < pieces_.size() && pieces_[k + 1].slope >= lo) {
                const auto& [h, v] = vs[k];
                kept.push_back({lo, T(v - lo * h)});
            }
        } else if (p.slope > hi) {
            if (k > 0 && pieces_[k - 1].slope <= hi) {
                const auto& [h, v] = vs[k - 1];
                kept.push_back({hi, T(v - hi * h)});
            }
        } else {
            kept.push_back(p);
        }
    }
    return envelope(std::move(kept));
}

template <class T>
BackwardResult<T> backward_superhedge(const EventTree<T>& tree, const Claim<T>& claim, const TransactionCost<T>& tc) {
    check_claim(tree, claim);
    using F = ConvexPiecewiseLinear<T>;
    BackwardResult<T> r;
    r.value.resize(tree.size());
    r.price.resize(tree.size());
    for (NodeId v = tree.size(); v-- > 0;) {
        const auto [bid, ask] = bid_ask(tree.price(v), tc);
        F after;  // cash needed after trading at v, by shares held
        if (tree.is_leaf(v)) {
            const std::size_t i = tree.leaf_index(v);
            const T& x1 = claim.bond_leg[i];
            const T& x2 = claim.asset_leg[i];
            // cash + liquidation of (h - x2) must cover x1
            after = F::envelope({{-ask, T(x1 + ask * x2)}, {-bid, T(x1 + bid * x2)}});
        } else {
            for (NodeId c : tree.children(v)) after = F::max(after, r.value[c]);
        }
        r.value[v] = after.trade_closure(bid, ask);
        if (!r.value[v].is_minus_infinity()) r.price[v] = r.value[v](T(0));
    }
    return r;
}

template <class T>
T duality_gap(const EventTree<T>& tree, const Claim<T>& claim, const TransactionCost<T>& tc, NodeId start,
              const SuperRepOptions& options) {
    CpsOptions co;
    co.lp = options.lp;
    return superrep_price(tree, claim, tc, start, options).price - dual_claim_value(tree, claim, tc, start, co);
}

#define TCBUBBLE_INSTANTIATE(T)                                                                                   \
    template class ConvexPiecewiseLinear<T>;                                                                       \
    template SuperRepResult<T> superrep_price(const EventTree<T>&, const Claim<T>&, const TransactionCost<T>&,     \
                                              NodeId, const SuperRepOptions&);                                     \
    template bool dominates(const Strategy<T>&, const EventTree<T>&, const Claim<T>&, const TransactionCost<T>&,   \
                            double);                                                                               \
    template T admissibility_bound(const Strategy<T>&, const EventTree<T>&, const TransactionCost<T>&,             \
                                   AdmissibilityMode);                                                             \
    template BackwardResult<T> backward_superhedge(const EventTree<T>&, const Claim<T>&, const TransactionCost<T>&); \
    template T duality_gap(const EventTree<T>&, const Claim<T>&, const TransactionCost<T>&, NodeId,                \
                           const SuperRepOptions&);

TCBUBBLE_INSTANTIATE(double)
TCBUBBLE_INSTANTIATE(Rational)

#undef TCBUBBLE_INSTANTIATE

}  // namespace tcbubble
