#pragma once

// Finite event-tree market models with proportional transaction costs.
//
// A tree is a finite filtered probability space: nodes at stage t generate
// the time-t partition, edges carry conditional transition probabilities and
// every node carries a strictly positive asset price. The bond is the
// numeraire (B == 1).

#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "tcbubble/errors.hpp"
#include "tcbubble/numeric.hpp"

namespace tcbubble {

using NodeId = std::size_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

/// Proportional transaction cost 0 < lambda < 1. Buying one share costs
/// (1+lambda)S, selling one yields (1-lambda)S.
template <class T>
class TransactionCost {
public:
    explicit TransactionCost(T lambda);

    const T& lambda() const { return lambda_; }
    T bid(const T& price) const { return (T(1) - lambda_) * price; }
    T ask(const T& price) const { return (T(1) + lambda_) * price; }

private:
    T lambda_;
};

/// Multiplicative band [lower, upper] around the price inside which a shadow
/// price must live. A transaction cost gives [1-lambda, 1+lambda]; the
/// frictionless market is the degenerate band [1, 1].
template <class T>
struct Band {
    T lower;
    T upper;

    static Band frictionless() { return {T(1), T(1)}; }
    static Band of(const TransactionCost<T>& tc) { return {T(1) - tc.lambda(), T(1) + tc.lambda()}; }
};

template <class T>
struct Edge {
    NodeId from;
    NodeId to;
    T prob;
};

template <class T>
class EventTree {
public:
    /// Node ids are assigned stage by stage in the order given by
    /// `stage_prices` (the root is id 0). Throws InvalidTree.
    static EventTree build(const std::vector<std::vector<T>>& stage_prices, const std::vector<Edge<T>>& edges);

    std::size_t size() const { return price_.size(); }
    std::size_t horizon() const { return horizon_; }
    static constexpr NodeId root() { return 0; }

    NodeId parent(NodeId n) const { return parent_[n]; }
    std::span<const NodeId> children(NodeId n) const { return children_[n]; }
    std::size_t stage(NodeId n) const { return stage_[n]; }
    const T& price(NodeId n) const { return price_[n]; }
    /// Conditional probability of reaching n from its parent (1 at the root).
    const T& prob(NodeId n) const { return prob_[n]; }
    /// Unconditional probability P(n).
    const T& path_prob(NodeId n) const { return path_prob_[n]; }
    bool is_leaf(NodeId n) const { return children_[n].empty(); }

    const std::vector<NodeId>& leaves() const { return leaves_; }
    /// Position of n in leaves(), or kNoNode for internal nodes.
    std::size_t leaf_index(NodeId n) const { return leaf_index_[n]; }
    const std::vector<NodeId>& nodes_at_stage(std::size_t t) const { return by_stage_[t]; }

    /// Nodes of the subtree rooted at n in breadth-first order (n first).
    std::vector<NodeId> subtree(NodeId n) const;
    bool in_subtree(NodeId node, NodeId top) const;

    std::vector<std::vector<T>> stage_prices() const;
    std::vector<Edge<T>> edges() const;

    template <class U>
    EventTree<U> convert() const {
        std::vector<std::vector<U>> prices;
        for (const auto& level : stage_prices()) {
            auto& out = prices.emplace_back();
            for (const auto& p : level) out.push_back(convert_scalar<U>(p));
        }
        std::vector<Edge<U>> out_edges;
        for (const auto& e : edges()) out_edges.push_back({e.from, e.to, convert_scalar<U>(e.prob)});
        return EventTree<U>::build(prices, out_edges);
    }

private:
    EventTree() = default;

    std::size_t horizon_ = 0;
    std::vector<NodeId> parent_;
    std::vector<std::vector<NodeId>> children_;
    std::vector<std::size_t> stage_;
    std::vector<T> price_;
    std::vector<T> prob_;
    std::vector<T> path_prob_;
    std::vector<NodeId> leaves_;
    std::vector<std::size_t> leaf_index_;
    std::vector<std::vector<NodeId>> by_stage_;
};

/// Deterministic chain S_0 -> S_1 -> ... with probability one edges.
template <class T>
EventTree<T> make_chain(const std::vector<T>& prices);

/// One-period binomial tree s0 -> (up with prob p, down with prob 1-p).
template <class T>
EventTree<T> make_binomial(const T& s0, const T& up, const T& down, const T& p);

/// Self-financing strategy on the subtree rooted at `start`.
///
/// `initial_bond`/`initial_shares` is the position held just before trading
/// at `start`. For every node n of the subtree, `buys[n]`/`sells[n]` are the
/// units traded on entering n (at price S(n)) and `bond[n]`/`shares[n]` the
/// holdings carried out of n. Entries outside the subtree are ignored.
template <class T>
struct Strategy {
    NodeId start = 0;
    T initial_bond{};
    T initial_shares{};
    std::vector<T> bond;
    std::vector<T> shares;
    std::vector<T> buys;
    std::vector<T> sells;

    static Strategy zero(std::size_t num_nodes, NodeId start = 0);
};

/// Terminal position X_T = (X^1_T, X^2_T), one entry per leaf in the order of
/// EventTree::leaves().
template <class T>
struct Claim {
    std::vector<T> bond_leg;
    std::vector<T> asset_leg;

    /// The position (0, 1): one share and no cash.
    static Claim fundamental(const EventTree<T>& tree);
    static Claim cash(const EventTree<T>& tree, const T& amount);
};

template <class T>
std::pair<T, T> bid_ask(const T& price, const TransactionCost<T>& tc);

/// Membership of w in the polar of the negative solvency cone with the origin
/// removed: w1 > 0, w2 > 0 and (1-lambda)S <= w2/w1 <= (1+lambda)S.
template <class T>
bool polar_contains(const T& w1, const T& w2, const T& price, const TransactionCost<T>& tc);

/// phi1 + (phi2)^+ (1-lambda)S - (phi2)^- (1+lambda)S.
template <class T>
T liquidation_value(const T& bond, const T& shares, const T& price, const TransactionCost<T>& tc);

/// Checks the share ledger (equality) and the cash ledger (inequality, so
/// cash may be thrown away) at every node of the strategy's subtree. Trades
/// entering node n execute at S(n). Throws ShapeMismatch.
template <class T>
bool check_self_financing(const Strategy<T>& strategy, const EventTree<T>& tree, const TransactionCost<T>& tc,
                          double tol = 1e-9);

}  // namespace tcbubble
