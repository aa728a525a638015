#include "tcbubble/lattice.hpp"

#include <deque>
#include <string>

namespace tcbubble {

template <class T>
TransactionCost<T>::TransactionCost(T lambda) : lambda_(std::move(lambda)) {
    if (!(sign(lambda_) > 0 && lambda_ < T(1))) {
        throw BadConfig("transaction cost must satisfy 0 < lambda < 1, got " + to_string(lambda_));
    }
}

template <class T>
EventTree<T> EventTree<T>::build(const std::vector<std::vector<T>>& stage_prices, const std::vector<Edge<T>>& edges) {
    if (stage_prices.empty() || stage_prices.front().size() != 1) {
        throw InvalidTree("stage 0 must contain exactly one node");
    }
    EventTree tree;
    for (std::size_t t = 0; t < stage_prices.size(); ++t) {
        if (stage_prices[t].empty()) throw InvalidTree("stage " + std::to_string(t) + " has no nodes");
        auto& level = tree.by_stage_.emplace_back();
        for (const auto& p : stage_prices[t]) {
            if (!(sign(p) > 0)) {
                throw InvalidTree("nonpositive price " + to_string(p) + " at node " +
                                  std::to_string(tree.price_.size()));
            }
            level.push_back(tree.price_.size());
            tree.price_.push_back(p);
            tree.stage_.push_back(t);
        }
    }
    const std::size_t n = tree.price_.size();
    tree.horizon_ = stage_prices.size() - 1;
    tree.parent_.assign(n, kNoNode);
    tree.children_.assign(n, {});
    tree.prob_.assign(n, T(0));
    tree.prob_[0] = T(1);

    for (const auto& e : edges) {
        if (e.from >= n || e.to >= n) throw InvalidTree("edge references unknown node");
        if (tree.stage_[e.to] != tree.stage_[e.from] + 1) {
            throw InvalidTree("edge " + std::to_string(e.from) + "->" + std::to_string(e.to) +
                              " does not advance exactly one stage");
        }
        if (tree.parent_[e.to] != kNoNode) throw InvalidTree("node " + std::to_string(e.to) + " has two parents");
        if (!(sign(e.prob) > 0)) {
            throw InvalidTree("edge " + std::to_string(e.from) + "->" + std::to_string(e.to) +
                              " has nonpositive probability");
        }
        tree.parent_[e.to] = e.from;
        tree.children_[e.from].push_back(e.to);
        tree.prob_[e.to] = e.prob;
    }
    for (NodeId v = 1; v < n; ++v) {
        if (tree.parent_[v] == kNoNode) throw InvalidTree("node " + std::to_string(v) + " is not connected");
    }
    for (NodeId v = 0; v < n; ++v) {
        if (tree.children_[v].empty()) {
            if (tree.stage_[v] != tree.horizon_) {
                throw InvalidTree("leaf " + std::to_string(v) + " at stage " + std::to_string(tree.stage_[v]) +
                                  " but horizon is " + std::to_string(tree.horizon_));
            }
            continue;
        }
        T total(0);
        for (NodeId c : tree.children_[v]) total += tree.prob_[c];
        if (!approx_eq(total, T(1), 1e-12)) {
            throw InvalidTree("probabilities out of node " + std::to_string(v) + " sum to " + to_string(total));
        }
    }

    tree.path_prob_.assign(n, T(1));
    tree.leaf_index_.assign(n, kNoNode);
    for (NodeId v = 0; v < n; ++v) {
        if (v != 0) tree.path_prob_[v] = tree.path_prob_[tree.parent_[v]] * tree.prob_[v];
        if (tree.children_[v].empty()) {
            tree.leaf_index_[v] = tree.leaves_.size();
            tree.leaves_.push_back(v);
        }
    }
    return tree;
}

template <class T>
std::vector<NodeId> EventTree<T>::subtree(NodeId n) const {
    std::vector<NodeId> out{n};
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (NodeId c : children_[out[i]]) out.push_back(c);
    }
    return out;
}

template <class T>
bool EventTree<T>::in_subtree(NodeId node, NodeId top) const {
    while (node != kNoNode && stage_[node] > stage_[top]) node = parent_[node];
    return node == top;
}

template <class T>
std::vector<std::vector<T>> EventTree<T>::stage_prices() const {
    std::vector<std::vector<T>> out;
    for (const auto& level : by_stage_) {
        auto& row = out.emplace_back();
        for (NodeId v : level) row.push_back(price_[v]);
    }
    return out;
}

template <class T>
std::vector<Edge<T>> EventTree<T>::edges() const {
    std::vector<Edge<T>> out;
    for (NodeId v = 1; v < size(); ++v) out.push_back({parent_[v], v, prob_[v]});
    return out;
}

template <class T>
EventTree<T> make_chain(const std::vector<T>& prices) {
    std::vector<std::vector<T>> levels;
    std::vector<Edge<T>> edges;
    for (std::size_t i = 0; i < prices.size(); ++i) {
        levels.push_back({prices[i]});
        if (i > 0) edges.push_back({i - 1, i, T(1)});
    }
    return EventTree<T>::build(levels, edges);
}

template <class T>
EventTree<T> make_binomial(const T& s0, const T& up, const T& down, const T& p) {
    return EventTree<T>::build({{s0}, {up, down}}, {{0, 1, p}, {0, 2, T(1) - p}});
}

template <class T>
Strategy<T> Strategy<T>::zero(std::size_t num_nodes, NodeId start) {
    Strategy s;
    s.start = start;
    s.bond.assign(num_nodes, T(0));
    s.shares.assign(num_nodes, T(0));
    s.buys.assign(num_nodes, T(0));
    s.sells.assign(num_nodes, T(0));
    return s;
}

template <class T>
Claim<T> Claim<T>::fundamental(const EventTree<T>& tree) {
    return {std::vector<T>(tree.leaves().size(), T(0)), std::vector<T>(tree.leaves().size(), T(1))};
}

template <class T>
Claim<T> Claim<T>::cash(const EventTree<T>& tree, const T& amount) {
    return {std::vector<T>(tree.leaves().size(), amount), std::vector<T>(tree.leaves().size(), T(0))};
}

template <class T>
std::pair<T, T> bid_ask(const T& price, const TransactionCost<T>& tc) {
    return {tc.bid(price), tc.ask(price)};
}

template <class T>
bool polar_contains(const T& w1, const T& w2, const T& price, const TransactionCost<T>& tc) {
    if (!(sign(w1) > 0 && sign(w2) > 0)) return false;
    return tc.bid(price) * w1 <= w2 && w2 <= tc.ask(price) * w1;
}

template <class T>
T liquidation_value(const T& bond, const T& shares, const T& price, const TransactionCost<T>& tc) {
    if (sign(shares) >= 0) return bond + shares * tc.bid(price);
    return bond + shares * tc.ask(price);
}

template <class T>
bool check_self_financing(const Strategy<T>& s, const EventTree<T>& tree, const TransactionCost<T>& tc, double tol) {
    const std::size_t n = tree.size();
    if (s.bond.size() != n || s.shares.size() != n || s.buys.size() != n || s.sells.size() != n) {
        throw ShapeMismatch("strategy has " + std::to_string(s.bond.size()) + " nodes, tree has " +
                            std::to_string(n));
    }
    if (s.start >= n) throw ShapeMismatch("strategy start node outside the tree");
    for (NodeId v : tree.subtree(s.start)) {
        if (sign(s.buys[v]) < 0 || sign(s.sells[v]) < 0) return false;
        const bool first = v == s.start;
        const T& prev_bond = first ? s.initial_bond : s.bond[tree.parent(v)];
        const T& prev_shares = first ? s.initial_shares : s.shares[tree.parent(v)];
        if (!approx_eq(s.shares[v], T(prev_shares + s.buys[v] - s.sells[v]), tol)) return false;
        const T budget = prev_bond + tc.bid(tree.price(v)) * s.sells[v] - tc.ask(tree.price(v)) * s.buys[v];
        if (!approx_le(s.bond[v], budget, tol)) return false;
    }
    return true;
}

#define TCBUBBLE_INSTANTIATE(T)                                                                              \
    template class TransactionCost<T>;                                                                        \
    template class EventTree<T>;                                                                              \
    template struct Strategy<T>;                                                                              \
    template struct Claim<T>;                                                                                 \
    template EventTree<T> make_chain(const std::vector<T>&);                                                  \
    template EventTree<T> make_binomial(const T&, const T&, const T&, const T&);                              \
    template std::pair<T, T> bid_ask(const T&, const TransactionCost<T>&);                                    \
    template bool polar_contains(const T&, const T&, const T&, const TransactionCost<T>&);                    \
    template T liquidation_value(const T&, const T&, const T&, const TransactionCost<T>&);                    \
    template bool check_self_financing(const Strategy<T>&, const EventTree<T>&, const TransactionCost<T>&,    \
                                       double);

TCBUBBLE_INSTANTIATE(double)
TCBUBBLE_INSTANTIATE(Rational)

#undef TCBUBBLE_INSTANTIATE

}  // namespace tcbubble
