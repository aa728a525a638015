#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <algorithm>
#include <optional>
#include <random>
#include <vector>

#include "tcbubble/lattice.hpp"

namespace support {

using tcbubble::EventTree;
using tcbubble::NodeId;
using tcbubble::Rational;

inline Rational q(long a, long b = 1) {
    Rational r(a, b);
    r.canonicalize();
    return r;
}

struct TreeShape {
    std::size_t stages = 3;
    int max_branch = 3;
};

// Random probabilities k_i / sum(k) with k_i in 1..4.
inline std::vector<Rational> random_probs(std::mt19937_64& rng, int n) {
    std::uniform_int_distribution<int> w(1, 4);
    std::vector<long> k(n);
    long total = 0;
    for (auto& x : k) total += (x = w(rng));
    std::vector<Rational> p;
    for (long x : k) p.push_back(q(x, total));
    return p;
}

inline EventTree<Rational> random_tree(std::mt19937_64& rng, const TreeShape& shape = {}) {
    std::uniform_int_distribution<int> branch(1, shape.max_branch);
    std::uniform_int_distribution<int> price(20, 200);
    std::uniform_int_distribution<int> move(-35, 35);
    std::vector<std::vector<Rational>> levels{{q(price(rng), 2)}};
    std::vector<tcbubble::Edge<Rational>> edges;
    NodeId next = 1, first = 0;
    for (std::size_t t = 1; t < shape.stages; ++t) {
        std::vector<Rational> level;
        for (std::size_t i = 0; i < levels.back().size(); ++i) {
            const int b = branch(rng);
            const auto p = random_probs(rng, b);
            for (int c = 0; c < b; ++c) {
                level.push_back(levels.back()[i] * q(100 + move(rng), 100));
                edges.push_back({first + i, next++, p[c]});
            }
        }
        first += levels.back().size();
        levels.push_back(std::move(level));
    }
    return EventTree<Rational>::build(levels, edges);
}

// Every internal node has P-mean of its children equal to its own price, so
// P itself is an equivalent martingale measure.
inline EventTree<Rational> random_martingale_tree(std::mt19937_64& rng, const TreeShape& shape = {}) {
    std::uniform_int_distribution<int> branch(1, shape.max_branch);
    std::uniform_int_distribution<int> offset(-40, 40);
    std::vector<std::vector<Rational>> levels{{q(std::uniform_int_distribution<int>(50, 150)(rng))}};
    std::vector<tcbubble::Edge<Rational>> edges;
    NodeId next = 1, first = 0;
    for (std::size_t t = 1; t < shape.stages; ++t) {
        std::vector<Rational> level;
        for (std::size_t i = 0; i < levels.back().size(); ++i) {
            const Rational s = levels.back()[i];
            const int b = branch(rng);
            const auto p = random_probs(rng, b);
            std::vector<Rational> kids;
            while (true) {
                kids.clear();
                Rational drift(0);
                for (int c = 0; c + 1 < b; ++c) {
                    const Rational d = s * q(offset(rng), 100);
                    kids.push_back(s + d);
                    drift += p[c] * d;
                }
                const Rational last = s - drift / p[b - 1];
                if (last > 0 && std::all_of(kids.begin(), kids.end(), [](const Rational& x) { return x > 0; })) {
                    kids.push_back(last);
                    break;
                }
            }
            for (int c = 0; c < b; ++c) {
                level.push_back(kids[c]);
                edges.push_back({first + i, next++, p[c]});
            }
        }
        first += levels.back().size();
        levels.push_back(std::move(level));
    }
    return EventTree<Rational>::build(levels, edges);
}

// Set of values a shadow martingale can take at a node while staying in the
// band [lo*S, hi*S] on the node's subtree. Endpoints may be open when the
// density must stay strictly positive.
struct Interval {
    Rational lo, hi;
    bool lo_open = false, hi_open = false;
    bool empty = false;
};

inline bool is_empty(const Interval& i) {
    return i.empty || i.lo > i.hi || (i.lo == i.hi && (i.lo_open || i.hi_open));
}

inline Interval intersect(Interval a, const Interval& b) {
    if (is_empty(a) || is_empty(b)) return {0, 0, false, false, true};
    if (b.lo > a.lo || (b.lo == a.lo && b.lo_open)) {
        a.lo = b.lo;
        a.lo_open = b.lo_open;
    }
    if (b.hi < a.hi || (b.hi == a.hi && b.hi_open)) {
        a.hi = b.hi;
        a.hi_open = b.hi_open;
    }
    a.empty = is_empty(a);
    return a;
}

// strict = true: all children carry positive weight (equivalent systems).
// strict = false: weights may vanish (closure of the polytope).
inline std::vector<Interval> shadow_intervals(const EventTree<Rational>& tree, const Rational& lower,
                                              const Rational& upper, bool strict) {
    std::vector<Interval> out(tree.size());
    for (NodeId v = tree.size(); v-- > 0;) {
        const Interval band{lower * tree.price(v), upper * tree.price(v)};
        if (tree.is_leaf(v)) {
            out[v] = band;
            continue;
        }
        Interval hull;
        bool first = true;
        for (NodeId c : tree.children(v)) {
            const Interval& k = out[c];
            if (is_empty(k)) {
                if (strict) {
                    hull.empty = true;
                    break;
                }
                continue;
            }
            if (first) {
                hull = k;
                first = false;
                continue;
            }
            if (strict) {
                // A positive mix reaches an endpoint only if every child sits there.
                if (k.lo < hull.lo) {
                    hull.lo = k.lo;
                    hull.lo_open = true;
                } else if (k.lo > hull.lo) {
                    hull.lo_open = true;
                } else {
                    hull.lo_open = hull.lo_open || k.lo_open;
                }
                if (k.hi > hull.hi) {
                    hull.hi = k.hi;
                    hull.hi_open = true;
                } else if (k.hi < hull.hi) {
                    hull.hi_open = true;
                } else {
                    hull.hi_open = hull.hi_open || k.hi_open;
                }
            } else {
                hull.lo = std::min(hull.lo, k.lo);
                hull.hi = std::max(hull.hi, k.hi);
            }
        }
        if (first) hull.empty = true;
        out[v] = intersect(hull, band);
    }
    return out;
}

}  // namespace support
