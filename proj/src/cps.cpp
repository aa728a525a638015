#include "tcbubble/cps.hpp"

#include <algorithm>

namespace tcbubble {

namespace {

// Variables (Z1, Z2) for every node of a scope; martingale and band rows.
template <class T>
struct DensityProgram {
    LpProblem<T> lp;
    std::vector<NodeId> nodes;
    std::vector<std::size_t> local;

    std::size_t z1(NodeId v) const { return 2 * local[v]; }
    std::size_t z2(NodeId v) const { return 2 * local[v] + 1; }
    std::size_t extra(std::size_t k) const { return 2 * nodes.size() + k; }
};

template <class T>
DensityProgram<T> density_program(const EventTree<T>& tree, const Band<T>& band, NodeId top,
                                  std::size_t extra_vars = 0) {
    DensityProgram<T> d;
    d.nodes = tree.subtree(top);
    d.local.assign(tree.size(), kNoNode);
    for (std::size_t i = 0; i < d.nodes.size(); ++i) d.local[d.nodes[i]] = i;
    d.lp = LpProblem<T>(2 * d.nodes.size() + extra_vars, Sense::Maximize);
    for (NodeId v : d.nodes) {
        if (tree.is_leaf(v)) continue;
        for (int leg = 0; leg < 2; ++leg) {
            std::vector<std::pair<std::size_t, T>> terms;
            terms.emplace_back(leg ? d.z2(v) : d.z1(v), T(1));
            for (NodeId c : tree.children(v)) terms.emplace_back(leg ? d.z2(c) : d.z1(c), -tree.prob(c));
            d.lp.add_row(terms, Relation::Equal, T(0));
        }
    }
    for (NodeId v : d.nodes) {
        const T& s = tree.price(v);
        d.lp.add_row({{d.z2(v), T(1)}, {d.z1(v), -band.upper * s}}, Relation::LessEqual, T(0));
        d.lp.add_row({{d.z1(v), band.lower * s}, {d.z2(v), T(-1)}}, Relation::LessEqual, T(0));
    }
    return d;
}

template <class T>
void apply_floor(DensityProgram<T>& d, const CpsOptions& options) {
    if constexpr (!is_exact_v<T>) {
        for (NodeId v : d.nodes) d.lp.bounds[d.z1(v)].lower = options.density_floor;
    } else {
        (void)d;
        (void)options;
    }
}

template <class T>
std::vector<std::string> as_strings(const std::vector<T>& v) {
    std::vector<std::string> out;
    out.reserve(v.size());
    for (const auto& x : v) out.push_back(to_string(x));
    return out;
}

// Maximises t subject to Z1 >= t on the scope below `top`, Z1(top) = 1.
// Returns the solution when the optimum is strictly positive.
template <class T>
std::pair<DensityProgram<T>, LpSolution<T>> strict_density(const EventTree<T>& tree, const Band<T>& band,
                                                           NodeId top, const CpsOptions& options) {
    auto d = density_program(tree, band, top, 1);
    const std::size_t t = d.extra(0);
    for (NodeId v : d.nodes) d.lp.add_row({{d.z1(v), T(1)}, {t, T(-1)}}, Relation::GreaterEqual, T(0));
    d.lp.add_row({{d.z1(top), T(1)}}, Relation::Equal, T(1));
    d.lp.objective[t] = T(1);
    auto sol = solve(d.lp, options.lp);
    if (sol.status == LpStatus::Infeasible) {
        throw NoCps("no consistent price system: the density polytope is empty", as_strings(sol.farkas));
    }
    if (sol.status != LpStatus::Optimal) throw NumericalFailure("max-min density program is unbounded");
    bool positive;
    if constexpr (is_exact_v<T>) positive = sgn(sol.objective_value) > 0;
    else positive = sol.objective_value > options.density_floor;
    if (!positive) {
        throw NoCps("no strictly positive consistent price system: some density must vanish",
                    as_strings(sol.dual));
    }
    return {std::move(d), std::move(sol)};
}

template <class T>
ConsistentPriceSystem<T> extract(const EventTree<T>& tree, const DensityProgram<T>& d, const LpSolution<T>& sol) {
    std::vector<T> z1(tree.size()), z2(tree.size());
    for (NodeId v : d.nodes) {
        z1[v] = sol.primal[d.z1(v)];
        z2[v] = sol.primal[d.z2(v)];
    }
    return ConsistentPriceSystem<T>::from_z(tree, std::move(z1), std::move(z2));
}

template <class T>
void apply_value_floor(DensityProgram<T>& d, const CpsOptions& options) {
    if (options.floor_values) apply_floor(d, options);
}

template <class T>
T frictionless_value_unchecked(const EventTree<T>& tree, NodeId node, const CpsOptions& options) {
    auto d = density_program(tree, Band<T>::frictionless(), node);
    apply_value_floor(d, options);
    d.lp.add_row({{d.z1(node), T(1)}}, Relation::Equal, T(1));
    d.lp.objective[d.z2(node)] = T(1);
    auto sol = solve(d.lp, options.lp);
    if (sol.status != LpStatus::Optimal) throw NoEmm("no equivalent martingale measure below node");
    return sol.objective_value;
}

}  // namespace

template <class T>
ConsistentPriceSystem<T> ConsistentPriceSystem<T>::from_z(const EventTree<T>& tree, std::vector<T> z1,
                                                          std::vector<T> z2) {
    if (z1.size() != tree.size() || z2.size() != tree.size()) throw ShapeMismatch("density vectors need one entry per node");
    const T root = z1[tree.root()];
    if (sign(root) <= 0) throw Error("density at the root must be strictly positive");
    ConsistentPriceSystem out;
    out.shadow.resize(tree.size());
    for (NodeId v = 0; v < tree.size(); ++v) {
        z1[v] /= root;
        z2[v] /= root;
        if (sign(z1[v]) <= 0) throw Error("density vanishes at node " + std::to_string(v));
        out.shadow[v] = z2[v] / z1[v];
    }
    for (NodeId leaf : tree.leaves()) out.q.push_back(tree.path_prob(leaf) * z1[leaf]);
    out.z1 = std::move(z1);
    out.z2 = std::move(z2);
    return out;
}

template <class T>
ConsistentPriceSystem<T> ConsistentPriceSystem<T>::from_measure(const EventTree<T>& tree, const std::vector<T>& q,
                                                                const std::vector<T>& shadow) {
    if (q.size() != tree.leaves().size()) throw ShapeMismatch("measure needs one entry per leaf");
    if (shadow.size() != tree.size()) throw ShapeMismatch("shadow price needs one entry per node");
    std::vector<T> mass(tree.size(), T(0));
    for (std::size_t i = 0; i < q.size(); ++i) mass[tree.leaves()[i]] = q[i];
    for (NodeId v = tree.size(); v-- > 0;) {
        if (!tree.is_leaf(v)) {
            for (NodeId c : tree.children(v)) mass[v] += mass[c];
        }
    }
    ConsistentPriceSystem out;
    out.q = q;
    out.shadow = shadow;
    out.z1.resize(tree.size());
    out.z2.resize(tree.size());
    for (NodeId v = 0; v < tree.size(); ++v) {
        out.z1[v] = mass[v] / tree.path_prob(v);
        out.z2[v] = shadow[v] * out.z1[v];
    }
    return out;
}

template <class T>
ConsistentPriceSystem<T> find_cps_in_band(const EventTree<T>& tree, const Band<T>& band, const CpsOptions& options) {
    auto [d, sol] = strict_density(tree, band, tree.root(), options);
    return extract(tree, d, sol);
}

template <class T>
ConsistentPriceSystem<T> find_cps(const EventTree<T>& tree, const TransactionCost<T>& tc, const CpsOptions& options) {
    return find_cps_in_band(tree, Band<T>::of(tc), options);
}

template <class T>
bool verify_cps_in_band(const EventTree<T>& tree, const Band<T>& band, const ConsistentPriceSystem<T>& cps,
                        double tol) {
    const std::size_t n = tree.size();
    if (cps.z1.size() != n || cps.z2.size() != n || cps.shadow.size() != n || cps.q.size() != tree.leaves().size()) {
        throw ShapeMismatch("consistent price system does not match the tree");
    }
    if (!approx_eq<T>(cps.z1[tree.root()], T(1), tol)) return false;
    for (NodeId v = 0; v < n; ++v) {
        if (sign(cps.z1[v]) <= 0 || sign(cps.z2[v]) <= 0) return false;
        if (!approx_eq<T>(cps.shadow[v] * cps.z1[v], cps.z2[v], tol)) return false;
        const T& s = tree.price(v);
        if (!approx_le<T>(band.lower * s, cps.shadow[v], tol) || !approx_le<T>(cps.shadow[v], band.upper * s, tol)) {
            return false;
        }
        if (tree.is_leaf(v)) continue;
        T e1(0), e2(0);
        for (NodeId c : tree.children(v)) {
            e1 += tree.prob(c) * cps.z1[c];
            e2 += tree.prob(c) * cps.z2[c];
        }
        if (!approx_eq<T>(e1, cps.z1[v], tol) || !approx_eq<T>(e2, cps.z2[v], tol)) return false;
    }
    T total(0);
    for (std::size_t i = 0; i < cps.q.size(); ++i) {
        const NodeId leaf = tree.leaves()[i];
        if (sign(cps.q[i]) <= 0) return false;
        if (!approx_eq<T>(cps.q[i], tree.path_prob(leaf) * cps.z1[leaf], tol)) return false;
        total += cps.q[i];
    }
    return approx_eq<T>(total, T(1), tol);
}

template <class T>
bool verify_cps(const EventTree<T>& tree, const TransactionCost<T>& tc, const ConsistentPriceSystem<T>& cps,
                double tol) {
    return verify_cps_in_band(tree, Band<T>::of(tc), cps, tol);
}

template <class T>
ConsistentPriceSystem<T> cps_with_value(const EventTree<T>& tree, const TransactionCost<T>& tc, NodeId node,
                                        const T& f, const CpsOptions& options) {
    if (node >= tree.size()) throw ShapeMismatch("node out of range");
    const auto [bid, ask] = bid_ask(tree.price(node), tc);
    if (f < bid || f > ask) {
        throw BandViolation("value " + to_string(f) + " outside the spread [" + to_string(bid) + ", " +
                            to_string(ask) + "] at node " + std::to_string(node));
    }
    // Normalise at the root, then pin Z2(node) = f Z1(node) by a homogeneous row.
    auto d = density_program(tree, Band<T>::of(tc), tree.root(), 1);
    const std::size_t t = d.extra(0);
    for (NodeId v : d.nodes) d.lp.add_row({{d.z1(v), T(1)}, {t, T(-1)}}, Relation::GreaterEqual, T(0));
    d.lp.add_row({{d.z1(tree.root()), T(1)}}, Relation::Equal, T(1));
    d.lp.add_row({{d.z2(node), T(1)}, {d.z1(node), -f}}, Relation::Equal, T(0));
    d.lp.objective[t] = T(1);
    auto sol = solve(d.lp, options.lp);
    if (sol.status == LpStatus::Infeasible) {
        throw NoCps("no consistent price system with the requested value", as_strings(sol.farkas));
    }
    bool positive;
    if constexpr (is_exact_v<T>) positive = sol.status == LpStatus::Optimal && sgn(sol.objective_value) > 0;
    else positive = sol.status == LpStatus::Optimal && sol.objective_value > options.density_floor;
    if (!positive) {
        throw NoCps("no strictly positive consistent price system with the requested value", as_strings(sol.dual));
    }
    return extract(tree, d, sol);
}

template <class T>
T fundamental_value(const EventTree<T>& tree, const TransactionCost<T>& tc, NodeId node, Scope scope,
                    const CpsOptions& options) {
    if (node >= tree.size()) throw ShapeMismatch("node out of range");
    const NodeId top = scope == Scope::Subtree ? node : tree.root();
    auto d = density_program(tree, Band<T>::of(tc), top);
    apply_value_floor(d, options);
    d.lp.add_row({{d.z1(node), T(1)}}, Relation::Equal, T(1));
    d.lp.objective[d.z2(node)] = T(1);
    auto sol = solve(d.lp, options.lp);
    if (sol.status == LpStatus::Infeasible) {
        throw NoCps("no consistent price system below node " + std::to_string(node), as_strings(sol.farkas));
    }
    if (sol.status != LpStatus::Optimal) throw NumericalFailure("fundamental value program is unbounded");
    return sol.objective_value;
}

template <class T>
T dual_claim_value(const EventTree<T>& tree, const Claim<T>& claim, const TransactionCost<T>& tc, NodeId node,
                   const CpsOptions& options) {
    if (node >= tree.size()) throw ShapeMismatch("node out of range");
    if (claim.bond_leg.size() != tree.leaves().size() || claim.asset_leg.size() != tree.leaves().size()) {
        throw ShapeMismatch("claim needs one entry per leaf");
    }
    auto d = density_program(tree, Band<T>::of(tc), node);
    apply_value_floor(d, options);
    d.lp.add_row({{d.z1(node), T(1)}}, Relation::Equal, T(1));
    for (NodeId v : d.nodes) {
        if (!tree.is_leaf(v)) continue;
        const T w = tree.path_prob(v) / tree.path_prob(node);
        const std::size_t i = tree.leaf_index(v);
        d.lp.objective[d.z1(v)] = w * claim.bond_leg[i];
        d.lp.objective[d.z2(v)] = w * claim.asset_leg[i];
    }
    auto sol = solve(d.lp, options.lp);
    if (sol.status == LpStatus::Infeasible) {
        throw NoCps("no consistent price system below node " + std::to_string(node), as_strings(sol.farkas));
    }
    if (sol.status != LpStatus::Optimal) throw NumericalFailure("claim value program is unbounded");
    return sol.objective_value;
}

template <class T>
T frictionless_fundamental(const EventTree<T>& tree, NodeId node, const CpsOptions& options) {
    if (node >= tree.size()) throw ShapeMismatch("node out of range");
    try {
        strict_density(tree, Band<T>::frictionless(), node, options);
    } catch (const NoCps&) {
        throw NoEmm("no equivalent martingale measure below node " + std::to_string(node));
    }
    return frictionless_value_unchecked(tree, node, options);
}

template <class T>
bool has_emm(const EventTree<T>& tree, const CpsOptions& options) {
    try {
        strict_density(tree, Band<T>::frictionless(), tree.root(), options);
        return true;
    } catch (const NoCps&) {
        return false;
    }
}

template <class T>
std::vector<T> find_emm(const EventTree<T>& tree, const CpsOptions& options) {
    try {
        return find_cps_in_band(tree, Band<T>::frictionless(), options).q;
    } catch (const NoCps&) {
        throw NoEmm("no equivalent martingale measure");
    }
}

template <class T>
ConsistentPriceSystem<T> embed_emm(const EventTree<T>& tree, const std::vector<T>& emm, const T& mu,
                                   const TransactionCost<T>& tc, double tol) {
    if (emm.size() != tree.leaves().size()) throw ShapeMismatch("measure needs one entry per leaf");
    if (mu < T(1) - tc.lambda() || mu > T(1) + tc.lambda()) {
        throw BandViolation("scale " + to_string(mu) + " leaves the spread");
    }
    std::vector<T> mass(tree.size(), T(0));
    T total(0);
    for (std::size_t i = 0; i < emm.size(); ++i) {
        if (sign(emm[i]) <= 0) throw NotMartingale("measure is not strictly positive");
        mass[tree.leaves()[i]] = emm[i];
        total += emm[i];
    }
    if (!approx_eq<T>(total, T(1), tol)) throw NotMartingale("measure does not sum to one");
    for (NodeId v = tree.size(); v-- > 0;) {
        if (tree.is_leaf(v)) continue;
        T expect(0);
        for (NodeId c : tree.children(v)) {
            mass[v] += mass[c];
            expect += mass[c] * tree.price(c);
        }
        if (!approx_eq<T>(expect, mass[v] * tree.price(v), tol)) {
            throw NotMartingale("price is not a martingale at node " + std::to_string(v));
        }
    }
    std::vector<T> shadow(tree.size());
    for (NodeId v = 0; v < tree.size(); ++v) shadow[v] = mu * tree.price(v);
    return ConsistentPriceSystem<T>::from_measure(tree, emm, shadow);
}

template <class T>
BubbleReport<T> bubble_report(const EventTree<T>& tree, const TransactionCost<T>& tc, const CpsOptions& options) {
    find_cps(tree, tc, options);
    BubbleReport<T> r;
    r.fundamental.resize(tree.size());
    r.bubble.resize(tree.size());
    for (NodeId v = 0; v < tree.size(); ++v) {
        r.fundamental[v] = fundamental_value(tree, tc, v, Scope::Subtree, options);
        r.bubble[v] = tc.ask(tree.price(v)) - r.fundamental[v];
    }
    if (has_emm(tree, options)) {
        // An equivalent martingale measure on the tree restricts to every subtree.
        std::vector<T> star(tree.size()), fb(tree.size()), delta(tree.size());
        for (NodeId v = 0; v < tree.size(); ++v) {
            star[v] = frictionless_value_unchecked(tree, v, options);
            fb[v] = tree.price(v) - star[v];
            delta[v] = r.fundamental[v] - tc.ask(star[v]);
        }
        r.frictionless_fundamental = std::move(star);
        r.frictionless_bubble = std::move(fb);
        r.delta = std::move(delta);
    }
    return r;
}

template <class T>
SweepResult<T> lambda_sweep(const EventTree<T>& tree, const std::vector<T>& lambdas, const CpsOptions& options,
                            double tol) {
    if (lambdas.empty()) throw BadConfig("lambda list is empty");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (sign(lambdas[i]) <= 0 || lambdas[i] >= T(1)) throw BadConfig("lambda must lie in (0,1)");
        if (i > 0 && !(lambdas[i - 1] < lambdas[i])) throw BadConfig("lambda list must be strictly ascending");
    }
    SweepResult<T> out;
    bool seen_no_bubble = false;
    for (const T& lambda : lambdas) {
        SweepEntry<T> e;
        e.lambda = lambda;
        const TransactionCost<T> tc(lambda);
        try {
            find_cps(tree, tc, options);
            e.cps_exists = true;
            e.fundamental_root = fundamental_value(tree, tc, tree.root(), Scope::Subtree, options);
            e.bubble_root = tc.ask(tree.price(tree.root())) - *e.fundamental_root;
        } catch (const NoCps&) {
            e.cps_exists = false;
        }
        const bool no_bubble = e.cps_exists && approx_zero<T>(*e.bubble_root, tol);
        if (seen_no_bubble && !no_bubble) ++out.monotonicity_violations;
        seen_no_bubble = seen_no_bubble || no_bubble;
        out.entries.push_back(std::move(e));
    }
    return out;
}

#define TCBUBBLE_INSTANTIATE(T)                                                                                   \
    template struct ConsistentPriceSystem<T>;                                                                      \
    template ConsistentPriceSystem<T> find_cps(const EventTree<T>&, const TransactionCost<T>&, const CpsOptions&); \
    template ConsistentPriceSystem<T> find_cps_in_band(const EventTree<T>&, const Band<T>&, const CpsOptions&);    \
    template bool verify_cps(const EventTree<T>&, const TransactionCost<T>&, const ConsistentPriceSystem<T>&,      \
                             double);                                                                              \
    template bool verify_cps_in_band(const EventTree<T>&, const Band<T>&, const ConsistentPriceSystem<T>&, double); \
    template ConsistentPriceSystem<T> cps_with_value(const EventTree<T>&, const TransactionCost<T>&, NodeId,       \
                                                     const T&, const CpsOptions&);                                 \
    template T fundamental_value(const EventTree<T>&, const TransactionCost<T>&, NodeId, Scope, const CpsOptions&); \
    template T dual_claim_value(const EventTree<T>&, const Claim<T>&, const TransactionCost<T>&, NodeId,           \
                                const CpsOptions&);                                                                \
    template T frictionless_fundamental(const EventTree<T>&, NodeId, const CpsOptions&);                          \
    template bool has_emm(const EventTree<T>&, const CpsOptions&);                                                \
    template std::vector<T> find_emm(const EventTree<T>&, const CpsOptions&);                                     \
    template ConsistentPriceSystem<T> embed_emm(const EventTree<T>&, const std::vector<T>&, const T&,             \
                                                const TransactionCost<T>&, double);                                \
    template BubbleReport<T> bubble_report(const EventTree<T>&, const TransactionCost<T>&, const CpsOptions&);    \
    template SweepResult<T> lambda_sweep(const EventTree<T>&, const std::vector<T>&, const CpsOptions&, double);

TCBUBBLE_INSTANTIATE(double)
TCBUBBLE_INSTANTIATE(Rational)

#undef TCBUBBLE_INSTANTIATE

}  // namespace tcbubble
