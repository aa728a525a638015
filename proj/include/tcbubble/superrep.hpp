#pragma once

// Super-replication of terminal positions under proportional costs.
//
// The primal LP starts from cash X and no shares at the start node, trades
// into (buys, sells) at every node of the subtree and must dominate the claim
// at each leaf in the liquidation sense. The minimal X is the price.

#include <optional>
#include <utility>
#include <vector>

#include "tcbubble/cps.hpp"
#include "tcbubble/lattice.hpp"
#include "tcbubble/lp.hpp"

namespace tcbubble {

enum class AdmissibilityMode { NumeraireBased, NumeraireFree };

enum class TerminalCondition {
    Dominance,  // liquidation value of (holding - claim) >= 0
    Equality,   // holding == claim
};

struct SuperRepOptions {
    AdmissibilityMode mode = AdmissibilityMode::NumeraireBased;
    TerminalCondition terminal = TerminalCondition::Dominance;
    double tolerance = 1e-9;
    SolveOptions lp{};
};

template <class T>
struct SuperRepResult {
    T price{};
    Strategy<T> strategy;
    AdmissibilityMode mode = AdmissibilityMode::NumeraireBased;
    NodeId start_node = 0;
    /// Smallest M >= 0 with V >= -M (numeraire based) or V >= -M(1+S)
    /// (numeraire free) along the strategy, V the liquidation value.
    T admissibility_bound{};
    /// Self-financing, terminal dominance and LP optimality all re-checked.
    bool certified = false;
};

/// Throws NoCps when the LP is unbounded (the subtree has no price system,
/// even allowing vanishing densities), ShapeMismatch on a malformed claim.
template <class T>
SuperRepResult<T> superrep_price(const EventTree<T>& tree, const Claim<T>& claim, const TransactionCost<T>& tc,
                                 NodeId start, const SuperRepOptions& options = {});

/// Whether the strategy's leaf holdings dominate the claim.
template <class T>
bool dominates(const Strategy<T>& strategy, const EventTree<T>& tree, const Claim<T>& claim,
               const TransactionCost<T>& tc, double tol = 1e-9);

template <class T>
T admissibility_bound(const Strategy<T>& strategy, const EventTree<T>& tree, const TransactionCost<T>& tc,
                      AdmissibilityMode mode);

/// Convex piecewise-linear function of the share holding h, stored as the
/// upper envelope of its affine pieces (slopes strictly increasing). No
/// pieces means the constant -infinity.
template <class T>
class ConvexPiecewiseLinear {
public:
    struct Piece {
        T slope;
        T intercept;
    };

    ConvexPiecewiseLinear() = default;
    static ConvexPiecewiseLinear envelope(std::vector<Piece> pieces);

    bool is_minus_infinity() const { return pieces_.empty(); }
    const std::vector<Piece>& pieces() const { return pieces_; }
    /// Breakpoints (h, value) between consecutive pieces.
    std::vector<std::pair<T, T>> vertices() const;
    T operator()(const T& h) const;

    static ConvexPiecewiseLinear max(const ConvexPiecewiseLinear& a, const ConvexPiecewiseLinear& b);
    /// inf over trades d of f(h + d) + cost(d), with buying at `ask` and
    /// selling at `bid`: clamps the slopes to [-ask, -bid]. Becomes
    /// -infinity when no slope of f reaches that range.
    ConvexPiecewiseLinear trade_closure(const T& bid, const T& ask) const;

private:
    std::vector<Piece> pieces_;
};

template <class T>
struct BackwardResult {
    /// Minimal cash before trading at each node as a function of the shares
    /// carried in.
    std::vector<ConvexPiecewiseLinear<T>> value;
    /// value[n](0), or empty where the subtree has no price system.
    std::vector<std::optional<T>> price;
};

/// Leaf-to-root recursion over the super-hedging value functions; an oracle
/// independent of the LP.
template <class T>
BackwardResult<T> backward_superhedge(const EventTree<T>& tree, const Claim<T>& claim,
                                      const TransactionCost<T>& tc);

/// superrep_price minus the dual claim value on the subtree.
template <class T>
T duality_gap(const EventTree<T>& tree, const Claim<T>& claim, const TransactionCost<T>& tc, NodeId start,
              const SuperRepOptions& options = {});

}  // namespace tcbubble
