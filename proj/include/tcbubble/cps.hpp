#pragma once

// Consistent price systems on event trees and everything computed from them:
// fundamental values, bubbles, frictionless comparators and the bound
// quantities relating the two markets.
//
// A consistent price system is a pair of strictly positive P-martingales
// (Z1, Z2) with (1-lambda)S <= Z2/Z1 <= (1+lambda)S at every node. It induces
// the measure dQ/dP = Z1_T / Z1_0 and the shadow price S~ = Z2/Z1, a
// Q-martingale inside the bid-ask spread. On a finite tree every local
// martingale is a martingale, so local and non-local systems coincide.
//
// Values are optimised over the closed polytope (Z1 >= 0). Whenever a
// strictly positive system exists (find_cps) the supremum over equivalent
// systems equals that maximum.

#include <optional>
#include <vector>

#include "tcbubble/lattice.hpp"
#include "tcbubble/lp.hpp"

namespace tcbubble {

enum class Scope { Subtree, FullTree };

template <class T>
struct ConsistentPriceSystem {
    std::vector<T> z1;      // per node, z1[root] == 1
    std::vector<T> z2;      // per node
    std::vector<T> q;       // per leaf: Q(leaf)
    std::vector<T> shadow;  // per node: z2 / z1

    /// Normalises so that z1 at the root is 1 and derives q and the shadow.
    static ConsistentPriceSystem from_z(const EventTree<T>& tree, std::vector<T> z1, std::vector<T> z2);
    /// Rebuilds (Z1, Z2) from a leaf measure and a shadow price process:
    /// Z1(n) = Q(n)/P(n), Z2 = S~ Z1.
    static ConsistentPriceSystem from_measure(const EventTree<T>& tree, const std::vector<T>& q,
                                              const std::vector<T>& shadow);
};

struct CpsOptions {
    /// Float mode: lower bound on Z1 relative to the normalising node in the
    /// feasibility programs.
    double density_floor = 1e-9;
    /// Float mode: also impose the floor in the value programs. Off, values
    /// are maxima over the closed polytope as in exact mode; on, they
    /// approach those maxima from below as the floor shrinks.
    bool floor_values = false;
    SolveOptions lp{};
};

/// Any strictly positive consistent price system (maximises min Z1). Throws
/// NoCps with a certificate when none exists.
template <class T>
ConsistentPriceSystem<T> find_cps(const EventTree<T>& tree, const TransactionCost<T>& tc,
                                  const CpsOptions& options = {});

/// As find_cps with an arbitrary multiplicative band; Band::frictionless()
/// searches for an equivalent martingale measure.
template <class T>
ConsistentPriceSystem<T> find_cps_in_band(const EventTree<T>& tree, const Band<T>& band,
                                          const CpsOptions& options = {});

/// All invariants: martingale identities, band, Z1 > 0, Z1(root) = 1, q a
/// strictly positive probability. Throws ShapeMismatch.
template <class T>
bool verify_cps(const EventTree<T>& tree, const TransactionCost<T>& tc, const ConsistentPriceSystem<T>& cps,
                double tol = 1e-9);

template <class T>
bool verify_cps_in_band(const EventTree<T>& tree, const Band<T>& band, const ConsistentPriceSystem<T>& cps,
                        double tol = 1e-9);

/// A strictly positive system whose shadow price at `node` equals f. Throws
/// BandViolation when f is outside the spread at `node`, NoCps otherwise.
template <class T>
ConsistentPriceSystem<T> cps_with_value(const EventTree<T>& tree, const TransactionCost<T>& tc, NodeId node,
                                        const T& f, const CpsOptions& options = {});

/// sup E_Q[S~_T | node] over consistent price systems on the subtree below
/// `node` (Scope::Subtree) or on the whole tree (Scope::FullTree).
template <class T>
T fundamental_value(const EventTree<T>& tree, const TransactionCost<T>& tc, NodeId node,
                    Scope scope = Scope::Subtree, const CpsOptions& options = {});

/// sup E_Q[X1_T + X2_T S~_T | node] over consistent price systems on the
/// subtree below `node`.
template <class T>
T dual_claim_value(const EventTree<T>& tree, const Claim<T>& claim, const TransactionCost<T>& tc, NodeId node,
                   const CpsOptions& options = {});

/// sup E_Q[S_T | node] over equivalent martingale measures. Throws NoEmm.
template <class T>
T frictionless_fundamental(const EventTree<T>& tree, NodeId node, const CpsOptions& options = {});

/// Whether an equivalent martingale measure exists on the whole tree.
template <class T>
bool has_emm(const EventTree<T>& tree, const CpsOptions& options = {});

/// Per-leaf probabilities of some equivalent martingale measure. Throws NoEmm.
template <class T>
std::vector<T> find_emm(const EventTree<T>& tree, const CpsOptions& options = {});

/// (Q, mu S) for an equivalent martingale measure Q given per leaf. Throws
/// NotMartingale or BandViolation.
template <class T>
ConsistentPriceSystem<T> embed_emm(const EventTree<T>& tree, const std::vector<T>& emm, const T& mu,
                                   const TransactionCost<T>& tc, double tol = 1e-9);

template <class T>
struct BubbleReport {
    std::vector<T> fundamental;  // F
    std::vector<T> bubble;       // (1+lambda)S - F
    // Present only when the tree admits an equivalent martingale measure.
    std::optional<std::vector<T>> frictionless_fundamental;  // S*
    std::optional<std::vector<T>> frictionless_bubble;       // S - S*
    std::optional<std::vector<T>> delta;                     // F - (1+lambda)S*
};

/// Throws NoCps when the tree has no consistent price system.
template <class T>
BubbleReport<T> bubble_report(const EventTree<T>& tree, const TransactionCost<T>& tc, const CpsOptions& options = {});

template <class T>
struct SweepEntry {
    T lambda;
    bool cps_exists = false;
    std::optional<T> fundamental_root;
    std::optional<T> bubble_root;
};

template <class T>
struct SweepResult {
    std::vector<SweepEntry<T>> entries;
    /// Entries after the first bubble-free one that carry a bubble (or lose
    /// the consistent price system). Always zero for a correct engine.
    std::size_t monotonicity_violations = 0;
};

/// Root bubble for each lambda of an ascending list in (0,1). Throws
/// BadConfig on an empty, unsorted or out-of-range list.
template <class T>
SweepResult<T> lambda_sweep(const EventTree<T>& tree, const std::vector<T>& lambdas, const CpsOptions& options = {},
                            double tol = 1e-9);

}  // namespace tcbubble
