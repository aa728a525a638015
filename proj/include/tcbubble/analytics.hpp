#pragma once

// Closed forms for the continuous-time examples and the Monte Carlo and
// per-node checks that exercise them.

#include <string>
#include <vector>

#include "tcbubble/cps.hpp"

namespace tcbubble {

double normal_cdf(double x);

/// E[S_T] for the inverse 3-D Bessel process started at 1: 2 Phi(1/sqrt T) - 1.
double bessel_mean(double horizon);

/// (1+lambda)(1 - E[S_T]) = 2(1+lambda)(1 - Phi(1/sqrt T)).
double bessel_delta(double lambda, double horizon);

struct BubbleBirthValues {
    double fundamental;  // (1+lambda) s 1{gamma > t}
    double bubble;       // (1+lambda) s 1{gamma <= t}
    double bubble_notc;  // s 1{gamma <= t}
};

BubbleBirthValues bubble_birth_fundamental(double s_t, double lambda, double gamma, double t);

struct FbmBound {
    double bound;  // lower bound on the root bubble
    bool has_nonlocal_cps;
};

/// With S_0 = 1 and S_T = 1/2 every shadow ends at most (1+lambda)/2, so the
/// bubble is at least (1+lambda)/2 as long as 1 - lambda > (1+lambda)/2.
FbmBound fbm_bubble_bound(double lambda);

struct EstimateCI {
    double mean = 0;
    double std_error = 0;
    std::size_t n = 0;
    double multiplier = 3;
    double ci_halfwidth = 0;

    bool covers(double x) const { return x >= mean - ci_halfwidth && x <= mean + ci_halfwidth; }
};

/// Pairwise-summed mean and standard error. Throws EmptySample.
EstimateCI mc_estimate(const std::vector<double>& samples, double multiplier = 3);

/// Pairwise (cascade) summation, independent of accumulation order within
/// each block.
double pairwise_sum(const double* x, std::size_t n);

struct BoundCheck {
    std::string name;
    bool applicable = true;  // false when the report lacks the needed fields
    bool passed = true;
    double worst_margin = 0;  // smallest slack over the nodes, >= 0 when passing
    std::size_t worst_node = 0;
};

/// Per-node bubble bounds. Checks needing the frictionless fields are marked
/// not applicable when the tree has no equivalent martingale measure.
template <class T>
std::vector<BoundCheck> bound_suite(const EventTree<T>& tree, const BubbleReport<T>& report,
                                    const TransactionCost<T>& tc, double tol = 1e-9);

}  // namespace tcbubble
