#include "tcbubble/analytics.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace tcbubble {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double bessel_mean(double horizon) {
    if (!(horizon > 0)) throw BadConfig("horizon must be positive");
    return 2 * normal_cdf(1 / std::sqrt(horizon)) - 1;
}

double bessel_delta(double lambda, double horizon) {
    if (!(horizon > 0)) throw BadConfig("horizon must be positive");
    // upper tail through erfc keeps full relative accuracy for large T
    return 2 * (1 + lambda) * normal_cdf(-1 / std::sqrt(horizon));
}

BubbleBirthValues bubble_birth_fundamental(double s_t, double lambda, double gamma, double t) {
    const double ask = (1 + lambda) * s_t;
    if (gamma > t) return {ask, 0.0, 0.0};
    return {0.0, ask, s_t};
}

FbmBound fbm_bubble_bound(double lambda) {
    if (!(lambda > 0 && lambda < 1)) throw BadConfig("lambda must lie in (0,1)");
    const double bound = 3 * lambda < 1 ? (1 + lambda) / 2 : 0.0;
    return {bound, false};
}

double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 16) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

EstimateCI mc_estimate(const std::vector<double>& samples, double multiplier) {
    if (samples.empty()) throw EmptySample("no samples");
    EstimateCI r;
    r.n = samples.size();
    r.multiplier = multiplier;
    r.mean = pairwise_sum(samples.data(), r.n) / static_cast<double>(r.n);
    if (r.n > 1) {
        std::vector<double> sq(r.n);
        for (std::size_t i = 0; i < r.n; ++i) sq[i] = (samples[i] - r.mean) * (samples[i] - r.mean);
        const double var = pairwise_sum(sq.data(), r.n) / static_cast<double>(r.n - 1);
        r.std_error = std::sqrt(var / static_cast<double>(r.n));
    }
    r.ci_halfwidth = multiplier * r.std_error;
    return r;
}

template <class T>
std::vector<BoundCheck> bound_suite(const EventTree<T>& tree, const BubbleReport<T>& report,
                                    const TransactionCost<T>& tc, double tol) {
    const std::size_t n = tree.size();
    if (report.fundamental.size() != n || report.bubble.size() != n) {
        throw ShapeMismatch("report does not match the tree");
    }
    const T& lambda = tc.lambda();
    const bool frictionless = report.frictionless_bubble.has_value() && report.delta.has_value();
    std::vector<BoundCheck> out;

    // margin(v) >= 0 is the inequality; equality checks pass -|x|.
    auto check = [&](const std::string& name, bool applicable, const std::function<T(NodeId)>& margin,
                     bool equality = false) {
        BoundCheck c{name, applicable, true, std::numeric_limits<double>::infinity(), 0};
        if (!applicable) {
            c.worst_margin = 0;
            out.push_back(c);
            return;
        }
        for (NodeId v = 0; v < n; ++v) {
            const T m = margin(v);
            const double md = equality ? -std::fabs(to_double(m)) : to_double(m);
            const bool ok = equality ? approx_zero<T>(m, tol) : approx_le<T>(T(0), m, tol);
            if (!ok) c.passed = false;
            if (md < c.worst_margin) {
                c.worst_margin = md;
                c.worst_node = v;
            }
        }
        out.push_back(c);
    };

    const auto& beta = report.bubble;
    check("bubble_nonnegative", true, [&](NodeId v) { return beta[v]; });
    check("fundamental_below_ask", true, [&](NodeId v) { return T(tc.ask(tree.price(v)) - report.fundamental[v]); });
    const std::vector<T> empty;
    const auto& notc = frictionless ? *report.frictionless_bubble : empty;
    const auto& delta = frictionless ? *report.delta : empty;
    check("quotient_bound", frictionless, [&](NodeId v) { return T((1 + lambda) * notc[v] - beta[v]); });
    check("difference_lower", frictionless, [&](NodeId v) { return T(notc[v] - beta[v] + lambda * notc[v]); });
    check("difference_upper", frictionless, [&](NodeId v) { return T(notc[v] - (notc[v] - beta[v])); });
    check("decomposition", frictionless, [&](NodeId v) { return T(beta[v] - ((1 + lambda) * notc[v] - delta[v])); },
          true);
    check("delta_nonnegative", frictionless, [&](NodeId v) { return delta[v]; });
    check("delta_upper", frictionless, [&](NodeId v) { return T((1 + lambda) * notc[v] - delta[v]); });
    return out;
}

template std::vector<BoundCheck> bound_suite(const EventTree<double>&, const BubbleReport<double>&,
                                             const TransactionCost<double>&, double);
template std::vector<BoundCheck> bound_suite(const EventTree<Rational>&, const BubbleReport<Rational>&,
                                             const TransactionCost<Rational>&, double);

}  // namespace tcbubble
