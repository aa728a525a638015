#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tcbubble/analytics.hpp"
#include "tcbubble/cps.hpp"
#include "tcbubble/io.hpp"
#include "tcbubble/superrep.hpp"

namespace py = pybind11;
using namespace tcbubble;

namespace {

// Exact values cross the boundary as "p/q" strings, floats as floats.
template <class T>
py::object out(const T& x) {
    if constexpr (is_exact_v<T>) {
        return py::str(to_string(x));
    } else {
        return py::float_(x);
    }
}

template <class T>
py::list out(const std::vector<T>& v) {
    py::list l;
    for (const auto& x : v) l.append(out(x));
    return l;
}

template <class T>
py::object out(const std::optional<std::vector<T>>& v) {
    return v ? py::object(out(*v)) : py::none();
}

Json parse(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        throw BadConfig(e.what());
    }
}

template <class T>
py::dict report_impl(const std::string& tree_json, const std::string& lambda) {
    const auto tree = tree_from_json<T>(parse(tree_json));
    const TransactionCost<T> tc(parse_number<T>(lambda));
    const auto r = bubble_report(tree, tc);
    py::dict d;
    d["fundamental"] = out(r.fundamental);
    d["bubble"] = out(r.bubble);
    d["frictionless_fundamental"] = out(r.frictionless_fundamental);
    d["frictionless_bubble"] = out(r.frictionless_bubble);
    d["delta"] = out(r.delta);
    return d;
}

template <class T>
py::object fundamental_impl(const std::string& tree_json, const std::string& lambda, NodeId node, bool full) {
    const auto tree = tree_from_json<T>(parse(tree_json));
    return out(fundamental_value(tree, TransactionCost<T>(parse_number<T>(lambda)), node,
                                 full ? Scope::FullTree : Scope::Subtree));
}

template <class T>
py::dict superrep_impl(const std::string& tree_json, const std::string& lambda, NodeId node,
                       const std::optional<std::vector<std::string>>& bond,
                       const std::optional<std::vector<std::string>>& asset) {
    const auto tree = tree_from_json<T>(parse(tree_json));
    const TransactionCost<T> tc(parse_number<T>(lambda));
    auto claim = Claim<T>::fundamental(tree);
    if (bond) {
        claim.bond_leg.clear();
        for (const auto& x : *bond) claim.bond_leg.push_back(parse_number<T>(x));
    }
    if (asset) {
        claim.asset_leg.clear();
        for (const auto& x : *asset) claim.asset_leg.push_back(parse_number<T>(x));
    }
    const auto r = superrep_price(tree, claim, tc, node);
    py::dict d;
    d["price"] = out(r.price);
    d["certified"] = r.certified;
    d["bond"] = out(r.strategy.bond);
    d["shares"] = out(r.strategy.shares);
    return d;
}

template <class T>
py::list sweep_impl(const std::string& tree_json, const std::vector<std::string>& lambdas) {
    const auto tree = tree_from_json<T>(parse(tree_json));
    std::vector<T> ls;
    for (const auto& l : lambdas) ls.push_back(parse_number<T>(l));
    const auto s = lambda_sweep(tree, ls);
    py::list rows;
    for (const auto& e : s.entries) {
        py::dict d;
        d["lambda"] = out(e.lambda);
        d["cps_exists"] = e.cps_exists;
        d["fundamental_root"] = e.fundamental_root ? out(*e.fundamental_root) : py::none();
        d["bubble_root"] = e.bubble_root ? out(*e.bubble_root) : py::none();
        rows.append(d);
    }
    return rows;
}

py::dict ensemble(const PathEnsemble& e) {
    py::array_t<double> values(std::vector<py::ssize_t>{static_cast<py::ssize_t>(e.n_paths),
                                                          static_cast<py::ssize_t>(e.times.size())});
    std::copy(e.values.begin(), e.values.end(), values.mutable_data());
    py::dict aux;
    for (const auto& [k, v] : e.aux) aux[py::str(k)] = py::array_t<double>(v.size(), v.data());
    py::dict d;
    d["times"] = py::array_t<double>(e.times.size(), e.times.data());
    d["values"] = values;
    d["aux"] = aux;
    d["seed"] = e.seed;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Asset price bubbles under proportional transaction costs";

    // Later registrations win, so the base goes first.
    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<BadConfig>(m, "BadConfig", base);
    py::register_exception<InvalidTree>(m, "InvalidTree", base);
    py::register_exception<BandViolation>(m, "BandViolation", base);
    py::register_exception<NoCps>(m, "NoCps", base);
    py::register_exception<NoEmm>(m, "NoEmm", base);

    m.def("canonical_tree", [](const std::string& tree_json) { return tree_to_json(tree_from_json<Rational>(parse(tree_json))).dump(); });

    m.def(
        "bubble_report",
        [](const std::string& tree, const std::string& lambda, bool exact) {
            return exact ? report_impl<Rational>(tree, lambda) : report_impl<double>(tree, lambda);
        },
        py::arg("tree"), py::arg("lam"), py::arg("exact") = true);
    m.def(
        "fundamental_value",
        [](const std::string& tree, const std::string& lambda, NodeId node, bool full, bool exact) {
            return exact ? fundamental_impl<Rational>(tree, lambda, node, full)
                         : fundamental_impl<double>(tree, lambda, node, full);
        },
        py::arg("tree"), py::arg("lam"), py::arg("node") = 0, py::arg("full_tree") = false, py::arg("exact") = true);
    m.def(
        "superrep_price",
        [](const std::string& tree, const std::string& lambda, NodeId node,
           const std::optional<std::vector<std::string>>& bond, const std::optional<std::vector<std::string>>& asset,
           bool exact) {
            return exact ? superrep_impl<Rational>(tree, lambda, node, bond, asset)
                         : superrep_impl<double>(tree, lambda, node, bond, asset);
        },
        py::arg("tree"), py::arg("lam"), py::arg("node") = 0, py::arg("bond") = py::none(),
        py::arg("asset") = py::none(), py::arg("exact") = true);
    m.def(
        "lambda_sweep",
        [](const std::string& tree, const std::vector<std::string>& lambdas, bool exact) {
            return exact ? sweep_impl<Rational>(tree, lambdas) : sweep_impl<double>(tree, lambdas);
        },
        py::arg("tree"), py::arg("lambdas"), py::arg("exact") = true);

    m.def(
        "simulate_gbm",
        [](double mu, double sigma, double s0, double t1, std::size_t steps, std::size_t paths, std::uint64_t seed,
           std::size_t stride) {
            return ensemble(simulate_gbm(mu, sigma, s0, {0.0, t1, steps}, paths, seed, {stride}));
        },
        py::arg("mu"), py::arg("sigma"), py::arg("s0") = 1.0, py::arg("t1") = 1.0, py::arg("steps") = 252,
        py::arg("paths") = 1, py::arg("seed") = 1, py::arg("stride") = 1);
    m.def(
        "simulate_fbm",
        [](double hurst, double mu, double t1, std::size_t steps, std::size_t paths, std::uint64_t seed,
           bool change_time) {
            auto e = simulate_fbm_model(hurst, mu, {0.0, t1, steps}, paths, seed);
            return ensemble(change_time ? time_change(e) : e);
        },
        py::arg("hurst"), py::arg("mu") = 0.0, py::arg("t1") = 1.0, py::arg("steps") = 256, py::arg("paths") = 1,
        py::arg("seed") = 1, py::arg("time_change") = false);
    m.def(
        "simulate_inverse_bessel",
        [](double t1, std::size_t steps, std::size_t paths, std::uint64_t seed, std::size_t stride) {
            return ensemble(simulate_inverse_bessel({0.0, t1, steps}, paths, seed, {stride}));
        },
        py::arg("t1") = 1.0, py::arg("steps") = 2000, py::arg("paths") = 1000, py::arg("seed") = 1,
        py::arg("stride") = 0);
    m.def(
        "simulate_bubble_birth",
        [](double mu, double v0, std::optional<double> gamma, std::size_t steps, std::size_t paths,
           std::uint64_t seed) {
            const auto g = gamma ? GammaSampler::constant(*gamma) : GammaSampler::uniform();
            return ensemble(simulate_bubble_birth(mu, v0, g, {0.0, 1.0, steps}, paths, seed));
        },
        py::arg("mu") = 0.3, py::arg("v0") = 0.4, py::arg("gamma") = py::none(), py::arg("steps") = 253,
        py::arg("paths") = 1, py::arg("seed") = 1);

    m.def("bessel_mean", &bessel_mean, py::arg("horizon"));
    m.def("bessel_delta", &bessel_delta, py::arg("lam"), py::arg("horizon"));
    m.def("fbm_bubble_bound", [](double lambda) { return fbm_bubble_bound(lambda).bound; }, py::arg("lam"));
    m.def(
        "mc_estimate",
        [](const std::vector<double>& x, double multiplier) {
            const auto e = mc_estimate(x, multiplier);
            return py::dict(py::arg("mean") = e.mean, py::arg("std_error") = e.std_error,
                            py::arg("ci_halfwidth") = e.ci_halfwidth, py::arg("n") = e.n);
        },
        py::arg("samples"), py::arg("multiplier") = 3.0);

    m.def(
        "run",
        [](const std::string& command, const std::string& config_json, const std::string& base_dir) {
            RunResult r;
            try {
                r = run_command(command, parse_config(parse(config_json), base_dir));
            } catch (const Error& e) {
                r = {exit_code::kConfig, "", std::string("config error: ") + e.what()};
            }
            return py::make_tuple(r.exit_code, r.document, r.message);
        },
        py::arg("command"), py::arg("config"), py::arg("base_dir") = ".");
}
