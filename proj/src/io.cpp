#include "tcbubble/io.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "tcbubble/analytics.hpp"
#include "tcbubble/cps.hpp"
#include "tcbubble/superrep.hpp"

namespace tcbubble {

namespace {

Rational literal(const Json& v, const std::string& what) {
    try {
        if (v.is_string()) return parse_rational(v.get<std::string>());
        if (v.is_number()) return parse_rational(v.dump());
    } catch (const std::invalid_argument& e) {
        throw BadConfig(what + ": " + e.what());
    }
    throw BadConfig(what + " must be a number or a \"p/q\" string");
}

void require_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw BadConfig(where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) throw BadConfig("unknown key '" + key + "' in " + where);
    }
}

const Json& field(const Json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw BadConfig(where + " is missing '" + key + "'");
    return obj.at(key);
}

std::size_t as_size(const Json& v, const std::string& what) {
    if (!v.is_number_unsigned()) throw BadConfig(what + " must be a non-negative integer");
    return v.get<std::size_t>();
}

double as_double(const Json& v, const std::string& what) {
    if (!v.is_number()) throw BadConfig(what + " must be a number");
    return v.get<double>();
}

bool as_bool(const Json& v, const std::string& what) {
    if (!v.is_boolean()) throw BadConfig(what + " must be true or false");
    return v.get<bool>();
}

std::string canonical_literal(const std::string& text) {
    try {
        return to_string(parse_rational(text));
    } catch (const std::invalid_argument& e) {
        throw BadConfig("bad number '" + text + "': " + e.what());
    }
}

template <class T>
Json cell(const T& x) {
    if constexpr (is_exact_v<T>) {
        return to_string(x);
    } else {
        return x;
    }
}

template <class T>
Json cell(const std::optional<std::vector<T>>& v, std::size_t i) {
    return v ? cell((*v)[i]) : Json(nullptr);
}

std::string csv_cell(const Json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return to_string(v.get<double>());
    return v.dump();
}

// One comment line each for config and summary, then a single header row.
std::string render(const ScenarioConfig& config, const Json& summary, const std::vector<std::string>& header,
                   const std::vector<std::vector<Json>>& rows) {
    if (config.format == OutputFormat::Json) {
        Json doc;
        doc["config"] = config_to_json(config);
        doc["summary"] = summary;
        doc["columns"] = header;
        doc["rows"] = Json::array();
        for (const auto& r : rows) {
            Json obj;
            for (std::size_t i = 0; i < header.size(); ++i) obj[header[i]] = r[i];
            doc["rows"].push_back(std::move(obj));
        }
        return doc.dump(2) + "\n";
    }
    std::ostringstream out;
    out << "# config: " << config_to_json(config).dump() << "\n";
    out << "# summary: " << summary.dump() << "\n";
    if (header.empty()) return out.str();
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << csv_cell(r[i]);
        out << "\n";
    }
    return out.str();
}

const std::set<std::string>& keys_for(ScenarioKind kind) {
    static const std::set<std::string> lattice{"kind", "seed", "format", "output", "tree", "lambda", "exact"};
    static const std::set<std::string> gbm{"kind", "seed", "format", "output", "mu", "sigma", "s0", "grid", "paths",
                                           "stride"};
    static const std::set<std::string> fbm{"kind",  "seed",  "format", "output",     "hurst",
                                           "mu",    "grid",  "paths",  "stride",     "time_change"};
    static const std::set<std::string> bessel{"kind", "seed", "format", "output", "grid", "paths", "stride", "lambda"};
    static const std::set<std::string> birth{"kind", "seed", "format", "output", "mu",     "v0",
                                             "s0",   "gamma", "grid",  "paths", "stride", "lambda"};
    switch (kind) {
        case ScenarioKind::Lattice: return lattice;
        case ScenarioKind::Gbm: return gbm;
        case ScenarioKind::Fbm: return fbm;
        case ScenarioKind::InverseBessel: return bessel;
        case ScenarioKind::BubbleBirth: return birth;
    }
    return lattice;
}

ScenarioKind parse_kind(const std::string& s) {
    for (auto k : {ScenarioKind::Lattice, ScenarioKind::Gbm, ScenarioKind::Fbm, ScenarioKind::InverseBessel,
                   ScenarioKind::BubbleBirth}) {
        if (to_string(k) == s) return k;
    }
    throw BadConfig("unknown kind '" + s + "'");
}

void check_lambda(const std::string& text) {
    const Rational l = parse_rational(text);
    if (!(sgn(l) > 0 && l < 1)) throw BadConfig("lambda must lie in (0,1), got " + text);
}

double single_lambda(const ScenarioConfig& c) {
    if (c.lambdas.size() != 1) throw BadConfig("exactly one lambda is required");
    return to_double(parse_rational(c.lambdas[0]));
}

Json estimate_json(const EstimateCI& e) {
    return Json{{"mean", e.mean}, {"std_error", e.std_error}, {"n", e.n}, {"ci_halfwidth", e.ci_halfwidth}};
}

template <class T>
RunResult lattice_impl(const ScenarioConfig& c) {
    const auto tree = tree_from_json<T>(c.tree);
    if (c.lambdas.size() != 1) throw BadConfig("lattice takes exactly one lambda");
    const TransactionCost<T> tc(parse_number<T>(c.lambdas[0]));
    Json summary;
    summary["lambda"] = c.lambdas[0];
    summary["mode"] = is_exact_v<T> ? "exact" : "float";
    BubbleReport<T> report;
    try {
        report = bubble_report(tree, tc);
    } catch (const NoCps& e) {
        summary["cps_exists"] = false;
        summary["reason"] = e.what();
        summary["certificate"] = e.certificate;
        return {exit_code::kNoCps, render(c, summary, {}, {}), e.what()};
    }

    const auto claim = Claim<T>::fundamental(tree);
    bool all_certified = true;
    std::vector<std::vector<Json>> rows;
    for (NodeId v = 0; v < tree.size(); ++v) {
        const auto sr = superrep_price(tree, claim, tc, v);
        const bool ok = sr.certified && approx_eq<T>(sr.price, report.fundamental[v], 1e-8);
        all_certified = all_certified && ok;
        const T& s = tree.price(v);
        rows.push_back({Json(v), Json(tree.stage(v)), cell(s), cell(tc.bid(s)), cell(tc.ask(s)),
                        cell(report.fundamental[v]), cell(report.bubble[v]), cell(report.frictionless_fundamental, v),
                        cell(report.frictionless_bubble, v), cell(report.delta, v), Json(ok)});
    }
    const auto checks = bound_suite(tree, report, tc);
    bool bounds_ok = true;
    std::string failed;
    Json bounds = Json::array();
    for (const auto& b : checks) {
        bounds.push_back({{"name", b.name},
                          {"applicable", b.applicable},
                          {"passed", b.passed},
                          {"worst_margin", b.worst_margin},
                          {"worst_node", b.worst_node}});
        if (!b.passed) {
            bounds_ok = false;
            failed += " " + b.name;
        }
    }
    summary["cps_exists"] = true;
    summary["has_emm"] = report.frictionless_fundamental.has_value();
    summary["fundamental_root"] = cell(report.fundamental[0]);
    summary["bubble_root"] = cell(report.bubble[0]);
    summary["all_certified"] = all_certified;
    summary["bounds"] = bounds;
    const std::vector<std::string> header{"node",      "stage",     "S",     "bid",  "ask",      "F",
                                          "beta",      "S_star",    "beta_notc", "delta", "certified"};
    RunResult r{exit_code::kOk, render(c, summary, header, rows), ""};
    if (!all_certified) {
        r.exit_code = exit_code::kCertification;
        r.message = "superreplication price does not match the fundamental value";
    } else if (!bounds_ok) {
        r.exit_code = exit_code::kCertification;
        r.message = "bound checks failed:" + failed;
    }
    return r;
}

template <class T>
RunResult sweep_impl(const ScenarioConfig& c) {
    const auto tree = tree_from_json<T>(c.tree);
    std::vector<T> lambdas;
    for (const auto& l : c.lambdas) lambdas.push_back(parse_number<T>(l));
    const auto result = lambda_sweep(tree, lambdas);
    if (result.monotonicity_violations > 0) {
        return {exit_code::kCertification, "",
                "root bubble reappears after vanishing in " + std::to_string(result.monotonicity_violations) +
                    " entries"};
    }
    std::vector<std::vector<Json>> rows;
    Json first_free = nullptr;
    for (std::size_t i = 0; i < result.entries.size(); ++i) {
        const auto& e = result.entries[i];
        Json f = e.fundamental_root ? cell(*e.fundamental_root) : Json(nullptr);
        Json b = e.bubble_root ? cell(*e.bubble_root) : Json(nullptr);
        if (first_free.is_null() && e.bubble_root && sign(*e.bubble_root) == 0) first_free = c.lambdas[i];
        rows.push_back({Json(c.lambdas[i]), Json(e.cps_exists), f, b});
    }
    Json summary{{"mode", is_exact_v<T> ? "exact" : "float"},
                 {"monotonicity_violations", 0},
                 {"first_bubble_free_lambda", first_free}};
    return {exit_code::kOk, render(c, summary, {"lambda", "cps_exists", "F_root", "beta_root"}, rows), ""};
}

}  // namespace

template <class T>
EventTree<T> tree_from_json(const Json& doc) {
    require_keys(doc, {"stages", "nodes", "edges"}, "tree");
    const std::size_t stages = as_size(field(doc, "stages", "tree"), "stages");
    if (stages == 0) throw BadConfig("tree needs at least one stage");
    std::vector<std::vector<T>> prices(stages);
    const auto& nodes = field(doc, "nodes", "tree");
    if (!nodes.is_array()) throw BadConfig("nodes must be an array");
    std::size_t last_stage = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        const std::string where = "node " + std::to_string(i);
        require_keys(n, {"id", "stage", "price"}, where);
        if (as_size(field(n, "id", where), "id") != i) {
            throw BadConfig("node ids must run stage by stage from 0; entry " + std::to_string(i) + " has id " +
                            n.at("id").dump());
        }
        const std::size_t st = as_size(field(n, "stage", where), "stage");
        if (st >= stages) throw BadConfig(where + " has stage " + std::to_string(st) + " beyond 'stages'");
        if (st < last_stage) throw BadConfig(where + " breaks stage order");
        last_stage = st;
        prices[st].push_back(convert_scalar<T>(literal(field(n, "price", where), where + " price")));
    }
    std::vector<Edge<T>> edges;
    const auto& es = field(doc, "edges", "tree");
    if (!es.is_array()) throw BadConfig("edges must be an array");
    for (std::size_t i = 0; i < es.size(); ++i) {
        const auto& e = es[i];
        const std::string where = "edge " + std::to_string(i);
        require_keys(e, {"from", "to", "prob"}, where);
        edges.push_back({as_size(field(e, "from", where), "from"), as_size(field(e, "to", where), "to"),
                         convert_scalar<T>(literal(field(e, "prob", where), where + " prob"))});
    }
    return EventTree<T>::build(prices, edges);
}

template <class T>
Json tree_to_json(const EventTree<T>& tree) {
    Json doc;
    doc["stages"] = tree.horizon() + 1;
    doc["nodes"] = Json::array();
    for (NodeId v = 0; v < tree.size(); ++v) {
        doc["nodes"].push_back({{"id", v}, {"stage", tree.stage(v)}, {"price", to_string(tree.price(v))}});
    }
    doc["edges"] = Json::array();
    for (const auto& e : tree.edges()) doc["edges"].push_back({{"from", e.from}, {"to", e.to}, {"prob", to_string(e.prob)}});
    return doc;
}

template EventTree<double> tree_from_json(const Json&);
template EventTree<Rational> tree_from_json(const Json&);
template Json tree_to_json(const EventTree<double>&);
template Json tree_to_json(const EventTree<Rational>&);

Json read_tree_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw BadConfig("cannot open tree fixture " + path.string());
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::exception& e) {
        throw BadConfig("tree fixture " + path.string() + ": " + e.what());
    }
    return tree_to_json(tree_from_json<Rational>(doc));
}

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::Lattice: return "lattice";
        case ScenarioKind::Gbm: return "gbm";
        case ScenarioKind::Fbm: return "fbm";
        case ScenarioKind::InverseBessel: return "inverse_bessel";
        case ScenarioKind::BubbleBirth: return "bubble_birth";
    }
    return "?";
}

std::string to_string(OutputFormat format) { return format == OutputFormat::Json ? "json" : "csv"; }

ScenarioConfig ScenarioConfig::defaults_for(ScenarioKind kind) {
    ScenarioConfig c;
    c.kind = kind;
    switch (kind) {
        case ScenarioKind::Lattice: break;
        case ScenarioKind::Gbm:
            c.n_paths = 1000;
            c.grid = {0.0, 1.0, 252};
            break;
        case ScenarioKind::Fbm:
            c.n_paths = 1000;
            c.grid = {0.0, 1.0, 256};
            break;
        case ScenarioKind::InverseBessel:
            c.n_paths = 1000;
            c.grid = {0.0, 1.0, 2000};
            c.stride = 0;
            break;
        case ScenarioKind::BubbleBirth:
            c.mu = 0.3;
            c.v0 = 0.4;
            c.grid = {0.0, 1.0, 253};
            c.gamma = GammaSampler::uniform(0.0, 1.0);
            c.lambdas = {"1/100"};
            break;
    }
    return c;
}

ScenarioConfig ScenarioConfig::figure1_defaults() { return defaults_for(ScenarioKind::BubbleBirth); }

std::vector<std::string> parse_lambda_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw BadConfig("empty entry in lambda list '" + text + "'");
        out.push_back(canonical_literal(item));
    }
    if (out.empty()) throw BadConfig("empty lambda list");
    return out;
}

ScenarioConfig parse_config(const Json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw BadConfig("config must be an object");
    if (!doc.contains("kind") || !doc.at("kind").is_string()) throw BadConfig("config needs a string 'kind'");
    ScenarioConfig c = ScenarioConfig::defaults_for(parse_kind(doc.at("kind").get<std::string>()));
    require_keys(doc, keys_for(c.kind), to_string(c.kind) + " config");

    for (const auto& [key, v] : doc.items()) {
        if (key == "kind") continue;
        if (key == "seed") {
            if (!v.is_number_unsigned()) throw BadConfig("seed must be a non-negative integer");
            c.seed = v.get<std::uint64_t>();
        } else if (key == "format") {
            const auto f = v.is_string() ? v.get<std::string>() : "";
            if (f == "csv") c.format = OutputFormat::Csv;
            else if (f == "json") c.format = OutputFormat::Json;
            else throw BadConfig("format must be \"csv\" or \"json\"");
        } else if (key == "output") {
            if (!v.is_string()) throw BadConfig("output must be a path string");
            c.output = v.get<std::string>();
        } else if (key == "tree") {
            if (v.is_string()) {
                std::filesystem::path p = v.get<std::string>();
                if (p.is_relative()) p = base_dir / p;
                c.tree = read_tree_file(p);
            } else {
                c.tree = tree_to_json(tree_from_json<Rational>(v));
            }
        } else if (key == "lambda") {
            c.lambdas.clear();
            if (v.is_array()) {
                for (const auto& x : v) c.lambdas.push_back(to_string(literal(x, "lambda")));
            } else {
                c.lambdas.push_back(to_string(literal(v, "lambda")));
            }
        } else if (key == "exact") {
            c.exact = as_bool(v, key);
        } else if (key == "time_change") {
            c.time_change = as_bool(v, key);
        } else if (key == "paths") {
            c.n_paths = as_size(v, key);
        } else if (key == "stride") {
            c.stride = as_size(v, key);
        } else if (key == "mu") {
            c.mu = as_double(v, key);
        } else if (key == "sigma") {
            c.sigma = as_double(v, key);
        } else if (key == "s0") {
            c.s0 = as_double(v, key);
        } else if (key == "hurst") {
            c.hurst = as_double(v, key);
        } else if (key == "v0") {
            c.v0 = as_double(v, key);
        } else if (key == "grid") {
            require_keys(v, {"t0", "t1", "steps"}, "grid");
            if (v.contains("t0")) c.grid.t0 = as_double(v.at("t0"), "grid.t0");
            if (v.contains("t1")) c.grid.t1 = as_double(v.at("t1"), "grid.t1");
            if (v.contains("steps")) c.grid.steps = as_size(v.at("steps"), "grid.steps");
        } else if (key == "gamma") {
            require_keys(v, {"kind", "low", "high", "value"}, "gamma");
            const std::string k = v.contains("kind") && v.at("kind").is_string() ? v.at("kind").get<std::string>() : "";
            if (k == "uniform") {
                if (v.contains("value")) throw BadConfig("uniform gamma takes 'low' and 'high'");
                c.gamma = GammaSampler::uniform(v.contains("low") ? as_double(v.at("low"), "gamma.low") : 0.0,
                                                v.contains("high") ? as_double(v.at("high"), "gamma.high") : 1.0);
            } else if (k == "constant") {
                if (v.contains("low") || v.contains("high")) throw BadConfig("constant gamma takes 'value'");
                c.gamma = GammaSampler::constant(as_double(field(v, "value", "gamma"), "gamma.value"));
            } else {
                throw BadConfig("gamma.kind must be \"uniform\" or \"constant\"");
            }
        }
    }
    validate(c);
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw BadConfig("cannot open config " + path.string());
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::exception& e) {
        throw BadConfig("config " + path.string() + ": " + e.what());
    }
    return parse_config(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

Json config_to_json(const ScenarioConfig& c) {
    Json j;
    j["kind"] = to_string(c.kind);
    const auto& keys = keys_for(c.kind);
    auto grid = [&] { return Json{{"t0", c.grid.t0}, {"t1", c.grid.t1}, {"steps", c.grid.steps}}; };
    if (keys.count("tree")) j["tree"] = c.tree;
    if (keys.count("lambda") && !c.lambdas.empty()) {
        if (c.lambdas.size() == 1) {
            j["lambda"] = c.lambdas[0];
        } else {
            j["lambda"] = c.lambdas;
        }
    }
    if (keys.count("exact")) j["exact"] = c.exact;
    if (keys.count("hurst")) j["hurst"] = c.hurst;
    if (keys.count("mu")) j["mu"] = c.mu;
    if (keys.count("sigma")) j["sigma"] = c.sigma;
    if (keys.count("v0")) j["v0"] = c.v0;
    if (keys.count("s0")) j["s0"] = c.s0;
    if (keys.count("gamma")) {
        if (c.gamma.kind == GammaSampler::Kind::Constant) {
            j["gamma"] = {{"kind", "constant"}, {"value", c.gamma.a}};
        } else {
            j["gamma"] = {{"kind", "uniform"}, {"low", c.gamma.a}, {"high", c.gamma.b}};
        }
    }
    if (keys.count("time_change")) j["time_change"] = c.time_change;
    if (keys.count("grid")) j["grid"] = grid();
    if (keys.count("paths")) j["paths"] = c.n_paths;
    if (keys.count("stride")) j["stride"] = c.stride;
    j["seed"] = c.seed;
    j["format"] = to_string(c.format);
    return j;
}

void validate(const ScenarioConfig& c) {
    for (const auto& l : c.lambdas) check_lambda(l);
    if (c.kind == ScenarioKind::Lattice) {
        if (c.tree.is_null()) throw BadConfig("lattice config needs a 'tree'");
        if (c.lambdas.empty()) throw BadConfig("lattice config needs 'lambda'");
        return;
    }
    c.grid.validate();
    if (c.n_paths == 0) throw BadConfig("paths must be positive");
    if (c.lambdas.size() > 1) throw BadConfig(to_string(c.kind) + " takes a single lambda");
    switch (c.kind) {
        case ScenarioKind::Gbm:
            if (!(c.sigma >= 0)) throw BadConfig("sigma must be non-negative");
            if (!(c.s0 > 0)) throw BadConfig("s0 must be positive");
            break;
        case ScenarioKind::Fbm:
            if (!(c.hurst > 0 && c.hurst < 1)) throw BadConfig("hurst must lie in (0,1)");
            if (c.grid.t0 != 0) throw BadConfig("fbm grid must start at 0");
            break;
        case ScenarioKind::InverseBessel:
            if (c.grid.t0 != 0) throw BadConfig("inverse_bessel grid must start at 0");
            break;
        case ScenarioKind::BubbleBirth:
            if (!(c.v0 > 0)) throw BadConfig("v0 must be positive");
            if (!(c.s0 > 0)) throw BadConfig("s0 must be positive");
            if (c.grid.t0 < 0 || c.grid.t1 > 1) throw BadConfig("bubble_birth grid must lie in [0,1]");
            c.gamma.validate();
            break;
        case ScenarioKind::Lattice: break;
    }
}

RunResult run_lattice(const ScenarioConfig& c) {
    if (c.kind != ScenarioKind::Lattice) throw BadConfig("lattice needs kind lattice");
    validate(c);
    return c.exact ? lattice_impl<Rational>(c) : lattice_impl<double>(c);
}

RunResult run_sweep(const ScenarioConfig& c) {
    if (c.kind != ScenarioKind::Lattice) throw BadConfig("sweep needs kind lattice");
    validate(c);
    return c.exact ? sweep_impl<Rational>(c) : sweep_impl<double>(c);
}

RunResult run_figure1(const ScenarioConfig& c) {
    if (c.kind != ScenarioKind::BubbleBirth) throw BadConfig("figure1 needs kind bubble_birth");
    validate(c);
    if (c.n_paths != 1) throw BadConfig("figure1 draws exactly one path");
    if (c.stride != 1) throw BadConfig("figure1 records every step");
    if (c.grid.t0 != 0 || c.grid.t1 != 1) throw BadConfig("figure1 runs on the unit interval");
    const double lambda = single_lambda(c);
    const auto e = simulate_bubble_birth(c.mu, c.v0, c.gamma, c.grid, 1, c.seed, c.s0);
    const double gamma = e.aux.at("gamma")[0];
    std::vector<std::vector<Json>> rows;
    Json birth = nullptr;
    // the point t = 1 is not part of [0,1)
    for (std::size_t k = 0; k < c.grid.steps; ++k) {
        const double t = e.times[k], s = e.at(0, k);
        const auto v = bubble_birth_fundamental(s, lambda, gamma, t);
        if (birth.is_null() && gamma <= t) birth = k;
        rows.push_back({Json(t), Json(s), Json((1 + lambda) * s), Json(v.fundamental), Json(v.bubble)});
    }
    Json summary{{"gamma", gamma}, {"lambda", c.lambdas[0]}, {"birth_index", birth}};
    return {exit_code::kOk, render(c, summary, {"t", "S", "ask", "F", "beta"}, rows), ""};
}

RunResult run_simulate(const ScenarioConfig& c) {
    if (c.kind == ScenarioKind::Lattice) throw BadConfig("simulate needs a process kind");
    validate(c);
    const Recording rec{c.stride};
    PathEnsemble e;
    Json summary{{"kind", to_string(c.kind)}};
    switch (c.kind) {
        case ScenarioKind::Gbm: e = simulate_gbm(c.mu, c.sigma, c.s0, c.grid, c.n_paths, c.seed, rec); break;
        case ScenarioKind::Fbm:
            e = simulate_fbm_model(c.hurst, c.mu, c.grid, c.n_paths, c.seed, rec);
            if (c.time_change) e = time_change(e);
            break;
        case ScenarioKind::InverseBessel: e = simulate_inverse_bessel(c.grid, c.n_paths, c.seed, rec); break;
        case ScenarioKind::BubbleBirth:
            e = simulate_bubble_birth(c.mu, c.v0, c.gamma, c.grid, c.n_paths, c.seed, c.s0, rec);
            break;
        case ScenarioKind::Lattice: break;
    }
    const auto [sample, flagged] = unflagged_terminal(e);
    const auto est = mc_estimate(sample);
    summary["terminal"] = estimate_json(est);
    if (c.kind == ScenarioKind::InverseBessel) summary["flagged"] = flagged;
    if (c.kind == ScenarioKind::InverseBessel) {
        const double expected = bessel_mean(c.grid.t1);
        summary["closed_form_mean"] = expected;
        summary["covers_closed_form"] = est.covers(expected);
        if (!c.lambdas.empty()) {
            const double lambda = single_lambda(c);
            summary["delta"] = bessel_delta(lambda, c.grid.t1);
            summary["delta_mc"] = (1 + lambda) * (1 - est.mean);
        }
    }

    if (c.format == OutputFormat::Json) {
        Json doc;
        doc["config"] = config_to_json(c);
        doc["summary"] = summary;
        doc["times"] = e.times;
        doc["paths"] = Json::array();
        for (std::size_t p = 0; p < e.n_paths; ++p) doc["paths"].push_back(e.path(p));
        doc["aux"] = Json::object();
        for (const auto& [k, v] : e.aux) doc["aux"][k] = v;
        return {exit_code::kOk, doc.dump(2) + "\n", ""};
    }
    std::ostringstream out;
    write_columns(out, e, {{"config", config_to_json(c).dump()}, {"summary", summary.dump()}});
    return {exit_code::kOk, out.str(), ""};
}

RunResult run_command(const std::string& command, const ScenarioConfig& config) {
    try {
        if (command == "lattice") return run_lattice(config);
        if (command == "sweep") return run_sweep(config);
        if (command == "figure1") return run_figure1(config);
        if (command == "simulate") return run_simulate(config);
        return {exit_code::kConfig, "", "unknown command '" + command + "'"};
    } catch (const BadConfig& e) {
        return {exit_code::kConfig, "", std::string("config error: ") + e.what()};
    } catch (const InvalidTree& e) {
        return {exit_code::kConfig, "", std::string("invalid tree: ") + e.what()};
    } catch (const NoCps& e) {
        return {exit_code::kNoCps, "", e.what()};
    } catch (const NoEmm& e) {
        return {exit_code::kNoCps, "", std::string("no equivalent martingale measure: ") + e.what()};
    } catch (const std::exception& e) {
        return {exit_code::kCertification, "", std::string("internal failure: ") + e.what()};
    }
}

std::string resolve_output(const ScenarioConfig& config, const std::string& command) {
    if (!config.output.empty()) return config.output;
    if (const char* dir = std::getenv(kOutDirEnv); dir && *dir) {
        return (std::filesystem::path(dir) / (command + "." + to_string(config.format))).string();
    }
    return "-";
}

}  // namespace tcbubble
