#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "support.hpp"
#include "tcbubble/io.hpp"

using namespace tcbubble;
using support::q;

namespace {

const std::filesystem::path kFixtures = TCBUBBLE_FIXTURE_DIR;

ScenarioConfig lattice_config(const std::string& fixture, const std::string& lambda, bool exact = true) {
    return parse_config(Json{{"kind", "lattice"}, {"tree", fixture}, {"lambda", lambda}, {"exact", exact}}, kFixtures);
}

Json as_json(ScenarioConfig c, RunResult (*run)(const ScenarioConfig&)) {
    c.format = OutputFormat::Json;
    const auto r = run(c);
    EXPECT_FALSE(r.document.empty()) << r.message;
    return Json::parse(r.document);
}

std::string embedded_config(const std::string& csv) {
    const std::string tag = "# config: ";
    EXPECT_EQ(csv.rfind(tag, 0), 0u);
    return csv.substr(tag.size(), csv.find('\n') - tag.size());
}

}  // namespace

TEST(TreeFixture, RoundTrip) {
    const auto t = make_binomial<Rational>(100, 120, 80, q(1, 2));
    const auto back = tree_from_json<Rational>(tree_to_json(t));
    EXPECT_EQ(back.size(), 3u);
    EXPECT_EQ(back.price(1), 120);
    EXPECT_EQ(back.prob(2), q(1, 2));
    EXPECT_EQ(tree_to_json(back), tree_to_json(t));
    EXPECT_EQ(read_tree_file(kFixtures / "binomial.json"), tree_to_json(t));
}

TEST(TreeFixture, NumbersAreReadExactly) {
    const Json doc = Json::parse(R"({"stages": 2,
        "nodes": [{"id": 0, "stage": 0, "price": 1}, {"id": 1, "stage": 1, "price": 0.1},
                  {"id": 2, "stage": 1, "price": "19/10"}],
        "edges": [{"from": 0, "to": 1, "prob": "0.5"}, {"from": 0, "to": 2, "prob": 0.5}]})");
    const auto t = tree_from_json<Rational>(doc);
    EXPECT_EQ(t.price(1), q(1, 10));
    EXPECT_EQ(t.price(2), q(19, 10));
    EXPECT_EQ(t.prob(1), q(1, 2));
    EXPECT_EQ(tree_from_json<double>(doc).price(1), 0.1);
}

TEST(TreeFixture, RejectsMalformedDocuments) {
    Json doc = read_tree_file(kFixtures / "binomial.json");
    Json extra = doc;
    extra["comment"] = "x";
    EXPECT_THROW(tree_from_json<Rational>(extra), BadConfig);
    Json shuffled = doc;
    std::swap(shuffled["nodes"][1]["id"], shuffled["nodes"][2]["id"]);
    EXPECT_THROW(tree_from_json<Rational>(shuffled), BadConfig);
    Json bad_prob = doc;
    bad_prob["edges"][0]["prob"] = "1/0";
    EXPECT_THROW(tree_from_json<Rational>(bad_prob), BadConfig);
    Json bad_sum = doc;
    bad_sum["edges"][0]["prob"] = "1/3";
    EXPECT_THROW(tree_from_json<Rational>(bad_sum), InvalidTree);
    EXPECT_THROW(read_tree_file(kFixtures / "missing.json"), BadConfig);
}

TEST(Config, UnknownAndForeignKeysRejected) {
    const Json base{{"kind", "lattice"}, {"tree", "chain.json"}, {"lambda", "1/2"}};
    EXPECT_NO_THROW(parse_config(base, kFixtures));
    for (const auto& [key, value] : std::vector<std::pair<std::string, Json>>{
             {"colour", "red"}, {"sigma", 0.2}, {"paths", 10}, {"gamma", Json::object()}}) {
        Json doc = base;
        doc[key] = value;
        EXPECT_THROW(parse_config(doc, kFixtures), BadConfig) << key;
    }
    EXPECT_THROW(parse_config(Json{{"kind", "gbm"}, {"grid", {{"dt", 0.1}}}}), BadConfig);
    EXPECT_THROW(parse_config(Json{{"kind", "heston"}}), BadConfig);
    EXPECT_THROW(parse_config(Json{{"kind", "bubble_birth"}, {"gamma", {{"kind", "uniform"}, {"value", 1}}}}),
                 BadConfig);
}

TEST(Config, PreconditionsChecked) {
    EXPECT_THROW(lattice_config("chain.json", "1"), BadConfig);
    EXPECT_THROW(lattice_config("chain.json", "0"), BadConfig);
    EXPECT_THROW(parse_config(Json{{"kind", "lattice"}, {"tree", "chain.json"}}, kFixtures), BadConfig);
    EXPECT_THROW(parse_config(Json{{"kind", "fbm"}, {"hurst", 1.0}}), BadConfig);
    EXPECT_THROW(parse_config(Json{{"kind", "gbm"}, {"paths", 0}}), BadConfig);
    EXPECT_THROW(parse_config(Json{{"kind", "gbm"}, {"seed", -3}}), BadConfig);
    EXPECT_THROW(parse_config(Json{{"kind", "bubble_birth"}, {"grid", {{"t1", 2.0}}}}), BadConfig);
    EXPECT_THROW(parse_lambda_list(""), BadConfig);
    EXPECT_THROW(parse_lambda_list("0.1,,0.2"), BadConfig);
    EXPECT_EQ(parse_lambda_list("0.1,1/4"), (std::vector<std::string>{"1/10", "1/4"}));
}

TEST(Config, ResolvedConfigRoundTrips) {
    std::vector<ScenarioConfig> configs{lattice_config("martingale.json", "0.1"), ScenarioConfig::figure1_defaults()};
    for (auto k : {ScenarioKind::Gbm, ScenarioKind::Fbm, ScenarioKind::InverseBessel}) {
        configs.push_back(ScenarioConfig::defaults_for(k));
    }
    configs[1].gamma = GammaSampler::constant(1.0);
    for (const auto& c : configs) {
        const Json j = config_to_json(c);
        EXPECT_EQ(config_to_json(parse_config(j)), j) << j.dump();
    }
}

TEST(Config, OutputDestination) {
    auto c = ScenarioConfig::figure1_defaults();
    ::unsetenv(kOutDirEnv);
    EXPECT_EQ(resolve_output(c, "figure1"), "-");
    ::setenv(kOutDirEnv, "/tmp/tcb", 1);
    EXPECT_EQ(resolve_output(c, "figure1"), "/tmp/tcb/figure1.csv");
    c.format = OutputFormat::Json;
    EXPECT_EQ(resolve_output(c, "sweep"), "/tmp/tcb/sweep.json");
    c.output = "x.json";
    EXPECT_EQ(resolve_output(c, "sweep"), "x.json");
    ::unsetenv(kOutDirEnv);
}

TEST(RunLattice, MartingaleFixtureHasNoBubble) {
    for (bool exact : {true, false}) {
        const auto doc = as_json(lattice_config("martingale.json", "1/10", exact), run_lattice);
        EXPECT_TRUE(doc["summary"]["all_certified"].get<bool>());
        EXPECT_TRUE(doc["summary"]["has_emm"].get<bool>());
        ASSERT_EQ(doc["rows"].size(), 7u);
        for (const auto& row : doc["rows"]) {
            if (exact) {
                EXPECT_EQ(row["beta"], "0");
                EXPECT_EQ(row["delta"], "0");
            } else {
                EXPECT_NEAR(row["beta"].get<double>(), 0, 1e-9);
            }
        }
    }
}

TEST(RunLattice, ChainFixture) {
    const auto no_cps = run_lattice(lattice_config("chain.json", "1/5"));
    EXPECT_EQ(no_cps.exit_code, exit_code::kNoCps);
    EXPECT_NE(no_cps.message.find("consistent price system"), std::string::npos);
    EXPECT_NE(no_cps.document.find("\"certificate\""), std::string::npos);

    const auto doc = as_json(lattice_config("chain.json", "1/2"), run_lattice);
    EXPECT_EQ(doc["rows"][0]["F"], "3/4");
    EXPECT_EQ(doc["rows"][0]["beta"], "3/4");
    EXPECT_TRUE(doc["rows"][0]["S_star"].is_null());
    EXPECT_FALSE(doc["summary"]["has_emm"].get<bool>());
}

TEST(RunLattice, EmbeddedConfigReproducesFile) {
    const auto first = run_lattice(lattice_config("binomial.json", "1/20"));
    ASSERT_EQ(first.exit_code, 0) << first.message;
    const auto again = run_lattice(parse_config(Json::parse(embedded_config(first.document))));
    EXPECT_EQ(again.document, first.document);
}

TEST(RunSweep, Fixtures) {
    auto mart = lattice_config("martingale.json", "1/10");
    mart.lambdas = {"1/100", "1/10", "1/2"};
    for (const auto& row : as_json(mart, run_sweep)["rows"]) EXPECT_EQ(row["beta_root"], "0");

    auto chain = lattice_config("chain.json", "1/2");
    chain.lambdas = {"1/5", "2/5", "1/2", "3/5"};
    const auto rows = as_json(chain, run_sweep)["rows"];
    EXPECT_FALSE(rows[0]["cps_exists"].get<bool>());
    EXPECT_EQ(rows[1]["beta_root"], "7/10");
    EXPECT_EQ(rows[3]["beta_root"], "4/5");

    chain.lambdas.clear();
    EXPECT_EQ(run_command("sweep", chain).exit_code, exit_code::kConfig);
}

TEST(RunFigure1, FundamentalValueDropsAtGamma) {
    auto c = ScenarioConfig::figure1_defaults();
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        c.seed = seed;
        const auto doc = as_json(c, run_figure1);
        const double gamma = doc["summary"]["gamma"].get<double>();
        const double lambda = 0.01;
        ASSERT_EQ(doc["rows"].size(), 253u);
        for (const auto& row : doc["rows"]) {
            const double t = row["t"].get<double>(), s = row["S"].get<double>();
            EXPECT_LT(t, 1.0);
            if (t < gamma) {
                EXPECT_EQ(row["F"].get<double>(), (1 + lambda) * s);
                EXPECT_EQ(row["beta"].get<double>(), 0);
            } else {
                EXPECT_EQ(row["F"].get<double>(), 0);
                EXPECT_EQ(row["beta"].get<double>(), (1 + lambda) * s);
            }
        }
    }
}

TEST(RunFigure1, GammaOneKeepsTheFundamentalValue) {
    auto c = ScenarioConfig::figure1_defaults();
    c.gamma = GammaSampler::constant(1.0);
    c.seed = 77;
    const auto doc = as_json(c, run_figure1);
    EXPECT_TRUE(doc["summary"]["birth_index"].is_null());
    const auto gbm = simulate_gbm(0.3, 0.4, 1.0, c.grid, 1, 77);
    for (std::size_t k = 0; k < doc["rows"].size(); ++k) {
        const auto& row = doc["rows"][k];
        EXPECT_EQ(row["S"].get<double>(), gbm.at(0, k));
        EXPECT_EQ(row["beta"].get<double>(), 0);
    }
}

TEST(RunFigure1, Deterministic) {
    auto c = ScenarioConfig::figure1_defaults();
    c.seed = 9;
    const auto a = run_figure1(c), b = run_figure1(c);
    EXPECT_EQ(a.document, b.document);
    const auto again = run_figure1(parse_config(Json::parse(embedded_config(a.document))));
    EXPECT_EQ(again.document, a.document);
    c.n_paths = 2;
    EXPECT_EQ(run_command("figure1", c).exit_code, exit_code::kConfig);
}

TEST(RunSimulate, InverseBesselSummary) {
    auto c = ScenarioConfig::defaults_for(ScenarioKind::InverseBessel);
    c.grid.steps = 20;
    c.n_paths = 20000;
    c.lambdas = {"1/20"};
    const auto doc = as_json(c, run_simulate);
    EXPECT_TRUE(doc["summary"]["covers_closed_form"].get<bool>());
    EXPECT_EQ(doc["times"].size(), 2u);
    EXPECT_EQ(doc["paths"].size(), 20000u);
    EXPECT_NEAR(doc["summary"]["delta"].get<double>(), 0.333176033256, 1e-9);
}

TEST(RunSimulate, CsvAndKinds) {
    auto g = ScenarioConfig::defaults_for(ScenarioKind::Gbm);
    g.n_paths = 3;
    g.grid.steps = 4;
    const auto r = run_simulate(g);
    ASSERT_EQ(r.exit_code, 0);
    EXPECT_EQ(r.document.rfind("# config: ", 0), 0u);
    EXPECT_NE(r.document.find("\nt,p0,p1,p2\n"), std::string::npos);
    EXPECT_EQ(run_simulate(parse_config(Json::parse(embedded_config(r.document)))).document, r.document);

    auto f = ScenarioConfig::defaults_for(ScenarioKind::Fbm);
    f.n_paths = 5;
    f.time_change = true;
    const auto doc = as_json(f, run_simulate);
    EXPECT_DOUBLE_EQ(doc["times"].back().get<double>(), std::acos(-1.0) / 2);
    EXPECT_EQ(doc["aux"]["hit_index"].size(), 5u);

    EXPECT_EQ(run_command("simulate", lattice_config("chain.json", "1/2")).exit_code, exit_code::kConfig);
    EXPECT_EQ(run_command("plot", g).exit_code, exit_code::kConfig);
}
