// Command-line driver: lattice, simulate, figure1, sweep.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "tcbubble/io.hpp"

using namespace tcbubble;

namespace {

struct Flags {
    std::string config;
    std::string lambda;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::string out;
    std::string format;
    bool exact = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "scenario config (JSON)");
    cmd->add_option("--lambda", f.lambda, "transaction cost, or a comma-separated ascending list for sweep");
    cmd->add_option("--seed", f.seed, "RNG seed");
    cmd->add_option("--paths", f.paths, "number of simulated paths");
    cmd->add_option("--out", f.out, std::string("output file, '-' for stdout (default: $") + kOutDirEnv + "/<command>.<format>)");
    cmd->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_flag("--exact", f.exact, "exact rational arithmetic (lattice scenarios)");
}

ScenarioConfig resolve(const std::string& command, const Flags& f) {
    ScenarioConfig c;
    if (!f.config.empty()) {
        c = load_config(f.config);
    } else if (command == "figure1") {
        c = ScenarioConfig::figure1_defaults();
    } else {
        throw BadConfig(command + " needs --config");
    }
    if (!f.lambda.empty()) c.lambdas = parse_lambda_list(f.lambda);
    if (f.seed) c.seed = *f.seed;
    if (f.paths) c.n_paths = *f.paths;
    if (!f.out.empty()) c.output = f.out;
    if (!f.format.empty()) c.format = f.format == "json" ? OutputFormat::Json : OutputFormat::Csv;
    if (f.exact) {
        if (c.kind != ScenarioKind::Lattice) throw BadConfig("--exact applies to lattice scenarios");
        c.exact = true;
    }
    validate(c);
    return c;
}

int run(const std::string& command, const Flags& f) {
    ScenarioConfig config;
    try {
        config = resolve(command, f);
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_code::kConfig;
    }
    const RunResult r = run_command(command, config);
    if (!r.document.empty()) {
        const std::string dest = resolve_output(config, command);
        if (dest == "-") {
            std::cout << r.document;
        } else {
            const std::filesystem::path p(dest);
            if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
            std::ofstream out(p, std::ios::binary);
            if (!(out << r.document)) {
                std::cerr << "cannot write " << dest << "\n";
                return exit_code::kConfig;
            }
        }
    }
    if (!r.message.empty()) std::cerr << r.message << "\n";
    return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asset price bubbles under proportional transaction costs"};
    app.require_subcommand(1);
    Flags flags;
    std::string chosen;
    for (const char* name : {"lattice", "simulate", "figure1", "sweep"}) {
        static const std::map<std::string, std::string> help{
            {"lattice", "per-node fundamental values and bubbles on an event tree"},
            {"simulate", "simulate a continuous-time price model"},
            {"figure1", "one bubble-birth path with its fundamental value"},
            {"sweep", "root bubble across an ascending list of transaction costs"}};
        auto* cmd = app.add_subcommand(name, help.at(name));
        add_flags(cmd, flags);
        cmd->callback([&chosen, name] { chosen = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_code::kConfig;
    }
    return run(chosen, flags);
}
