#pragma once

// Scenario configuration, tree fixtures and the command drivers.
//
// Tree fixture (JSON):
//   {"stages": 2,
//    "nodes": [{"id": 0, "stage": 0, "price": "100"}, ...],
//    "edges": [{"from": 0, "to": 1, "prob": "1/2"}, ...]}
// `stages` counts the time levels including the root. Node ids run stage by
// stage from 0. Numbers may be "p/q" strings, decimal strings or JSON numbers;
// JSON numbers are read through their shortest decimal form.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcbubble/lattice.hpp"
#include "tcbubble/processes.hpp"

namespace tcbubble {

using Json = nlohmann::ordered_json;

template <class T>
EventTree<T> tree_from_json(const Json& doc);
template <class T>
Json tree_to_json(const EventTree<T>& tree);
/// Reads and canonicalises a fixture file. Throws BadConfig.
Json read_tree_file(const std::filesystem::path& path);

enum class ScenarioKind { Lattice, Gbm, Fbm, InverseBessel, BubbleBirth };
enum class OutputFormat { Csv, Json };

std::string to_string(ScenarioKind kind);
std::string to_string(OutputFormat format);

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::Lattice;
    Json tree;                         // inline fixture, lattice only
    std::vector<std::string> lambdas;  // exact literals
    bool exact = false;
    std::uint64_t seed = 1;
    std::size_t n_paths = 1;
    TimeGrid grid;
    std::size_t stride = 1;
    double mu = 0.0;
    double sigma = 0.2;
    double s0 = 1.0;
    double hurst = 0.5;
    double v0 = 0.4;
    bool time_change = false;
    GammaSampler gamma;
    OutputFormat format = OutputFormat::Csv;
    std::string output;  // destination; not part of the embedded config

    /// Pinned Figure 1 parameters: 253 daily steps on [0,1), mu 0.3,
    /// v0 0.4, gamma uniform on (0,1], one path.
    static ScenarioConfig figure1_defaults();
    static ScenarioConfig defaults_for(ScenarioKind kind);
};

/// Parses a config document. Unknown keys and keys that do not belong to the
/// scenario kind are rejected. A string `tree` is a fixture path resolved
/// against `base_dir`. Throws BadConfig.
ScenarioConfig parse_config(const Json& doc, const std::filesystem::path& base_dir = ".");
ScenarioConfig load_config(const std::filesystem::path& path);
/// The resolved config, tree inlined. parse_config(config_to_json(c)) == c
/// up to the output destination.
Json config_to_json(const ScenarioConfig& config);
/// Checks the target module's preconditions. Throws BadConfig.
void validate(const ScenarioConfig& config);

/// Splits "0.1,0.2" into literals and checks each parses.
std::vector<std::string> parse_lambda_list(const std::string& text);

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kConfig = 1;
inline constexpr int kNoCps = 2;
inline constexpr int kCertification = 3;
}  // namespace exit_code

struct RunResult {
    int exit_code = exit_code::kOk;
    std::string document;  // empty when nothing should be written
    std::string message;   // for stderr
};

/// Per-node bubble table with superreplication certificates and the bound
/// suite. Exit 2 on NoCps (the document carries the certificate), 3 when a
/// certificate or bound check fails.
RunResult run_lattice(const ScenarioConfig& config);
/// Root bubble per lambda. Exit 3 without a document when the no-bubble
/// property is not monotone in lambda.
RunResult run_sweep(const ScenarioConfig& config);
/// One bubble-birth path with columns t, S, (1+lambda)S, F, beta.
RunResult run_figure1(const ScenarioConfig& config);
/// Path ensembles for the gbm, fbm, inverse_bessel and bubble_birth kinds.
RunResult run_simulate(const ScenarioConfig& config);

/// Dispatches "lattice", "sweep", "figure1" or "simulate" and maps errors to
/// exit codes: BadConfig and malformed trees 1, NoCps and NoEmm 2, any other
/// failure 3.
RunResult run_command(const std::string& command, const ScenarioConfig& config);

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "TCBUBBLE_OUT_DIR";

/// Explicit destination, else $TCBUBBLE_OUT_DIR/<command>.<ext>, else "-"
/// (stdout).
std::string resolve_output(const ScenarioConfig& config, const std::string& command);

}  // namespace tcbubble
