#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "occuflux/params.hpp"
#include "occuflux/test_functions.hpp"

namespace occuflux {

// One experiment description, loaded from a JSON file. Seeds are mandatory:
// reruns of the same file must produce byte-identical artifacts.
struct ExperimentConfig {
    std::string kind;  // fluctuations | family | veqn | covariance | assumptions | verify
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    int threads = 0;
    SystemParams params;
    std::vector<GaussianBump> tests;
    std::vector<double> grid;
    std::size_t replicas = 0;
    std::string centering = "analytic";
    std::vector<double> x0;
    std::vector<double> times;
    std::vector<std::pair<double, double>> chi;  // time profile nodes for veqn
    std::vector<int> only;                       // verify: criterion subset
};

// Strict parse: unknown keys, wrong types and kind-specific omissions are
// reported with the offending field named. Semantic range checks go through
// validate_params and the test-function validators.
ExperimentConfig parse_config(const std::string& json_text);

// The config JSON shape, as a JSON document of field descriptions.
std::string config_schema();

// Deterministic re-serialization with defaults materialized; equal configs
// canonicalize to equal strings.
std::string canonical_config(const ExperimentConfig& cfg);

// FNV-1a over the canonical form; names artifacts {kind}-{hash:016x}.*.
std::uint64_t config_hash(const ExperimentConfig& cfg);

struct RunResult {
    std::vector<std::string> artifacts;  // paths written, manifest last
    std::string summary;
    bool ok = true;  // false when a verify criterion failed
};

// Runs the experiment and writes its artifacts plus a manifest into
// cfg.out_dir (created if missing). progress, when non-null, receives
// human-readable status lines as the run advances.
RunResult run_experiment(const ExperimentConfig& cfg, std::ostream* progress = nullptr);

}  // namespace occuflux
