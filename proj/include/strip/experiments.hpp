#pragma once

#include "strip/env.hpp"
#include "strip/rng.hpp"
#include "strip/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

// Scenario configuration, seed management, task orchestration with
// deterministic report bundles, and the cross-checking validation suite.

namespace strip::experiments {

// strip::derive_seed(master, stream_label, replica_index) is the seed
// derivation contract (schema version 1); re-exported here because every
// experiment draws its randomness through it.
using strip::derive_seed;

inline constexpr int kSchemaVersion = 1;

struct Budgets {
    long replicas = 0;      // 0 = task default
    long horizon = 0;
    long chain_length = 0;
    long letters = 0;       // spatial speed window length
    long n_max = 0;         // diagnostics product length
    long lag_cap = 0;       // 0 = sqrt(horizon)
    long excursions = 0;    // q_reference replicas
    long steps = 0;         // evfp trajectory length
    long guard = 50;
    int radius = 0;
    int istar_budget = 2000;
};

struct Tolerances {
    double series = 1e-12;
    double pi = 1e-10;
};

struct ScenarioConfig {
    std::string task;  // classify | speed | moments | lln | clt | renewal | evfp | validate
    env::ModelPtr model;
    std::uint64_t master_seed = 0;
    std::string out_dir;
    Budgets budgets;
    Tolerances tolerances;
    std::string estimator = "ensemble";  // speed task: ensemble | spatial
    std::string level = "fast";          // validate task

    void validate() const;

    // Parses the declarative config document; the model may be inline
    // ("model": {...}) or referenced ("model_file": "path").
    static ScenarioConfig from_json(const std::string& text, const std::string& base_dir = "");
    static ScenarioConfig from_file(const std::string& path);
};

struct ReportBundle {
    std::string summary_json;  // canonical (sorted-key) serialization
    std::vector<std::pair<std::string, std::string>> files;  // name -> contents
    int exit_code = 0;

    void write(const std::string& dir) const;
};

// Dispatches the configured task; a pure function of the config (all
// randomness flows through derive_seed from master_seed).
ReportBundle run_scenario(const ScenarioConfig& config);

enum class ValidateLevel { Fast, Full };

struct ValidationRow {
    std::string name;
    bool pass = false;
    std::string achieved;
    std::string required;
    double seconds = 0.0;
    std::string detail;
};

struct ValidationTable {
    std::vector<ValidationRow> rows;
    bool all_pass() const {
        for (const auto& r : rows)
            if (!r.pass) return false;
        return true;
    }
};

// The oracle battery.  Full level runs one row per acceptance criterion at
// the stated budgets; fast level is the same battery at smoke scale with
// correspondingly widened Monte Carlo tolerances.
ValidationTable validate_suite(ValidateLevel level, std::uint64_t master_seed);

std::string to_string(const ValidationTable& table);

}  // namespace strip::experiments
