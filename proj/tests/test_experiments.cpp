#include "strip/experiments.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unordered_set>

using namespace strip;
namespace ex = strip::experiments;

namespace {

const char* kModelJson = R"({
  "kind": "iid", "d": 1, "epsilon_floor": 0.5,
  "support": [
    {"p": [0.6666666666666666], "r": [0.0], "q": [0.3333333333333334]}
  ],
  "weights": [1.0]
})";

std::string config_json(const std::string& task, const std::string& extra = "") {
    return std::string(R"({"task": ")") + task + R"(", "master_seed": 42, "model": )" + kModelJson +
           extra + "}";
}

}  // namespace

TEST_CASE("derive_seed is a stable documented mix") {
    CHECK(derive_seed(1, "alpha", 0) == derive_seed(1, "alpha", 0));
    CHECK(derive_seed(1, "alpha", 0) != derive_seed(1, "beta", 0));
    CHECK(derive_seed(1, "alpha", 0) != derive_seed(1, "alpha", 1));
    CHECK(derive_seed(1, "alpha", 0) != derive_seed(2, "alpha", 0));
}

TEST_CASE("derived seeds from consecutive indices never collide") {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(2000000);
    for (std::uint64_t i = 0; i < 1000000; ++i) {
        CHECK(seen.insert(derive_seed(7, "collision-scan", i)).second);
    }
}

TEST_CASE("config parsing and validation") {
    const auto cfg = ex::ScenarioConfig::from_json(config_json("classify"));
    CHECK(cfg.task == "classify");
    CHECK(cfg.master_seed == 42);
    CHECK(cfg.model->d == 1);
    CHECK_NOTHROW(cfg.validate());

    CHECK_THROWS_AS(ex::ScenarioConfig::from_json(config_json("frobnicate")).validate(), Error);
    CHECK_THROWS_AS(ex::ScenarioConfig::from_json("{not json"), Error);
    auto no_model = ex::ScenarioConfig::from_json(R"({"task": "speed"})");
    CHECK_THROWS_AS(no_model.validate(), Error);
}

TEST_CASE("config model_file resolution") {
    const auto dir = std::filesystem::temp_directory_path() / "strip_cfg_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream m(dir / "model.json");
        m << kModelJson;
    }
    {
        std::ofstream c(dir / "config.json");
        c << R"({"task": "classify", "master_seed": 1, "model_file": "model.json"})";
    }
    const auto cfg = ex::ScenarioConfig::from_file((dir / "config.json").string());
    CHECK(cfg.model != nullptr);
    CHECK(cfg.model->d == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("classify scenario on the scalar chain") {
    const auto cfg = ex::ScenarioConfig::from_json(config_json("classify"));
    const auto bundle = ex::run_scenario(cfg);
    const auto doc = nlohmann::json::parse(bundle.summary_json);
    CHECK(doc["lambda"]["verdict"] == "transient-right");
    CHECK(std::abs(doc["lambda"]["mean"].get<double>() + 0.6931471805599453) < 1e-9);
    CHECK(doc["conditions"]["c2"] == true);
    CHECK(doc["schema_version"] == 1);
    CHECK(doc["model_hash"].is_string());
    bool has_rates_csv = false;
    for (const auto& [name, contents] : bundle.files)
        has_rates_csv = has_rates_csv || name == "diagnostic_rates.csv";
    CHECK(has_rates_csv);
}

TEST_CASE("speed scenario hits the closed form") {
    const auto cfg =
        ex::ScenarioConfig::from_json(config_json("speed", R"(, "budgets": {"replicas": 32})"));
    const auto bundle = ex::run_scenario(cfg);
    const auto doc = nlohmann::json::parse(bundle.summary_json);
    CHECK(std::abs(doc["speed"]["v"].get<double>() - 1.0 / 3.0) < 1e-12);
}

TEST_CASE("moments scenario cross-checks the oracle") {
    const auto cfg = ex::ScenarioConfig::from_json(config_json("moments"));
    const auto bundle = ex::run_scenario(cfg);
    const auto doc = nlohmann::json::parse(bundle.summary_json);
    CHECK(std::abs(doc["moments"]["u0"][0].get<double>() - 3.0) < 1e-9);
    CHECK(std::abs(doc["moments"]["w0"][0].get<double>() - 33.0) < 1e-8);
    CHECK(doc["moments"]["oracle_max_deviation"].get<double>() < 1e-7);
}

TEST_CASE("scenarios are byte-identical under reruns") {
    for (const std::string task : {"classify", "speed", "moments"}) {
        const auto cfg = ex::ScenarioConfig::from_json(
            config_json(task, R"(, "budgets": {"replicas": 8, "chain_length": 200})"));
        const auto b1 = ex::run_scenario(cfg);
        const auto b2 = ex::run_scenario(cfg);
        CHECK(b1.summary_json == b2.summary_json);
        REQUIRE(b1.files.size() == b2.files.size());
        for (std::size_t i = 0; i < b1.files.size(); ++i) {
            CHECK(b1.files[i].first == b2.files[i].first);
            CHECK(b1.files[i].second == b2.files[i].second);
        }
    }
}

TEST_CASE("changing the master seed changes Monte Carlo outputs") {
    const std::string base = R"({"task": "clt", "master_seed": 1, "budgets": {"replicas": 4, "horizon": 200}, "model": )" +
                             std::string(kModelJson) + "}";
    auto cfg1 = ex::ScenarioConfig::from_json(base);
    auto cfg2 = cfg1;
    cfg2.master_seed = 2;
    const auto b1 = ex::run_scenario(cfg1);
    const auto b2 = ex::run_scenario(cfg2);
    CHECK(b1.summary_json != b2.summary_json);
}

TEST_CASE("bundle writing") {
    const auto dir = std::filesystem::temp_directory_path() / "strip_bundle_test";
    std::filesystem::remove_all(dir);
    auto cfg = ex::ScenarioConfig::from_json(config_json("classify"));
    cfg.out_dir = dir.string();
    ex::run_scenario(cfg);
    CHECK(std::filesystem::exists(dir / "summary.json"));
    CHECK(std::filesystem::exists(dir / "diagnostic_rates.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("every reported estimate carries its budget") {
    for (const std::string task : {"classify", "speed", "lln", "clt", "renewal", "evfp"}) {
        const auto cfg = ex::ScenarioConfig::from_json(config_json(
            task,
            R"(, "budgets": {"replicas": 4, "horizon": 400, "steps": 400, "excursions": 50, "chain_length": 200, "letters": 500})"));
        const auto bundle = ex::run_scenario(cfg);
        const auto doc = nlohmann::json::parse(bundle.summary_json);
        CHECK(doc.contains("budgets"));
        CHECK(doc.contains("master_seed"));
        CHECK(doc.contains("model_hash"));
    }
}
