#include "strip/experiments.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

// Command-line front end: one subcommand per task, a declarative config file
// per scenario, deterministic outputs under --out.

namespace {

struct CliOptions {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string level;
};

int run_task(const std::string& task, const CliOptions& opt) {
    namespace ex = strip::experiments;
    ex::ScenarioConfig cfg;
    if (!opt.config.empty()) {
        cfg = ex::ScenarioConfig::from_file(opt.config);
        if (!cfg.task.empty() && cfg.task != task) {
            std::cerr << "config task '" << cfg.task << "' does not match subcommand '" << task
                      << "'\n";
            return 1;
        }
    } else if (task != "validate") {
        std::cerr << "task '" << task << "' needs --config with a model\n";
        return 1;
    }
    cfg.task = task;
    if (opt.seed_set) cfg.master_seed = opt.seed;
    if (!opt.out.empty()) cfg.out_dir = opt.out;
    if (!opt.level.empty()) cfg.level = opt.level;

    const ex::ReportBundle bundle = ex::run_scenario(cfg);
    if (task == "validate") {
        for (const auto& [name, contents] : bundle.files)
            if (name == "validation.txt") std::cout << contents;
    }
    std::cout << bundle.summary_json << '\n';
    if (!cfg.out_dir.empty()) std::cerr << "report written to " << cfg.out_dir << '\n';
    return bundle.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transient random walks in random environments on a strip"};
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> tasks = {
        {"classify", "Lyapunov exponent and transience verdict"},
        {"speed", "asymptotic speed via the exit-series formula"},
        {"moments", "crossing-time moments against the absorbing-chain oracle"},
        {"lln", "law of large numbers check xi_n/n vs the speed"},
        {"clt", "hitting-time CLT variance (Bartlett plug-in)"},
        {"renewal", "renewal times and increment independence fingerprints"},
        {"evfp", "environment viewed from the particle vs the excursion reference"},
        {"validate", "run the oracle cross-check battery"},
    };

    CliOptions opt;
    std::vector<CLI::App*> subs;
    for (const auto& [name, desc] : tasks) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", opt.config, "scenario config file (JSON)");
        sub->add_option("--out", opt.out, "output directory for the report bundle");
        sub->add_option("--seed", opt.seed, "master seed override")->each([&](const std::string&) {
            opt.seed_set = true;
        });
        if (name == "validate")
            sub->add_option("--level", opt.level, "fast | full")
                ->check(CLI::IsMember({"fast", "full"}));
        subs.push_back(sub);
    }

    CLI11_PARSE(app, argc, argv);

    std::string task;
    for (std::size_t i = 0; i < subs.size(); ++i)
        if (subs[i]->parsed()) task = tasks[i].first;

    try {
        return run_task(task, opt);
    } catch (const strip::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
