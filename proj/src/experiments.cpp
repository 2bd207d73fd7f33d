#include "strip/experiments.hpp"

#include "strip/asymptotics.hpp"
#include "strip/exitprob.hpp"
#include "strip/matops.hpp"
#include "strip/stats.hpp"
#include "strip/walker.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace strip::experiments {

namespace {

using nlohmann::json;

const std::set<std::string> kTasks = {"classify", "speed",   "moments", "lln",
                                      "clt",      "renewal", "evfp",    "validate"};

long pick(long configured, long fallback) { return configured > 0 ? configured : fallback; }

json vec_to_json(const Vec& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

}  // namespace

void ScenarioConfig::validate() const {
    if (!kTasks.count(task)) fail(ErrorKind::Config, "unrecognized task: " + task);
    if (task != "validate" && !model) fail(ErrorKind::Config, "task '" + task + "' needs a model");
    if (model) model->validate();
    if (!(tolerances.series > 0.0) || !(tolerances.pi > 0.0))
        fail(ErrorKind::Config, "tolerances must be positive");
    for (long b : {budgets.replicas, budgets.horizon, budgets.chain_length, budgets.letters,
                   budgets.n_max, budgets.lag_cap, budgets.excursions, budgets.steps})
        if (b < 0) fail(ErrorKind::Config, "budgets must be positive");
    if (estimator != "ensemble" && estimator != "spatial")
        fail(ErrorKind::Config, "estimator must be ensemble | spatial");
    if (level != "fast" && level != "full") fail(ErrorKind::Config, "level must be fast | full");
}

ScenarioConfig ScenarioConfig::from_json(const std::string& text, const std::string& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const std::exception& e) {
        fail(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
    }
    ScenarioConfig cfg;
    cfg.task = doc.value("task", "");
    cfg.master_seed = doc.value("master_seed", std::uint64_t{0});
    cfg.out_dir = doc.value("out", "");
    cfg.estimator = doc.value("estimator", "ensemble");
    cfg.level = doc.value("level", "fast");
    if (doc.contains("model")) {
        cfg.model = env::parse_model(doc["model"].dump());
    } else if (doc.contains("model_file")) {
        std::filesystem::path p = doc["model_file"].get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        cfg.model = env::load_model(p.string());
    }
    if (doc.contains("budgets")) {
        const json& b = doc["budgets"];
        cfg.budgets.replicas = b.value("replicas", 0L);
        cfg.budgets.horizon = b.value("horizon", 0L);
        cfg.budgets.chain_length = b.value("chain_length", 0L);
        cfg.budgets.letters = b.value("letters", 0L);
        cfg.budgets.n_max = b.value("n_max", 0L);
        cfg.budgets.lag_cap = b.value("lag_cap", 0L);
        cfg.budgets.excursions = b.value("excursions", 0L);
        cfg.budgets.steps = b.value("steps", 0L);
        cfg.budgets.guard = b.value("guard", 50L);
        cfg.budgets.radius = b.value("radius", 0);
        cfg.budgets.istar_budget = b.value("istar_budget", 2000);
    }
    if (doc.contains("tolerances")) {
        const json& t = doc["tolerances"];
        cfg.tolerances.series = t.value("series", 1e-12);
        cfg.tolerances.pi = t.value("pi", 1e-10);
    }
    // run_scenario validates; the CLI may still fill in the task.
    return cfg;
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str(), std::filesystem::path(path).parent_path().string());
}

void ReportBundle::write(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(std::filesystem::path(dir) / "summary.json");
        if (!out) fail(ErrorKind::Io, "cannot write summary under " + dir);
        out << summary_json << '\n';
    }
    for (const auto& [name, contents] : files) {
        std::ofstream out(std::filesystem::path(dir) / name);
        if (!out) fail(ErrorKind::Io, "cannot write " + name + " under " + dir);
        out << contents;
    }
}

// ---------------------------------------------------------------------------
// Tasks
// ---------------------------------------------------------------------------

namespace {

json base_summary(const ScenarioConfig& cfg) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["task"] = cfg.task;
    doc["master_seed"] = cfg.master_seed;
    if (cfg.model) doc["model_hash"] = cfg.model->hash();
    doc["tolerances"] = {{"series", cfg.tolerances.series}, {"pi", cfg.tolerances.pi}};
    return doc;
}

json lambda_to_json(const asymptotics::LyapunovEstimate& l) {
    json out;
    out["mean"] = std::isfinite(l.mean) ? json(l.mean) : json("-inf");
    out["stderr"] = l.stderr_;
    out["degenerate"] = l.degenerate;
    out["verdict"] = asymptotics::to_string(l.verdict);
    return out;
}

json rate_to_json(const asymptotics::RateDiagnostic& r) {
    json out;
    out["rate"] = std::isfinite(r.rate) ? json(r.rate) : json("-inf");
    out["rate_stderr"] = r.rate_stderr;
    out["pass"] = r.pass;
    return out;
}

std::string rates_csv(const asymptotics::ConditionDiagnostics& d) {
    std::ostringstream os;
    os.precision(17);
    os << "n,log_E_a_norm,log_E_a_norm_sq,log_E_c_prod\n";
    for (std::size_t i = 0; i < d.a_norm.log_means.size(); ++i)
        os << i + 1 << ',' << d.a_norm.log_means[i] << ',' << d.a_norm_sq.log_means[i] << ','
           << d.c_prod.log_means[i] << '\n';
    return os.str();
}

ReportBundle task_classify(const ScenarioConfig& cfg) {
    asymptotics::ReportBudgets budgets;
    budgets.chain_length = pick(cfg.budgets.chain_length, budgets.chain_length);
    budgets.replicas = static_cast<int>(pick(cfg.budgets.replicas, budgets.replicas));
    budgets.diag_n_max = static_cast<int>(pick(cfg.budgets.n_max, budgets.diag_n_max));
    budgets.speed_budget = pick(cfg.budgets.letters, budgets.speed_budget);
    budgets.sigma_horizon = pick(cfg.budgets.horizon, budgets.sigma_horizon);
    budgets.tol = cfg.tolerances.series;

    const auto cond = env::check_condition_C(*cfg.model);
    const auto rep = asymptotics::full_report(cfg.model, budgets,
                                              derive_seed(cfg.master_seed, "classify", 0));

    json doc = base_summary(cfg);
    doc["budgets"] = {{"chain_length", budgets.chain_length},
                      {"replicas", budgets.replicas},
                      {"n_max", budgets.diag_n_max},
                      {"diag_replicas", budgets.diag_replicas},
                      {"speed_budget", budgets.speed_budget},
                      {"sigma_horizon", budgets.sigma_horizon},
                      {"sigma_replicas", budgets.sigma_replicas}};
    doc["lambda"] = lambda_to_json(rep.lambda);
    doc["conditions"] = {{"c1_class", cond.c1_class},
                         {"c2", cond.c2},
                         {"c3", cond.c3},
                         {"epsilon_floor_verified", cond.epsilon_floor_verified}};
    doc["diagnostics"] = {{"a_norm", rate_to_json(rep.diagnostics.a_norm)},
                          {"a_norm_sq", rate_to_json(rep.diagnostics.a_norm_sq)},
                          {"c_prod", rate_to_json(rep.diagnostics.c_prod)}};
    if (rep.transient) {
        doc["speed"] = {{"v", rep.speed.v},
                        {"stderr", rep.speed.stderr_},
                        {"mean_pi_u0", rep.speed.inv_mean},
                        {"mean_pi_u0_stderr", rep.speed.inv_stderr}};
        doc["moments"] = {{"u0", vec_to_json(rep.moments.u0)},
                          {"w0", vec_to_json(rep.moments.w0)},
                          {"tail_bound", rep.moments.tail_bound},
                          {"tail_bound_w", rep.moments.tail_bound_w}};
        doc["clt"] = {{"sigma2_T", rep.sigma.sigma2_T},
                      {"sigma2_T_stderr", rep.sigma.sigma2_T_stderr},
                      {"sigma2_xi", rep.sigma.sigma2_xi},
                      {"nonpositive_flag", rep.sigma.nonpositive_flag},
                      {"degenerate_flag", rep.sigma.degenerate_flag}};
    }

    ReportBundle bundle;
    bundle.summary_json = doc.dump(2);
    bundle.files.emplace_back("diagnostic_rates.csv", rates_csv(rep.diagnostics));
    return bundle;
}

ReportBundle task_speed(const ScenarioConfig& cfg) {
    const bool ensemble = cfg.estimator == "ensemble";
    const long budget = ensemble ? pick(cfg.budgets.replicas, 4000) : pick(cfg.budgets.letters, 20000);
    const auto est = asymptotics::speed(
        cfg.model, ensemble ? asymptotics::SpeedEstimator::Ensemble : asymptotics::SpeedEstimator::Spatial,
        budget, cfg.tolerances.series, derive_seed(cfg.master_seed, "speed", 0));

    json doc = base_summary(cfg);
    doc["budgets"] = {{"budget", budget}, {"estimator", cfg.estimator}};
    doc["speed"] = {{"v", est.v},
                    {"stderr", est.stderr_},
                    {"mean_pi_u0", est.inv_mean},
                    {"mean_pi_u0_stderr", est.inv_stderr}};
    ReportBundle bundle;
    bundle.summary_json = doc.dump(2);
    return bundle;
}

ReportBundle task_moments(const ScenarioConfig& cfg) {
    const std::uint64_t wseed = derive_seed(cfg.master_seed, "moments.window", 0);
    long span = 256;
    asymptotics::CrossingMoments cm;
    for (;;) {
        try {
            cm = asymptotics::crossing_moments(exitprob::analyze_range(cfg.model, wseed, -span, 0),
                                               0, cfg.tolerances.series);
            break;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::InsufficientWindow || span >= (1L << 16)) throw;
            span *= 2;
        }
    }
    const auto seq = exitprob::analyze_range(cfg.model, wseed, -span, 0);

    env::EnvironmentWindow oracle_window = env::sample_window(cfg.model, -span, 1, wseed);
    const int d = cfg.model->d;
    Vec oracle_mean(d), oracle_second(d);
    double max_dev = 0.0;
    for (int i = 0; i < d; ++i) {
        const auto res = exitprob::absorption_oracle(oracle_window, 1, {0, i}, 64);
        oracle_mean[i] = res.mean_time;
        oracle_second[i] = res.second_moment_time;
        max_dev = std::max(max_dev, std::abs(res.mean_time - cm.u0[i]));
        max_dev = std::max(max_dev, std::abs(res.second_moment_time - cm.w0[i]));
    }

    json doc = base_summary(cfg);
    doc["budgets"] = {{"truncation_depth", cm.truncation_depth}};
    doc["moments"] = {{"u0", vec_to_json(cm.u0)},
                      {"w0", vec_to_json(cm.w0)},
                      {"tail_bound", cm.tail_bound},
                      {"tail_bound_w", cm.tail_bound_w},
                      {"oracle_max_deviation", max_dev}};
    std::ostringstream csv;
    csv.precision(17);
    csv << "height,u0,w0,oracle_mean,oracle_second_moment\n";
    for (int i = 0; i < d; ++i)
        csv << i + 1 << ',' << cm.u0[i] << ',' << cm.w0[i] << ',' << oracle_mean[i] << ','
            << oracle_second[i] << '\n';
    std::ostringstream window_csv, eta_csv;
    seq.window().write_csv(window_csv);
    seq.write_csv(eta_csv);
    ReportBundle bundle;
    bundle.summary_json = doc.dump(2);
    bundle.files.emplace_back("moments.csv", csv.str());
    bundle.files.emplace_back("window.csv", window_csv.str());
    bundle.files.emplace_back("eta_sequence.csv", eta_csv.str());
    return bundle;
}

ReportBundle task_lln(const ScenarioConfig& cfg) {
    const long seeds = pick(cfg.budgets.replicas, 20);
    const long horizon = pick(cfg.budgets.horizon, 1000000);
    const auto sp = asymptotics::speed(cfg.model, asymptotics::SpeedEstimator::Ensemble,
                                       pick(cfg.budgets.letters, 4000), cfg.tolerances.series,
                                       derive_seed(cfg.master_seed, "lln.speed", 0));

    std::vector<double> rates;
    for (long r = 0; r < seeds; ++r) {
        env::EnvironmentWindow window = env::sample_window(
            cfg.model, -8, 64, derive_seed(cfg.master_seed, "lln.window", static_cast<std::uint64_t>(r)));
        const auto traj =
            walker::simulate(window, walker::StartLaw::delta(0), walker::StopRule::horizon(horizon),
                             derive_seed(cfg.master_seed, "lln.walk", static_cast<std::uint64_t>(r)));
        rates.push_back(static_cast<double>(traj.level(horizon)) / static_cast<double>(horizon));
    }
    const double traj_sd = std::sqrt(stats::sample_variance(rates));
    const double combined = std::sqrt(sp.stderr_ * sp.stderr_ + traj_sd * traj_sd);
    long passes = 0;
    for (double x : rates)
        if (std::abs(x - sp.v) <= 3.0 * combined) ++passes;

    json doc = base_summary(cfg);
    doc["budgets"] = {{"seeds", seeds}, {"horizon", horizon}, {"speed_budget", sp.budget}};
    doc["lln"] = {{"v", sp.v},
                  {"v_stderr", sp.stderr_},
                  {"trajectory_sd", traj_sd},
                  {"combined_stderr", combined},
                  {"passes", passes},
                  {"seeds", seeds}};
    std::ostringstream csv;
    csv.precision(17);
    csv << "seed_index,xi_over_n,abs_error,pass\n";
    for (std::size_t i = 0; i < rates.size(); ++i)
        csv << i << ',' << rates[i] << ',' << std::abs(rates[i] - sp.v) << ','
            << (std::abs(rates[i] - sp.v) <= 3.0 * combined ? 1 : 0) << '\n';
    ReportBundle bundle;
    bundle.summary_json = doc.dump(2);
    bundle.files.emplace_back("lln.csv", csv.str());
    return bundle;
}

ReportBundle task_clt(const ScenarioConfig& cfg) {
    const long horizon = pick(cfg.budgets.horizon, 10000);
    const long replicas = pick(cfg.budgets.replicas, 200);
    const auto est = asymptotics::clt_sigma(cfg.model, horizon, cfg.budgets.lag_cap,
                                            static_cast<int>(replicas),
                                            derive_seed(cfg.master_seed, "clt", 0));

    json doc = base_summary(cfg);
    doc["budgets"] = {{"horizon", horizon},
                      {"replicas", replicas},
                      {"lag_cap", static_cast<long>(est.lag_profile.size()) - 1}};
    doc["clt"] = {{"sigma2_T", est.sigma2_T},
                  {"sigma2_T_stderr", est.sigma2_T_stderr},
                  {"sigma2_xi", est.sigma2_xi},
                  {"v", est.v},
                  {"nonpositive_flag", est.nonpositive_flag},
                  {"degenerate_flag", est.degenerate_flag}};
    std::ostringstream csv;
    csv.precision(17);
    csv << "lag,sigma2_partial\n";
    for (std::size_t k = 0; k < est.lag_profile.size(); ++k) csv << k << ',' << est.lag_profile[k] << '\n';
    ReportBundle bundle;
    bundle.summary_json = doc.dump(2);
    bundle.files.emplace_back("lag_profile.csv", csv.str());
    return bundle;
}

ReportBundle task_renewal(const ScenarioConfig& cfg) {
    const long horizon = pick(cfg.budgets.horizon, 1000000);
    const auto istar = walker::select_istar(cfg.model, cfg.budgets.istar_budget,
                                            derive_seed(cfg.master_seed, "renewal.istar", 0));
    env::EnvironmentWindow window =
        env::sample_window(cfg.model, -8, 64, derive_seed(cfg.master_seed, "renewal.window", 0));
    const auto traj =
        walker::simulate(window, walker::StartLaw::delta(0), walker::StopRule::horizon(horizon),
                         derive_seed(cfg.master_seed, "renewal.walk", 0));
    const auto rec = walker::extract_renewals(traj, istar.i_star, cfg.budgets.guard);

    std::vector<double> dxi, drho;
    for (const auto& [a, b] : rec.increments) {
        dxi.push_back(static_cast<double>(a));
        drho.push_back(static_cast<double>(b));
    }
    const double k = static_cast<double>(dxi.size());
    json doc = base_summary(cfg);
    doc["budgets"] = {{"horizon", horizon}, {"guard", cfg.budgets.guard},
                      {"istar_budget", cfg.budgets.istar_budget}};
    json stats_json = {{"i_star", istar.i_star + 1}, {"renewals", rec.times.size()},
                       {"increments", dxi.size()}};
    if (dxi.size() >= 16) {
        const auto half = dxi.size() / 2;
        const auto ks_xi = stats::ks_test_two_sample(
            std::vector<double>(dxi.begin(), dxi.begin() + half),
            std::vector<double>(dxi.begin() + half, dxi.end()));
        const auto ks_rho = stats::ks_test_two_sample(
            std::vector<double>(drho.begin(), drho.begin() + half),
            std::vector<double>(drho.begin() + half, drho.end()));
        stats_json["lag1_autocorr_dxi"] = stats::autocorrelation(dxi, 1);
        stats_json["lag1_autocorr_drho"] = stats::autocorrelation(drho, 1);
        stats_json["autocorr_bound"] = 3.0 / std::sqrt(k);
        stats_json["ks_halves_p_dxi"] = ks_xi.second;
        stats_json["ks_halves_p_drho"] = ks_rho.second;
    }
    doc["renewal"] = stats_json;
    std::ostringstream csv;
    rec.write_csv(csv);
    ReportBundle bundle;
    bundle.summary_json = doc.dump(2);
    bundle.files.emplace_back("renewals.csv", csv.str());
    return bundle;
}

ReportBundle task_evfp(const ScenarioConfig& cfg) {
    const long steps = pick(cfg.budgets.steps, 20000);
    const long excursions = pick(cfg.budgets.excursions, 20000);
    const int radius = cfg.budgets.radius;

    const auto qref = walker::q_reference(cfg.model, radius, excursions,
                                          derive_seed(cfg.master_seed, "evfp.qref", 0));
    env::EnvironmentWindow window =
        env::sample_window(cfg.model, -8, 64, derive_seed(cfg.master_seed, "evfp.window", 0));
    const auto traj =
        walker::simulate(window, walker::StartLaw::delta(0), walker::StopRule::horizon(steps),
                         derive_seed(cfg.master_seed, "evfp.walk", 0));
    const auto hist = walker::evfp_accumulate(traj, window, radius, steps / 2, steps);
    const double tv = walker::tv_distance(hist, qref);

    json doc = base_summary(cfg);
    doc["budgets"] = {{"steps", steps}, {"excursions", excursions}, {"radius", radius}};
    doc["evfp"] = {{"tv_distance", tv},
                   {"empirical_total", hist.total()},
                   {"reference_total", qref.total()},
                   {"discarded_excursions", qref.discarded_replicas()}};
    ReportBundle bundle;
    bundle.summary_json = doc.dump(2);
    std::ostringstream h1, h2, sc;
    hist.write_csv(h1);
    qref.write_csv(h2);
    qref.write_sidecar(sc);
    bundle.files.emplace_back("evfp_empirical.csv", h1.str());
    bundle.files.emplace_back("evfp_reference.csv", h2.str());
    bundle.files.emplace_back("evfp_signatures.csv", sc.str());
    return bundle;
}

ReportBundle task_validate(const ScenarioConfig& cfg) {
    const auto table =
        validate_suite(cfg.level == "full" ? ValidateLevel::Full : ValidateLevel::Fast,
                       cfg.master_seed);
    json doc = base_summary(cfg);
    doc["level"] = cfg.level;
    json rows = json::array();
    for (const auto& r : table.rows)
        rows.push_back({{"name", r.name},
                        {"pass", r.pass},
                        {"achieved", r.achieved},
                        {"required", r.required},
                        {"detail", r.detail}});
    doc["rows"] = rows;
    doc["all_pass"] = table.all_pass();

    std::ostringstream csv;
    csv << "name,pass,achieved,required\n";
    for (const auto& r : table.rows)
        csv << r.name << ',' << (r.pass ? 1 : 0) << ',' << '"' << r.achieved << '"' << ',' << '"'
            << r.required << '"' << '\n';
    ReportBundle bundle;
    bundle.summary_json = doc.dump(2);
    bundle.files.emplace_back("validation.csv", csv.str());
    bundle.files.emplace_back("validation.txt", to_string(table));
    bundle.exit_code = table.all_pass() ? 0 : 2;
    return bundle;
}

}  // namespace

ReportBundle run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    ReportBundle bundle;
    if (cfg.task == "classify")
        bundle = task_classify(cfg);
    else if (cfg.task == "speed")
        bundle = task_speed(cfg);
    else if (cfg.task == "moments")
        bundle = task_moments(cfg);
    else if (cfg.task == "lln")
        bundle = task_lln(cfg);
    else if (cfg.task == "clt")
        bundle = task_clt(cfg);
    else if (cfg.task == "renewal")
        bundle = task_renewal(cfg);
    else if (cfg.task == "evfp")
        bundle = task_evfp(cfg);
    else
        bundle = task_validate(cfg);
    if (!cfg.out_dir.empty()) bundle.write(cfg.out_dir);
    return bundle;
}

std::string to_string(const ValidationTable& table) {
    std::ostringstream os;
    for (const auto& r : table.rows) {
        os << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << "  (" << r.achieved << " vs "
           << r.required << ", " << r.seconds << " s)";
        if (!r.detail.empty()) os << "  " << r.detail;
        os << '\n';
    }
    os << (table.all_pass() ? "ALL CRITERIA PASS" : "CRITERIA FAILED") << '\n';
    return os.str();
}

}  // namespace strip::experiments
