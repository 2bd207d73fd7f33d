#include "strip/asymptotics.hpp"

#include "strip/matops.hpp"
#include "strip/rng.hpp"
#include "strip/stats.hpp"
#include "strip/walker.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace strip::asymptotics {

namespace {

constexpr long kSpanCap = 1L << 16;

using exitprob::analyze_range;

void require_c2(const env::ModelPtr& model) {
    const env::ConditionReport rep = env::check_condition_C(*model);
    if (!rep.c2) fail(ErrorKind::Model, "model fails condition C2 (a transition block has vanishing rows)");
}

// The verdict demands a 3-stderr margin plus a finite-chain bias floor:
// replica dispersion vanishes for deterministic environments while the
// estimator still carries an O(log/n) transient, so a bare sign test would
// misread recurrent models.
Transience classify(double mean, double stderr_, long chain_length) {
    const double floor_bias = 10.0 / static_cast<double>(chain_length);
    if (mean + 3.0 * stderr_ < -floor_bias) return Transience::TransientRight;
    if (mean - 3.0 * stderr_ > floor_bias) return Transience::NotTransientRight;
    return Transience::Indeterminate;
}

}  // namespace

std::string to_string(Transience t) {
    switch (t) {
        case Transience::TransientRight: return "transient-right";
        case Transience::NotTransientRight: return "not-transient-right";
        case Transience::Indeterminate: return "indeterminate";
    }
    return "?";
}

LyapunovEstimate lyapunov(const env::ModelPtr& model, long chain_length, int replicas,
                          std::uint64_t seed) {
    require_c2(model);
    if (chain_length < 1 || replicas < 1) fail(ErrorKind::Model, "lyapunov needs positive budgets");

    const int d = model->d;
    LyapunovEstimate out;
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(replicas));
    for (int r = 0; r < replicas; ++r) {
        const exitprob::EtaSequence seq =
            analyze_range(model, derive_seed(seed, "lyapunov.window", static_cast<std::uint64_t>(r)),
                        1, chain_length);
        auto prod = matops::ScaledProduct::identity(d, matops::ScaledProduct::Direction::RightToLeft);
        for (long n = 1; n <= chain_length; ++n) prod.multiply(seq.at(n).a);
        if (prod.is_zero()) {
            out.degenerate = true;
            values.push_back(kNegInf);
        } else {
            values.push_back(prod.log_norm() / static_cast<double>(chain_length));
        }
    }

    if (out.degenerate) {
        out.mean = kNegInf;
        out.stderr_ = 0.0;
        out.verdict = Transience::TransientRight;
        return out;
    }
    const auto ms = stats::mean_stderr(values);
    out.mean = ms.mean;
    out.stderr_ = ms.stderr_;
    out.verdict = classify(out.mean, out.stderr_, chain_length);
    return out;
}

// ---------------------------------------------------------------------------
// Crossing-time moments
// ---------------------------------------------------------------------------

namespace {

Vec scaled_apply(const matops::ScaledProduct& prod, const Vec& v) {
    if (prod.is_zero()) return Vec::Zero(v.size());
    return std::exp(prod.log_scale()) * (prod.core() * v);
}

double sup_norm(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

CrossingMoments crossing_moments(const exitprob::EtaSequence& seq, long at_index, double tol) {
    if (!seq.has(at_index)) fail(ErrorKind::InsufficientWindow, "no analysis record at the series base");
    const int d = seq.order();
    CrossingMoments out;

    // u-series: u0 = b_t + a_t b_{t-1} + a_t a_{t-1} b_{t-2} + ...
    out.u0 = Vec::Zero(d);
    {
        auto prod = matops::ScaledProduct::identity(d, matops::ScaledProduct::Direction::LeftToRight);
        double lead = 0.0;
        for (long k = 0;; ++k) {
            const long idx = at_index - k;
            if (!seq.has(idx)) {
                // Quenched terms may spike on left-drifting stretches before
                // the products win; only a series still above its lead after
                // a long window is read as non-decay.
                if (k >= 512 && sup_norm(scaled_apply(prod, Vec::Ones(d))) > 1.0)
                    fail(ErrorKind::Divergence, "crossing-time series does not decay (lambda >= 0?)");
                fail(ErrorKind::InsufficientWindow, "crossing-time series exhausted the window");
            }
            const Vec term = scaled_apply(prod, seq.at(idx).b);
            const double tn = sup_norm(term);
            if (k == 0) lead = tn;
            if (k > 0 && tn <= tol * lead) {
                out.tail_bound = tn;
                out.truncation_depth = k;
                break;
            }
            out.u0 += term;
            if (k >= 200000)
                fail(ErrorKind::Divergence, "crossing-time series does not decay (lambda >= 0?)");
            prod.multiply(seq.at(idx).a);
        }
    }

    // Reconstruction sweep for u at indices below at_index:
    //   y_{n+1} = b_n + a_n y_n  (seeded with 0 at the left edge; the seeding
    //   error enters through the product of a-factors, tracked below), then
    //   u_{n-1} = y_n + eta_{n-1} u_n downward from u0.
    const long lo = seq.first();
    const long span = at_index - lo;
    std::vector<Vec> y(static_cast<std::size_t>(span) + 1);  // y[i] = y_{lo+1+i}, i = 0..span
    std::vector<double> y_err(static_cast<std::size_t>(span) + 1);
    {
        auto w = matops::ScaledProduct::identity(d, matops::ScaledProduct::Direction::RightToLeft);
        Vec cur = Vec::Zero(d);
        for (long n = lo; n < lo + span + 1; ++n) {
            cur = seq.at(n).b + seq.at(n).a * cur;
            w.multiply(seq.at(n).a);
            y[static_cast<std::size_t>(n - lo)] = cur;
            y_err[static_cast<std::size_t>(n - lo)] = std::exp(w.log_norm());
        }
    }
    auto y_at = [&](long n) -> const Vec& {  // y_n, valid for lo < n <= at_index + 1... (n-1 record)
        return y[static_cast<std::size_t>(n - 1 - lo)];
    };
    auto y_trusted = [&](long n) { return y_err[static_cast<std::size_t>(n - 1 - lo)] <= 1e-10; };

    // w-series: w0 = gamma_t (2u_t - 1) + sum_k (a_t...a_{t-k+1}) gamma_{t-k} (2u_{t-k} - 1).
    out.w0 = Vec::Zero(d);
    {
        auto prod = matops::ScaledProduct::identity(d, matops::ScaledProduct::Direction::LeftToRight);
        Vec u_cur = out.u0;
        double lead = 0.0;
        for (long k = 0;; ++k) {
            const long idx = at_index - k;
            if (!seq.has(idx))
                fail(ErrorKind::InsufficientWindow, "second-moment series exhausted the window");
            if (k > 0) {
                if (idx + 1 - 1 < lo + 1 || !y_trusted(idx + 1))
                    fail(ErrorKind::InsufficientWindow,
                         "window too short to trust the reconstructed crossing means");
                u_cur = y_at(idx + 1) + seq.at(idx).eta * u_cur;
            }
            const Vec source = seq.at(idx).gamma * (2.0 * u_cur - Vec::Ones(d));
            const Vec term = scaled_apply(prod, source);
            const double tn = sup_norm(term);
            if (k == 0) lead = tn;
            if (k > 0 && tn <= tol * lead) {
                out.tail_bound_w = tn;
                out.truncation_depth = std::max(out.truncation_depth, k);
                break;
            }
            out.w0 += term;
            if (k >= 200000) fail(ErrorKind::Divergence, "second-moment series does not decay");
            prod.multiply(seq.at(idx).a);
        }
    }
    return out;
}

CrossingMoments crossing_moments_at_origin(const env::ModelPtr& model, std::uint64_t window_seed,
                                           double tol) {
    long span = 256;
    for (;;) {
        try {
            return crossing_moments(analyze_range(model, window_seed, -span, 0), 0, tol);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::InsufficientWindow || span >= kSpanCap) throw;
            span *= 2;
        }
    }
}

// ---------------------------------------------------------------------------
// Speed
// ---------------------------------------------------------------------------

namespace {

double pi_dot_u0(const env::ModelPtr& model, std::uint64_t wseed, double tol) {
    long span = 256;
    for (;;) {
        try {
            const exitprob::EtaSequence seq = analyze_range(model, wseed, -span, 0);
            const exitprob::PiVector pi = exitprob::compute_pi(seq, 0, 1e-10);
            const CrossingMoments cm = crossing_moments(seq, 0, tol);
            return pi.pi.dot(cm.u0);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::InsufficientWindow || span >= kSpanCap) throw;
            span *= 2;
        }
    }
}

SpeedEstimate ensemble_speed(const env::ModelPtr& model, long budget, double tol,
                             std::uint64_t seed) {
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(budget));
    for (long r = 0; r < budget; ++r)
        values.push_back(
            pi_dot_u0(model, derive_seed(seed, "speed.window", static_cast<std::uint64_t>(r)), tol));
    const auto ms = stats::mean_stderr(values);
    SpeedEstimate out;
    out.inv_mean = ms.mean;
    out.inv_stderr = ms.stderr_;
    out.v = 1.0 / ms.mean;
    out.stderr_ = ms.stderr_ / (ms.mean * ms.mean);
    out.budget = budget;
    return out;
}

SpeedEstimate spatial_speed(const env::ModelPtr& model, long letters, double tol,
                            std::uint64_t seed) {
    const std::uint64_t wseed = derive_seed(seed, "speed.spatial", 0);
    long span = 256;
    for (;;) {
        try {
            const exitprob::EtaSequence seq = analyze_range(model, wseed, -span, letters);
            RowVec pi = exitprob::compute_pi(seq, 0, 1e-10).pi.transpose();

            // One sweep of y_{n+1} = b_n + a_n y_n gives the crossing-mean
            // vector for every shift; the edge seeding must have washed out
            // before index 0.
            const int d = seq.order();
            auto w = matops::ScaledProduct::identity(d, matops::ScaledProduct::Direction::RightToLeft);
            Vec y = Vec::Zero(d);
            for (long n = seq.first(); n < 0; ++n) {
                y = seq.at(n).b + seq.at(n).a * y;
                w.multiply(seq.at(n).a);
            }
            if (std::exp(w.log_norm()) > std::max(tol, 1e-14))
                fail(ErrorKind::InsufficientWindow, "spatial sweep not yet trusted at index 0");

            std::vector<double> values;
            values.reserve(static_cast<std::size_t>(letters));
            for (long n = 0; n < letters; ++n) {
                y = seq.at(n).b + seq.at(n).a * y;  // now y = u0(theta^n omega)
                values.push_back(pi.dot(y));
                pi = pi * seq.at(n).eta;
            }

            // Batch means absorb the serial correlation along the window.
            const std::size_t nbatch = 32;
            const std::size_t bs = values.size() / nbatch;
            std::vector<double> batch;
            for (std::size_t b_i = 0; b_i + 1 <= nbatch && bs > 0; ++b_i) {
                double s = 0.0;
                for (std::size_t j = b_i * bs; j < (b_i + 1) * bs; ++j) s += values[j];
                batch.push_back(s / static_cast<double>(bs));
            }
            const auto ms = stats::mean_stderr(batch);
            SpeedEstimate out;
            out.inv_mean = ms.mean;
            out.inv_stderr = ms.stderr_;
            out.v = 1.0 / ms.mean;
            out.stderr_ = ms.stderr_ / (ms.mean * ms.mean);
            out.budget = letters;
            return out;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::InsufficientWindow || span >= kSpanCap) throw;
            span *= 2;
        }
    }
}

}  // namespace

SpeedEstimate speed(const env::ModelPtr& model, SpeedEstimator estimator, long budget, double tol,
                    std::uint64_t seed) {
    const LyapunovEstimate gate = lyapunov(model, 400, 12, derive_seed(seed, "speed.gate", 0));
    if (gate.verdict != Transience::TransientRight)
        fail(ErrorKind::Divergence, "speed requires a transient-right model (verdict: " +
                                        to_string(gate.verdict) + ")");
    if (budget < 2) fail(ErrorKind::Model, "speed budget too small");
    return estimator == SpeedEstimator::Ensemble ? ensemble_speed(model, budget, tol, seed)
                                                 : spatial_speed(model, budget, tol, seed);
}

// ---------------------------------------------------------------------------
// CLT variance
// ---------------------------------------------------------------------------

SigmaEstimate clt_sigma(const env::ModelPtr& model, long horizon, long lag_cap, int replicas,
                        std::uint64_t seed, double v_hint) {
    if (horizon < 4 || replicas < 1) fail(ErrorKind::Model, "clt_sigma needs positive budgets");
    SigmaEstimate out;
    out.v = v_hint > 0.0 ? v_hint
                         : speed(model, SpeedEstimator::Ensemble, 2000, 1e-12,
                                 derive_seed(seed, "sigma.speed", 0))
                               .v;
    if (lag_cap <= 0) lag_cap = std::lround(std::sqrt(static_cast<double>(horizon)));
    lag_cap = std::min(lag_cap, horizon - 1);

    const double center = 1.0 / out.v;
    std::vector<double> estimates;
    std::vector<double> profile(static_cast<std::size_t>(lag_cap) + 1, 0.0);
    double c0_sum = 0.0;
    for (int r = 0; r < replicas; ++r) {
        env::EnvironmentWindow window = env::sample_window(
            model, -320, 64, derive_seed(seed, "sigma.window", static_cast<std::uint64_t>(r)));
        const walker::Trajectory traj =
            walker::simulate(window, walker::StartLaw::pi(), walker::StopRule::target(horizon),
                             derive_seed(seed, "sigma.walk", static_cast<std::uint64_t>(r)));
        std::vector<double> z;
        z.reserve(static_cast<std::size_t>(horizon));
        for (long n = 1; n <= horizon; ++n)
            z.push_back(static_cast<double>(traj.crossing(n)) - center);
        const auto lrv = stats::bartlett_lrv(z, static_cast<std::size_t>(lag_cap));
        estimates.push_back(lrv.value);
        if (lrv.value <= 0.0) out.nonpositive_flag = true;
        for (std::size_t k = 0; k < profile.size(); ++k) profile[k] += lrv.partial[k];
        c0_sum += lrv.partial[0];
    }
    for (double& p : profile) p /= static_cast<double>(replicas);
    const auto ms = stats::mean_stderr(estimates);
    out.sigma2_T = ms.mean;
    out.sigma2_T_stderr = ms.stderr_;
    out.sigma2_xi = out.sigma2_T * out.v * out.v * out.v;
    out.lag_profile = std::move(profile);
    out.degenerate_flag = c0_sum / static_cast<double>(replicas) < 1e-9;
    return out;
}

// ---------------------------------------------------------------------------
// Condition diagnostics
// ---------------------------------------------------------------------------

namespace {

RateDiagnostic fit_rate(const std::vector<double>& log_means) {
    RateDiagnostic diag;
    diag.log_means = log_means;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < log_means.size(); ++i) {
        if (std::isfinite(log_means[i])) {
            xs.push_back(static_cast<double>(i + 1));
            ys.push_back(log_means[i]);
        }
    }
    if (xs.size() < 3) {
        // Mass vanished identically: faster than any exponential.
        diag.rate = kNegInf;
        diag.rate_stderr = 0.0;
        diag.pass = true;
        return diag;
    }
    const auto fit = stats::ols_line(xs, ys);
    diag.rate = fit.slope;
    diag.rate_stderr = fit.slope_stderr;
    diag.pass = fit.slope < -3.0 * fit.slope_stderr;
    return diag;
}

}  // namespace

ConditionDiagnostics condition_diagnostics(const env::ModelPtr& model, int n_max, int replicas,
                                           std::uint64_t seed) {
    require_c2(model);
    if (n_max < 4 || replicas < 1) fail(ErrorKind::Model, "condition_diagnostics needs n_max >= 4");
    const int d = model->d;

    std::vector<std::vector<double>> l1(static_cast<std::size_t>(n_max)),
        l2(static_cast<std::size_t>(n_max)), lc(static_cast<std::size_t>(n_max));
    for (int r = 0; r < replicas; ++r) {
        const exitprob::EtaSequence seq =
            analyze_range(model, derive_seed(seed, "diag.window", static_cast<std::uint64_t>(r)), 0,
                        n_max - 1);
        auto prod = matops::ScaledProduct::identity(d, matops::ScaledProduct::Direction::LeftToRight);
        double csum = 0.0;
        for (int n = 0; n < n_max; ++n) {
            prod.multiply(seq.at(n).a);
            const double ln = prod.log_norm();
            const double c = seq.at(n).c;
            csum += c > 0.0 ? std::log(c) : kNegInf;
            l1[static_cast<std::size_t>(n)].push_back(ln);
            l2[static_cast<std::size_t>(n)].push_back(2.0 * ln);
            lc[static_cast<std::size_t>(n)].push_back(csum);
        }
    }

    const double log_r = std::log(static_cast<double>(replicas));
    auto log_means = [&](const std::vector<std::vector<double>>& per_n) {
        std::vector<double> out;
        out.reserve(per_n.size());
        for (const auto& col : per_n) out.push_back(stats::log_sum_exp(col) - log_r);
        return out;
    };

    ConditionDiagnostics out;
    out.a_norm = fit_rate(log_means(l1));
    out.a_norm_sq = fit_rate(log_means(l2));
    out.c_prod = fit_rate(log_means(lc));
    return out;
}

AsymptoticsReport full_report(const env::ModelPtr& model, const ReportBudgets& budgets,
                              std::uint64_t seed) {
    AsymptoticsReport rep;
    rep.model_hash = model->hash();
    rep.master_seed = seed;
    rep.budgets = budgets;
    rep.lambda = lyapunov(model, budgets.chain_length, budgets.replicas,
                          derive_seed(seed, "report.lyapunov", 0));
    rep.diagnostics = condition_diagnostics(model, budgets.diag_n_max, budgets.diag_replicas,
                                            derive_seed(seed, "report.diag", 0));
    rep.transient = rep.lambda.verdict == Transience::TransientRight;
    if (!rep.transient) return rep;

    rep.speed = speed(model, SpeedEstimator::Ensemble, budgets.speed_budget, budgets.tol,
                      derive_seed(seed, "report.speed", 0));
    rep.moments =
        crossing_moments_at_origin(model, derive_seed(seed, "report.moments", 0), budgets.tol);
    rep.sigma = clt_sigma(model, budgets.sigma_horizon, 0, budgets.sigma_replicas,
                          derive_seed(seed, "report.sigma", 0), rep.speed.v);
    return rep;
}

}  // namespace strip::asymptotics
