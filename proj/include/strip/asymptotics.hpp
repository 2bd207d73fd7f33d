#pragma once

#include "strip/env.hpp"
#include "strip/exitprob.hpp"
#include "strip/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

// Lyapunov exponent and transience classification, the closed-form asymptotic
// speed, first and second crossing-time moments, the hitting-time CLT
// variance with its transfer to the walker's position, and the empirical
// decay-rate diagnostics behind the positive-speed and CLT hypotheses.

namespace strip::asymptotics {

enum class Transience { TransientRight, NotTransientRight, Indeterminate };

std::string to_string(Transience t);

struct LyapunovEstimate {
    double mean = 0.0;     // -inf when a product hit exact zero
    double stderr_ = 0.0;
    bool degenerate = false;  // some replica product vanished
    Transience verdict = Transience::Indeterminate;
};

// lambda = lim (1/n) E log ||a_n ... a_1|| by scaled products of the a-factors
// over independently sampled windows.  The verdict demands a 3-stderr margin
// around zero.
LyapunovEstimate lyapunov(const env::ModelPtr& model, long chain_length, int replicas,
                          std::uint64_t seed);

struct CrossingMoments {
    Vec u0;                  // expected crossing time by start height
    Vec w0;                  // second moment of the crossing time
    long truncation_depth = 0;
    double tail_bound = 0.0;     // norm of the first omitted u-series term
    double tail_bound_w = 0.0;   // norm of the first omitted w-series term
};

// Truncated series u_0 = sum_k (a_0...a_{-k+1}) b_{-k} and the matching
// second-moment series, both cut when the running term falls below
// tol * (leading term).  Consumes analysis records to the left of at_index.
CrossingMoments crossing_moments(const exitprob::EtaSequence& seq, long at_index, double tol);

// Same series at index 0 of a fresh window under the model law, widening the
// window until the truncation certifies.
CrossingMoments crossing_moments_at_origin(const env::ModelPtr& model, std::uint64_t window_seed,
                                           double tol);

enum class SpeedEstimator { Ensemble, Spatial };

struct SpeedEstimate {
    double v = 0.0;
    double stderr_ = 0.0;
    double inv_mean = 0.0;     // estimate of E(pi . u0) = 1/v
    double inv_stderr = 0.0;
    long budget = 0;
};

// Asymptotic speed: 1 / E_P(pi . u0).  The ensemble estimator averages over
// independent windows, the spatial one along a single long window.
SpeedEstimate speed(const env::ModelPtr& model, SpeedEstimator estimator, long budget, double tol,
                    std::uint64_t seed);

struct SigmaEstimate {
    double sigma2_T = 0.0;       // long-run variance of the crossing times
    double sigma2_T_stderr = 0.0;
    double sigma2_xi = 0.0;      // transferred: sigma2_T * v^3
    std::vector<double> lag_profile;  // Bartlett partial sums, averaged over replicas
    bool nonpositive_flag = false;    // plug-in came out <= 0 somewhere
    bool degenerate_flag = false;     // essentially constant crossing times
    double v = 0.0;              // centering speed used
};

// Bartlett-tapered plug-in long-run variance of Z_n = tau_n - 1/v_P with the
// walk started from the per-window pi law.  lag_cap <= 0 selects the
// sqrt(horizon) default.  v_hint > 0 skips the internal speed estimate.
SigmaEstimate clt_sigma(const env::ModelPtr& model, long horizon, long lag_cap, int replicas,
                        std::uint64_t seed, double v_hint = 0.0);

struct RateDiagnostic {
    std::vector<double> log_means;  // log E(...) per product length 1..n_max
    double rate = 0.0;              // least-squares slope; -inf if all mass vanished
    double rate_stderr = 0.0;
    bool pass = false;              // negative beyond 3 stderr
};

struct ConditionDiagnostics {
    RateDiagnostic a_norm;     // (1/n) log E ||a_0...a_{n-1}||   (positive-speed hypothesis)
    RateDiagnostic a_norm_sq;  // (1/n) log E ||a_0...a_{n-1}||^2 (CLT hypothesis)
    RateDiagnostic c_prod;     // (1/n) log E (c_0...c_{n-1})     (collapse hypothesis)
};

ConditionDiagnostics condition_diagnostics(const env::ModelPtr& model, int n_max, int replicas,
                                           std::uint64_t seed);

struct ReportBudgets {
    long chain_length = 2000;
    int replicas = 32;
    long speed_budget = 2000;
    long sigma_horizon = 2000;
    int sigma_replicas = 24;
    int diag_n_max = 10;
    int diag_replicas = 1000;
    double tol = 1e-12;
};

// One document with everything: lambda and the transience verdict, the
// condition-rate diagnostics, and (for transient models) the speed, the
// crossing-time moments, and the CLT variances.
struct AsymptoticsReport {
    LyapunovEstimate lambda;
    ConditionDiagnostics diagnostics;
    bool transient = false;
    SpeedEstimate speed;
    CrossingMoments moments;
    SigmaEstimate sigma;
    std::string model_hash;
    std::uint64_t master_seed = 0;
    ReportBudgets budgets;
};

AsymptoticsReport full_report(const env::ModelPtr& model, const ReportBudgets& budgets,
                              std::uint64_t seed);

}  // namespace strip::asymptotics
