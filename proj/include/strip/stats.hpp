#pragma once

#include <cstddef>
#include <utility>
#include <vector>

// Statistical helpers shared by the diagnostics and the verification suites.

namespace strip::stats {

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

MeanStderr mean_stderr(const std::vector<double>& xs);

double sample_variance(const std::vector<double>& xs);

// Ordinary least squares of y against x; returns slope, intercept and the
// classical slope standard error from the residuals.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

LineFit ols_line(const std::vector<double>& x, const std::vector<double>& y);

// log(sum(exp(xs))) with the usual max shift; -inf entries are ignored and an
// all -inf input yields -inf.
double log_sum_exp(const std::vector<double>& xs);

double normal_cdf(double x);

// Survival function of the Kolmogorov distribution, Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

// One-sample KS test of `xs` against the standard normal; returns (D, p).
std::pair<double, double> ks_test_normal(std::vector<double> xs);

// Two-sample KS test, tie-aware; returns (D, p) with the usual effective-size
// asymptotic p-value.
std::pair<double, double> ks_test_two_sample(std::vector<double> a, std::vector<double> b);

// Regularized upper incomplete gamma Q(a, x); used for chi-square p-values.
double gamma_q(double a, double x);

// Pearson chi-square p-value of observed counts against expected counts.
double chi2_pvalue(const std::vector<double>& observed, const std::vector<double>& expected);

// Two-sample chi-square homogeneity test on count vectors.
double chi2_two_sample_pvalue(const std::vector<double>& a, const std::vector<double>& b);

// Lag-k sample autocorrelation.
double autocorrelation(const std::vector<double>& xs, std::size_t lag);

// Bartlett-tapered long-run variance of a centered sequence:
// c0 + 2 sum_{k<=L} (1 - k/(L+1)) c_k with c_k = (1/n) sum z_i z_{i+k}.
// Also returns the partial sums over lags for convergence inspection.
struct LongRunVariance {
    double value = 0.0;
    std::vector<double> partial;  // partial[k] includes lags up to k
};

LongRunVariance bartlett_lrv(const std::vector<double>& z, std::size_t lag_cap);

}  // namespace strip::stats
