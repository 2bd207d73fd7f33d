#include "strip/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace strip::stats {

MeanStderr mean_stderr(const std::vector<double>& xs) {
    MeanStderr out;
    out.n = xs.size();
    if (xs.empty()) return out;
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) {
        const double d = x - out.mean;
        ss += d * d;
    }
    const double var = ss / static_cast<double>(xs.size() - 1);
    out.stderr_ = std::sqrt(var / static_cast<double>(xs.size()));
    return out;
}

double sample_variance(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) {
        const double d = x - mean;
        ss += d * d;
    }
    return ss / static_cast<double>(xs.size() - 1);
}

LineFit ols_line(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit fit;
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) return fit;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) return fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            rss += r * r;
        }
        fit.slope_stderr = std::sqrt(rss / (static_cast<double>(n - 2) * sxx));
    }
    return fit;
}

double log_sum_exp(const std::vector<double>& xs) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : xs) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - mx);
    return mx + std::log(s);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double kolmogorov_q(double lambda) {
    if (lambda < 1e-8) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

std::pair<double, double> ks_test_normal(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double cdf = normal_cdf(xs[i]);
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
    }
    const double sn = std::sqrt(n);
    const double lambda = d * (sn + 0.12 + 0.11 / sn);
    return {d, kolmogorov_q(lambda)};
}

std::pair<double, double> ks_test_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t ia = 0, ib = 0;
    while (ia < a.size() && ib < b.size()) {
        const double v = std::min(a[ia], b[ib]);
        while (ia < a.size() && a[ia] <= v) ++ia;
        while (ib < b.size() && b[ib] <= v) ++ib;
        d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    const double lambda = d * (ne + 0.12 + 0.11 / ne);
    return {d, kolmogorov_q(lambda)};
}

namespace {

double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) return 1.0;
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return std::clamp(1.0 - gamma_p_series(a, x), 0.0, 1.0);
    return std::clamp(gamma_q_contfrac(a, x), 0.0, 1.0);
}

double chi2_pvalue(const std::vector<double>& observed, const std::vector<double>& expected) {
    double chi2 = 0.0;
    std::size_t df = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] <= 0.0) continue;
        const double d = observed[i] - expected[i];
        chi2 += d * d / expected[i];
        ++df;
    }
    if (df < 2) return 1.0;
    return gamma_q(static_cast<double>(df - 1) / 2.0, chi2 / 2.0);
}

double chi2_two_sample_pvalue(const std::vector<double>& a, const std::vector<double>& b) {
    double na = 0.0, nb = 0.0;
    for (double x : a) na += x;
    for (double x : b) nb += x;
    if (na <= 0.0 || nb <= 0.0) return 1.0;
    const double ka = std::sqrt(nb / na);
    const double kb = std::sqrt(na / nb);
    double chi2 = 0.0;
    std::size_t df = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double tot = a[i] + b[i];
        if (tot <= 0.0) continue;
        const double d = ka * a[i] - kb * b[i];
        chi2 += d * d / tot;
        ++df;
    }
    if (df < 2) return 1.0;
    return gamma_q(static_cast<double>(df - 1) / 2.0, chi2 / 2.0);
}

double autocorrelation(const std::vector<double>& xs, std::size_t lag) {
    const std::size_t n = xs.size();
    if (n <= lag + 1) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = xs[i] - mean;
        den += d * d;
        if (i + lag < n) num += d * (xs[i + lag] - mean);
    }
    return den > 0.0 ? num / den : 0.0;
}

LongRunVariance bartlett_lrv(const std::vector<double>& z, std::size_t lag_cap) {
    LongRunVariance out;
    const std::size_t n = z.size();
    if (n == 0) return out;
    lag_cap = std::min(lag_cap, n - 1);
    const double dn = static_cast<double>(n);
    std::vector<double> c(lag_cap + 1, 0.0);
    for (std::size_t k = 0; k <= lag_cap; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) s += z[i] * z[i + k];
        c[k] = s / dn;
    }
    out.partial.resize(lag_cap + 1);
    double acc = c[0];
    out.partial[0] = acc;
    for (std::size_t k = 1; k <= lag_cap; ++k) {
        const double w = 1.0 - static_cast<double>(k) / static_cast<double>(lag_cap + 1);
        acc += 2.0 * w * c[k];
        out.partial[k] = acc;
    }
    out.value = acc;
    return out;
}

}  // namespace strip::stats
