#include "strip/rng.hpp"
#include "strip/stats.hpp"
#include "strip/types.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace strip;

namespace {

std::vector<double> normal_sample(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> xs;
    xs.reserve(n);
    while (xs.size() < n) {
        const double u1 = 1.0 - rng.uniform();
        const double u2 = rng.uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        xs.push_back(r * std::cos(2.0 * M_PI * u2));
        if (xs.size() < n) xs.push_back(r * std::sin(2.0 * M_PI * u2));
    }
    return xs;
}

}  // namespace

TEST_CASE("mean and stderr") {
    const auto ms = stats::mean_stderr({1.0, 2.0, 3.0, 4.0});
    CHECK(ms.mean == doctest::Approx(2.5));
    // sd = sqrt(5/3), stderr = sd/2
    CHECK(ms.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
}

TEST_CASE("ols on exact line") {
    std::vector<double> x{1, 2, 3, 4, 5}, y;
    for (double v : x) y.push_back(3.0 - 2.0 * v);
    const auto fit = stats::ols_line(x, y);
    CHECK(fit.slope == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(fit.slope_stderr == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("log_sum_exp") {
    CHECK(stats::log_sum_exp({std::log(1.0), std::log(2.0)}) == doctest::Approx(std::log(3.0)));
    CHECK(stats::log_sum_exp({kNegInf, std::log(2.0)}) == doctest::Approx(std::log(2.0)));
    CHECK(stats::log_sum_exp({kNegInf, kNegInf}) == kNegInf);
}

TEST_CASE("normal cdf values") {
    CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(stats::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
}

TEST_CASE("kolmogorov survival function") {
    // Q(0.8276) ~ 0.5 is the distribution's median.
    CHECK(stats::kolmogorov_q(0.8276) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(stats::kolmogorov_q(2.0) < 1e-3);
    CHECK(stats::kolmogorov_q(0.0) == 1.0);
}

TEST_CASE("one-sample KS against the normal") {
    const auto good = stats::ks_test_normal(normal_sample(4000, 11));
    CHECK(good.second > 0.01);
    Rng rng(12);
    std::vector<double> uniform;
    for (int i = 0; i < 4000; ++i) uniform.push_back(rng.uniform());
    const auto bad = stats::ks_test_normal(uniform);
    CHECK(bad.second < 1e-6);
}

TEST_CASE("two-sample KS") {
    auto a = normal_sample(3000, 21);
    auto b = normal_sample(3000, 22);
    CHECK(stats::ks_test_two_sample(a, b).second > 0.01);
    for (double& x : b) x += 0.5;
    CHECK(stats::ks_test_two_sample(a, b).second < 1e-6);
}

TEST_CASE("chi-square p-values") {
    // Q(chi2 = 3.841, df 1) ~ 0.05
    CHECK(stats::gamma_q(0.5, 3.841 / 2.0) == doctest::Approx(0.05).epsilon(2e-3));
    CHECK(stats::chi2_pvalue({10, 20, 30}, {10, 20, 30}) == doctest::Approx(1.0));
    CHECK(stats::chi2_pvalue({100, 0}, {50, 50}) < 1e-10);
    CHECK(stats::chi2_two_sample_pvalue({500, 500}, {480, 520}) > 0.01);
    CHECK(stats::chi2_two_sample_pvalue({900, 100}, {100, 900}) < 1e-10);
}

TEST_CASE("autocorrelation of iid noise is small") {
    const auto xs = normal_sample(20000, 31);
    CHECK(std::abs(stats::autocorrelation(xs, 1)) < 3.0 / std::sqrt(20000.0));
}

TEST_CASE("bartlett long-run variance of iid noise") {
    const auto xs = normal_sample(40000, 41);
    const auto lrv = stats::bartlett_lrv(xs, 200);
    CHECK(lrv.value == doctest::Approx(1.0).epsilon(0.1));
    CHECK(lrv.partial.size() == 201);
    CHECK(lrv.partial[0] == doctest::Approx(1.0).epsilon(0.05));
}
