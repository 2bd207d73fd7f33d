#include "strip/asymptotics.hpp"
#include "strip/exitprob.hpp"
#include "strip/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace strip;
using asymptotics::SpeedEstimator;
using asymptotics::Transience;

namespace {

env::ModelPtr homogeneous_d1(double p) {
    return env::embed_nearest_neighbor({p}, {0.0}, {1.0 - p}, Vec::Ones(1));
}

env::ModelPtr coupled_d2() {
    auto model = std::make_shared<env::EnvironmentModel>();
    model->kind = env::ModelKind::Iid;
    model->d = 2;
    model->weights = Vec::Constant(2, 0.5);
    env::LayerTriple a;
    a.p = (Mat(2, 2) << 0.50, 0.15, 0.20, 0.45).finished();
    a.r = (Mat(2, 2) << 0.05, 0.05, 0.05, 0.05).finished();
    a.q = (Mat(2, 2) << 0.15, 0.10, 0.15, 0.10).finished();
    env::LayerTriple b;
    b.p = (Mat(2, 2) << 0.40, 0.25, 0.10, 0.50).finished();
    b.r = (Mat(2, 2) << 0.10, 0.05, 0.05, 0.10).finished();
    b.q = (Mat(2, 2) << 0.10, 0.10, 0.15, 0.10).finished();
    model->support = {a, b};
    model->validate();
    return model;
}

// near-deterministic right drift with a tiny admissible floor
env::ModelPtr floored_drift_d1() { return homogeneous_d1(0.998); }

}  // namespace

TEST_CASE("lyapunov: homogeneous chain is exact") {
    const auto lam = asymptotics::lyapunov(homogeneous_d1(2.0 / 3.0), 1000, 4, 1);
    CHECK(lam.mean == doctest::Approx(-std::log(2.0)).epsilon(1e-13));
    CHECK(lam.stderr_ <= 1e-13);
    CHECK(lam.verdict == Transience::TransientRight);
    CHECK_FALSE(lam.degenerate);
}

TEST_CASE("lyapunov: iid two-atom chain matches E log rho") {
    const auto model = env::embed_nearest_neighbor({0.6, 0.7}, {0.0, 0.0}, {0.4, 0.3},
                                                   Vec::Constant(2, 0.5));
    const auto lam = asymptotics::lyapunov(model, 4000, 32, 2);
    const double exact = 0.5 * (std::log(2.0 / 3.0) + std::log(3.0 / 7.0));
    CHECK(exact == doctest::Approx(-0.626381).epsilon(1e-5));
    CHECK(lam.mean == doctest::Approx(exact).epsilon(0.01));
    CHECK(std::abs(lam.mean - exact) <= 4.0 * lam.stderr_ + 1e-3);
}

TEST_CASE("lyapunov: symmetric scalar walk is indeterminate") {
    const auto lam = asymptotics::lyapunov(homogeneous_d1(0.5), 1000, 4, 3);
    CHECK(lam.mean == 0.0);
    CHECK(lam.verdict == Transience::Indeterminate);
}

TEST_CASE("lyapunov: disjoint seed sets agree within stderr") {
    const auto model = coupled_d2();
    const auto a = asymptotics::lyapunov(model, 2000, 24, 100);
    const auto b = asymptotics::lyapunov(model, 2000, 24, 200);
    const double joint = std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
    CHECK(std::abs(a.mean - b.mean) <= 3.0 * joint + 1e-12);
    CHECK(a.verdict == Transience::TransientRight);
}

TEST_CASE("lyapunov rejects models failing C2") {
    auto bad = std::make_shared<env::EnvironmentModel>();
    bad->kind = env::ModelKind::Iid;
    bad->d = 1;
    bad->weights = Vec::Ones(1);
    env::LayerTriple t;
    t.p = Mat::Constant(1, 1, 1.0);
    t.r = Mat::Zero(1, 1);
    t.q = Mat::Zero(1, 1);
    bad->support = {t};
    CHECK_THROWS_AS(asymptotics::lyapunov(bad, 100, 2, 1), Error);
}

TEST_CASE("crossing moments: scalar closed forms") {
    const auto seq = exitprob::analyze_range(homogeneous_d1(2.0 / 3.0), 7, -256, 0);
    const auto cm = asymptotics::crossing_moments(seq, 0, 1e-12);
    CHECK(cm.u0[0] == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(cm.w0[0] == doctest::Approx(33.0).epsilon(1e-10));
    CHECK(cm.tail_bound <= 1e-11);
    CHECK(cm.tail_bound_w <= 1e-9);
    CHECK(cm.truncation_depth > 10);
}

TEST_CASE("crossing moments: one-step crossing under strong drift") {
    const auto seq = exitprob::analyze_range(floored_drift_d1(), 8, -64, 0);
    const auto cm = asymptotics::crossing_moments(seq, 0, 1e-12);
    CHECK(cm.u0[0] == doctest::Approx(1.0).epsilon(0.01));
    CHECK(cm.w0[0] == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("crossing moments match the absorbing-chain oracle per height") {
    const auto model = coupled_d2();
    const std::uint64_t wseed = 91;
    const auto seq = exitprob::analyze_range(model, wseed, -320, 0);
    const auto cm = asymptotics::crossing_moments(seq, 0, 1e-13);
    auto window = env::sample_window(model, -320, 1, wseed);
    for (int i = 0; i < 2; ++i) {
        const auto res = exitprob::absorption_oracle(window, 1, {0, i}, 64);
        CHECK(cm.u0[i] == doctest::Approx(res.mean_time).epsilon(1e-7));
        CHECK(cm.w0[i] == doctest::Approx(res.second_moment_time).epsilon(1e-7));
    }
}

TEST_CASE("speed: deterministic scalar letters give v = p - q") {
    for (double p : {0.6, 0.75, 0.9}) {
        const auto model = env::embed_nearest_neighbor({p}, {0.08}, {0.92 - p}, Vec::Ones(1));
        const auto sp = asymptotics::speed(model, SpeedEstimator::Ensemble, 16, 1e-12, 5);
        CHECK(sp.v == doctest::Approx(p - (0.92 - p)).epsilon(1e-12));
        CHECK(sp.stderr_ <= 1e-12);
    }
    const auto sp = asymptotics::speed(homogeneous_d1(2.0 / 3.0), SpeedEstimator::Ensemble, 16,
                                       1e-12, 6);
    CHECK(sp.v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("speed: strong drift approaches 1") {
    const auto sp = asymptotics::speed(floored_drift_d1(), SpeedEstimator::Ensemble, 16, 1e-12, 7);
    CHECK(sp.v == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("speed: ensemble and spatial estimators agree") {
    const auto model = coupled_d2();
    const auto ens = asymptotics::speed(model, SpeedEstimator::Ensemble, 1500, 1e-12, 8);
    const auto spa = asymptotics::speed(model, SpeedEstimator::Spatial, 30000, 1e-12, 9);
    const double joint = std::sqrt(ens.stderr_ * ens.stderr_ + spa.stderr_ * spa.stderr_);
    CHECK(std::abs(ens.v - spa.v) <= 3.0 * joint);
}

TEST_CASE("speed refuses non-transient models") {
    CHECK_THROWS_AS(asymptotics::speed(homogeneous_d1(0.5), SpeedEstimator::Ensemble, 16, 1e-12, 10),
                    Error);
}

TEST_CASE("clt_sigma: iid scalar crossings have long-run variance 24") {
    const auto est = asymptotics::clt_sigma(homogeneous_d1(2.0 / 3.0), 4000, 0, 24, 11);
    CHECK(est.v == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    CHECK(est.sigma2_T == doctest::Approx(24.0).epsilon(0.15));
    // the transfer identity holds exactly for the reported speed
    CHECK(est.sigma2_xi == est.sigma2_T * est.v * est.v * est.v);
    CHECK(est.sigma2_xi == doctest::Approx(est.sigma2_T / 27.0).epsilon(1e-8));
    CHECK_FALSE(est.degenerate_flag);
    CHECK(est.lag_profile.size() == 64);  // sqrt(4000) rounded + 1
}

TEST_CASE("clt_sigma: near-deterministic crossings are flagged degenerate") {
    const auto est = asymptotics::clt_sigma(floored_drift_d1(), 2000, 0, 8, 12);
    CHECK(est.sigma2_T <= 0.05);
    CHECK(est.degenerate_flag == (est.lag_profile[0] < 1e-9));
}

TEST_CASE("condition diagnostics: scalar homogeneous rates are exact") {
    const auto diag = asymptotics::condition_diagnostics(homogeneous_d1(2.0 / 3.0), 12, 200, 13);
    CHECK(diag.a_norm.rate == doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(diag.a_norm_sq.rate == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-12));
    CHECK(diag.c_prod.rate == kNegInf);
    CHECK(diag.a_norm.pass);
    CHECK(diag.a_norm_sq.pass);
    CHECK(diag.c_prod.pass);
    CHECK(diag.a_norm.log_means.size() == 12);
}

TEST_CASE("condition diagnostics: engineered second-moment failure is flagged") {
    // E(rho) = 0.775 < 1 but E(rho^2) = 1.24375 > 1
    const auto model = env::embed_nearest_neighbor({1.0 / 3.0, 0.8}, {0.0, 0.0}, {2.0 / 3.0, 0.2},
                                                   (Vec(2) << 0.3, 0.7).finished());
    const auto diag = asymptotics::condition_diagnostics(model, 6, 40000, 14);
    CHECK(diag.a_norm.pass);
    CHECK_FALSE(diag.a_norm_sq.pass);
    CHECK(diag.a_norm.rate == doctest::Approx(std::log(0.775)).epsilon(0.05));
    CHECK(diag.a_norm_sq.rate == doctest::Approx(std::log(1.24375)).epsilon(0.5));
}

TEST_CASE("condition diagnostics: two seeds agree on a random width-2 model") {
    const auto model = coupled_d2();
    const auto a = asymptotics::condition_diagnostics(model, 10, 4000, 15);
    const auto b = asymptotics::condition_diagnostics(model, 10, 4000, 16);
    CHECK(a.a_norm.pass);
    CHECK(b.a_norm.pass);
    CHECK(std::abs(a.a_norm.rate - b.a_norm.rate) <=
          3.0 * (a.a_norm.rate_stderr + b.a_norm.rate_stderr) + 0.02);
}

TEST_CASE("moment inequalities on random admissible inputs") {
    Rng rng(314);
    for (int trial = 0; trial < 40; ++trial) {
        auto model = std::make_shared<env::EnvironmentModel>();
        model->kind = env::ModelKind::Iid;
        model->d = 1 + static_cast<int>(rng.below(3));
        const int d = model->d;
        model->weights = Vec::Constant(2, 0.5);
        for (int a = 0; a < 2; ++a) {
            env::LayerTriple t;
            t.p = Mat(d, d);
            t.r = Mat(d, d);
            t.q = Mat(d, d);
            for (int i = 0; i < d; ++i) {
                Vec row(3 * d);
                for (int j = 0; j < 3 * d; ++j) row[j] = rng.uniform() + 0.05 + (j >= 2 * d ? 2.5 : 0.0);
                row /= row.sum();
                for (int j = 0; j < d; ++j) t.q(i, j) = row[j];
                for (int j = 0; j < d; ++j) t.r(i, j) = row[d + j];
                for (int j = 0; j < d; ++j) t.p(i, j) = row[2 * d + j];
            }
            model->support.push_back(std::move(t));
        }
        model->validate();
        const auto seq = exitprob::analyze_range(model, derive_seed(314, "jensen", trial), -320, 0);
        const auto cm = asymptotics::crossing_moments(seq, 0, 1e-12);
        CHECK(cm.u0.minCoeff() >= 1.0 - 1e-12);
        CHECK(((cm.w0 - cm.u0.cwiseProduct(cm.u0)).array() >= -1e-9).all());
        CHECK(cm.tail_bound >= 0.0);
    }
}
