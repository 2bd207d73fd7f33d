#include "strip/exitprob.hpp"
#include "strip/matops.hpp"
#include "strip/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace strip;

namespace {

env::ModelPtr homogeneous_d1() {
    return env::embed_nearest_neighbor({2.0 / 3.0}, {0.0}, {1.0 / 3.0}, Vec::Ones(1));
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

env::ModelPtr random_d3() {
    Rng rng(404);
    auto model = std::make_shared<env::EnvironmentModel>();
    model->kind = env::ModelKind::Iid;
    model->d = 3;
    model->weights = Vec::Constant(3, 1.0 / 3.0);
    for (int a = 0; a < 3; ++a) {
        env::LayerTriple t;
        t.p = Mat(3, 3);
        t.r = Mat(3, 3);
        t.q = Mat(3, 3);
        for (int i = 0; i < 3; ++i) {
            Vec row(9);
            for (int j = 0; j < 9; ++j) row[j] = rng.uniform() + 0.02 + (j >= 6 ? 2.0 : 0.0);
            row /= row.sum();
            for (int j = 0; j < 3; ++j) t.q(i, j) = row[j];
            for (int j = 0; j < 3; ++j) t.r(i, j) = row[3 + j];
            for (int j = 0; j < 3; ++j) t.p(i, j) = row[6 + j];
        }
        model->support.push_back(std::move(t));
    }
    model->validate();
    return model;
}

}  // namespace

TEST_CASE("scalar homogeneous analysis records") {
    const auto model = homogeneous_d1();
    const auto window = env::sample_window(model, -10, 10, 1);
    const auto seq = exitprob::solve_eta(window, 4, exitprob::uniform_seed_matrix(1));
    CHECK(seq.first() == -6);
    CHECK(seq.last() == 10);
    for (long n = seq.first(); n <= seq.last(); ++n) {
        const auto& rec = seq.at(n);
        CHECK(rec.eta(0, 0) == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(rec.gamma(0, 0) == doctest::Approx(1.5).epsilon(1e-13));
        CHECK(rec.a(0, 0) == doctest::Approx(0.5).epsilon(1e-13));
        CHECK(rec.b[0] == doctest::Approx(1.5).epsilon(1e-13));
        CHECK(rec.c == 0.0);
    }
}

TEST_CASE("recursion residual invariant") {
    const auto model = random_d3();
    const auto seq = exitprob::analyze_range(model, 17, -30, 30);
    for (long n = seq.first() + 1; n <= seq.last(); ++n) {
        const auto& t = seq.window().at(n);
        const Mat res = matops::resolvent(t.q, seq.at(n - 1).eta, t.r);
        CHECK(matops::mat_norm(seq.at(n).eta - res * t.p) <= 1e-9);
        CHECK(matops::mat_norm(seq.at(n).gamma - res) <= 1e-9);
    }
}

TEST_CASE("emitted eta are stochastic with nonnegative companions") {
    const auto seq = exitprob::analyze_range(coupled_d2(), 23, -50, 50);
    for (long n = seq.first(); n <= seq.last(); ++n) {
        const auto& rec = seq.at(n);
        CHECK(matops::is_stochastic(rec.eta));
        CHECK(rec.a.minCoeff() >= 0.0);
        CHECK(rec.gamma.minCoeff() >= 0.0);
        CHECK(rec.b.minCoeff() >= 1.0 - 1e-12);
        CHECK(rec.c >= 0.0);
        CHECK(rec.c <= 1.0);
    }
}

TEST_CASE("two seed matrices agree after burn-in") {
    const auto model = random_d3();
    const auto window = env::sample_window(model, -260, 10, 31);
    const auto s1 = exitprob::solve_eta(window, 200, exitprob::uniform_seed_matrix(3));
    const auto s2 = exitprob::solve_eta(window, 200, Mat::Identity(3, 3));
    for (long n = s1.first(); n <= s1.last(); ++n)
        CHECK(matops::mat_norm(s1.at(n).eta - s2.at(n).eta) <= 1e-10);
}

TEST_CASE("adaptive burn-in certifies the contraction product") {
    const auto model = coupled_d2();
    const auto window = env::sample_window(model, -400, 0, 7);
    const auto seq = exitprob::solve_eta_adaptive(window);
    CHECK(seq.burn_in() >= 100);
    double log_c = 0.0;
    const auto probe = exitprob::solve_eta(window, 0, exitprob::uniform_seed_matrix(2));
    for (long n = window.left(); n < window.left() + seq.burn_in(); ++n)
        log_c += probe.at(n).c > 0.0 ? std::log(probe.at(n).c) : kNegInf;
    CHECK(log_c <= std::log(1e-12));
}

TEST_CASE("absorption oracle: biased scalar first passage") {
    const auto model = homogeneous_d1();
    auto window = env::sample_window(model, -80, 1, 3);
    const auto res = exitprob::absorption_oracle(window, 1, {0, 0}, 64);
    CHECK(res.leak_left <= 1e-10);
    CHECK(res.exit_dist[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.mean_time == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(res.second_moment_time == doctest::Approx(33.0).epsilon(1e-8));
}

TEST_CASE("absorption oracle: one-step exit under deterministic right drift") {
    auto model = std::make_shared<env::EnvironmentModel>();
    model->kind = env::ModelKind::Iid;
    model->d = 2;
    model->weights = Vec::Ones(1);
    env::LayerTriple t;
    t.p = (Mat(2, 2) << 0.3, 0.7, 0.6, 0.4).finished();
    t.r = Mat::Zero(2, 2);
    t.q = Mat::Zero(2, 2);
    model->support = {t};
    auto window = env::sample_window(model, -4, 1, 1);
    for (int i = 0; i < 2; ++i) {
        const auto res = exitprob::absorption_oracle(window, 1, {0, i}, 4);
        CHECK(res.mean_time == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(res.second_moment_time == doctest::Approx(1.0).epsilon(1e-14));
        CHECK((res.exit_dist.transpose() - t.p.row(i)).cwiseAbs().maxCoeff() <= 1e-14);
    }
}

TEST_CASE("oracle equivalence with the fixed-point eta") {
    const auto model = coupled_d2();
    const std::uint64_t wseed = 55;
    const auto seq = exitprob::analyze_range(model, wseed, 0, 0);
    auto window = env::sample_window(model, -64, 1, wseed);
    for (int i = 0; i < 2; ++i) {
        const auto res = exitprob::absorption_oracle(window, 1, {0, i}, 64);
        CHECK((res.exit_dist.transpose() - seq.at(0).eta.row(i)).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("pi collapse") {
    const auto d1 = exitprob::analyze_range(homogeneous_d1(), 3, -5, 0);
    const auto pi1 = exitprob::compute_pi(d1, 0, 1e-10);
    CHECK(pi1.pi[0] == 1.0);
    CHECK(pi1.collapse_residual == 0.0);

    // uniform-row eta collapses after a single factor
    std::vector<exitprob::LayerAnalysis> recs(3);
    for (auto& rec : recs) {
        rec.eta = Mat::Constant(2, 2, 0.5);
        rec.gamma = Mat::Identity(2, 2);
        rec.a = Mat::Zero(2, 2);
        rec.b = Vec::Ones(2);
        rec.c = 0.5;
    }
    env::LayerTriple t;
    t.p = Mat::Constant(2, 2, 0.35);
    t.r = Mat::Constant(2, 2, 0.05);
    t.q = Mat::Constant(2, 2, 0.10);
    env::EnvironmentWindow fake({t, t, t}, -3);
    const exitprob::EtaSequence seq(fake, -3, std::move(recs), 0, "uniform");
    const auto pi = exitprob::compute_pi(seq, 0, 1e-10);
    CHECK(pi.depth == 1);
    CHECK(pi.pi[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(pi.pi[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("pi propagation identity and positivity") {
    const auto model = random_d3();
    const auto seq = exitprob::analyze_range(model, 71, -256, 10);
    for (long n = 0; n < 10; ++n) {
        const auto pin = exitprob::compute_pi(seq, n, 1e-12);
        const auto pin1 = exitprob::compute_pi(seq, n + 1, 1e-12);
        const Vec propagated = (pin.pi.transpose() * seq.at(n).eta).transpose();
        CHECK((pin1.pi - propagated).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(pin.pi.minCoeff() > 0.0);
        CHECK(pin.pi.sum() == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("pi reports insufficient windows with the achieved residual") {
    const auto model = coupled_d2();
    const auto window = env::sample_window(model, -104, 0, 9);
    const auto seq = exitprob::solve_eta(window, 100, exitprob::uniform_seed_matrix(2));
    // only 4 factors available; demand an impossible tolerance
    CHECK_THROWS_AS(exitprob::compute_pi(seq, 0, 1e-30), Error);
    try {
        exitprob::compute_pi(seq, 0, 1e-30);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InsufficientWindow);
        CHECK(std::string(e.what()).find("residual") != std::string::npos);
    }
}

TEST_CASE("left exit probabilities") {
    // deterministic right drift: no way down
    auto drift = std::make_shared<env::EnvironmentModel>();
    drift->kind = env::ModelKind::Iid;
    drift->d = 1;
    drift->weights = Vec::Ones(1);
    env::LayerTriple t;
    t.p = Mat::Constant(1, 1, 1.0);
    t.r = Mat::Zero(1, 1);
    t.q = Mat::Zero(1, 1);
    drift->support = {t};
    auto w1 = env::sample_window(drift, -5, 5, 1);
    const auto le1 = exitprob::left_exit(w1, 0, 3);
    CHECK(le1.eta_minus(0, 0) == 0.0);
    CHECK(le1.f[0] == 0.0);

    // scalar homogeneous: gambler's-ruin probability q/p
    auto w2 = env::sample_window(homogeneous_d1(), -8, 8, 1);
    const auto le2 = exitprob::left_exit(w2, 0, 3);
    CHECK(le2.eta_minus(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(le2.f[0] == doctest::Approx(0.125).epsilon(1e-8));
}

TEST_CASE("verify_C4") {
    const auto ok = exitprob::analyze_range(coupled_d2(), 81, -20, 20);
    const auto rep = exitprob::verify_C4(ok);
    CHECK(rep.pass);
    CHECK(rep.min_entry > 0.0);

    const auto persistent = env::persistent_walk_model(0.7, 0.4);
    const auto bad = exitprob::analyze_range(persistent, 82, -20, 20);
    const auto rep2 = exitprob::verify_C4(bad);
    CHECK_FALSE(rep2.pass);
    CHECK(rep2.min_entry == 0.0);

    const auto scalar = exitprob::analyze_range(homogeneous_d1(), 83, -5, 5);
    const auto rep3 = exitprob::verify_C4(scalar);
    CHECK(rep3.pass);
    CHECK(rep3.min_entry == 1.0);
}

TEST_CASE("eta sequence CSV export") {
    const auto seq = exitprob::analyze_range(homogeneous_d1(), 5, 0, 2);
    std::ostringstream os;
    seq.write_csv(os);
    std::istringstream in(os.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "n,eta00,gamma00,a00,b0,c");
}
