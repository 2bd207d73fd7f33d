#include "strip/exitprob.hpp"

#include "strip/matops.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace strip::exitprob {

namespace {

constexpr long kDepthCap = 1L << 14;

double column_spread(const Mat& m) {
    double spread = 0.0;
    for (int j = 0; j < m.cols(); ++j)
        spread = std::max(spread, m.col(j).maxCoeff() - m.col(j).minCoeff());
    return spread;
}

}  // namespace

LayerAnalysis analyze_layer(const env::LayerTriple& t, const Mat& eta_prev) {
    const int d = t.order();
    if (d == 1) {
        const double contraction = t.q(0, 0) * eta_prev(0, 0) + t.r(0, 0);
        if (contraction >= 1.0 - 1e-10) {
            std::ostringstream msg;
            msg << "exit recursion near-singular: ||q*eta + r|| = " << contraction;
            fail(ErrorKind::NearSingular, msg.str());
        }
        const double g = 1.0 / (1.0 - contraction);
        LayerAnalysis rec;
        if (std::abs(g * t.p(0, 0) - 1.0) > 1e-8)
            fail(ErrorKind::NumericalFailure, "scalar eta deviates from 1 beyond tolerance");
        rec.eta = Mat::Constant(1, 1, 1.0);  // the scalar fixed point is exact
        rec.a = Mat::Constant(1, 1, g * t.q(0, 0));
        rec.gamma = Mat::Constant(1, 1, g);
        rec.b = Vec::Constant(1, g);
        rec.c = 0.0;
        return rec;
    }
    const Mat contraction = t.q * eta_prev + t.r;
    const double cnorm = matops::mat_norm(contraction);
    if (cnorm >= 1.0 - 1e-10) {
        std::ostringstream msg;
        msg << "exit recursion near-singular: ||q*eta + r|| = " << cnorm;
        fail(ErrorKind::NearSingular, msg.str());
    }
    LayerAnalysis rec;
    if (d == 2) {
        // Closed-form 2x2 resolvent; the system is diagonally dominant under
        // the norm guard above, so the determinant is bounded away from zero.
        const double m00 = 1.0 - contraction(0, 0), m01 = -contraction(0, 1);
        const double m10 = -contraction(1, 0), m11 = 1.0 - contraction(1, 1);
        const double inv_det = 1.0 / (m00 * m11 - m01 * m10);
        rec.gamma = Mat(2, 2);
        rec.gamma << m11 * inv_det, -m01 * inv_det, -m10 * inv_det, m00 * inv_det;
        rec.eta = rec.gamma * t.p;
        rec.a = rec.gamma * t.q;
        rec.b = rec.gamma.rowwise().sum();
    } else {
        const Mat m = Mat::Identity(d, d) - contraction;
        Eigen::PartialPivLU<Mat> lu(m);
        rec.eta = lu.solve(t.p);
        rec.a = lu.solve(t.q);
        rec.gamma = lu.solve(Mat::Identity(d, d));
        rec.b = lu.solve(Vec::Ones(d));
    }

    const double row_err = (rec.eta.rowwise().sum().array() - 1.0).abs().maxCoeff();
    if (row_err > 1e-8) {
        std::ostringstream msg;
        msg << "eta rows deviate from stochastic by " << row_err;
        fail(ErrorKind::NumericalFailure, msg.str());
    }
    // Project back onto stochastic matrices.  The fixed point is stochastic
    // and the recursion amplifies row-sum roundoff by q/p on left-drifting
    // stretches, so without this the drift compounds across a long window.
    for (int i = 0; i < d; ++i) rec.eta.row(i) /= rec.eta.row(i).sum();
    double maxmin = 0.0;
    for (int i = 0; i < d; ++i) maxmin = std::max(maxmin, rec.eta.row(i).minCoeff());
    rec.c = std::min(1.0, std::max(0.0, 1.0 - maxmin));
    return rec;
}

EtaSequence::EtaSequence(env::EnvironmentWindow window, long first_index,
                         std::vector<LayerAnalysis> records, int burn_in, std::string seed_matrix_id)
    : window_(std::move(window)),
      first_(first_index),
      records_(std::move(records)),
      burn_in_(burn_in),
      seed_matrix_id_(std::move(seed_matrix_id)) {}

const LayerAnalysis& EtaSequence::at(long n) const {
    if (!has(n)) fail(ErrorKind::InsufficientWindow, "analysis record index outside sequence");
    return records_[static_cast<std::size_t>(n - first_)];
}

Mat uniform_seed_matrix(int order) {
    return Mat::Constant(order, order, 1.0 / static_cast<double>(order));
}

EtaSequence solve_eta(const env::EnvironmentWindow& window, int burn_in, const Mat& seed_matrix) {
    const int d = window.order();
    if (seed_matrix.rows() != d || seed_matrix.cols() != d || !matops::is_stochastic(seed_matrix))
        fail(ErrorKind::Model, "fixed-point seed must be a stochastic matrix of the window order");
    if (burn_in < 0 || burn_in >= window.size())
        fail(ErrorKind::InsufficientWindow, "window too short for the requested burn-in");

    std::vector<LayerAnalysis> records;
    records.reserve(static_cast<std::size_t>(window.size() - burn_in));
    Mat eta_prev = seed_matrix;
    for (long n = window.left(); n <= window.right(); ++n) {
        LayerAnalysis rec = analyze_layer(window.at(n), eta_prev);
        eta_prev = rec.eta;
        if (n >= window.left() + burn_in) records.push_back(std::move(rec));
    }
    std::string seed_id = "custom";
    if (seed_matrix == uniform_seed_matrix(d))
        seed_id = "uniform";
    else if (seed_matrix == Mat::Identity(d, d))
        seed_id = "identity";
    return EtaSequence(window, window.left() + burn_in, std::move(records), burn_in, seed_id);
}

EtaSequence solve_eta_adaptive(const env::EnvironmentWindow& window, double forget_bound,
                               int floor_letters) {
    const int d = window.order();
    const long n_letters = window.size();
    if (n_letters <= floor_letters)
        fail(ErrorKind::InsufficientWindow, "window shorter than the burn-in floor");

    std::vector<LayerAnalysis> records;
    records.reserve(static_cast<std::size_t>(n_letters));
    Mat eta_prev = uniform_seed_matrix(d);
    double log_c = 0.0;
    long burn = -1;
    const double log_bound = std::log(forget_bound);
    long i = 0;
    for (long n = window.left(); n <= window.right(); ++n, ++i) {
        records.push_back(analyze_layer(window.at(n), eta_prev));
        eta_prev = records.back().eta;
        log_c += records.back().c > 0.0 ? std::log(records.back().c) : kNegInf;
        if (burn < 0 && i + 1 >= floor_letters && log_c <= log_bound && i + 1 < n_letters)
            burn = i + 1;
    }

    if (burn < 0) {
        // Contraction bound never certified (c == 1 is possible for models
        // with structural eta zeros); fall back to direct two-seed agreement.
        Mat eta_id = Mat::Identity(d, d);
        long agree_from = -1;
        i = 0;
        for (long n = window.left(); n <= window.right(); ++n, ++i) {
            eta_id = analyze_layer(window.at(n), eta_id).eta;
            const double delta = matops::mat_norm(eta_id - records[static_cast<std::size_t>(i)].eta);
            if (delta <= forget_bound * 1e-1) {
                if (agree_from < 0) agree_from = i;
            } else {
                agree_from = -1;
            }
        }
        if (agree_from < 0)
            fail(ErrorKind::InsufficientWindow, "seed forgetting not reached within the window");
        burn = std::max<long>(agree_from + 1, floor_letters);
        if (burn >= n_letters)
            fail(ErrorKind::InsufficientWindow, "seed forgetting not reached within the window");
    }

    records.erase(records.begin(), records.begin() + burn);
    return EtaSequence(window, window.left() + burn, std::move(records), static_cast<int>(burn),
                       "uniform");
}

EtaSequence analyze_range(const env::ModelPtr& model, std::uint64_t window_seed, long first_needed,
                          long last_needed) {
    long margin = 160;
    for (;;) {
        env::EnvironmentWindow window =
            env::sample_window(model, first_needed - margin, last_needed, window_seed);
        try {
            EtaSequence seq = solve_eta_adaptive(window);
            if (seq.first() <= first_needed) return seq;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::InsufficientWindow) throw;
        }
        if (margin >= (1L << 16))
            fail(ErrorKind::InsufficientWindow, "burn-in not certified within 2^16 letters");
        margin *= 2;
    }
}

void EtaSequence::write_csv(std::ostream& os) const {
    const int d = order();
    os << "n";
    for (const char* blk : {"eta", "gamma", "a"})
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) os << ',' << blk << i << j;
    for (int i = 0; i < d; ++i) os << ",b" << i;
    os << ",c\n";
    os.precision(17);
    for (long n = first(); n <= last(); ++n) {
        const LayerAnalysis& rec = at(n);
        os << n;
        for (const Mat* m : {&rec.eta, &rec.gamma, &rec.a})
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) os << ',' << (*m)(i, j);
        for (int i = 0; i < d; ++i) os << ',' << rec.b[i];
        os << ',' << rec.c << '\n';
    }
}

// ---------------------------------------------------------------------------
// Absorbing-chain oracle
// ---------------------------------------------------------------------------

namespace {

struct SweepResult {
    std::vector<Mat> cross;  // first-passage matrices D_n, n = lo .. target-1
    std::vector<Vec> u;      // mean passage times
    std::vector<Vec> w;      // second moments
    long lo = 0;
};

// Block-tridiagonal elimination on [lo, target-1] with absorbing boundaries
// at lo-1 and target.  D_n solves the layer-to-layer first-passage recursion;
// C carries the inhomogeneous terms for the time moments.
SweepResult absorption_sweep(const env::EnvironmentWindow& window, long lo, long target) {
    const int d = window.order();
    const long count = target - lo;
    SweepResult res;
    res.lo = lo;
    res.cross.reserve(static_cast<std::size_t>(count));
    std::vector<Vec> c1;
    c1.reserve(static_cast<std::size_t>(count));

    Mat d_prev = Mat::Zero(d, d);
    Vec c_prev = Vec::Zero(d);
    std::vector<Eigen::PartialPivLU<Mat>> lus;
    lus.reserve(static_cast<std::size_t>(count));
    for (long n = lo; n < target; ++n) {
        const env::LayerTriple& t = window.at(n);
        const Mat m = Mat::Identity(d, d) - t.r - t.q * d_prev;
        lus.emplace_back(m);
        const auto& lu = lus.back();
        Mat d_n = lu.solve(t.p);
        Vec c_n = lu.solve(Vec(Vec::Ones(d) + t.q * c_prev));
        if (!d_n.allFinite() || !c_n.allFinite())
            fail(ErrorKind::Degeneracy, "absorbing-chain solve degenerate (walk trapped)");
        res.cross.push_back(std::move(d_n));
        c1.push_back(std::move(c_n));
        d_prev = res.cross.back();
        c_prev = c1.back();
    }

    // Mean passage times, top down.
    res.u.assign(static_cast<std::size_t>(count), Vec());
    Vec u_above = Vec::Zero(d);
    for (long n = target - 1; n >= lo; --n) {
        const auto i = static_cast<std::size_t>(n - lo);
        res.u[i] = c1[i] + res.cross[i] * u_above;
        u_above = res.u[i];
    }

    // Second moments: same elimination with source 2u - 1.
    std::vector<Vec> c2(static_cast<std::size_t>(count));
    c_prev = Vec::Zero(d);
    for (long n = lo; n < target; ++n) {
        const auto i = static_cast<std::size_t>(n - lo);
        const env::LayerTriple& t = window.at(n);
        c2[i] = lus[i].solve(Vec(2.0 * res.u[i] - Vec::Ones(d) + t.q * c_prev));
        c_prev = c2[i];
    }
    res.w.assign(static_cast<std::size_t>(count), Vec());
    Vec w_above = Vec::Zero(d);
    for (long n = target - 1; n >= lo; --n) {
        const auto i = static_cast<std::size_t>(n - lo);
        res.w[i] = c2[i] + res.cross[i] * w_above;
        w_above = res.w[i];
    }
    return res;
}

}  // namespace

AbsorptionResult absorption_oracle(env::EnvironmentWindow& window, long target_layer,
                                   std::pair<long, int> start, long truncation_depth) {
    const auto [start_layer, start_height] = start;
    const int d = window.order();
    if (start_layer >= target_layer)
        fail(ErrorKind::Model, "oracle start must lie strictly left of the target layer");
    if (start_height < 0 || start_height >= d) fail(ErrorKind::Model, "oracle start height out of range");

    long depth = std::max(truncation_depth, target_layer - start_layer);
    for (;;) {
        long lo = target_layer - depth;
        const bool have = window.ensure(lo, target_layer - 1);
        if (!have) lo = std::max(lo, window.left());
        if (start_layer < lo) fail(ErrorKind::InsufficientWindow, "oracle start outside the truncated strip");

        const SweepResult sweep = absorption_sweep(window, lo, target_layer);
        RowVec row = RowVec::Zero(d);
        row[start_height] = 1.0;
        for (long n = start_layer; n < target_layer; ++n)
            row = row * sweep.cross[static_cast<std::size_t>(n - sweep.lo)];

        AbsorptionResult out;
        out.exit_dist = row.transpose();
        out.leak_left = std::max(0.0, 1.0 - row.sum());
        const auto si = static_cast<std::size_t>(start_layer - sweep.lo);
        out.mean_time = sweep.u[si][start_height];
        out.second_moment_time = sweep.w[si][start_height];
        out.depth_used = target_layer - lo;
        if (out.leak_left <= 1e-10) return out;

        if (depth >= kDepthCap) {
            std::ostringstream msg;
            msg << "left leak " << out.leak_left << " not certified at the depth cap " << kDepthCap
                << " (input may be recurrent)";
            fail(ErrorKind::Truncation, msg.str());
        }
        if (!have && lo == window.left()) {
            std::ostringstream msg;
            msg << "left leak " << out.leak_left << " not certified within a fixed window";
            fail(ErrorKind::Truncation, msg.str());
        }
        depth = std::min(kDepthCap, depth * 2);
    }
}

// ---------------------------------------------------------------------------
// Pi collapse
// ---------------------------------------------------------------------------

PiVector compute_pi(const EtaSequence& seq, long at_index, double tol) {
    if (!seq.has(at_index - 1))
        fail(ErrorKind::InsufficientWindow, "no analysis records to the left of the collapse index");
    const int d = seq.order();

    Mat prod = seq.at(at_index - 1).eta;
    double log_c = seq.at(at_index - 1).c > 0.0 ? std::log(seq.at(at_index - 1).c) : kNegInf;
    long depth = 1;
    double spread = column_spread(prod);
    const double log_tol = std::log(tol);
    while (spread > tol && log_c > log_tol) {
        const long idx = at_index - 1 - depth;
        if (!seq.has(idx)) {
            std::ostringstream msg;
            msg << "window exhausted before column collapse: residual " << spread << " > " << tol;
            fail(ErrorKind::InsufficientWindow, msg.str());
        }
        prod = seq.at(idx).eta * prod;
        log_c += seq.at(idx).c > 0.0 ? std::log(seq.at(idx).c) : kNegInf;
        ++depth;
        spread = column_spread(prod);
    }

    PiVector out;
    out.pi = Vec(d);
    for (int j = 0; j < d; ++j) out.pi[j] = 0.5 * (prod.col(j).maxCoeff() + prod.col(j).minCoeff());
    const double total = out.pi.sum();
    if (!(total > 0.0)) fail(ErrorKind::NumericalFailure, "collapsed pi row has nonpositive mass");
    out.pi /= total;
    out.collapse_residual = spread;
    out.depth = depth;
    return out;
}

// ---------------------------------------------------------------------------
// Left exits
// ---------------------------------------------------------------------------

namespace {

// Downward first-passage matrices on [lo, at + probe] with an absorbing
// "escaped right" boundary above the probe.
std::vector<Mat> left_exit_sweep(const env::EnvironmentWindow& window, long lo, long hi) {
    const int d = window.order();
    std::vector<Mat> exits(static_cast<std::size_t>(hi - lo + 1));
    Mat e_above = Mat::Zero(d, d);
    for (long m = hi; m >= lo; --m) {
        const env::LayerTriple& t = window.at(m);
        const Mat sys = Mat::Identity(d, d) - t.r - t.p * e_above;
        Eigen::PartialPivLU<Mat> lu(sys);
        Mat e_m = lu.solve(t.q);
        if (!e_m.allFinite()) fail(ErrorKind::Degeneracy, "left-exit solve degenerate");
        exits[static_cast<std::size_t>(m - lo)] = e_m;
        e_above = std::move(e_m);
    }
    return exits;
}

}  // namespace

LeftExit left_exit(env::EnvironmentWindow& window, long at_index, int depth) {
    if (depth < 1) fail(ErrorKind::Model, "left_exit depth must be >= 1");
    const long lo = at_index - depth + 1;

    long probe = 64;
    Mat prev_eta_minus;
    bool have_prev = false;
    for (;;) {
        if (!window.ensure(lo, at_index + probe)) {
            if (window.covers(lo) && window.right() > at_index) {
                probe = window.right() - at_index;  // fixed window: use what there is
            } else {
                fail(ErrorKind::InsufficientWindow, "window does not cover the left-exit range");
            }
        }
        std::vector<Mat> exits = left_exit_sweep(window, lo, at_index + probe);
        const Mat& eta_minus = exits[static_cast<std::size_t>(at_index - lo)];
        const bool stable = have_prev && matops::mat_norm(eta_minus - prev_eta_minus) <= 1e-10;
        const bool at_fixed_edge = !window.growable() && at_index + probe >= window.right();
        if (stable || at_fixed_edge) {
            LeftExit out;
            out.eta_minus = eta_minus;
            Mat prod = eta_minus;
            for (long m = at_index - 1; m >= lo; --m) prod = prod * exits[static_cast<std::size_t>(m - lo)];
            out.f = prod.rowwise().sum();
            return out;
        }
        if (probe >= kDepthCap)
            fail(ErrorKind::Truncation, "left-exit right boundary did not stabilize at the probe cap");
        prev_eta_minus = eta_minus;
        have_prev = true;
        probe *= 2;
    }
}

C4Report verify_C4(const EtaSequence& seq, double floor_value) {
    C4Report rep;
    if (seq.first() > seq.last()) fail(ErrorKind::Model, "verify_C4 needs a nonempty sequence");
    double min_entry = 1.0;
    for (long n = seq.first(); n <= seq.last(); ++n)
        min_entry = std::min(min_entry, seq.at(n).eta.minCoeff());
    rep.min_entry = min_entry;
    rep.pass = min_entry > floor_value;
    return rep;
}

}  // namespace strip::exitprob
