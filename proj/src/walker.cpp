#include "strip/walker.hpp"

#include "strip/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <ostream>
#include <sstream>

namespace strip::walker {

namespace {

// Per-atom cumulative step tables: for each height a row of 3d cumulative
// probabilities ordered q(h, .), r(h, .), p(h, .).
std::vector<Mat> build_step_tables(const env::EnvironmentModel& model) {
    std::vector<Mat> tables;
    tables.reserve(model.support.size());
    const int d = model.d;
    for (const auto& t : model.support) {
        Mat cum(d, 3 * d);
        for (int h = 0; h < d; ++h) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j) cum(h, j) = (acc += t.q(h, j));
            for (int j = 0; j < d; ++j) cum(h, d + j) = (acc += t.r(h, j));
            for (int j = 0; j < d; ++j) cum(h, 2 * d + j) = (acc += t.p(h, j));
        }
        tables.push_back(std::move(cum));
    }
    return tables;
}

struct Step {
    int dlevel;
    int height;
};

Step sample_step(const Mat& cum, int h, double u) {
    const int cols = static_cast<int>(cum.cols());
    const int d = cols / 3;
    const double total = cum(h, cols - 1);
    const double x = u * total;
    int j = 0;
    while (j < cols - 1 && x >= cum(h, j)) ++j;
    return {j / d - 1, j % d};
}

Step sample_step_triple(const env::LayerTriple& t, int h, double u) {
    const int d = t.order();
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
        acc += t.q(h, j);
        if (u < acc) return {-1, j};
    }
    for (int j = 0; j < d; ++j) {
        acc += t.r(h, j);
        if (u < acc) return {0, j};
    }
    for (int j = 0; j < d - 1; ++j) {
        acc += t.p(h, j);
        if (u < acc) return {1, j};
    }
    return {1, d - 1};
}

// pi at index 0 from the window's own letters, growing left as needed.
Vec pi_start_distribution(env::EnvironmentWindow& window, double tol) {
    long extent = std::max<long>(160, -window.left());
    for (;;) {
        if (!window.ensure(-extent, 0) && -window.left() < 160)
            fail(ErrorKind::InsufficientWindow, "window too short to start from the pi law");
        try {
            env::EnvironmentWindow left_part = window;  // shares the model; slicing is implicit
            exitprob::EtaSequence seq = exitprob::solve_eta_adaptive(left_part);
            return exitprob::compute_pi(seq, 0, tol).pi;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::InsufficientWindow || !window.growable() || extent >= (1L << 16))
                throw;
            extent *= 2;
        }
    }
}

}  // namespace

long Trajectory::hit_time(long level) const {
    if (level >= 1) {
        const auto i = static_cast<std::size_t>(level - 1);
        return i < hit_pos_.size() ? hit_pos_[i] : -1;
    }
    const auto i = static_cast<std::size_t>(-level);
    return i < hit_nonpos_.size() ? hit_nonpos_[i] : -1;
}

long Trajectory::crossing(long level) const {
    const long tn = hit_time(level);
    if (tn < 0) return -1;
    const long tp = level == 1 ? 0 : hit_time(level - 1);
    if (tp < 0) return -1;
    return tn - tp;
}

void Trajectory::write_csv(std::ostream& os) const {
    os << "t,xi,Y\n";
    for (std::size_t t = 0; t < levels_.size(); ++t)
        os << t << ',' << levels_[t] << ',' << heights_[t] + 1 << '\n';
}

Trajectory simulate(env::EnvironmentWindow& window, const StartLaw& start, const StopRule& stop,
                    std::uint64_t seed, long max_steps) {
    const int d = window.order();
    Rng rng(seed);

    Trajectory traj;
    traj.start_ = start;
    traj.seed_ = seed;
    traj.window_seed_ = window.seed();
    if (window.model()) traj.model_hash_ = window.model()->hash();

    int h = start.height;
    if (start.kind == StartLaw::Kind::Pi) {
        const Vec pi = pi_start_distribution(window, start.pi_tol);
        const double u = rng.uniform();
        double acc = 0.0;
        h = d - 1;
        for (int i = 0; i < d; ++i) {
            acc += pi[i];
            if (u < acc) {
                h = i;
                break;
            }
        }
    }
    if (h < 0 || h >= d) fail(ErrorKind::Model, "start height out of range");

    const bool cached = window.growable();
    std::vector<Mat> tables;
    if (cached) tables = build_step_tables(*window.model());

    long level = 0;
    traj.levels_.push_back(level);
    traj.heights_.push_back(h);
    traj.hit_nonpos_.push_back(0);  // T_0 = 0

    const long horizon = stop.kind == StopRule::Kind::Horizon ? stop.value : -1;
    const long target = stop.kind == StopRule::Kind::TargetLevel ? stop.value : 0;
    if (stop.kind == StopRule::Kind::TargetLevel && target <= 0)
        fail(ErrorKind::Model, "target level must be positive");

    long t = 0;
    while (true) {
        if (horizon >= 0 && t >= horizon) break;
        if (max_steps > 0 && t >= max_steps)
            fail(ErrorKind::Degeneracy, "simulation exceeded the step cap");

        if (!window.ensure(level - 1, level + 1))
            fail(ErrorKind::WindowExhausted, "walk reached the edge of a fixed window");

        const double u = rng.uniform();
        const Step s = cached ? sample_step(tables[static_cast<std::size_t>(window.atom(level))], h, u)
                              : sample_step_triple(window.at(level), h, u);
        level += s.dlevel;
        h = s.height;
        ++t;
        traj.levels_.push_back(level);
        traj.heights_.push_back(h);

        if (level > traj.max_level_) {
            traj.max_level_ = level;
            traj.hit_pos_.push_back(t);
        } else if (level < traj.min_level_) {
            traj.min_level_ = level;
            traj.hit_nonpos_.push_back(t);
        }

        if (stop.kind == StopRule::Kind::TargetLevel && level >= target) break;
    }
    return traj;
}

IstarChoice select_istar(const env::ModelPtr& model, int budget, std::uint64_t seed, long guard) {
    const int d = model->d;
    IstarChoice out;
    out.escape_estimates = Vec::Zero(d);
    out.escape_stderrs = Vec::Zero(d);

    std::vector<Mat> tables = build_step_tables(*model);
    for (int i = 0; i < d; ++i) {
        long successes = 0;
        for (int rep = 0; rep < budget; ++rep) {
            const std::uint64_t wseed =
                derive_seed(seed, "istar.window", static_cast<std::uint64_t>(i) * budget + rep);
            env::EnvironmentWindow window = env::sample_window(model, -4, guard + 4, wseed);
            Rng rng(derive_seed(seed, "istar.walk", static_cast<std::uint64_t>(i) * budget + rep));
            long level = 0;
            int h = i;
            // Escape trial: reach the guard level before ever revisiting
            // level <= 0 (the walk starts at 0; any later visit counts).
            for (;;) {
                window.ensure(level - 1, level + 1);
                const Step s =
                    sample_step(tables[static_cast<std::size_t>(window.atom(level))], h, rng.uniform());
                level += s.dlevel;
                h = s.height;
                if (level <= 0) break;
                if (level >= guard) {
                    ++successes;
                    break;
                }
            }
        }
        const double p = static_cast<double>(successes) / budget;
        out.escape_estimates[i] = p;
        out.escape_stderrs[i] = std::sqrt(std::max(0.0, p * (1.0 - p) / budget));
    }

    int best = 0;
    for (int i = 1; i < d; ++i)
        if (out.escape_estimates[i] > out.escape_estimates[best]) best = i;
    out.i_star = best;
    if (out.escape_estimates[best] <= 0.0)
        fail(ErrorKind::Degeneracy, "no height ever escaped: inconsistent with transience");
    return out;
}

RenewalRecord extract_renewals(const Trajectory& traj, int i_star, long guard) {
    RenewalRecord rec;
    rec.i_star = i_star;
    rec.guard = guard;

    const long n = traj.steps() + 1;
    if (traj.max_level() < guard + 1) return rec;
    const long cutoff = traj.max_level() - guard;

    // suffix minima of xi over (m, end]
    std::vector<long> suffix_min(static_cast<std::size_t>(n) + 1);
    suffix_min[static_cast<std::size_t>(n)] = traj.max_level() + 1;
    for (long t = n - 1; t >= 0; --t)
        suffix_min[static_cast<std::size_t>(t)] =
            std::min(traj.level(t), suffix_min[static_cast<std::size_t>(t) + 1]);

    long prefix_max = traj.level(0) - 1;
    for (long t = 0; t < n; ++t) {
        const long xi = traj.level(t);
        prefix_max = std::max(prefix_max, xi);
        if (xi != prefix_max) continue;
        if (traj.height(t) != i_star) continue;
        if (suffix_min[static_cast<std::size_t>(t) + 1] <= xi) continue;
        if (xi > cutoff) continue;
        if (!rec.times.empty()) {
            rec.increments.emplace_back(xi - rec.levels.back(), t - rec.times.back());
        }
        rec.times.push_back(t);
        rec.levels.push_back(xi);
    }
    return rec;
}

void RenewalRecord::write_csv(std::ostream& os) const {
    os << "k,rho,xi,d_xi,d_rho\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        os << k << ',' << times[k] << ',' << levels[k] << ',';
        if (k == 0)
            os << ",";
        else
            os << increments[k - 1].first << ',' << increments[k - 1].second;
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Environment viewed from the particle
// ---------------------------------------------------------------------------

void EvfpHistogram::add(std::uint64_t signature, int height, const std::string& block_desc) {
    ++bins_[{signature, height}];
    ++total_;
    blocks_.emplace(signature, block_desc);
}

void EvfpHistogram::merge(const EvfpHistogram& other) {
    if (other.radius_ != radius_) fail(ErrorKind::Model, "histogram radii differ");
    for (const auto& [key, count] : other.bins_) bins_[key] += count;
    for (const auto& [sig, desc] : other.blocks_) blocks_.emplace(sig, desc);
    total_ += other.total_;
    discarded_ += other.discarded_;
}

void EvfpHistogram::write_csv(std::ostream& os) const {
    os << "signature_hash,height,count\n";
    for (const auto& [key, count] : bins_) {
        os << std::hex << key.first << std::dec << ',' << key.second + 1 << ',' << count << '\n';
    }
}

void EvfpHistogram::write_sidecar(std::ostream& os) const {
    os << "signature_hash,block\n";
    for (const auto& [sig, desc] : blocks_) os << std::hex << sig << std::dec << ',' << desc << '\n';
}

double tv_distance(const EvfpHistogram& a, const EvfpHistogram& b) {
    if (a.total() == 0 || b.total() == 0)
        fail(ErrorKind::Model, "tv_distance needs nonempty histograms");
    const double na = static_cast<double>(a.total());
    const double nb = static_cast<double>(b.total());
    double tv = 0.0;
    auto ia = a.bins().begin();
    auto ib = b.bins().begin();
    while (ia != a.bins().end() || ib != b.bins().end()) {
        if (ib == b.bins().end() || (ia != a.bins().end() && ia->first < ib->first)) {
            tv += static_cast<double>(ia->second) / na;
            ++ia;
        } else if (ia == a.bins().end() || ib->first < ia->first) {
            tv += static_cast<double>(ib->second) / nb;
            ++ib;
        } else {
            tv += std::abs(static_cast<double>(ia->second) / na - static_cast<double>(ib->second) / nb);
            ++ia;
            ++ib;
        }
    }
    return 0.5 * tv;
}

std::uint64_t block_signature(const env::EnvironmentWindow& window, long level, int radius,
                              std::string* desc) {
    const int d = window.order();
    std::string buf;
    buf.reserve(static_cast<std::size_t>(2 * radius + 1) * 3 * d * d * 8 + 8);
    auto put = [&buf](std::int64_t v) {
        char bytes[8];
        std::memcpy(bytes, &v, 8);
        buf.append(bytes, 8);
    };
    put(d);
    put(radius);
    std::ostringstream atoms;
    for (long n = level - radius; n <= level + radius; ++n) {
        const env::LayerTriple& t = window.at(n);
        for (const Mat* m : {&t.p, &t.r, &t.q})
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) put(std::llround((*m)(i, j) * 1e6));
        if (desc) {
            if (n > level - radius) atoms << '|';
            atoms << window.atom(n);
        }
    }
    if (desc) *desc = atoms.str();
    return fnv1a64(buf);
}

EvfpHistogram evfp_accumulate(const Trajectory& traj, env::EnvironmentWindow& window, int radius,
                              long t_begin, long t_end) {
    if (radius < 0) fail(ErrorKind::Model, "radius must be >= 0");
    if (t_begin < 0 || t_end > traj.steps() + 1 || t_begin >= t_end)
        fail(ErrorKind::Model, "time range outside the trajectory");
    if (!window.ensure(traj.min_level() - radius, traj.max_level() + radius))
        fail(ErrorKind::WindowExhausted, "window too narrow for the signature radius");

    EvfpHistogram hist(radius);
    std::string desc;
    for (long t = t_begin; t < t_end; ++t) {
        const std::uint64_t sig = block_signature(window, traj.level(t), radius, &desc);
        hist.add(sig, traj.height(t), desc);
    }
    return hist;
}

EvfpHistogram q_reference(const env::ModelPtr& model, int radius, long replicas,
                          std::uint64_t seed, long step_cap) {
    EvfpHistogram hist(radius);
    std::string desc;
    for (long rep = 0; rep < replicas; ++rep) {
        const std::uint64_t wseed = derive_seed(seed, "qref.window", static_cast<std::uint64_t>(rep));
        env::EnvironmentWindow window =
            env::sample_window(model, -200, 1 + radius, wseed);
        Trajectory traj;
        try {
            traj = simulate(window, StartLaw::pi(), StopRule::target(1),
                            derive_seed(seed, "qref.walk", static_cast<std::uint64_t>(rep)), step_cap);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Degeneracy) {
                hist.note_discard();  // T_1 beyond the safety cap: biased replica
                continue;
            }
            throw;
        }
        const long t1 = traj.hit_time(1);
        window.ensure(traj.min_level() - radius, traj.max_level() + radius);
        for (long t = 0; t < t1; ++t) {
            const std::uint64_t sig = block_signature(window, traj.level(t), radius, &desc);
            hist.add(sig, traj.height(t), desc);
        }
    }
    return hist;
}

}  // namespace strip::walker
