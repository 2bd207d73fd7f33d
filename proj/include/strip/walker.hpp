#pragma once

#include "strip/env.hpp"
#include "strip/exitprob.hpp"
#include "strip/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

// Quenched Monte Carlo of the walk under the layer kernel, hitting-time
// extraction, approximate renewal times, and empirical "environment viewed
// from the particle" statistics with their excursion-based reference law.

namespace strip::walker {

struct StartLaw {
    enum class Kind { Delta, Pi } kind = Kind::Delta;
    int height = 0;          // Delta: 0-based start height
    double pi_tol = 1e-10;   // Pi: collapse tolerance

    static StartLaw delta(int h) { return {Kind::Delta, h, 1e-10}; }
    static StartLaw pi(double tol = 1e-10) { return {Kind::Pi, 0, tol}; }
};

struct StopRule {
    enum class Kind { Horizon, TargetLevel } kind = Kind::Horizon;
    long value = 0;

    static StopRule horizon(long steps) { return {Kind::Horizon, steps}; }
    static StopRule target(long level) { return {Kind::TargetLevel, level}; }
};

class Trajectory {
public:
    long steps() const { return static_cast<long>(levels_.size()) - 1; }
    long level(long t) const { return levels_[static_cast<std::size_t>(t)]; }
    int height(long t) const { return heights_[static_cast<std::size_t>(t)]; }

    // First hit time of a layer; -1 when the layer was never reached.
    long hit_time(long level) const;
    bool reached(long level) const { return hit_time(level) >= 0; }
    // Crossing time tau_n = T_n - T_{n-1} (levels n >= 1, T_0 = 0).
    long crossing(long level) const;

    long max_level() const { return max_level_; }
    long min_level() const { return min_level_; }

    const StartLaw& start_law() const { return start_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t window_seed() const { return window_seed_; }
    const std::string& model_hash() const { return model_hash_; }

    void write_csv(std::ostream& os) const;

private:
    friend Trajectory simulate(env::EnvironmentWindow&, const StartLaw&, const StopRule&,
                               std::uint64_t, long);
    std::vector<long> levels_;
    std::vector<int> heights_;
    std::vector<long> hit_pos_;     // T_n for n = 1.., index n-1
    std::vector<long> hit_nonpos_;  // T_n for n = 0, -1, .., index -n
    long max_level_ = 0;
    long min_level_ = 0;
    StartLaw start_;
    std::uint64_t seed_ = 0;
    std::uint64_t window_seed_ = 0;  // provenance of the environment draw
    std::string model_hash_;
};

// Exact simulation of the time-homogeneous chain; deterministic in seed.  The
// window grows on demand (in chunks) when the walk nears an edge; walking off
// a fixed window raises window-exhausted.  max_steps = 0 disables the cap.
Trajectory simulate(env::EnvironmentWindow& window, const StartLaw& start, const StopRule& stop,
                    std::uint64_t seed, long max_steps = 0);

struct IstarChoice {
    int i_star = 0;  // 0-based height
    Vec escape_estimates;
    Vec escape_stderrs;
};

// Per start height, the estimated probability of never revisiting level <= 0
// (certified up to a drift guard); returns the maximizing height, ties to the
// smallest index.
IstarChoice select_istar(const env::ModelPtr& model, int budget, std::uint64_t seed,
                         long guard = 50);

struct RenewalRecord {
    int i_star = 0;
    long guard = 0;
    std::vector<long> times;              // rho_k
    std::vector<long> levels;             // xi at rho_k
    std::vector<std::pair<long, long>> increments;  // (d_xi, d_rho)

    void write_csv(std::ostream& os) const;
};

// Post-hoc scan for times where the walk sits at a running-maximum level at
// height i_star and never revisits it in the remaining trajectory; renewals
// within `guard` levels of the final maximum are discarded since the
// no-return clause is only certified up to that margin.
RenewalRecord extract_renewals(const Trajectory& traj, int i_star, long guard);

// Histogram of (quantized local environment block, walker height) pairs.
// Block signatures hash the 2W+1 layers around the walker with entries
// quantized to 6 decimal digits (FNV-1a over the quantized words).
class EvfpHistogram {
public:
    explicit EvfpHistogram(int radius) : radius_(radius) {}

    int radius() const { return radius_; }
    std::uint64_t total() const { return total_; }
    std::uint64_t discarded_replicas() const { return discarded_; }
    void note_discard() { ++discarded_; }

    void add(std::uint64_t signature, int height, const std::string& block_desc);
    void merge(const EvfpHistogram& other);

    const std::map<std::pair<std::uint64_t, int>, std::uint64_t>& bins() const { return bins_; }

    void write_csv(std::ostream& os) const;
    void write_sidecar(std::ostream& os) const;

private:
    int radius_;
    std::map<std::pair<std::uint64_t, int>, std::uint64_t> bins_;
    std::map<std::uint64_t, std::string> blocks_;
    std::uint64_t total_ = 0;
    std::uint64_t discarded_ = 0;
};

// Total variation distance between the normalized histograms.
double tv_distance(const EvfpHistogram& a, const EvfpHistogram& b);

// Stable block signature used by both accumulators.
std::uint64_t block_signature(const env::EnvironmentWindow& window, long level, int radius,
                              std::string* desc = nullptr);

// Empirical law of (environment around the walker, height) over a trajectory
// time range [t_begin, t_end).
EvfpHistogram evfp_accumulate(const Trajectory& traj, env::EnvironmentWindow& window, int radius,
                              long t_begin, long t_end);

// Excursion reference for the stationary law: independent pi-started
// excursions to level 1, one count per step; counts normalize the stationary
// formula without an explicit speed factor.
EvfpHistogram q_reference(const env::ModelPtr& model, int radius, long replicas,
                          std::uint64_t seed, long step_cap = 1'000'000);

}  // namespace strip::walker
