#pragma once

#include "strip/env.hpp"
#include "strip/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

// Stationary right-exit matrices eta_n by fixed-point iteration, the derived
// gamma/a/b/c records, column-collapsed pi vectors, left-exit matrices, and
// an exact absorbing-chain oracle on the finite strip that validates all of
// them.

namespace strip::exitprob {

// Per-layer analysis record.
//   eta   : right-exit probabilities (stochastic),
//   gamma : (I - q eta_prev - r)^{-1},
//   a     : gamma * q,
//   b     : gamma * 1 (entrywise >= 1),
//   c     : 1 - max_i min_j eta(i, j), the contraction coefficient.
struct LayerAnalysis {
    Mat eta;
    Mat gamma;
    Mat a;
    Vec b;
    double c = 1.0;
};

class EtaSequence {
public:
    EtaSequence(env::EnvironmentWindow window, long first_index, std::vector<LayerAnalysis> records,
                int burn_in, std::string seed_matrix_id);

    long first() const { return first_; }
    long last() const { return first_ + static_cast<long>(records_.size()) - 1; }
    bool has(long n) const { return n >= first() && n <= last(); }
    const LayerAnalysis& at(long n) const;

    int burn_in() const { return burn_in_; }
    const std::string& seed_matrix_id() const { return seed_matrix_id_; }
    const env::EnvironmentWindow& window() const { return window_; }
    int order() const { return window_.order(); }

    void write_csv(std::ostream& os) const;

private:
    env::EnvironmentWindow window_;
    long first_ = 0;
    std::vector<LayerAnalysis> records_;
    int burn_in_ = 0;
    std::string seed_matrix_id_;
};

// One step of the exit recursion: the analysis record at a layer given the
// previous layer's eta.
LayerAnalysis analyze_layer(const env::LayerTriple& t, const Mat& eta_prev);

// Iterates the exit recursion left to right across the window, seeding the
// fixed point at index L-1 with `seed_matrix` and discarding the first
// burn_in records.
EtaSequence solve_eta(const env::EnvironmentWindow& window, int burn_in, const Mat& seed_matrix);

// Burn-in chosen from the running contraction product (c-products <= bound,
// hard floor 100 letters); models whose c-bound never contracts fall back to
// direct two-seed agreement.
EtaSequence solve_eta_adaptive(const env::EnvironmentWindow& window, double forget_bound = 1e-12,
                               int floor_letters = 100);

// Convenience: records covering [first_needed, last_needed] under the model
// law, widening the left burn margin until the adaptive burn-in certifies.
EtaSequence analyze_range(const env::ModelPtr& model, std::uint64_t window_seed, long first_needed,
                          long last_needed);

Mat uniform_seed_matrix(int order);

struct AbsorptionResult {
    Vec exit_dist;               // over heights of the target layer
    double leak_left = 0.0;      // mass absorbed at the left cut
    double mean_time = 0.0;
    double second_moment_time = 0.0;
    long depth_used = 0;
};

// Exact linear solve on the truncated strip [target - depth, target] with an
// absorbing left boundary: first-passage height distribution at the target
// layer and first two moments of the passage time from `start`.
// Results are certified when leak_left <= 1e-10; the depth doubles until the
// leak passes or the 2^14 cap is hit.
AbsorptionResult absorption_oracle(env::EnvironmentWindow& window, long target_layer,
                                   std::pair<long, int> start, long truncation_depth);

struct PiVector {
    Vec pi;
    double collapse_residual = 0.0;
    long depth = 0;  // number of eta factors consumed
};

// Collapses left products of eta matrices at `at_index` until the maximum
// column spread (or the running c-product bound) falls below tol.
PiVector compute_pi(const EtaSequence& seq, long at_index, double tol);

struct LeftExit {
    Mat eta_minus;  // substochastic first-passage matrix to the layer below
    Vec f;          // probability of descending `depth` layers, by start height
};

// Left-exit matrices by exact solve with an adaptively placed absorbing
// "escaped right" boundary; f is the row sums of the depth-fold eta_minus
// product.
LeftExit left_exit(env::EnvironmentWindow& window, long at_index, int depth);

struct C4Report {
    bool pass = false;
    double min_entry = 0.0;
};

C4Report verify_C4(const EtaSequence& seq, double floor_value = 1e-14);

}  // namespace strip::exitprob
