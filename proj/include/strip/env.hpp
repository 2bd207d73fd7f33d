#pragma once

#include "strip/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

// Environment letters, environment laws (i.i.d., periodic, finite Markov),
// realized windows, structural condition checks, and embeddings of the
// classical one-dimensional walks onto the strip.

namespace strip::env {

// One environment letter: the matrix triple (p, r, q) of right / in-layer /
// left transition weights at a layer.  p + r + q is row-stochastic.
struct LayerTriple {
    Mat p, r, q;

    int order() const { return static_cast<int>(p.rows()); }

    // Enforces nonnegativity, finiteness, and row sums of p+r+q equal to 1
    // within 1e-12.
    void validate() const;
};

enum class ModelKind { Iid, Periodic, FiniteMarkov };

std::string to_string(ModelKind kind);

struct EnvironmentModel {
    ModelKind kind = ModelKind::Iid;
    int d = 1;
    std::vector<LayerTriple> support;
    Vec weights;           // iid: probability vector over support
    Mat transition;        // finite-markov: stochastic matrix over support indices
    std::vector<int> order;  // periodic: cyclic order of support indices
    double epsilon_floor = 0.0;

    void validate() const;

    // Stationary law of the finite-markov support chain (solved linearly).
    Vec markov_stationary() const;

    // FNV-1a over the canonical byte serialization; hex string.
    std::string hash() const;

    int atom_count() const { return static_cast<int>(support.size()); }
};

using ModelPtr = std::shared_ptr<const EnvironmentModel>;

// A realized stretch of letters [L, R], indexable by absolute layer index.
// Model-backed windows re-derive letters as a pure function of
// (model, seed, index) and can therefore be grown in either direction; all
// windows with the same (model, seed) are restrictions of one two-sided
// realization.
class EnvironmentWindow {
public:
    EnvironmentWindow(ModelPtr model, std::uint64_t seed, long left, long right);

    // Detached window over explicit letters (not growable).
    EnvironmentWindow(std::vector<LayerTriple> triples, long left);

    long left() const { return left_; }
    long right() const { return left_ + static_cast<long>(atoms_.size()) - 1; }
    long size() const { return static_cast<long>(atoms_.size()); }
    int order() const { return d_; }

    bool covers(long n) const { return n >= left() && n <= right(); }

    const LayerTriple& at(long n) const;
    int atom(long n) const;  // -1 for detached windows

    bool growable() const { return model_ != nullptr; }
    void grow_left(long new_left);
    void grow_right(long new_right);
    // Grows (if possible) so that [lo, hi] is covered; returns success.
    bool ensure(long lo, long hi);

    const ModelPtr& model() const { return model_; }
    std::uint64_t seed() const { return seed_; }

    void write_csv(std::ostream& os) const;

private:
    ModelPtr model_;
    std::uint64_t seed_ = 0;
    long left_ = 0;
    int d_ = 0;
    std::vector<int> atoms_;                 // support indices (model-backed)
    std::vector<LayerTriple> detached_;      // letters (detached windows)
};

// Deterministic realization of [L, R] under the model law.
EnvironmentWindow sample_window(const ModelPtr& model, long left, long right, std::uint64_t seed);

struct ConditionReport {
    std::string c1_class;            // stationarity/ergodicity class by construction
    bool c1_irreducible = true;      // finite-markov reachability
    bool c2 = false;                 // strict norm inequalities per atom
    bool c3 = false;                 // positive column sums of p and q
    bool epsilon_floor_verified = false;
    double min_p_row_sum = 0.0;
    double min_q_row_sum = 0.0;
    double min_p_col_sum = 0.0;
    double min_q_col_sum = 0.0;

    bool all_pass() const { return c1_irreducible && c2 && c3 && epsilon_floor_verified; }
};

// Structural checks C1-C3 plus the declared p-row-sum floor.  C4 needs eta
// and lives with the exit-probability solver.
ConditionReport check_condition_C(const EnvironmentModel& model);

// d=1 model from scalar (p, r, q) per atom.  Rejects p <= 0 or q <= 0.
ModelPtr embed_nearest_neighbor(const std::vector<double>& p_vals, const std::vector<double>& r_vals,
                                const std::vector<double>& q_vals, const Vec& weights,
                                double epsilon_floor = 0.0);

// Blocks a bounded-jump walk on Z with jumps in [-L, L] onto a width-L strip:
// site m = k*L + i maps to (k, i+1) and one strip step reproduces one walk
// step.  Each site's jump law is an atom (length 2L+1, offsets -L..L); the
// strip letters enumerate all L-tuples of site atoms with product weights.
ModelPtr embed_bounded_jump(const std::vector<Vec>& site_atoms, const Vec& weights,
                            double epsilon_floor = 0.0);

// d=2 direction-memory encoding of the persistent walk: height 1 means the
// last move was to the right (continue right with probability alpha_right),
// height 2 means it was to the left.  Rejects boundary probabilities.
ModelPtr persistent_walk_model(double alpha_right, double alpha_left);

// JSON (de)serialization of the declarative model file.
ModelPtr load_model(const std::string& path);
ModelPtr parse_model(const std::string& json_text);
std::string model_to_json(const EnvironmentModel& model);

}  // namespace strip::env
