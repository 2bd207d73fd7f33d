#include "strip/env.hpp"

#include "strip/matops.hpp"
#include "strip/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

namespace strip::env {

namespace {

constexpr std::uint64_t kLetterStream = 0x6c657474657273ULL;  // per-index letter uniforms
constexpr long kGrowChunk = 1 << 12;

int pick_from_cdf(const Vec& weights, double u) {
    double acc = 0.0;
    const int k = static_cast<int>(weights.size());
    for (int i = 0; i < k; ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return k - 1;
}

void append_bytes(std::string& buf, const void* data, std::size_t n) {
    buf.append(static_cast<const char*>(data), n);
}

void append_double(std::string& buf, double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    append_bytes(buf, &bits, sizeof(bits));
}

// Strong connectivity of the positive-entry digraph by forward and backward
// reachability from node 0.
bool strongly_connected(const Mat& t) {
    const int k = static_cast<int>(t.rows());
    auto reach = [&](bool forward) {
        std::vector<char> seen(k, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int w = 0; w < k; ++w) {
                const double edge = forward ? t(v, w) : t(w, v);
                if (edge > 0.0 && !seen[w]) {
                    seen[w] = 1;
                    stack.push_back(w);
                }
            }
        }
        for (char s : seen)
            if (!s) return false;
        return true;
    };
    return reach(true) && reach(false);
}

}  // namespace

void LayerTriple::validate() const {
    const auto d = p.rows();
    if (d < 1 || d > kMaxWidth) fail(ErrorKind::Model, "layer order out of range [1, 16]");
    if (p.cols() != d || r.rows() != d || r.cols() != d || q.rows() != d || q.cols() != d)
        fail(ErrorKind::Model, "layer triple matrices must be square of equal order");
    if (!p.allFinite() || !r.allFinite() || !q.allFinite())
        fail(ErrorKind::Model, "layer triple has non-finite entries");
    if (p.minCoeff() < 0.0 || r.minCoeff() < 0.0 || q.minCoeff() < 0.0)
        fail(ErrorKind::Model, "layer triple has negative entries");
    const Vec rows = (p + r + q).rowwise().sum();
    if ((rows.array() - 1.0).abs().maxCoeff() > 1e-12)
        fail(ErrorKind::Model, "rows of p+r+q must sum to 1 within 1e-12");
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Iid: return "iid";
        case ModelKind::Periodic: return "periodic";
        case ModelKind::FiniteMarkov: return "finite-markov";
    }
    return "?";
}

void EnvironmentModel::validate() const {
    if (support.empty()) fail(ErrorKind::Model, "support must be nonempty");
    if (d < 1 || d > kMaxWidth) fail(ErrorKind::Model, "strip width out of range [1, 16]");
    for (const auto& t : support) {
        t.validate();
        if (t.order() != d) fail(ErrorKind::Model, "all support triples must share the model width");
    }
    if (!(epsilon_floor >= 0.0)) fail(ErrorKind::Model, "epsilon_floor must be >= 0");
    const int k = atom_count();
    switch (kind) {
        case ModelKind::Iid:
            if (weights.size() != k) fail(ErrorKind::Model, "iid weights must match support size");
            if (weights.minCoeff() < 0.0 || std::abs(weights.sum() - 1.0) > 1e-12)
                fail(ErrorKind::Model, "iid weights must be a probability vector (sum 1 within 1e-12)");
            break;
        case ModelKind::Periodic: {
            std::vector<int> ord = order;
            if (ord.empty())
                for (int i = 0; i < k; ++i) ord.push_back(i);
            for (int i : ord)
                if (i < 0 || i >= k) fail(ErrorKind::Model, "periodic order index out of range");
            break;
        }
        case ModelKind::FiniteMarkov: {
            if (transition.rows() != k || transition.cols() != k)
                fail(ErrorKind::Model, "finite-markov transition must be k x k over support indices");
            if (transition.minCoeff() < 0.0 ||
                (transition.rowwise().sum().array() - 1.0).abs().maxCoeff() > 1e-12)
                fail(ErrorKind::Model, "finite-markov transition rows must sum to 1 within 1e-12");
            if (!strongly_connected(transition))
                fail(ErrorKind::Model, "finite-markov transition must be irreducible");
            break;
        }
    }
}

Vec EnvironmentModel::markov_stationary() const {
    const int k = atom_count();
    Mat a = transition.transpose() - Mat::Identity(k, k);
    a.row(k - 1).setOnes();
    Vec rhs = Vec::Zero(k);
    rhs[k - 1] = 1.0;
    Vec pi = a.fullPivLu().solve(rhs);
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();
    return pi;
}

std::string EnvironmentModel::hash() const {
    std::string buf;
    const int kind_tag = static_cast<int>(kind);
    append_bytes(buf, &kind_tag, sizeof(kind_tag));
    append_bytes(buf, &d, sizeof(d));
    append_double(buf, epsilon_floor);
    for (const auto& t : support)
        for (const Mat* m : {&t.p, &t.r, &t.q})
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) append_double(buf, (*m)(i, j));
    for (int i = 0; i < weights.size(); ++i) append_double(buf, weights[i]);
    for (int i = 0; i < transition.rows(); ++i)
        for (int j = 0; j < transition.cols(); ++j) append_double(buf, transition(i, j));
    for (int i : order) append_bytes(buf, &i, sizeof(i));
    std::uint64_t h = fnv1a64(buf);
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

// ---------------------------------------------------------------------------
// Windows
// ---------------------------------------------------------------------------

namespace {

// Letter indices for a model-backed window.  The Markov chain is anchored at
// index 0 (stationary draw) and extended right with the forward kernel and
// left with the time-reversed kernel, so any window is a restriction of one
// two-sided stationary realization.
struct LetterSource {
    const EnvironmentModel& model;
    std::uint64_t seed;
    Vec stationary;   // markov only
    Mat backward;     // markov only

    explicit LetterSource(const EnvironmentModel& m, std::uint64_t s) : model(m), seed(s) {
        if (model.kind == ModelKind::FiniteMarkov) {
            stationary = model.markov_stationary();
            const int k = model.atom_count();
            backward = Mat::Zero(k, k);
            for (int j = 0; j < k; ++j)
                for (int i = 0; i < k; ++i)
                    backward(j, i) = stationary[j] > 0.0 ? stationary[i] * model.transition(i, j) / stationary[j] : 0.0;
            for (int j = 0; j < k; ++j) {
                const double s_row = backward.row(j).sum();
                if (s_row > 0.0) backward.row(j) /= s_row;
            }
        }
    }

    double u(long n) const { return indexed_uniform(seed, kLetterStream, n); }

    int periodic_atom(long n) const {
        const std::vector<int>* ord = &model.order;
        std::vector<int> fallback;
        if (ord->empty()) {
            fallback.resize(model.atom_count());
            for (int i = 0; i < model.atom_count(); ++i) fallback[i] = i;
            ord = &fallback;
        }
        const long k = static_cast<long>(ord->size());
        return (*ord)[static_cast<std::size_t>(((n % k) + k) % k)];
    }

    void fill(long lo, long hi, std::vector<int>& out) const {
        out.resize(static_cast<std::size_t>(hi - lo + 1));
        switch (model.kind) {
            case ModelKind::Iid:
                for (long n = lo; n <= hi; ++n) out[static_cast<std::size_t>(n - lo)] = pick_from_cdf(model.weights, u(n));
                break;
            case ModelKind::Periodic:
                for (long n = lo; n <= hi; ++n) out[static_cast<std::size_t>(n - lo)] = periodic_atom(n);
                break;
            case ModelKind::FiniteMarkov: {
                // Walk out from the anchor; indices outside [lo, hi] are
                // traversed but not stored.
                int s0 = pick_from_cdf(stationary, u(0));
                auto store = [&](long n, int s) {
                    if (n >= lo && n <= hi) out[static_cast<std::size_t>(n - lo)] = s;
                };
                store(0, s0);
                int s = s0;
                for (long n = 1; n <= hi; ++n) {
                    s = pick_from_cdf(model.transition.row(s).transpose(), u(n));
                    store(n, s);
                }
                s = s0;
                for (long n = -1; n >= lo; --n) {
                    s = pick_from_cdf(backward.row(s).transpose(), u(n));
                    store(n, s);
                }
                break;
            }
        }
    }
};

}  // namespace

EnvironmentWindow::EnvironmentWindow(ModelPtr model, std::uint64_t seed, long left, long right)
    : model_(std::move(model)), seed_(seed), left_(left) {
    if (!model_) fail(ErrorKind::Model, "window requires a model");
    model_->validate();
    if (left > right) fail(ErrorKind::Model, "window requires left <= right");
    d_ = model_->d;
    LetterSource src(*model_, seed_);
    src.fill(left, right, atoms_);
}

EnvironmentWindow::EnvironmentWindow(std::vector<LayerTriple> triples, long left)
    : left_(left), detached_(std::move(triples)) {
    if (detached_.empty()) fail(ErrorKind::Model, "detached window requires letters");
    for (const auto& t : detached_) t.validate();
    d_ = detached_.front().order();
    for (const auto& t : detached_)
        if (t.order() != d_) fail(ErrorKind::Model, "detached window letters must share one order");
    atoms_.assign(detached_.size(), -1);
}

const LayerTriple& EnvironmentWindow::at(long n) const {
    if (!covers(n)) fail(ErrorKind::WindowExhausted, "layer index outside window");
    const auto i = static_cast<std::size_t>(n - left_);
    if (model_) return model_->support[static_cast<std::size_t>(atoms_[i])];
    return detached_[i];
}

int EnvironmentWindow::atom(long n) const {
    if (!covers(n)) fail(ErrorKind::WindowExhausted, "layer index outside window");
    return atoms_[static_cast<std::size_t>(n - left_)];
}

void EnvironmentWindow::grow_left(long new_left) {
    if (new_left >= left_) return;
    if (!growable()) fail(ErrorKind::WindowExhausted, "detached window cannot grow");
    LetterSource src(*model_, seed_);
    std::vector<int> head;
    src.fill(new_left, left_ - 1, head);
    head.insert(head.end(), atoms_.begin(), atoms_.end());
    atoms_ = std::move(head);
    left_ = new_left;
}

void EnvironmentWindow::grow_right(long new_right) {
    if (new_right <= right()) return;
    if (!growable()) fail(ErrorKind::WindowExhausted, "detached window cannot grow");
    LetterSource src(*model_, seed_);
    std::vector<int> tail;
    src.fill(right() + 1, new_right, tail);
    atoms_.insert(atoms_.end(), tail.begin(), tail.end());
}

bool EnvironmentWindow::ensure(long lo, long hi) {
    if (lo >= left() && hi <= right()) return true;
    if (!growable()) return false;
    if (lo < left()) grow_left(left() - ((left() - lo + kGrowChunk - 1) / kGrowChunk) * kGrowChunk);
    if (hi > right()) grow_right(right() + ((hi - right() + kGrowChunk - 1) / kGrowChunk) * kGrowChunk);
    return true;
}

EnvironmentWindow sample_window(const ModelPtr& model, long left, long right, std::uint64_t seed) {
    return EnvironmentWindow(model, seed, left, right);
}

void EnvironmentWindow::write_csv(std::ostream& os) const {
    os << "n";
    for (const char* blk : {"p", "r", "q"})
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) os << ',' << blk << i << j;
    os << '\n';
    os.precision(17);
    for (long n = left(); n <= right(); ++n) {
        const LayerTriple& t = at(n);
        os << n;
        for (const Mat* m : {&t.p, &t.r, &t.q})
            for (int i = 0; i < d_; ++i)
                for (int j = 0; j < d_; ++j) os << ',' << (*m)(i, j);
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Condition C
// ---------------------------------------------------------------------------

ConditionReport check_condition_C(const EnvironmentModel& model) {
    model.validate();
    ConditionReport rep;
    rep.c1_class = to_string(model.kind);
    rep.c1_irreducible = true;  // enforced by validate() for finite-markov

    double min_p_row = 1.0, min_q_row = 1.0, min_p_col = 1.0, min_q_col = 1.0;
    for (const auto& t : model.support) {
        min_p_row = std::min(min_p_row, t.p.rowwise().sum().minCoeff());
        min_q_row = std::min(min_q_row, t.q.rowwise().sum().minCoeff());
        min_p_col = std::min(min_p_col, t.p.colwise().sum().minCoeff());
        min_q_col = std::min(min_q_col, t.q.colwise().sum().minCoeff());
    }
    rep.min_p_row_sum = min_p_row;
    rep.min_q_row_sum = min_q_row;
    rep.min_p_col_sum = min_p_col;
    rep.min_q_col_sum = min_q_col;

    // ||r+p|| < 1 iff every q row has mass, and symmetrically for ||r+q||;
    // a 1e-12 floor separates structural zeros from roundoff.
    rep.c2 = min_q_row > 1e-12 && min_p_row > 1e-12;
    rep.c3 = min_q_col > 0.0 && min_p_col > 0.0;
    rep.epsilon_floor_verified = min_p_row > model.epsilon_floor;
    return rep;
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

ModelPtr embed_nearest_neighbor(const std::vector<double>& p_vals, const std::vector<double>& r_vals,
                                const std::vector<double>& q_vals, const Vec& weights,
                                double epsilon_floor) {
    const std::size_t k = p_vals.size();
    if (k == 0 || r_vals.size() != k || q_vals.size() != k)
        fail(ErrorKind::Model, "nearest-neighbor atoms need equal-length p, r, q lists");
    auto model = std::make_shared<EnvironmentModel>();
    model->kind = ModelKind::Iid;
    model->d = 1;
    model->epsilon_floor = epsilon_floor;
    model->weights = weights;
    for (std::size_t i = 0; i < k; ++i) {
        if (!(p_vals[i] > 0.0) || !(q_vals[i] > 0.0))
            fail(ErrorKind::Model, "nearest-neighbor atoms need p > 0 and q > 0");
        if (std::abs(p_vals[i] + r_vals[i] + q_vals[i] - 1.0) > 1e-12)
            fail(ErrorKind::Model, "nearest-neighbor atom must satisfy p + r + q = 1");
        LayerTriple t;
        t.p = Mat::Constant(1, 1, p_vals[i]);
        t.r = Mat::Constant(1, 1, r_vals[i]);
        t.q = Mat::Constant(1, 1, q_vals[i]);
        model->support.push_back(std::move(t));
    }
    model->validate();
    return model;
}

ModelPtr embed_bounded_jump(const std::vector<Vec>& site_atoms, const Vec& weights,
                            double epsilon_floor) {
    if (site_atoms.empty()) fail(ErrorKind::Embedding, "bounded-jump embedding needs site atoms");
    const int len = static_cast<int>(site_atoms.front().size());
    if (len < 3 || len % 2 == 0)
        fail(ErrorKind::Embedding, "jump law must have odd length 2L+1 with L >= 1");
    const int jump_range = (len - 1) / 2;
    if (jump_range > kMaxWidth) fail(ErrorKind::Embedding, "jump range exceeds the width cap");
    for (const auto& a : site_atoms) {
        if (a.size() != len) fail(ErrorKind::Embedding, "site atoms must share one jump range");
        if (a.minCoeff() < 0.0 || std::abs(a.sum() - 1.0) > 1e-12)
            fail(ErrorKind::Embedding, "each jump law must be a probability vector");
    }
    if (weights.size() != static_cast<int>(site_atoms.size()) || weights.minCoeff() < 0.0 ||
        std::abs(weights.sum() - 1.0) > 1e-12)
        fail(ErrorKind::Embedding, "site atom weights must be a probability vector");

    const int natoms = static_cast<int>(site_atoms.size());
    double tuples = 1.0;
    for (int i = 0; i < jump_range; ++i) tuples *= natoms;
    if (tuples > 4096.0) fail(ErrorKind::Embedding, "too many site-atom tuples for one strip letter");

    auto model = std::make_shared<EnvironmentModel>();
    model->kind = ModelKind::Iid;
    model->d = jump_range;
    model->epsilon_floor = epsilon_floor;

    const int count = static_cast<int>(tuples);
    Vec tuple_weights(count);
    std::vector<int> tuple(static_cast<std::size_t>(jump_range), 0);
    for (int idx = 0; idx < count; ++idx) {
        int rem = idx;
        double w = 1.0;
        for (int i = 0; i < jump_range; ++i) {
            tuple[static_cast<std::size_t>(i)] = rem % natoms;
            rem /= natoms;
            w *= weights[tuple[static_cast<std::size_t>(i)]];
        }
        LayerTriple t;
        t.p = Mat::Zero(jump_range, jump_range);
        t.r = Mat::Zero(jump_range, jump_range);
        t.q = Mat::Zero(jump_range, jump_range);
        for (int i = 0; i < jump_range; ++i) {
            const Vec& law = site_atoms[static_cast<std::size_t>(tuple[static_cast<std::size_t>(i)])];
            for (int j = -jump_range; j <= jump_range; ++j) {
                const double mass = law[j + jump_range];
                if (mass == 0.0) continue;
                const int target = i + j;
                if (target >= jump_range)
                    t.p(i, target - jump_range) += mass;
                else if (target >= 0)
                    t.r(i, target) += mass;
                else
                    t.q(i, target + jump_range) += mass;
            }
        }
        model->support.push_back(std::move(t));
        tuple_weights[idx] = w;
    }
    model->weights = tuple_weights;
    model->validate();
    return model;
}

ModelPtr persistent_walk_model(double alpha_right, double alpha_left) {
    if (!(alpha_right > 0.0 && alpha_right < 1.0 && alpha_left > 0.0 && alpha_left < 1.0))
        fail(ErrorKind::Model, "persistence probabilities must lie strictly inside (0, 1)");
    auto model = std::make_shared<EnvironmentModel>();
    model->kind = ModelKind::Iid;
    model->d = 2;
    model->weights = Vec::Ones(1);
    LayerTriple t;
    t.p = Mat::Zero(2, 2);
    t.r = Mat::Zero(2, 2);
    t.q = Mat::Zero(2, 2);
    t.p(0, 0) = alpha_right;        // keep moving right
    t.q(0, 1) = 1.0 - alpha_right;  // reverse: arrive moving left
    t.q(1, 1) = alpha_left;         // keep moving left
    t.p(1, 0) = 1.0 - alpha_left;   // reverse: arrive moving right
    model->support.push_back(std::move(t));
    model->validate();
    return model;
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

Mat mat_from_row_major(const json& arr, int d, const char* what) {
    if (!arr.is_array() || arr.size() != static_cast<std::size_t>(d) * static_cast<std::size_t>(d))
        fail(ErrorKind::Io, std::string("model file: ") + what + " must be a row-major list of d*d numbers");
    Mat m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = arr[static_cast<std::size_t>(i * d + j)].get<double>();
    return m;
}

json mat_to_row_major(const Mat& m) {
    json arr = json::array();
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
    return arr;
}

}  // namespace

ModelPtr parse_model(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const std::exception& e) {
        fail(ErrorKind::Io, std::string("model file is not valid JSON: ") + e.what());
    }
    auto model = std::make_shared<EnvironmentModel>();
    const std::string kind = doc.value("kind", "iid");
    if (kind == "iid")
        model->kind = ModelKind::Iid;
    else if (kind == "periodic")
        model->kind = ModelKind::Periodic;
    else if (kind == "finite-markov")
        model->kind = ModelKind::FiniteMarkov;
    else
        fail(ErrorKind::Io, "model kind must be iid | periodic | finite-markov");
    model->d = doc.value("d", 1);
    model->epsilon_floor = doc.value("epsilon_floor", 0.0);
    if (!doc.contains("support") || !doc["support"].is_array() || doc["support"].empty())
        fail(ErrorKind::Io, "model file needs a nonempty support array");
    for (const auto& atom : doc["support"]) {
        LayerTriple t;
        t.p = mat_from_row_major(atom.at("p"), model->d, "p");
        t.r = mat_from_row_major(atom.at("r"), model->d, "r");
        t.q = mat_from_row_major(atom.at("q"), model->d, "q");
        model->support.push_back(std::move(t));
    }
    const int k = model->atom_count();
    if (model->kind == ModelKind::Iid) {
        const auto& w = doc.at("weights");
        model->weights = Vec(k);
        for (int i = 0; i < k; ++i) model->weights[i] = w.at(static_cast<std::size_t>(i)).get<double>();
    } else if (model->kind == ModelKind::FiniteMarkov) {
        const auto& w = doc.at("weights");
        model->transition = Mat(k, k);
        if (w.is_array() && !w.empty() && w[0].is_array()) {
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j)
                    model->transition(i, j) = w.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j)).get<double>();
        } else {
            model->transition = mat_from_row_major(w, k, "weights");
        }
    } else if (doc.contains("order")) {
        for (const auto& i : doc["order"]) model->order.push_back(i.get<int>());
    }
    model->validate();
    return model;
}

ModelPtr load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

std::string model_to_json(const EnvironmentModel& model) {
    json doc;
    doc["kind"] = to_string(model.kind);
    doc["d"] = model.d;
    doc["epsilon_floor"] = model.epsilon_floor;
    doc["support"] = json::array();
    for (const auto& t : model.support) {
        json atom;
        atom["p"] = mat_to_row_major(t.p);
        atom["r"] = mat_to_row_major(t.r);
        atom["q"] = mat_to_row_major(t.q);
        doc["support"].push_back(atom);
    }
    if (model.kind == ModelKind::Iid) {
        json w = json::array();
        for (int i = 0; i < model.weights.size(); ++i) w.push_back(model.weights[i]);
        doc["weights"] = w;
    } else if (model.kind == ModelKind::FiniteMarkov) {
        json rows = json::array();
        for (int i = 0; i < model.transition.rows(); ++i) {
            json row = json::array();
            for (int j = 0; j < model.transition.cols(); ++j) row.push_back(model.transition(i, j));
            rows.push_back(row);
        }
        doc["weights"] = rows;
    } else if (!model.order.empty()) {
        doc["order"] = model.order;
    }
    return doc.dump(2);
}

}  // namespace strip::env
