#include "selfheal/surrogate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "selfheal/checksum.hpp"
#include "selfheal/error.hpp"

namespace selfheal::surrogate {

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kMagic = "selfheal-classifier";

/// mt19937_64 output is fixed by the standard; the distributions are not,
/// so bounded draws and uniforms are derived here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t r;
        do r = engine_();
        while (r >= limit);
        return r % n;
    }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
};

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void require_finite(const Features& x) {
    for (double v : x)
        if (!std::isfinite(v)) throw InvalidInput("feature vector contains a non-finite value");
}

void require_two_classes(const Dataset& train) {
    if (train.size() == 0) throw DegenerateLabels("training set is empty");
    const auto ones = std::count(train.labels.begin(), train.labels.end(), 1);
    if (ones == 0 || ones == static_cast<long>(train.size()))
        throw DegenerateLabels("training labels contain a single class");
}

std::vector<Features> standardized(const Standardizer& s, const std::vector<Features>& rows) {
    std::vector<Features> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(s.apply(r));
    return out;
}

double sq_dist(const Features& a, const Features& b) {
    double acc = 0.0;
    for (std::size_t j = 0; j < kFeatureCount; ++j) acc += (a[j] - b[j]) * (a[j] - b[j]);
    return acc;
}

// ---------------------------------------------------------------- k-NN

// Implicit balanced k-d tree: tree[mid] splits [lo, hi) on axis depth % 3.
void build_tree(const std::vector<Features>& pts, std::vector<std::uint32_t>& idx, std::size_t lo, std::size_t hi,
                std::size_t depth) {
    if (hi - lo <= 1) return;
    const std::size_t axis = depth % kFeatureCount;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(idx.begin() + static_cast<std::ptrdiff_t>(lo), idx.begin() + static_cast<std::ptrdiff_t>(mid),
                     idx.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::uint32_t a, std::uint32_t b) {
                         return pts[a][axis] != pts[b][axis] ? pts[a][axis] < pts[b][axis] : a < b;
                     });
    build_tree(pts, idx, lo, mid, depth + 1);
    build_tree(pts, idx, mid + 1, hi, depth + 1);
}

struct Neighbor {
    double dist;
    std::uint32_t index;
    bool operator<(const Neighbor& o) const { return dist != o.dist ? dist < o.dist : index < o.index; }
};

void search_tree(const KnnModel& m, const Features& q, std::size_t lo, std::size_t hi, std::size_t depth,
                 std::vector<Neighbor>& heap, std::size_t k) {
    if (lo >= hi) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::uint32_t p = m.tree[mid];
    const Neighbor cand{sq_dist(q, m.points[p]), p};
    if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
    } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
    }
    const std::size_t axis = depth % kFeatureCount;
    const double diff = q[axis] - m.points[p][axis];
    const bool left_first = diff <= 0.0;
    if (left_first) search_tree(m, q, lo, mid, depth + 1, heap, k);
    else search_tree(m, q, mid + 1, hi, depth + 1, heap, k);
    if (heap.size() < k || diff * diff <= heap.front().dist) {
        if (left_first) search_tree(m, q, mid + 1, hi, depth + 1, heap, k);
        else search_tree(m, q, lo, mid, depth + 1, heap, k);
    }
}

std::vector<Neighbor> nearest(const KnnModel& m, const Features& q) {
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(m.k), m.points.size());
    std::vector<Neighbor> heap;
    heap.reserve(k + 1);
    search_tree(m, q, 0, m.tree.size(), 0, heap, k);
    std::sort_heap(heap.begin(), heap.end());
    return heap;
}

void index_knn(KnnModel& m) {
    m.tree.resize(m.points.size());
    for (std::uint32_t i = 0; i < m.tree.size(); ++i) m.tree[i] = i;
    build_tree(m.points, m.tree, 0, m.tree.size(), 0);
}

KnnModel fit_knn(const std::vector<Features>& x, const std::vector<int>& y, int k) {
    if (k < 1) throw InvalidConfiguration("knn k must be >= 1");
    KnnModel m;
    m.k = k;
    m.points = x;
    m.labels = y;
    index_knn(m);
    return m;
}

// ------------------------------------------------------- Gaussian NB

GaussianNbModel fit_gnb(const std::vector<Features>& x, const std::vector<int>& y) {
    GaussianNbModel m;
    std::array<double, 2> count{};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int c = y[i];
        count[c] += 1.0;
        for (std::size_t j = 0; j < kFeatureCount; ++j) m.mean[c][j] += x[i][j];
    }
    for (int c = 0; c < 2; ++c)
        for (std::size_t j = 0; j < kFeatureCount; ++j) m.mean[c][j] /= count[c];
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int c = y[i];
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            const double d = x[i][j] - m.mean[c][j];
            m.var[c][j] += d * d;
        }
    }
    // Variance floor relative to the widest feature, as in common GNB implementations.
    double widest = 0.0;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        double mu = 0.0, v = 0.0;
        for (const auto& r : x) mu += r[j];
        mu /= static_cast<double>(x.size());
        for (const auto& r : x) v += (r[j] - mu) * (r[j] - mu);
        widest = std::max(widest, v / static_cast<double>(x.size()));
    }
    const double floor = 1e-9 * std::max(widest, 1e-300);
    const double total = count[0] + count[1];
    for (int c = 0; c < 2; ++c) {
        m.log_prior[c] = std::log(count[c] / total);
        for (std::size_t j = 0; j < kFeatureCount; ++j) m.var[c][j] = m.var[c][j] / count[c] + floor;
    }
    return m;
}

std::array<double, 2> gnb_log_joint(const GaussianNbModel& m, const Features& x) {
    std::array<double, 2> out{};
    for (int c = 0; c < 2; ++c) {
        double acc = m.log_prior[c];
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            const double d = x[j] - m.mean[c][j];
            acc -= 0.5 * (std::log(2.0 * std::numbers::pi * m.var[c][j]) + d * d / m.var[c][j]);
        }
        out[c] = acc;
    }
    return out;
}

// ---------------------------------------------------- linear models

double linear_margin(const LinearModel& m, const Features& x) {
    double z = m.b;
    for (std::size_t j = 0; j < kFeatureCount; ++j) z += m.w[j] * x[j];
    return z;
}

LinearModel fit_logreg(const std::vector<Features>& x, const std::vector<int>& y, const Hyperparameters& hp) {
    LinearModel m;
    const double n = static_cast<double>(x.size());
    for (int epoch = 0; epoch < hp.logreg_epochs; ++epoch) {
        Features gw{};
        double gb = 0.0;
        double loss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double z = linear_margin(m, x[i]);
            const double p = sigmoid(z);
            const double err = p - y[i];
            for (std::size_t j = 0; j < kFeatureCount; ++j) gw[j] += err * x[i][j];
            gb += err;
            // log(1 + e^{-z}) for y=1, log(1 + e^{z}) for y=0, computed stably
            const double s = y[i] == 1 ? -z : z;
            loss += s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
        }
        if (!std::isfinite(loss)) throw TrainingDivergence("logistic regression loss is not finite");
        for (std::size_t j = 0; j < kFeatureCount; ++j) m.w[j] -= hp.logreg_learning_rate * gw[j] / n;
        m.b -= hp.logreg_learning_rate * gb / n;
    }
    return m;
}

LinearModel fit_linsvm(const std::vector<Features>& x, const std::vector<int>& y, const Hyperparameters& hp) {
    LinearModel m;
    Rng rng(hp.seed ^ 0x5f3759dfULL);
    std::vector<std::size_t> order(x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    double step_count = 0.0;
    for (int epoch = 0; epoch < hp.svm_epochs; ++epoch) {
        rng.shuffle(order);
        double loss = 0.0;
        for (std::size_t i : order) {
            const double eta = hp.svm_eta0 / (1.0 + hp.svm_eta0 * hp.svm_lambda * step_count);
            step_count += 1.0;
            const double label = y[i] == 1 ? 1.0 : -1.0;
            const double margin = label * linear_margin(m, x[i]);
            for (double& w : m.w) w *= 1.0 - eta * hp.svm_lambda;
            if (margin < 1.0) {
                for (std::size_t j = 0; j < kFeatureCount; ++j) m.w[j] += eta * label * x[i][j];
                m.b += eta * label;
                loss += 1.0 - margin;
            }
        }
        if (!std::isfinite(loss)) throw TrainingDivergence("linear SVM hinge loss is not finite");
    }
    return m;
}

// ------------------------------------------------------------- MLP

struct MlpWork {
    std::vector<double> z1, h1, z2, h2, m1, m2;
    explicit MlpWork(int hidden)
        : z1(hidden), h1(hidden), z2(hidden), h2(hidden), m1(hidden, 1.0), m2(hidden, 1.0) {}
};

double mlp_forward(const MlpModel& m, const Features& x, MlpWork& w) {
    const auto h = static_cast<std::size_t>(m.hidden);
    for (std::size_t i = 0; i < h; ++i) {
        double acc = m.b1[i];
        for (std::size_t j = 0; j < kFeatureCount; ++j) acc += m.w1[i * kFeatureCount + j] * x[j];
        w.z1[i] = acc;
        w.h1[i] = std::max(acc, 0.0) * w.m1[i];
    }
    for (std::size_t i = 0; i < h; ++i) {
        double acc = m.b2[i];
        for (std::size_t j = 0; j < h; ++j) acc += m.w2[i * h + j] * w.h1[j];
        w.z2[i] = acc;
        w.h2[i] = std::max(acc, 0.0) * w.m2[i];
    }
    double out = m.b3;
    for (std::size_t i = 0; i < h; ++i) out += m.w3[i] * w.h2[i];
    return out;
}

MlpModel init_mlp(int hidden, Rng& rng) {
    MlpModel m;
    m.hidden = hidden;
    const auto h = static_cast<std::size_t>(hidden);
    auto fill = [&](std::vector<double>& v, std::size_t n, std::size_t fan_in) {
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        v.resize(n);
        for (double& e : v) e = (2.0 * rng.uniform() - 1.0) * limit;
    };
    fill(m.w1, h * kFeatureCount, kFeatureCount);
    fill(m.w2, h * h, h);
    fill(m.w3, h, h);
    m.b1.assign(h, 0.0);
    m.b2.assign(h, 0.0);
    m.b3 = 0.0;
    return m;
}

double bce_from_logit(double z, int y) {
    const double s = y == 1 ? -z : z;
    return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

class Adam {
public:
    explicit Adam(std::size_t n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::vector<double*>& params, const std::vector<double>& grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(kBeta1, t_);
        const double c2 = 1.0 - std::pow(kBeta2, t_);
        for (std::size_t i = 0; i < grad.size(); ++i) {
            m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
            v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
            *params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-7;
    double lr_;
    double t_ = 0.0;
    std::vector<double> m_, v_;
};

std::vector<double*> mlp_param_refs(MlpModel& m) {
    std::vector<double*> refs;
    for (auto* v : {&m.w1, &m.b1, &m.w2, &m.b2, &m.w3})
        for (double& e : *v) refs.push_back(&e);
    refs.push_back(&m.b3);
    return refs;
}

double mean_bce(const MlpModel& m, const std::vector<Features>& x, const std::vector<int>& y) {
    MlpWork w(m.hidden);
    double loss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) loss += bce_from_logit(mlp_forward(m, x[i], w), y[i]);
    return loss / static_cast<double>(x.size());
}

MlpModel fit_mlp(const std::vector<Features>& x, const std::vector<int>& y, const std::vector<Features>& vx,
                 const std::vector<int>& vy, const Hyperparameters& hp) {
    if (hp.mlp_hidden < 1 || hp.mlp_batch < 1 || hp.mlp_epochs < 1)
        throw InvalidConfiguration("mlp hidden width, batch size and epochs must be >= 1");
    if (!(hp.mlp_dropout >= 0.0 && hp.mlp_dropout < 1.0)) throw InvalidConfiguration("mlp dropout must lie in [0, 1)");

    Rng rng(hp.seed);
    MlpModel m = init_mlp(hp.mlp_hidden, rng);
    std::vector<double*> refs = mlp_param_refs(m);
    Adam adam(refs.size(), hp.mlp_learning_rate);
    const auto h = static_cast<std::size_t>(m.hidden);
    const double keep = 1.0 - hp.mlp_dropout;

    MlpModel best = m;
    double best_loss = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> grad(refs.size());
    MlpWork w(m.hidden);
    std::vector<double> d2(h), d1(h);

    // Gradient layout mirrors mlp_param_refs: w1, b1, w2, b2, w3, b3.
    const std::size_t off_b1 = h * kFeatureCount;
    const std::size_t off_w2 = off_b1 + h;
    const std::size_t off_b2 = off_w2 + h * h;
    const std::size_t off_w3 = off_b2 + h;
    const std::size_t off_b3 = off_w3 + h;

    for (int epoch = 0; epoch < hp.mlp_epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hp.mlp_batch)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(hp.mlp_batch));
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t i = order[b];
                for (std::size_t u = 0; u < h; ++u) {
                    w.m1[u] = rng.uniform() < keep ? 1.0 / keep : 0.0;
                    w.m2[u] = rng.uniform() < keep ? 1.0 / keep : 0.0;
                }
                const double z = mlp_forward(m, x[i], w);
                epoch_loss += bce_from_logit(z, y[i]);
                const double dz = sigmoid(z) - y[i];
                grad[off_b3] += dz;
                for (std::size_t u = 0; u < h; ++u) {
                    grad[off_w3 + u] += dz * w.h2[u];
                    d2[u] = w.z2[u] > 0.0 ? dz * m.w3[u] * w.m2[u] : 0.0;
                }
                for (std::size_t u = 0; u < h; ++u) {
                    grad[off_b2 + u] += d2[u];
                    for (std::size_t v = 0; v < h; ++v) grad[off_w2 + u * h + v] += d2[u] * w.h1[v];
                }
                for (std::size_t v = 0; v < h; ++v) {
                    double acc = 0.0;
                    for (std::size_t u = 0; u < h; ++u) acc += d2[u] * m.w2[u * h + v];
                    d1[v] = w.z1[v] > 0.0 ? acc * w.m1[v] : 0.0;
                }
                for (std::size_t u = 0; u < h; ++u) {
                    grad[off_b1 + u] += d1[u];
                    for (std::size_t j = 0; j < kFeatureCount; ++j) grad[u * kFeatureCount + j] += d1[u] * x[i][j];
                }
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (double& g : grad) g *= inv;
            adam.step(refs, grad);
        }
        if (!std::isfinite(epoch_loss)) throw TrainingDivergence("MLP training loss is not finite");

        const double val_loss = vx.empty() ? epoch_loss / static_cast<double>(x.size()) : mean_bce(m, vx, vy);
        if (!std::isfinite(val_loss)) throw TrainingDivergence("MLP validation loss is not finite");
        if (val_loss < best_loss) {
            best_loss = val_loss;
            best = m;
        }
    }
    return best;
}

// ---------------------------------------------------------- persistence

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<double> flatten(const Classifier& c) {
    std::vector<double> out;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, KnnModel>) {
                out.push_back(m.k);
                out.push_back(static_cast<double>(m.points.size()));
                for (std::size_t i = 0; i < m.points.size(); ++i) {
                    out.insert(out.end(), m.points[i].begin(), m.points[i].end());
                    out.push_back(m.labels[i]);
                }
            } else if constexpr (std::is_same_v<T, GaussianNbModel>) {
                out.insert(out.end(), m.log_prior.begin(), m.log_prior.end());
                for (const auto& f : m.mean) out.insert(out.end(), f.begin(), f.end());
                for (const auto& f : m.var) out.insert(out.end(), f.begin(), f.end());
            } else if constexpr (std::is_same_v<T, LinearModel>) {
                out.insert(out.end(), m.w.begin(), m.w.end());
                out.push_back(m.b);
            } else {
                out.push_back(m.hidden);
                for (const auto* v : {&m.w1, &m.b1, &m.w2, &m.b2, &m.w3}) out.insert(out.end(), v->begin(), v->end());
                out.push_back(m.b3);
            }
        },
        c.params());
    return out;
}

ModelParams unflatten(Variant variant, const std::vector<double>& p) {
    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
        if (p.size() - pos < n) throw CorruptModel("parameters section is shorter than its layout requires");
    };
    auto take = [&] { return p[pos++]; };
    auto as_count = [](double v, const char* what) {
        if (!(v >= 0.0 && v < 1e12 && v == std::floor(v)))
            throw CorruptModel(std::string("parameters section has an invalid ") + what);
        return static_cast<std::size_t>(v);
    };

    ModelParams out;
    switch (variant) {
        case Variant::KNN: {
            need(2);
            KnnModel m;
            m.k = static_cast<int>(as_count(take(), "neighbour count"));
            const std::size_t n = as_count(take(), "point count");
            need(n * 4);
            m.points.resize(n);
            m.labels.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                for (auto& v : m.points[i]) v = take();
                const double label = take();
                if (label != 0.0 && label != 1.0) throw CorruptModel("parameters section has a label outside {0,1}");
                m.labels[i] = static_cast<int>(label);
            }
            if (m.k < 1 || n == 0) throw CorruptModel("parameters section describes an empty neighbour model");
            index_knn(m);
            out = std::move(m);
            break;
        }
        case Variant::GNB: {
            need(14);
            GaussianNbModel m;
            for (auto& v : m.log_prior) v = take();
            for (auto& f : m.mean)
                for (auto& v : f) v = take();
            for (auto& f : m.var)
                for (auto& v : f) v = take();
            out = m;
            break;
        }
        case Variant::LOGREG:
        case Variant::LINSVM: {
            need(4);
            LinearModel m;
            for (auto& v : m.w) v = take();
            m.b = take();
            out = m;
            break;
        }
        case Variant::MLP: {
            need(1);
            MlpModel m;
            m.hidden = static_cast<int>(as_count(take(), "hidden width"));
            const auto h = static_cast<std::size_t>(m.hidden);
            if (h == 0) throw CorruptModel("parameters section has zero hidden width");
            need(h * kFeatureCount + h + h * h + h + h + 1);
            auto read = [&](std::vector<double>& v, std::size_t n) {
                v.resize(n);
                for (auto& e : v) e = take();
            };
            read(m.w1, h * kFeatureCount);
            read(m.b1, h);
            read(m.w2, h * h);
            read(m.b2, h);
            read(m.w3, h);
            m.b3 = take();
            out = std::move(m);
            break;
        }
    }
    if (pos != p.size()) throw CorruptModel("parameters section has trailing values");
    return out;
}

std::vector<double> parse_doubles(std::string_view text, const char* section) {
    std::vector<double> out;
    const char* cur = text.data();
    const char* end = text.data() + text.size();
    while (cur < end) {
        while (cur < end && *cur == ' ') ++cur;
        if (cur == end) break;
        double v;
        const auto res = std::from_chars(cur, end, v);
        if (res.ec != std::errc()) throw CorruptModel(std::string(section) + " section holds a malformed number");
        out.push_back(v);
        cur = res.ptr;
    }
    return out;
}

}  // namespace

// ------------------------------------------------------------- Dataset

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.features.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        out.features.push_back(features.at(i));
        out.labels.push_back(labels.at(i));
    }
    return out;
}

void Dataset::validate() const {
    if (features.size() != labels.size()) throw InvalidDataset("feature and label counts differ");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw InvalidDataset("label outside {0,1} at row " + std::to_string(i));
        for (double v : features[i])
            if (!std::isfinite(v)) throw InvalidDataset("non-finite feature at row " + std::to_string(i));
    }
}

Dataset read_dataset_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw InvalidDataset("dataset CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "sigma,gamma,t,H") throw InvalidDataset("dataset CSV header must be sigma,gamma,t,H");
    Dataset ds;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<double, 4> v{};
        const char* cur = line.data();
        const char* end = line.data() + line.size();
        for (std::size_t k = 0; k < 4; ++k) {
            const auto res = std::from_chars(cur, end, v[k]);
            if (res.ec != std::errc() || (k < 3 && (res.ptr == end || *res.ptr != ',')) || (k == 3 && res.ptr != end))
                throw InvalidDataset("malformed dataset CSV row " + std::to_string(row));
            cur = res.ptr + 1;
        }
        ds.features.push_back({v[0], v[1], v[2]});
        ds.labels.push_back(static_cast<int>(v[3]));
        if (v[3] != 0.0 && v[3] != 1.0) throw InvalidDataset("label outside {0,1} at row " + std::to_string(row));
    }
    ds.validate();
    return ds;
}

SplitIndices split(std::size_t rows, std::uint64_t seed) {
    if (rows < 5) throw InvalidDataset("need at least 5 rows to split, got " + std::to_string(rows));
    std::vector<std::size_t> perm(rows);
    for (std::size_t i = 0; i < rows; ++i) perm[i] = i;
    Rng rng(seed);
    rng.shuffle(perm);

    const auto n = static_cast<double>(rows);
    const auto n_train = static_cast<std::size_t>(std::llround(0.6 * n));
    const auto n_val = static_cast<std::size_t>(std::llround(0.2 * n));
    SplitIndices s;
    s.seed = seed;
    const auto b = perm.begin();
    s.train.assign(b, b + static_cast<std::ptrdiff_t>(n_train));
    s.validation.assign(b + static_cast<std::ptrdiff_t>(n_train), b + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(b + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
    return s;
}

Standardizer Standardizer::fit(std::span<const Features> rows) {
    Standardizer s;
    if (rows.empty()) return s;
    const auto n = static_cast<double>(rows.size());
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        double mu = 0.0;
        for (const auto& r : rows) mu += r[j];
        mu /= n;
        double var = 0.0;
        for (const auto& r : rows) var += (r[j] - mu) * (r[j] - mu);
        const double sd = std::sqrt(var / n);
        s.mean[j] = mu;
        s.scale[j] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

Features Standardizer::apply(const Features& x) const {
    Features out;
    for (std::size_t j = 0; j < kFeatureCount; ++j) out[j] = (x[j] - mean[j]) / scale[j];
    return out;
}

const char* to_string(Variant v) {
    switch (v) {
        case Variant::KNN: return "knn";
        case Variant::GNB: return "gnb";
        case Variant::LOGREG: return "logreg";
        case Variant::LINSVM: return "linsvm";
        case Variant::MLP: return "mlp";
    }
    return "?";
}

Variant parse_variant(const std::string& name) {
    for (Variant v : {Variant::KNN, Variant::GNB, Variant::LOGREG, Variant::LINSVM, Variant::MLP})
        if (name == to_string(v)) return v;
    throw InvalidConfiguration("unknown model variant '" + name + "'");
}

// ---------------------------------------------------------- Classifier

Classifier::Classifier(Variant variant, Standardizer scaler, ModelParams params)
    : variant_(variant), scaler_(scaler), params_(std::move(params)) {
    const bool ok = (variant == Variant::KNN && std::holds_alternative<KnnModel>(params_)) ||
                    (variant == Variant::GNB && std::holds_alternative<GaussianNbModel>(params_)) ||
                    ((variant == Variant::LOGREG || variant == Variant::LINSVM) &&
                     std::holds_alternative<LinearModel>(params_)) ||
                    (variant == Variant::MLP && std::holds_alternative<MlpModel>(params_));
    if (!ok) throw std::invalid_argument("Classifier: parameters do not match the variant");
}

double Classifier::score(const Features& raw) const {
    require_finite(raw);
    const Features x = scaler_.apply(raw);
    switch (variant_) {
        case Variant::KNN: {
            const auto& m = std::get<KnnModel>(params_);
            const auto nn = nearest(m, x);
            double ones = 0.0;
            for (const auto& n : nn) ones += m.labels[n.index];
            return ones / static_cast<double>(nn.size());
        }
        case Variant::GNB: {
            const auto lj = gnb_log_joint(std::get<GaussianNbModel>(params_), x);
            return sigmoid(lj[1] - lj[0]);
        }
        case Variant::LOGREG: return sigmoid(linear_margin(std::get<LinearModel>(params_), x));
        case Variant::LINSVM: return linear_margin(std::get<LinearModel>(params_), x);
        case Variant::MLP: {
            const auto& m = std::get<MlpModel>(params_);
            MlpWork w(m.hidden);
            return sigmoid(mlp_forward(m, x, w));
        }
    }
    return 0.0;
}

int Classifier::predict(const Features& raw) const {
    require_finite(raw);
    const Features x = scaler_.apply(raw);
    switch (variant_) {
        case Variant::KNN: {
            const auto& m = std::get<KnnModel>(params_);
            const auto nn = nearest(m, x);
            std::size_t ones = 0;
            for (const auto& n : nn) ones += static_cast<std::size_t>(m.labels[n.index]);
            if (2 * ones > nn.size()) return 1;
            if (2 * ones < nn.size()) return 0;
            return m.labels[nn.front().index];
        }
        case Variant::GNB: {
            const auto lj = gnb_log_joint(std::get<GaussianNbModel>(params_), x);
            return lj[1] >= lj[0] ? 1 : 0;
        }
        case Variant::LOGREG: return sigmoid(linear_margin(std::get<LinearModel>(params_), x)) >= 0.5 ? 1 : 0;
        case Variant::LINSVM: return linear_margin(std::get<LinearModel>(params_), x) >= 0.0 ? 1 : 0;
        case Variant::MLP: {
            const auto& m = std::get<MlpModel>(params_);
            MlpWork w(m.hidden);
            return sigmoid(mlp_forward(m, x, w)) >= 0.5 ? 1 : 0;
        }
    }
    return 0;
}

std::vector<int> Classifier::predict(std::span<const Features> rows) const {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(predict(r));
    return out;
}

Classifier fit(Variant variant, const Dataset& train, const Dataset& validation, const Hyperparameters& hp) {
    train.validate();
    validation.validate();
    require_two_classes(train);
    const Standardizer scaler = Standardizer::fit(train.features);
    const auto x = standardized(scaler, train.features);
    const auto& y = train.labels;
    switch (variant) {
        case Variant::KNN: return Classifier(variant, scaler, fit_knn(x, y, hp.knn_k));
        case Variant::GNB: return Classifier(variant, scaler, fit_gnb(x, y));
        case Variant::LOGREG: return Classifier(variant, scaler, fit_logreg(x, y, hp));
        case Variant::LINSVM: return Classifier(variant, scaler, fit_linsvm(x, y, hp));
        case Variant::MLP:
            return Classifier(variant, scaler,
                              fit_mlp(x, y, standardized(scaler, validation.features), validation.labels, hp));
    }
    throw std::invalid_argument("fit: unknown variant");
}

// ------------------------------------------------------------- Metrics

Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) throw std::invalid_argument("compute_metrics: size mismatch");
    Metrics m;
    for (std::size_t i = 0; i < truth.size(); ++i) ++m.confusion[truth[i]][predicted[i]];
    const auto n = static_cast<double>(truth.size());
    if (truth.empty()) return m;
    m.accuracy = static_cast<double>(m.confusion[0][0] + m.confusion[1][1]) / n;
    for (int c = 0; c < 2; ++c) {
        auto& pc = m.per_class[c];
        const std::size_t tp = m.confusion[c][c];
        const std::size_t predicted_c = m.confusion[0][c] + m.confusion[1][c];
        pc.support = m.confusion[c][0] + m.confusion[c][1];
        pc.precision_undefined = predicted_c == 0;
        pc.recall_undefined = pc.support == 0;
        pc.precision = predicted_c == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted_c);
        pc.recall = pc.support == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(pc.support);
        pc.f1 = pc.precision + pc.recall > 0.0 ? 2.0 * pc.precision * pc.recall / (pc.precision + pc.recall) : 0.0;
        const double weight = static_cast<double>(pc.support) / n;
        m.precision += weight * pc.precision;
        m.recall += weight * pc.recall;
        m.f1 += weight * pc.f1;
    }
    return m;
}

Metrics evaluate(const Classifier& model, const Dataset& test) {
    if (test.size() == 0) throw InvalidDataset("evaluation set is empty");
    const auto predicted = model.predict(test.features);
    return compute_metrics(test.labels, predicted);
}

void write_metrics_header(std::ostream& os) { os << "model,accuracy,precision,recall,f1\n"; }

void write_metrics_row(std::ostream& os, const std::string& model, const Metrics& m) {
    const auto old_precision = os.precision(6);
    const auto old_flags = os.setf(std::ios::fixed, std::ios::floatfield);
    os << model << ',' << m.accuracy << ',' << m.precision << ',' << m.recall << ',' << m.f1 << '\n';
    os.flags(old_flags);
    os.precision(old_precision);
}

// --------------------------------------------------------- persistence

std::string persist(const Classifier& model) {
    std::ostringstream body;
    body << kMagic << ' ' << kFormatVersion << '\n';
    body << "variant " << to_string(model.variant()) << '\n';
    body << "standardizer";
    for (double v : model.standardizer().mean) body << ' ' << format_double(v);
    for (double v : model.standardizer().scale) body << ' ' << format_double(v);
    body << '\n';
    const auto params = flatten(model);
    body << "params " << params.size();
    for (double v : params) body << ' ' << format_double(v);
    body << '\n';
    std::string text = body.str();
    text += "checksum " + to_hex(fnv1a64(text)) + '\n';
    return text;
}

Classifier load(const std::string& payload) {
    const auto marker = payload.rfind("checksum ");
    if (marker == std::string::npos || (marker != 0 && payload[marker - 1] != '\n'))
        throw CorruptModel("checksum section missing (truncated payload?)");
    std::string stored = payload.substr(marker + 9);
    while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
    const std::string body = payload.substr(0, marker);
    if (stored != to_hex(fnv1a64(body))) throw CorruptModel("checksum section does not match the payload");

    std::istringstream in(body);
    std::string line;
    auto next_line = [&](const char* section) {
        if (!std::getline(in, line)) throw CorruptModel(std::string(section) + " section missing");
        return line;
    };

    {
        std::istringstream header(next_line("header"));
        std::string magic;
        int version = -1;
        if (!(header >> magic >> version) || magic != kMagic) throw CorruptModel("header section is malformed");
        if (version != kFormatVersion)
            throw CorruptModel("header section: unsupported model format version " + std::to_string(version) +
                               " (this build reads version " + std::to_string(kFormatVersion) + ")");
    }

    Variant variant;
    {
        const std::string v = next_line("variant");
        if (v.rfind("variant ", 0) != 0) throw CorruptModel("variant section is malformed");
        try {
            variant = parse_variant(v.substr(8));
        } catch (const InvalidConfiguration&) {
            throw CorruptModel("variant section names an unknown variant");
        }
    }

    Standardizer scaler;
    {
        const std::string s = next_line("standardizer");
        if (s.rfind("standardizer", 0) != 0) throw CorruptModel("standardizer section is malformed");
        const auto vals = parse_doubles(std::string_view(s).substr(12), "standardizer");
        if (vals.size() != 2 * kFeatureCount) throw CorruptModel("standardizer section has the wrong length");
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            scaler.mean[j] = vals[j];
            scaler.scale[j] = vals[kFeatureCount + j];
            if (!(scaler.scale[j] > 0.0)) throw CorruptModel("standardizer section has a non-positive scale");
        }
    }

    std::vector<double> params;
    {
        const std::string p = next_line("parameters");
        if (p.rfind("params ", 0) != 0) throw CorruptModel("parameters section is malformed");
        auto vals = parse_doubles(std::string_view(p).substr(7), "parameters");
        if (vals.empty() || vals.front() != static_cast<double>(vals.size() - 1))
            throw CorruptModel("parameters section count does not match its contents");
        params.assign(vals.begin() + 1, vals.end());
    }
    return Classifier(variant, scaler, unflatten(variant, params));
}

}  // namespace selfheal::surrogate
