#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ramses/rng.hpp"
#include "ramses/types.hpp"

namespace ramses {

enum class Family { kKnn, kLof, kMd, kRm, kHbos, kPca, kIforest, kKmeans };

inline const char* to_string(Family f) {
    switch (f) {
        case Family::kKnn: return "knn";
        case Family::kLof: return "lof";
        case Family::kMd: return "md";
        case Family::kRm: return "rm";
        case Family::kHbos: return "hbos";
        case Family::kPca: return "pca";
        case Family::kIforest: return "iforest";
        case Family::kKmeans: return "kmeans";
    }
    return "?";
}

inline Family family_from_string(const std::string& s) {
    if (s == "knn") return Family::kKnn;
    if (s == "lof") return Family::kLof;
    if (s == "md") return Family::kMd;
    if (s == "rm") return Family::kRm;
    if (s == "hbos") return Family::kHbos;
    if (s == "pca") return Family::kPca;
    if (s == "iforest") return Family::kIforest;
    if (s == "kmeans") return Family::kKmeans;
    throw std::invalid_argument("unknown detector family: " + s);
}

struct DetectorConfig {
    Family family = Family::kKnn;
    std::map<std::string, int> params;
    std::string id;

    int param(const std::string& name, int fallback) const {
        auto it = params.find(name);
        return it == params.end() ? fallback : it->second;
    }

    void validate() const {
        for (const auto& [k, v] : params)
            if (v < 1) throw std::invalid_argument("detector " + id + ": param " + k + " must be >= 1");
        if (family == Family::kHbos && param("bins", 10) < 2)
            throw std::invalid_argument("detector " + id + ": hbos bins must be >= 2");
    }
};

struct FamilyRequest {
    Family family = Family::kKnn;
    std::size_t count = 0;
    std::map<std::string, int> fixed;  // params pinned instead of sampled
};

// Samples detector configurations uniformly from the per-family parameter
// ranges. Deterministic given the seed; ids are "<family>_<n>".
inline std::vector<DetectorConfig> build_pool(const std::vector<FamilyRequest>& requests,
                                              std::size_t dimension, std::uint64_t seed) {
    std::size_t total = 0;
    for (const auto& r : requests) total += r.count;
    if (total < 1) throw std::invalid_argument("build_pool: empty request");
    if (dimension < 1) throw std::invalid_argument("build_pool: dimension must be >= 1");

    Rng rng = make_rng(seed, "pool");
    auto draw = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };

    std::vector<DetectorConfig> pool;
    pool.reserve(total);
    for (const auto& req : requests) {
        for (std::size_t i = 0; i < req.count; ++i) {
            DetectorConfig cfg;
            cfg.family = req.family;
            cfg.id = std::string(to_string(req.family)) + "_" + std::to_string(i + 1);
            switch (req.family) {
                case Family::kKnn:
                case Family::kLof:
                    cfg.params["k"] = draw(3, 50);
                    break;
                case Family::kRm:
                    cfg.params["window"] = draw(5, 100);
                    break;
                case Family::kHbos:
                    cfg.params["bins"] = draw(5, 50);
                    break;
                case Family::kPca:
                    cfg.params["components"] = draw(1, static_cast<int>(dimension));
                    break;
                case Family::kIforest:
                    cfg.params["trees"] = draw(50, 150);
                    cfg.params["subsample"] = draw(64, 256);
                    break;
                case Family::kKmeans:
                    cfg.params["clusters"] = draw(2, 10);
                    break;
                case Family::kMd:
                    break;
            }
            for (const auto& [k, v] : req.fixed) cfg.params[k] = v;
            cfg.validate();
            pool.push_back(std::move(cfg));
        }
    }
    return pool;
}

namespace detail {

struct ModelState {
    virtual ~ModelState() = default;
    virtual Vector raw_scores(const Matrix& data) const = 0;
};

inline double sq_dist(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    return (a - b).squaredNorm();
}

// distances to the k nearest rows of `train`, ascending; ties by row index
inline std::vector<std::pair<double, Eigen::Index>> k_nearest(const Matrix& train,
                                                              const Eigen::RowVectorXd& q,
                                                              std::size_t k) {
    std::vector<std::pair<double, Eigen::Index>> d(static_cast<std::size_t>(train.rows()));
    for (Eigen::Index i = 0; i < train.rows(); ++i)
        d[static_cast<std::size_t>(i)] = {sq_dist(train.row(i), q), i};
    const std::size_t kk = std::min(k, d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
    d.resize(kk);
    for (auto& e : d) e.first = std::sqrt(e.first);
    return d;
}

struct KnnState final : ModelState {
    Matrix train;
    std::size_t k = 1;

    Vector raw_scores(const Matrix& data) const override {
        Vector out(data.rows());
        for (Eigen::Index i = 0; i < data.rows(); ++i)
            out(i) = k_nearest(train, data.row(i), k).back().first;
        return out;
    }
};

struct LofState final : ModelState {
    Matrix train;
    std::size_t k = 1;
    std::vector<double> k_distance;  // per train row
    std::vector<double> lrd;         // local reachability density per train row
    std::vector<std::vector<Eigen::Index>> neighbors;

    static constexpr double kDenseLrd = 1e12;  // stand-in for 1/0 on duplicates

    void fit() {
        const auto n = static_cast<std::size_t>(train.rows());
        k_distance.resize(n);
        lrd.resize(n);
        neighbors.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto nn = k_nearest(train, train.row(static_cast<Eigen::Index>(i)), k + 1);
            // drop the self-match; k-distance is the k-th kept neighbor's
            std::vector<Eigen::Index> ids;
            double kth = 0.0;
            for (const auto& [dist, idx] : nn) {
                if (idx == static_cast<Eigen::Index>(i) || ids.size() == k) continue;
                ids.push_back(idx);
                kth = dist;
            }
            neighbors[i] = std::move(ids);
            k_distance[i] = kth;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double reach_sum = 0.0;
            for (Eigen::Index j : neighbors[i]) {
                const double dist = std::sqrt(
                    sq_dist(train.row(static_cast<Eigen::Index>(i)), train.row(j)));
                reach_sum += std::max(k_distance[static_cast<std::size_t>(j)], dist);
            }
            lrd[i] = reach_sum > 0.0
                         ? static_cast<double>(neighbors[i].size()) / reach_sum
                         : kDenseLrd;
        }
    }

    Vector raw_scores(const Matrix& data) const override {
        Vector out(data.rows());
        for (Eigen::Index q = 0; q < data.rows(); ++q) {
            auto nn = k_nearest(train, data.row(q), k);
            double reach_sum = 0.0;
            double lrd_sum = 0.0;
            for (const auto& [dist, idx] : nn) {
                reach_sum += std::max(k_distance[static_cast<std::size_t>(idx)], dist);
                lrd_sum += lrd[static_cast<std::size_t>(idx)];
            }
            const double lrd_q = reach_sum > 0.0
                                     ? static_cast<double>(nn.size()) / reach_sum
                                     : kDenseLrd;
            out(q) = (lrd_sum / static_cast<double>(nn.size())) / lrd_q;
        }
        return out;
    }
};

struct MdState final : ModelState {
    Eigen::RowVectorXd mean;
    Eigen::LLT<Matrix> chol;  // of the diagonally loaded covariance

    Vector raw_scores(const Matrix& data) const override {
        Vector out(data.rows());
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
            const Vector delta = (data.row(i) - mean).transpose();
            out(i) = std::sqrt(std::max(0.0, delta.dot(chol.solve(delta))));
        }
        return out;
    }
};

struct RmState final : ModelState {
    std::size_t window = 5;

    Vector raw_scores(const Matrix& data) const override {
        Vector out(data.rows());
        for (Eigen::Index t = 0; t < data.rows(); ++t) {
            const Eigen::Index lo =
                std::max<Eigen::Index>(0, t - static_cast<Eigen::Index>(window));
            const Eigen::Index len = t - lo;
            if (len == 0) {
                out(t) = 0.0;
                continue;
            }
            const Eigen::RowVectorXd trailing_mean = data.middleRows(lo, len).colwise().mean();
            out(t) = (data.row(t) - trailing_mean).cwiseAbs().maxCoeff();
        }
        return out;
    }
};

struct HbosState final : ModelState {
    int bins = 10;
    std::vector<double> lo, hi;               // per feature
    std::vector<std::vector<double>> height;  // per feature, smoothed frequency

    void fit(const Matrix& train) {
        const auto d = static_cast<std::size_t>(train.cols());
        const double n = static_cast<double>(train.rows());
        lo.resize(d);
        hi.resize(d);
        height.assign(d, std::vector<double>(static_cast<std::size_t>(bins), 0.0));
        for (std::size_t j = 0; j < d; ++j) {
            lo[j] = train.col(static_cast<Eigen::Index>(j)).minCoeff();
            hi[j] = train.col(static_cast<Eigen::Index>(j)).maxCoeff();
            std::vector<double> count(static_cast<std::size_t>(bins), 0.0);
            for (Eigen::Index i = 0; i < train.rows(); ++i)
                count[bin_of(train(i, static_cast<Eigen::Index>(j)), j)] += 1.0;
            for (std::size_t b = 0; b < count.size(); ++b)
                height[j][b] = (count[b] + 1.0) / (n + static_cast<double>(bins));
        }
    }

    std::size_t bin_of(double v, std::size_t j) const {
        if (hi[j] <= lo[j]) return 0;
        const double pos = (v - lo[j]) / (hi[j] - lo[j]) * bins;
        const auto b = static_cast<long>(std::floor(pos));
        return static_cast<std::size_t>(std::clamp<long>(b, 0, bins - 1));
    }

    Vector raw_scores(const Matrix& data) const override {
        Vector out(data.rows());
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < lo.size(); ++j)
                s -= std::log(height[j][bin_of(data(i, static_cast<Eigen::Index>(j)), j)]);
            out(i) = s;
        }
        return out;
    }
};

struct PcaState final : ModelState {
    Eigen::RowVectorXd mean;
    Matrix axes;  // d x c, top principal directions

    Vector raw_scores(const Matrix& data) const override {
        Vector out(data.rows());
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
            const Vector centered = (data.row(i) - mean).transpose();
            const Vector projected = axes * (axes.transpose() * centered);
            out(i) = (centered - projected).squaredNorm();
        }
        return out;
    }
};

struct IforestState final : ModelState {
    struct Node {
        int feature = -1;      // -1 marks a leaf
        double threshold = 0;
        int left = -1, right = -1;
        int size = 0;  // leaf population
    };
    struct Tree {
        std::vector<Node> nodes;
    };
    std::vector<Tree> trees;
    double expected_path = 1.0;  // c(subsample)

    static double avg_path(double n) {
        if (n <= 1.0) return 0.0;
        if (n == 2.0) return 1.0;
        const double h = std::log(n - 1.0) + 0.5772156649015329;
        return 2.0 * h - 2.0 * (n - 1.0) / n;
    }

    static int build(Tree& tree, const Matrix& rows, std::vector<Eigen::Index>& idx,
                     std::size_t begin, std::size_t end, int depth, int max_depth, Rng& rng) {
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        const std::size_t n = end - begin;
        if (n <= 1 || depth >= max_depth) {
            tree.nodes[static_cast<std::size_t>(node_id)].size = static_cast<int>(n);
            return node_id;
        }
        // pick a feature with spread; give up after d attempts
        const auto d = static_cast<int>(rows.cols());
        int feature = -1;
        double lo = 0, hi = 0;
        for (int attempt = 0; attempt < d; ++attempt) {
            const int f = std::uniform_int_distribution<int>(0, d - 1)(rng);
            lo = std::numeric_limits<double>::infinity();
            hi = -std::numeric_limits<double>::infinity();
            for (std::size_t i = begin; i < end; ++i) {
                const double v = rows(idx[i], f);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi > lo) { feature = f; break; }
        }
        if (feature < 0) {
            tree.nodes[static_cast<std::size_t>(node_id)].size = static_cast<int>(n);
            return node_id;
        }
        const double threshold = std::uniform_real_distribution<double>(lo, hi)(rng);
        auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                     idx.begin() + static_cast<std::ptrdiff_t>(end),
                                     [&](Eigen::Index i) { return rows(i, feature) < threshold; });
        const auto mid = static_cast<std::size_t>(mid_it - idx.begin());
        if (mid == begin || mid == end) {
            tree.nodes[static_cast<std::size_t>(node_id)].size = static_cast<int>(n);
            return node_id;
        }
        const int left = build(tree, rows, idx, begin, mid, depth + 1, max_depth, rng);
        const int right = build(tree, rows, idx, mid, end, depth + 1, max_depth, rng);
        Node& node = tree.nodes[static_cast<std::size_t>(node_id)];
        node.feature = feature;
        node.threshold = threshold;
        node.left = left;
        node.right = right;
        return node_id;
    }

    double path_length(const Tree& tree, const Eigen::RowVectorXd& x) const {
        int cur = 0;
        double depth = 0.0;
        while (tree.nodes[static_cast<std::size_t>(cur)].feature >= 0) {
            const Node& node = tree.nodes[static_cast<std::size_t>(cur)];
            cur = x(node.feature) < node.threshold ? node.left : node.right;
            depth += 1.0;
        }
        return depth + avg_path(tree.nodes[static_cast<std::size_t>(cur)].size);
    }

    Vector raw_scores(const Matrix& data) const override {
        Vector out(data.rows());
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
            double mean_path = 0.0;
            for (const auto& tree : trees) mean_path += path_length(tree, data.row(i));
            mean_path /= static_cast<double>(trees.size());
            out(i) = std::pow(2.0, -mean_path / expected_path);
        }
        return out;
    }
};

struct KmeansState final : ModelState {
    Matrix centroids;  // k x d

    Vector raw_scores(const Matrix& data) const override {
        Vector out(data.rows());
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index c = 0; c < centroids.rows(); ++c)
                best = std::min(best, sq_dist(centroids.row(c), data.row(i)));
            out(i) = std::sqrt(best);
        }
        return out;
    }
};

}  // namespace detail

// A detector with frozen model state and the raw-score calibration observed
// on its fit data. Immutable after fit; scoring is read-only.
class FittedDetector {
public:
    FittedDetector() = default;
    FittedDetector(DetectorConfig cfg, std::shared_ptr<const detail::ModelState> state,
                   Eigen::Index dim, double min_raw, double max_raw)
        : config_(std::move(cfg)), state_(std::move(state)), dim_(dim), min_raw_(min_raw),
          max_raw_(max_raw) {}

    const DetectorConfig& config() const { return config_; }
    std::pair<double, double> calibration() const { return {min_raw_, max_raw_}; }
    Eigen::Index dim() const { return dim_; }

    Vector raw_scores(const Matrix& data) const {
        if (!state_) throw std::logic_error("FittedDetector: not fitted");
        if (data.cols() != dim_)
            throw std::invalid_argument("score: data dimension " + std::to_string(data.cols()) +
                                        " != training dimension " + std::to_string(dim_));
        return state_->raw_scores(data);
    }

    Vector normalized_scores(const Matrix& data) const;

private:
    DetectorConfig config_;
    std::shared_ptr<const detail::ModelState> state_;
    Eigen::Index dim_ = 0;
    double min_raw_ = 0.0;
    double max_raw_ = 1.0;
};

// Affine map of raw scores into [0,1] with clamping; a zero-range
// calibration maps everything to 0.
inline Vector normalize(const Vector& raw, std::pair<double, double> calibration) {
    const auto [lo, hi] = calibration;
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw std::invalid_argument("normalize: calibration must be finite");
    Vector out(raw.size());
    if (hi <= lo) {
        out.setZero();
        return out;
    }
    for (Eigen::Index i = 0; i < raw.size(); ++i)
        out(i) = std::clamp((raw(i) - lo) / (hi - lo), 0.0, 1.0);
    return out;
}

inline Vector FittedDetector::normalized_scores(const Matrix& data) const {
    return normalize(raw_scores(data), {min_raw_, max_raw_});
}

// Builds family-specific model state from the training series and records the
// (min, max) raw-score calibration over it. A zero raw-score range is stored
// as (min, min + 1) so constant series normalize to 0 everywhere.
inline FittedDetector fit(const DetectorConfig& cfg, const TimeSeries& train) {
    cfg.validate();
    train.validate();
    const Matrix& rows = train.values;
    const auto n = static_cast<std::size_t>(rows.rows());
    const auto d = static_cast<std::size_t>(rows.cols());
    std::shared_ptr<detail::ModelState> state;
    Rng rng(fnv1a64(cfg.id) ^ 0x66697464u);  // stochastic families only

    switch (cfg.family) {
        case Family::kKnn: {
            const auto k = static_cast<std::size_t>(cfg.param("k", 5));
            if (n <= k) throw std::invalid_argument("fit knn: need rows > k");
            auto s = std::make_shared<detail::KnnState>();
            s->train = rows;
            s->k = k;
            state = std::move(s);
            break;
        }
        case Family::kLof: {
            const auto k = static_cast<std::size_t>(cfg.param("k", 5));
            if (n <= k) throw std::invalid_argument("fit lof: need rows > k");
            auto s = std::make_shared<detail::LofState>();
            s->train = rows;
            s->k = k;
            s->fit();
            state = std::move(s);
            break;
        }
        case Family::kMd: {
            if (n < 2) throw std::invalid_argument("fit md: need at least 2 rows");
            auto s = std::make_shared<detail::MdState>();
            s->mean = rows.colwise().mean();
            const Matrix centered = rows.rowwise() - s->mean;
            Matrix cov = centered.transpose() * centered / static_cast<double>(n);
            const double load =
                std::max(1e-6 * cov.trace() / static_cast<double>(d), 1e-12);
            cov += load * Matrix::Identity(cov.rows(), cov.cols());
            s->chol.compute(cov);
            state = std::move(s);
            break;
        }
        case Family::kRm: {
            auto s = std::make_shared<detail::RmState>();
            s->window = static_cast<std::size_t>(cfg.param("window", 10));
            state = std::move(s);
            break;
        }
        case Family::kHbos: {
            auto s = std::make_shared<detail::HbosState>();
            s->bins = cfg.param("bins", 10);
            s->fit(rows);
            state = std::move(s);
            break;
        }
        case Family::kPca: {
            const int c = std::min<int>(cfg.param("components", 1), static_cast<int>(d));
            if (n < 2) throw std::invalid_argument("fit pca: need at least 2 rows");
            auto s = std::make_shared<detail::PcaState>();
            s->mean = rows.colwise().mean();
            const Matrix centered = rows.rowwise() - s->mean;
            const Matrix cov = centered.transpose() * centered / static_cast<double>(n);
            Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
            // eigenvalues ascend; take the trailing c columns
            s->axes = eig.eigenvectors().rightCols(c);
            state = std::move(s);
            break;
        }
        case Family::kIforest: {
            const int trees = cfg.param("trees", 100);
            const auto subsample =
                std::min<std::size_t>(static_cast<std::size_t>(cfg.param("subsample", 256)), n);
            if (n < 2) throw std::invalid_argument("fit iforest: need at least 2 rows");
            auto s = std::make_shared<detail::IforestState>();
            s->expected_path = detail::IforestState::avg_path(static_cast<double>(subsample));
            if (s->expected_path <= 0.0) s->expected_path = 1.0;
            const int max_depth =
                static_cast<int>(std::ceil(std::log2(std::max<double>(2.0, static_cast<double>(subsample)))));
            std::vector<Eigen::Index> all(n);
            std::iota(all.begin(), all.end(), 0);
            for (int t = 0; t < trees; ++t) {
                std::vector<Eigen::Index> idx = all;
                std::shuffle(idx.begin(), idx.end(), rng);
                idx.resize(subsample);
                detail::IforestState::Tree tree;
                detail::IforestState::build(tree, rows, idx, 0, idx.size(), 0, max_depth, rng);
                s->trees.push_back(std::move(tree));
            }
            state = std::move(s);
            break;
        }
        case Family::kKmeans: {
            const auto k = std::min<std::size_t>(static_cast<std::size_t>(cfg.param("clusters", 4)), n);
            auto s = std::make_shared<detail::KmeansState>();
            std::vector<Eigen::Index> idx(n);
            std::iota(idx.begin(), idx.end(), 0);
            std::shuffle(idx.begin(), idx.end(), rng);
            s->centroids.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
            for (std::size_t c = 0; c < k; ++c) s->centroids.row(static_cast<Eigen::Index>(c)) = rows.row(idx[c]);
            std::vector<Eigen::Index> assign(n, 0);
            for (int iter = 0; iter < 100; ++iter) {
                bool moved = false;
                for (std::size_t i = 0; i < n; ++i) {
                    double best = std::numeric_limits<double>::infinity();
                    Eigen::Index arg = 0;
                    for (Eigen::Index c = 0; c < s->centroids.rows(); ++c) {
                        const double dist = detail::sq_dist(s->centroids.row(c), rows.row(static_cast<Eigen::Index>(i)));
                        if (dist < best) { best = dist; arg = c; }
                    }
                    if (assign[i] != arg) { assign[i] = arg; moved = true; }
                }
                if (!moved && iter > 0) break;
                Matrix sums = Matrix::Zero(s->centroids.rows(), s->centroids.cols());
                std::vector<std::size_t> counts(k, 0);
                for (std::size_t i = 0; i < n; ++i) {
                    sums.row(assign[i]) += rows.row(static_cast<Eigen::Index>(i));
                    ++counts[static_cast<std::size_t>(assign[i])];
                }
                for (std::size_t c = 0; c < k; ++c) {
                    if (counts[c] > 0)
                        s->centroids.row(static_cast<Eigen::Index>(c)) =
                            sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
                    else
                        s->centroids.row(static_cast<Eigen::Index>(c)) =
                            rows.row(idx[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
                }
            }
            state = std::move(s);
            break;
        }
    }

    const Vector raw = state->raw_scores(rows);
    double lo = raw.minCoeff();
    double hi = raw.maxCoeff();
    if (hi <= lo) hi = lo + 1.0;  // zero-range rule
    return FittedDetector(cfg, std::move(state), rows.cols(), lo, hi);
}

enum class WindowReducer { kMax, kMean };

// N windows x M detectors of normalized scores in [0,1].
struct ScoreMatrix {
    Matrix scores;
    std::vector<std::string> detector_ids;

    void validate() const {
        if (static_cast<std::size_t>(scores.cols()) != detector_ids.size())
            throw std::invalid_argument("ScoreMatrix: column/id mismatch");
        if (scores.size() > 0 && (scores.minCoeff() < 0.0 || scores.maxCoeff() > 1.0))
            throw std::invalid_argument("ScoreMatrix: entry outside [0,1]");
    }
};

// Entry (i, m) reduces detector m's normalized per-timestep scores over
// window i. Columns follow pool order.
inline ScoreMatrix score_matrix(const std::vector<FittedDetector>& pool, const TimeSeries& series,
                                const std::vector<Window>& windows,
                                WindowReducer reducer = WindowReducer::kMax) {
    ScoreMatrix sm;
    sm.scores.resize(static_cast<Eigen::Index>(windows.size()),
                     static_cast<Eigen::Index>(pool.size()));
    sm.detector_ids.reserve(pool.size());
    for (std::size_t m = 0; m < pool.size(); ++m) {
        sm.detector_ids.push_back(pool[m].config().id);
        const Vector scores = pool[m].normalized_scores(series.values);
        for (std::size_t i = 0; i < windows.size(); ++i) {
            const auto seg = scores.segment(static_cast<Eigen::Index>(windows[i].start),
                                            static_cast<Eigen::Index>(windows[i].width));
            sm.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) =
                reducer == WindowReducer::kMax ? seg.maxCoeff() : seg.mean();
        }
    }
    return sm;
}

}  // namespace ramses
