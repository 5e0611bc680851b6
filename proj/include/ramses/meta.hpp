#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ramses/rng.hpp"
#include "ramses/types.hpp"

namespace ramses {

enum class MetaKind { kLogistic, kForest, kSvm };

inline const char* to_string(MetaKind k) {
    switch (k) {
        case MetaKind::kLogistic: return "lr";
        case MetaKind::kForest: return "rf";
        case MetaKind::kSvm: return "svm";
    }
    return "?";
}

inline MetaKind meta_kind_from_string(const std::string& s) {
    if (s == "lr") return MetaKind::kLogistic;
    if (s == "rf") return MetaKind::kForest;
    if (s == "svm") return MetaKind::kSvm;
    throw std::invalid_argument("unknown meta kind: " + s);
}

struct MetaParams {
    // logistic regression
    double lr_rate = 0.1;
    int lr_epochs = 200;
    double lr_l2 = 1e-4;
    // random forest
    int rf_trees = 50;
    int rf_max_depth = 8;
    int rf_min_leaf = 2;
    int rf_features = 0;  // 0 = round(sqrt(K))
    // linear SVM
    double svm_rate = 0.01;
    int svm_epochs = 200;
    double svm_l2 = 1e-3;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

namespace detail {

// Regularized mean log-loss for the logistic meta-learner; the bias is not
// penalized.
inline double logistic_loss(const Matrix& x, const std::vector<int>& y, const Vector& w,
                            double b, double l2) {
    const double n = static_cast<double>(x.rows());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double p = std::clamp(sigmoid(x.row(i).dot(w) + b), 1e-12, 1.0 - 1e-12);
        loss += y[static_cast<std::size_t>(i)] ? -std::log(p) : -std::log(1.0 - p);
    }
    return loss / n + 0.5 * l2 * w.squaredNorm();
}

inline void logistic_gradient(const Matrix& x, const std::vector<int>& y, const Vector& w,
                              double b, double l2, Vector& gw, double& gb) {
    const double n = static_cast<double>(x.rows());
    gw = Vector::Zero(w.size());
    gb = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double err = sigmoid(x.row(i).dot(w) + b) - y[static_cast<std::size_t>(i)];
        gw += err * x.row(i).transpose();
        gb += err;
    }
    gw = gw / n + l2 * w;
    gb /= n;
}

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    int vote = 0;  // leaf majority class
};

struct Tree {
    std::vector<TreeNode> nodes;

    int predict(const Eigen::RowVectorXd& x) const {
        int cur = 0;
        while (nodes[static_cast<std::size_t>(cur)].feature >= 0) {
            const TreeNode& n = nodes[static_cast<std::size_t>(cur)];
            cur = x(n.feature) <= n.threshold ? n.left : n.right;
        }
        return nodes[static_cast<std::size_t>(cur)].vote;
    }
};

// Gini-split CART on a row subset. The split search is a deterministic
// function of the node's data multiset: features are scanned in index order
// and only a strictly better impurity replaces the incumbent.
inline int grow_tree(Tree& tree, const Matrix& x, const std::vector<int>& y,
                     std::vector<Eigen::Index>& idx, std::size_t begin, std::size_t end,
                     int depth, int max_depth, int min_leaf, int feature_count, Rng& rng) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const std::size_t n = end - begin;

    std::size_t pos = 0;
    for (std::size_t i = begin; i < end; ++i)
        pos += static_cast<std::size_t>(y[static_cast<std::size_t>(idx[i])]);

    auto make_leaf = [&]() {
        tree.nodes[static_cast<std::size_t>(node_id)].vote = 2 * pos >= n ? 1 : 0;
        return node_id;
    };
    if (depth >= max_depth || pos == 0 || pos == n || n < 2 * static_cast<std::size_t>(min_leaf))
        return make_leaf();

    // sample candidate features without replacement
    const auto k = static_cast<int>(x.cols());
    std::vector<int> features(static_cast<std::size_t>(k));
    std::iota(features.begin(), features.end(), 0);
    std::shuffle(features.begin(), features.end(), rng);
    features.resize(static_cast<std::size_t>(std::min(feature_count, k)));
    std::sort(features.begin(), features.end());

    double best_impurity = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::pair<double, int>> column(n);
    for (int f : features) {
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::Index row = idx[begin + i];
            column[i] = {x(row, f), y[static_cast<std::size_t>(row)]};
        }
        std::sort(column.begin(), column.end());
        std::size_t left_n = 0, left_pos = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            ++left_n;
            left_pos += static_cast<std::size_t>(column[i].second);
            if (column[i].first == column[i + 1].first) continue;
            const std::size_t right_n = n - left_n;
            if (left_n < static_cast<std::size_t>(min_leaf) ||
                right_n < static_cast<std::size_t>(min_leaf))
                continue;
            const std::size_t right_pos = pos - left_pos;
            auto gini = [](std::size_t cnt, std::size_t p) {
                const double q = static_cast<double>(p) / static_cast<double>(cnt);
                return 2.0 * q * (1.0 - q);
            };
            const double impurity =
                (static_cast<double>(left_n) * gini(left_n, left_pos) +
                 static_cast<double>(right_n) * gini(right_n, right_pos)) /
                static_cast<double>(n);
            if (impurity < best_impurity) {
                best_impurity = impurity;
                best_feature = f;
                best_threshold = 0.5 * (column[i].first + column[i + 1].first);
            }
        }
    }
    if (best_feature < 0) return make_leaf();

    auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                 idx.begin() + static_cast<std::ptrdiff_t>(end),
                                 [&](Eigen::Index i) { return x(i, best_feature) <= best_threshold; });
    const auto mid = static_cast<std::size_t>(mid_it - idx.begin());
    if (mid == begin || mid == end) return make_leaf();

    const int left =
        grow_tree(tree, x, y, idx, begin, mid, depth + 1, max_depth, min_leaf, feature_count, rng);
    const int right =
        grow_tree(tree, x, y, idx, mid, end, depth + 1, max_depth, min_leaf, feature_count, rng);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left;
    node.right = right;
    return node_id;
}

}  // namespace detail

// A trained level-1 learner over K stacked detector-score features.
class TrainedMeta {
public:
    MetaKind kind() const { return kind_; }
    Eigen::Index feature_count() const { return feature_count_; }

    Vector predict(const Matrix& x) const {
        if (x.cols() != feature_count_)
            throw std::invalid_argument("predict_meta: feature count mismatch");
        Vector out(x.rows());
        if (constant_) {
            out.setConstant(constant_value_);
            return out;
        }
        switch (kind_) {
            case MetaKind::kLogistic:
            case MetaKind::kSvm:
                for (Eigen::Index i = 0; i < x.rows(); ++i)
                    out(i) = sigmoid(x.row(i).dot(weights_) + bias_);
                break;
            case MetaKind::kForest:
                for (Eigen::Index i = 0; i < x.rows(); ++i) {
                    double votes = 0.0;
                    for (const auto& t : forest_) votes += t.predict(x.row(i));
                    out(i) = votes / static_cast<double>(forest_.size());
                }
                break;
        }
        return out;
    }

    friend TrainedMeta train_meta(MetaKind, const Matrix&, const std::vector<int>&, std::uint64_t,
                                  const MetaParams&);

private:
    MetaKind kind_ = MetaKind::kForest;
    Eigen::Index feature_count_ = 0;
    bool constant_ = false;
    double constant_value_ = 0.0;
    Vector weights_;
    double bias_ = 0.0;
    std::vector<detail::Tree> forest_;
};

// Trains the requested meta-learner on an N x K feature matrix of stacked
// detector scores. Single-class labels yield a constant predictor at the
// observed class prior.
inline TrainedMeta train_meta(MetaKind kind, const Matrix& features, const std::vector<int>& labels,
                              std::uint64_t seed, const MetaParams& params = {}) {
    if (features.rows() == 0 || features.cols() == 0)
        throw std::invalid_argument("train_meta: empty feature matrix");
    if (static_cast<std::size_t>(features.rows()) != labels.size())
        throw std::invalid_argument("train_meta: label count mismatch");

    TrainedMeta meta;
    meta.kind_ = kind;
    meta.feature_count_ = features.cols();

    const std::size_t pos =
        static_cast<std::size_t>(std::accumulate(labels.begin(), labels.end(), 0));
    if (pos == 0 || pos == labels.size()) {
        meta.constant_ = true;
        meta.constant_value_ = pos == 0 ? 0.0 : 1.0;
        return meta;
    }

    switch (kind) {
        case MetaKind::kLogistic: {
            Vector w = Vector::Zero(features.cols());
            double b = 0.0;
            Vector gw;
            double gb;
            for (int e = 0; e < params.lr_epochs; ++e) {
                detail::logistic_gradient(features, labels, w, b, params.lr_l2, gw, gb);
                w -= params.lr_rate * gw;
                b -= params.lr_rate * gb;
            }
            meta.weights_ = std::move(w);
            meta.bias_ = b;
            break;
        }
        case MetaKind::kSvm: {
            // subgradient descent on mean hinge loss with L2 on the weights
            Vector w = Vector::Zero(features.cols());
            double b = 0.0;
            const double n = static_cast<double>(features.rows());
            for (int e = 0; e < params.svm_epochs; ++e) {
                Vector gw = params.svm_l2 * w;
                double gb = 0.0;
                for (Eigen::Index i = 0; i < features.rows(); ++i) {
                    const double target = labels[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
                    if (target * (features.row(i).dot(w) + b) < 1.0) {
                        gw -= (target / n) * features.row(i).transpose();
                        gb -= target / n;
                    }
                }
                w -= params.svm_rate * gw;
                b -= params.svm_rate * gb;
            }
            meta.weights_ = std::move(w);
            meta.bias_ = b;
            break;
        }
        case MetaKind::kForest: {
            const auto n = static_cast<std::size_t>(features.rows());
            const int feature_count =
                params.rf_features > 0
                    ? params.rf_features
                    : std::max(1, static_cast<int>(std::lround(
                                      std::sqrt(static_cast<double>(features.cols())))));
            for (int t = 0; t < params.rf_trees; ++t) {
                Rng rng = make_rng(seed, "rf_tree:" + std::to_string(t));
                std::uniform_int_distribution<std::size_t> pick(0, n - 1);
                std::vector<Eigen::Index> idx(n);
                for (auto& i : idx) i = static_cast<Eigen::Index>(pick(rng));
                detail::Tree tree;
                detail::grow_tree(tree, features, labels, idx, 0, idx.size(), 0,
                                  params.rf_max_depth, params.rf_min_leaf, feature_count, rng);
                meta.forest_.push_back(std::move(tree));
            }
            break;
        }
    }
    return meta;
}

inline Vector predict_meta(const TrainedMeta& meta, const Matrix& features) {
    return meta.predict(features);
}

}  // namespace ramses
