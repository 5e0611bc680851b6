#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ramses/types.hpp"

namespace ramses {

// C(i, j) = number of input rankings placing id i ahead of id j.
struct PreferenceMatrix {
    Matrix counts;  // D x D
    std::vector<std::string> ids;
};

enum class Orientation {
    kWinnerMass,  // mass flows toward frequently preferred ids
    kLiteral      // row-normalized counts as written
};

inline Orientation orientation_from_string(const std::string& s) {
    if (s == "winner_mass") return Orientation::kWinnerMass;
    if (s == "literal") return Orientation::kLiteral;
    throw std::invalid_argument("unknown rank orientation: " + s);
}

struct TransitionMatrix {
    Matrix p;  // D x D, row-stochastic
    Orientation orientation = Orientation::kWinnerMass;
};

struct StationaryResult {
    Vector distribution;
    bool converged = true;
    std::size_t iterations = 0;
};

// Counts pairwise preferences over the union of ids seen across rankings.
// Ids missing from a ranking contribute no pairs for it.
inline PreferenceMatrix build_counts(const std::vector<Ranking>& rankings) {
    if (rankings.empty()) throw std::invalid_argument("build_counts: no rankings");

    PreferenceMatrix pm;
    std::map<std::string, std::size_t> index;
    for (const auto& r : rankings) {
        r.validate();
        for (const auto& id : r.ids)
            if (!index.count(id)) {
                index[id] = pm.ids.size();
                pm.ids.push_back(id);
            }
    }
    const auto d = static_cast<Eigen::Index>(pm.ids.size());
    pm.counts = Matrix::Zero(d, d);
    for (const auto& r : rankings)
        for (std::size_t a = 0; a < r.ids.size(); ++a)
            for (std::size_t b = a + 1; b < r.ids.size(); ++b)
                pm.counts(static_cast<Eigen::Index>(index[r.ids[a]]),
                          static_cast<Eigen::Index>(index[r.ids[b]])) += 1.0;
    return pm;
}

// Row-normalizes preference counts into a transition matrix: off-diagonal
// P_ij = C_ij / sum_l C_il with zero diagonal, and a uniform row wherever the
// count row is all zero. winner_mass applies the same rule to C^T so the
// stationary mass accumulates on ids that are usually ranked ahead.
inline TransitionMatrix build_transition(const PreferenceMatrix& pm,
                                         Orientation orientation = Orientation::kWinnerMass) {
    const Eigen::Index d = pm.counts.rows();
    Matrix c = orientation == Orientation::kWinnerMass ? pm.counts.transpose() : pm.counts;
    TransitionMatrix tm;
    tm.orientation = orientation;
    tm.p = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        double row_sum = 0.0;
        for (Eigen::Index j = 0; j < d; ++j)
            if (j != i) row_sum += c(i, j);
        if (row_sum > 0.0) {
            for (Eigen::Index j = 0; j < d; ++j)
                if (j != i) tm.p(i, j) = c(i, j) / row_sum;
        } else {
            tm.p.row(i).setConstant(1.0 / static_cast<double>(d));
        }
    }
    return tm;
}

// Power iteration v <- vP from a uniform start until the l1 step falls below
// tol. Returns the last iterate flagged non-converged if max_iter is hit.
inline StationaryResult stationary(const TransitionMatrix& tm, double tol = 1e-10,
                                   std::size_t max_iter = 10000) {
    const Eigen::Index d = tm.p.rows();
    if (d == 0) throw std::invalid_argument("stationary: empty matrix");
    for (Eigen::Index i = 0; i < d; ++i)
        if (std::abs(tm.p.row(i).sum() - 1.0) > 1e-9)
            throw std::invalid_argument("stationary: matrix is not row-stochastic");

    StationaryResult res;
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Constant(d, 1.0 / static_cast<double>(d));
    for (std::size_t it = 1; it <= max_iter; ++it) {
        Eigen::RowVectorXd next = v * tm.p;
        next /= next.sum();
        const double step = (next - v).cwiseAbs().sum();
        v = next;
        res.iterations = it;
        if (step < tol) {
            res.distribution = v.transpose();
            return res;
        }
    }
    res.converged = false;
    res.distribution = v.transpose();
    return res;
}

// Full consensus: counts -> transition -> stationary -> ids sorted by
// descending stationary mass. Ties break by mean input rank, then id.
inline Ranking aggregate(const std::vector<Ranking>& rankings,
                         Orientation orientation = Orientation::kWinnerMass) {
    const PreferenceMatrix pm = build_counts(rankings);
    const StationaryResult st = stationary(build_transition(pm, orientation));

    // mean position of each id across the rankings containing it
    std::vector<double> mean_rank(pm.ids.size(), 0.0);
    std::vector<double> appearances(pm.ids.size(), 0.0);
    for (const auto& r : rankings)
        for (std::size_t p = 0; p < r.ids.size(); ++p) {
            const auto it = std::find(pm.ids.begin(), pm.ids.end(), r.ids[p]);
            const auto i = static_cast<std::size_t>(it - pm.ids.begin());
            mean_rank[i] += static_cast<double>(p);
            appearances[i] += 1.0;
        }
    for (std::size_t i = 0; i < mean_rank.size(); ++i)
        if (appearances[i] > 0) mean_rank[i] /= appearances[i];

    std::vector<std::size_t> order(pm.ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = st.distribution(static_cast<Eigen::Index>(a));
        const double vb = st.distribution(static_cast<Eigen::Index>(b));
        if (va != vb) return va > vb;
        if (mean_rank[a] != mean_rank[b]) return mean_rank[a] < mean_rank[b];
        return pm.ids[a] < pm.ids[b];
    });

    Ranking out;
    for (std::size_t i : order) {
        out.ids.push_back(pm.ids[i]);
        out.scores.push_back(st.distribution(static_cast<Eigen::Index>(i)));
    }
    return out;
}

}  // namespace ramses
