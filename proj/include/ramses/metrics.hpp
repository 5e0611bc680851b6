#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ramses/types.hpp"

namespace ramses {

// Maximal runs of 1s in a binary vector, as inclusive (start, end) pairs.
struct EventSet {
    std::vector<std::pair<std::size_t, std::size_t>> intervals;

    static EventSet from_binary(const std::vector<int>& v) {
        EventSet es;
        std::size_t i = 0;
        while (i < v.size()) {
            if (v[i] == 1) {
                std::size_t j = i;
                while (j + 1 < v.size() && v[j + 1] == 1) ++j;
                es.intervals.emplace_back(i, j);
                i = j + 1;
            } else {
                ++i;
            }
        }
        return es;
    }
};

struct F1Result {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

// Range-based event F1: recall counts a true event as hit when any predicted
// 1 overlaps it (one hit per event, duplicates not double-counted); precision
// is pointwise, the fraction of predicted-1 timesteps that are truly 1, so a
// predict-everything vector cannot score perfectly on sparse truth. Both
// sides empty scores 1, exactly one side empty scores 0.
inline F1Result event_f1(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size())
        throw std::invalid_argument("event_f1: length mismatch");
    const EventSet pe = EventSet::from_binary(pred);
    const EventSet te = EventSet::from_binary(truth);

    if (pe.intervals.empty() && te.intervals.empty()) return {1.0, 1.0, 1.0};
    if (pe.intervals.empty() || te.intervals.empty()) return {0.0, 0.0, 0.0};

    auto overlaps = [](const std::pair<std::size_t, std::size_t>& a,
                       const std::pair<std::size_t, std::size_t>& b) {
        return a.first <= b.second && b.first <= a.second;
    };

    std::size_t hits = 0;
    for (const auto& t : te.intervals)
        for (const auto& p : pe.intervals)
            if (overlaps(t, p)) { ++hits; break; }

    std::size_t predicted = 0, true_positives = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == 1) {
            ++predicted;
            true_positives += static_cast<std::size_t>(truth[i]);
        }
    }

    const double recall = static_cast<double>(hits) / static_cast<double>(te.intervals.size());
    const double precision = static_cast<double>(true_positives) / static_cast<double>(predicted);
    const double f1 = (precision + recall > 0.0)
                          ? 2.0 * precision * recall / (precision + recall)
                          : 0.0;
    return {f1, precision, recall};
}

// Pointwise AUC-PR over all distinct thresholds, descending, with the step
// rule sum (R_k - R_{k-1}) * P_k, R_0 = 0.
inline double auc_pr(const std::vector<double>& scores, const std::vector<int>& truth) {
    if (scores.size() != truth.size())
        throw std::invalid_argument("auc_pr: length mismatch");
    std::size_t positives = 0;
    for (int t : truth) positives += static_cast<std::size_t>(t);
    if (positives == 0) throw std::invalid_argument("auc_pr: no positives in truth");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double area = 0.0;
    double prev_recall = 0.0;
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double threshold = scores[order[i]];
        // consume every sample tied at this threshold before emitting a point
        while (i < order.size() && scores[order[i]] == threshold) {
            if (truth[order[i]] == 1) ++tp; else ++fp;
            ++i;
        }
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double recall = static_cast<double>(tp) / static_cast<double>(positives);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return area;
}

// Sweep every distinct score value as a threshold (score >= tau predicts 1)
// and return the tau maximizing event_f1; ties go to the smaller tau.
inline std::pair<double, double> best_f1_threshold(const std::vector<double>& scores,
                                                   const std::vector<int>& truth) {
    if (scores.empty()) throw std::invalid_argument("best_f1_threshold: empty input");
    if (scores.size() != truth.size())
        throw std::invalid_argument("best_f1_threshold: length mismatch");

    std::set<double> candidates(scores.begin(), scores.end());
    double best_tau = *candidates.begin();
    double best_f1 = -1.0;
    std::vector<int> pred(scores.size());
    for (double tau : candidates) {
        for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] >= tau ? 1 : 0;
        const double f1 = event_f1(pred, truth).f1;
        if (f1 > best_f1) {
            best_f1 = f1;
            best_tau = tau;
        }
    }
    return {best_tau, best_f1};
}

}  // namespace ramses
