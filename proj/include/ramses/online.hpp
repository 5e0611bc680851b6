#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ramses/detectors.hpp"
#include "ramses/ga.hpp"
#include "ramses/meta.hpp"
#include "ramses/types.hpp"

namespace ramses {

enum class BranchKind { kEnsemble, kSingle };

inline const char* to_string(BranchKind b) {
    return b == BranchKind::kEnsemble ? "ensemble" : "single";
}

// Everything the online loop needs from an (offline or refreshed) selection.
struct SelectionModels {
    std::vector<FittedDetector> pool;
    Subset ensemble;
    TrainedMeta meta;
    double ensemble_threshold = 0.5;
    double ensemble_fitness = 0.0;
    std::size_t single_index = 0;
    double single_threshold = 0.5;
    double single_fitness = 0.0;

    BranchKind designated() const {
        return ensemble_fitness >= single_fitness ? BranchKind::kEnsemble : BranchKind::kSingle;
    }
};

struct OnlineConfig {
    std::size_t period = 5;  // windows between re-optimizations
    bool reopt = true;

    void validate() const {
        if (period < 1) throw std::invalid_argument("online: period must be >= 1");
    }
};

// The 5%/5% sizing rule for the online stream.
inline WindowSpec online_window_spec(std::size_t online_length) {
    WindowSpec spec;
    spec.width = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::floor(0.05 * static_cast<double>(online_length))));
    spec.stride = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(0.05 * static_cast<double>(spec.width))));
    if (spec.width > online_length)
        throw std::invalid_argument("online split shorter than one window");
    return spec;
}

struct WindowDecision {
    std::size_t index = 0;
    Vector single_scores;
    Vector ensemble_scores;
    std::vector<int> single_decisions;
    std::vector<int> ensemble_decisions;
    std::vector<int> final_decisions;
    BranchKind branch = BranchKind::kEnsemble;
    bool reopt_triggered = false;
};

// Produces a refreshed SelectionModels from the sliding training buffer.
using Reoptimizer = std::function<SelectionModels(const TimeSeries& buffer, std::size_t round)>;

// Streaming deployment of the two selected branches over a sliding training
// buffer of constant length. One consumer advances the state.
class OnlineRunner {
public:
    OnlineRunner(SelectionModels models, TimeSeries offline_buffer, std::size_t online_length,
                 OnlineConfig config, Reoptimizer reoptimizer)
        : models_(std::move(models)), buffer_(std::move(offline_buffer)),
          spec_(online_window_spec(online_length)), config_(config),
          reoptimizer_(std::move(reoptimizer)) {
        config_.validate();
        buffer_.validate();
    }

    const WindowSpec& window_spec() const { return spec_; }
    const TimeSeries& buffer() const { return buffer_; }
    const SelectionModels& models() const { return models_; }
    std::size_t counter() const { return counter_; }
    std::size_t rounds() const { return rounds_; }

    // Per-window label corrections, consumed at the next re-optimization.
    void provide_feedback(std::size_t window_index, const std::vector<int>& labels) {
        if (labels.size() != spec_.width)
            throw std::invalid_argument("provide_feedback: label length != window width");
        feedback_[window_index] = labels;
    }

    // Advances one window. When the stream is labeled, truth rides along so
    // re-optimization sees it in the buffer; feedback corrections win.
    WindowDecision step(const Matrix& window, const std::vector<int>* truth = nullptr) {
        if (static_cast<std::size_t>(window.rows()) != spec_.width)
            throw std::invalid_argument("step: window width mismatch");
        if (truth && truth->size() != spec_.width)
            throw std::invalid_argument("step: truth length != window width");

        WindowDecision decision;
        decision.index = counter_;
        decision.branch = models_.designated();

        decision.single_scores =
            models_.pool[models_.single_index].normalized_scores(window);
        decision.single_decisions.resize(static_cast<std::size_t>(window.rows()));
        for (Eigen::Index i = 0; i < window.rows(); ++i)
            decision.single_decisions[static_cast<std::size_t>(i)] =
                decision.single_scores(i) >= models_.single_threshold ? 1 : 0;

        // per-timestep stacked scores through the trained meta-learner
        const auto members = models_.ensemble.members();
        Matrix stacked(window.rows(), static_cast<Eigen::Index>(members.size()));
        for (std::size_t m = 0; m < members.size(); ++m)
            stacked.col(static_cast<Eigen::Index>(m)) =
                models_.pool[members[m]].normalized_scores(window);
        decision.ensemble_scores = predict_meta(models_.meta, stacked);
        decision.ensemble_decisions.resize(static_cast<std::size_t>(window.rows()));
        for (Eigen::Index i = 0; i < window.rows(); ++i)
            decision.ensemble_decisions[static_cast<std::size_t>(i)] =
                decision.ensemble_scores(i) >= models_.ensemble_threshold ? 1 : 0;

        decision.final_decisions = decision.branch == BranchKind::kEnsemble
                                       ? decision.ensemble_decisions
                                       : decision.single_decisions;

        // novel samples: the full first window, then the trailing stride
        const std::size_t novel = counter_ == 0 ? spec_.width : spec_.stride;
        for (std::size_t i = window.rows() - novel; i < static_cast<std::size_t>(window.rows());
             ++i) {
            pending_.push_back({window.row(static_cast<Eigen::Index>(i)), counter_,
                                static_cast<std::size_t>(i), truth ? (*truth)[i] : 0});
        }

        ++counter_;
        if (config_.reopt && counter_ % config_.period == 0) {
            reoptimize();
            decision.reopt_triggered = true;
        }
        return decision;
    }

    // Appends the pending novel samples and drops the same count from the
    // buffer head; the buffer length is invariant.
    void assemble_reopt_buffer() {
        if (pending_.empty()) return;
        const auto t = buffer_.length();
        const auto incoming = static_cast<Eigen::Index>(pending_.size());
        if (incoming >= t)
            throw std::invalid_argument("assemble_reopt_buffer: more novel samples than buffer");

        Matrix next(t, buffer_.dim());
        next.topRows(t - incoming) = buffer_.values.bottomRows(t - incoming);
        std::vector<int> labels;
        if (buffer_.labeled())
            labels.assign(buffer_.labels.end() - (t - incoming), buffer_.labels.end());
        for (Eigen::Index i = 0; i < incoming; ++i) {
            const Pending& p = pending_[static_cast<std::size_t>(i)];
            next.row(t - incoming + i) = p.row;
            if (buffer_.labeled()) labels.push_back(feedback_label(p));
        }
        buffer_.values = std::move(next);
        buffer_.labels = std::move(labels);
        pending_.clear();
    }

    void reoptimize() {
        assemble_reopt_buffer();
        if (reoptimizer_) models_ = reoptimizer_(buffer_, rounds_);
        ++rounds_;
        feedback_.clear();
    }

private:
    struct Pending {
        Eigen::RowVectorXd row;
        std::size_t window_index = 0;
        std::size_t offset = 0;  // position inside its window
        int label = 0;
    };

    int feedback_label(const Pending& p) const {
        const auto it = feedback_.find(p.window_index);
        return it == feedback_.end() ? p.label : it->second[p.offset];
    }

    SelectionModels models_;
    TimeSeries buffer_;
    WindowSpec spec_;
    OnlineConfig config_;
    Reoptimizer reoptimizer_;
    std::deque<Pending> pending_;
    std::map<std::size_t, std::vector<int>> feedback_;
    std::size_t counter_ = 0;
    std::size_t rounds_ = 0;
};

}  // namespace ramses
