#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "ramses/detectors.hpp"
#include "ramses/metrics.hpp"
#include "ramses/perturb.hpp"
#include "ramses/rng.hpp"
#include "ramses/types.hpp"

namespace ramses {

inline constexpr int kContextDim = 8;

enum class EpsilonDecay { kMultiplicative, kExponential };

struct LinTsConfig {
    double epsilon0 = 0.2;
    EpsilonDecay decay_mode = EpsilonDecay::kMultiplicative;
    double decay = 0.99;                       // multiplicative factor per window
    double kappa = -std::log(0.99);            // exponential rate
    double alpha = 0.7;                        // F1 weight in the reward
    int windows = 50;                          // evaluation budget N
    double lambda = 1.0;                       // ridge prior precision
    int buffer = 5;                            // rolling windows for the AUC term
    double smoothing = 0.0;                    // 0 = off, else beta of r~ = b*r + (1-b)*r~
    std::uint64_t seed = 0;

    void validate() const {
        if (epsilon0 < 0.0 || epsilon0 > 1.0)
            throw std::invalid_argument("lints: epsilon0 outside [0,1]");
        if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("lints: alpha outside [0,1]");
        if (windows < 1) throw std::invalid_argument("lints: windows must be >= 1");
        if (lambda <= 0.0) throw std::invalid_argument("lints: lambda must be > 0");
        if (buffer < 1) throw std::invalid_argument("lints: buffer must be >= 1");
        if (smoothing < 0.0 || smoothing > 1.0)
            throw std::invalid_argument("lints: smoothing outside [0,1]");
    }
};

// epsilon_t for step t >= 0 under the configured decay mode.
inline double anneal(double epsilon0, const LinTsConfig& cfg, int t) {
    if (t < 0) throw std::invalid_argument("anneal: t must be >= 0");
    if (cfg.decay_mode == EpsilonDecay::kMultiplicative)
        return epsilon0 * std::pow(cfg.decay, static_cast<double>(t));
    return epsilon0 * std::exp(-cfg.kappa * static_cast<double>(t));
}

// Per-arm Bayesian linear regression state. Sequential updates reproduce the
// closed-form ridge solution because B*mu accumulates sum(x*r) exactly.
struct Posterior {
    Vector mean;
    Matrix precision;
    std::size_t observations = 0;

    static Posterior prior(double lambda, int dim = kContextDim) {
        Posterior p;
        p.mean = Vector::Zero(dim);
        p.precision = lambda * Matrix::Identity(dim, dim);
        return p;
    }
};

// B' = B + x x^T, mu' = B'^{-1} (B mu + x r).
inline Posterior update_posterior(const Posterior& post, const Vector& x, double reward) {
    if (reward < 0.0 || reward > 1.0)
        throw std::invalid_argument("update_posterior: reward outside [0,1]");
    Posterior next;
    const Vector rhs = post.precision * post.mean + x * reward;
    next.precision = post.precision + x * x.transpose();
    next.mean = next.precision.llt().solve(rhs);
    next.observations = post.observations + 1;
    return next;
}

// Window context: seven summary features of the channel-averaged window plus
// a constant bias, standardized by running statistics over previously seen
// windows (the bias stays 1). The first window passes through raw.
class ContextExtractor {
public:
    Vector raw_features(const Matrix& window) const {
        if (window.rows() < 2)
            throw std::invalid_argument("extract_context: window width must be >= 2");
        const Vector series = window.rowwise().mean();
        const auto n = static_cast<double>(series.size());
        const double mean = series.mean();
        const double var = (series.array() - mean).square().sum() / n;
        const double sd = std::sqrt(var);
        const double lo = series.minCoeff();
        const double hi = series.maxCoeff();

        double abs_diff = 0.0;
        for (Eigen::Index i = 1; i < series.size(); ++i)
            abs_diff += std::abs(series(i) - series(i - 1));
        abs_diff /= n - 1.0;

        double autocorr = 0.0;
        if (sd > 0.0) {
            double num = 0.0;
            for (Eigen::Index i = 1; i < series.size(); ++i)
                num += (series(i) - mean) * (series(i - 1) - mean);
            autocorr = num / ((n - 1.0) * var);
        }

        Vector x(kContextDim);
        x << mean, sd, lo, hi, abs_diff, autocorr, sd > 0.0 ? (hi - lo) / sd : 0.0, 1.0;
        return x;
    }

    // emits the standardized context, then folds the raw one into the
    // running statistics; z-scores are clamped so a feature whose running
    // deviation has collapsed (identical windows) cannot blow up the scale
    Vector extract(const Matrix& window) {
        const Vector raw = raw_features(window);
        Vector out = raw;
        if (count_ > 0) {
            for (int j = 0; j + 1 < kContextDim; ++j) {  // bias excluded
                const double sd = std::sqrt(std::max(m2_(j) / static_cast<double>(count_), 0.0));
                out(j) = std::clamp((raw(j) - mean_(j)) / std::max(sd, 1e-9), -10.0, 10.0);
            }
        }
        // Welford update
        ++count_;
        if (count_ == 1) {
            mean_ = raw;
            m2_ = Vector::Zero(kContextDim);
        } else {
            const Vector delta = raw - mean_;
            mean_ += delta / static_cast<double>(count_);
            m2_ += delta.cwiseProduct(raw - mean_);
        }
        return out;
    }

    std::size_t seen() const { return count_; }

private:
    std::size_t count_ = 0;
    Vector mean_;
    Vector m2_;
};

// epsilon-greedy Thompson draw: uniform with probability epsilon, otherwise
// argmax of theta~ . x with theta~ ~ N(mu, B^{-1}); ties go to the lowest
// index.
inline std::size_t select_arm(const std::vector<Posterior>& posteriors, const Vector& x,
                              double epsilon, Rng& rng) {
    if (posteriors.empty()) throw std::invalid_argument("select_arm: no models");
    if (posteriors.size() == 1) return 0;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < epsilon)
        return std::uniform_int_distribution<std::size_t>(0, posteriors.size() - 1)(rng);

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < posteriors.size(); ++m) {
        const auto llt = posteriors[m].precision.llt();
        Vector z(x.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = gauss(rng);
        // theta~ = mu + L^{-T} z has covariance (L L^T)^{-1} = B^{-1}
        const Vector theta = posteriors[m].mean + llt.matrixU().solve(z);
        const double value = theta.dot(x);
        if (value > best_value) {
            best_value = value;
            best = m;
        }
    }
    return best;
}

// r = alpha * F1(selected model, current injected window) +
//     (1 - alpha) * AUC-PR(selected model, rolling buffer); a buffer without
// positives contributes 0 to the AUC term.
inline double compute_reward(const FittedDetector& model, const TimeSeries& current,
                             const std::vector<const TimeSeries*>& buffer, double alpha) {
    if (!current.labeled()) throw std::invalid_argument("compute_reward: window lacks labels");
    const Vector scores = model.normalized_scores(current.values);
    std::vector<double> sv(scores.data(), scores.data() + scores.size());
    const double f1 = best_f1_threshold(sv, current.labels).second;

    double auc = 0.0;
    if (alpha < 1.0) {
        std::vector<double> all_scores;
        std::vector<int> all_labels;
        for (const TimeSeries* w : buffer) {
            const Vector s = model.normalized_scores(w->values);
            all_scores.insert(all_scores.end(), s.data(), s.data() + s.size());
            all_labels.insert(all_labels.end(), w->labels.begin(), w->labels.end());
        }
        const bool has_positive =
            std::any_of(all_labels.begin(), all_labels.end(), [](int l) { return l == 1; });
        if (has_positive) auc = auc_pr(all_scores, all_labels);
    }
    return alpha * f1 + (1.0 - alpha) * auc;
}

struct LinTsStep {
    int t = 0;
    std::size_t arm = 0;
    double epsilon = 0.0;
    double reward = 0.0;
};

struct LinTsResult {
    Ranking ranking;
    std::vector<Posterior> posteriors;
    std::vector<LinTsStep> steps;
    Vector mean_context;
};

// Optional stand-in for the injected-window reward, keyed by arm and step.
using RewardOverride = std::function<double(std::size_t arm, int t)>;

// The bandit loop: per step, extract context from the clean window, pick an
// arm, evaluate only that arm on an injected copy of the window, update its
// posterior, anneal. The final ranking sorts arms by posterior mean projected
// onto the mean standardized context; arms never selected rank last in pool
// order.
inline LinTsResult run_lints(const LinTsConfig& cfg, const std::vector<FittedDetector>& pool,
                             const TimeSeries& series, const std::vector<Window>& windows,
                             const SbaConfig& sba_cfg, const RewardOverride& reward_override = {}) {
    cfg.validate();
    if (pool.empty()) throw std::invalid_argument("run_lints: empty pool");
    if (windows.size() < 2) throw std::invalid_argument("run_lints: need at least 2 windows");

    Rng rng = make_rng(cfg.seed, "lints");
    std::vector<Posterior> posteriors(pool.size(), Posterior::prior(cfg.lambda));
    ContextExtractor context;
    std::vector<double> smoothed(pool.size(), 0.0);
    std::vector<bool> smoothed_valid(pool.size(), false);

    std::vector<TimeSeries> buffer;  // most recent injected windows, capped
    Vector context_sum = Vector::Zero(kContextDim);
    LinTsResult result;

    for (int t = 1; t <= cfg.windows; ++t) {
        const Window& w = windows[static_cast<std::size_t>(t - 1) % windows.size()];
        TimeSeries clean;
        clean.name = series.name + "/w" + std::to_string(t);
        clean.values = w.rows(series.values);

        const Vector x = context.extract(clean.values);
        context_sum += x;
        const double epsilon = anneal(cfg.epsilon0, cfg, t - 1);
        const std::size_t arm = select_arm(posteriors, x, epsilon, rng);

        double reward;
        if (reward_override) {
            reward = reward_override(arm, t);
        } else {
            // synthetic labels come from a fresh injected copy of the window
            SbaConfig step_cfg = sba_cfg;
            step_cfg.context_window = std::min<std::size_t>(
                step_cfg.context_window, static_cast<std::size_t>(clean.length()));
            Rng inject_rng = make_rng(cfg.seed, "lints:inject:" + std::to_string(t));
            Augmented injected = sba_augment(clean, step_cfg, inject_rng);

            buffer.push_back(injected.series);
            while (buffer.size() > static_cast<std::size_t>(cfg.buffer))
                buffer.erase(buffer.begin());

            std::vector<const TimeSeries*> buffer_view;
            buffer_view.reserve(buffer.size());
            for (const auto& b : buffer) buffer_view.push_back(&b);

            reward = compute_reward(pool[arm], injected.series, buffer_view, cfg.alpha);
        }
        if (cfg.smoothing > 0.0) {
            reward = smoothed_valid[arm]
                         ? cfg.smoothing * reward + (1.0 - cfg.smoothing) * smoothed[arm]
                         : reward;
            smoothed[arm] = reward;
            smoothed_valid[arm] = true;
        }

        posteriors[arm] = update_posterior(posteriors[arm], x, reward);
        result.steps.push_back({t, arm, epsilon, reward});
    }

    result.mean_context = context_sum / static_cast<double>(cfg.windows);
    result.posteriors = posteriors;

    // rank: selected arms by projected posterior mean, then never-selected
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> projected(pool.size());
    for (std::size_t m = 0; m < pool.size(); ++m)
        projected[m] = posteriors[m].mean.dot(result.mean_context);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const bool sa = posteriors[a].observations > 0;
        const bool sb = posteriors[b].observations > 0;
        if (sa != sb) return sa;
        if (!sa) return a < b;
        if (projected[a] != projected[b]) return projected[a] > projected[b];
        if (posteriors[a].observations != posteriors[b].observations)
            return posteriors[a].observations > posteriors[b].observations;
        return a < b;
    });
    for (std::size_t m : order) {
        result.ranking.ids.push_back(pool[m].config().id);
        result.ranking.scores.push_back(posteriors[m].observations > 0 ? projected[m] : 0.0);
    }
    return result;
}

}  // namespace ramses
