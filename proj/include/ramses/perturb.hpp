#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ramses/detectors.hpp"
#include "ramses/metrics.hpp"
#include "ramses/mlp.hpp"
#include "ramses/rng.hpp"
#include "ramses/types.hpp"

namespace ramses {

struct GanConfig {
    int epochs = 100;
    int batch_size = 64;
    int noise_dim = 32;
    double learning_rate = 1e-4;
    double dropout = 0.4;
    double real_target = 0.9;   // label smoothing
    double fake_target = 0.1;
    double input_noise = 0.05;
    double tau = 0.5;           // discriminator decision threshold
    int candidate_factor = 10;  // K = factor * B
    double rho = 0.1;           // injection budget
    std::uint64_t seed = 0;

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("gan: epochs must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("gan: batch size must be >= 1");
        if (noise_dim < 1) throw std::invalid_argument("gan: noise_dim must be >= 1");
        if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("gan: rho outside (0,1)");
        if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("gan: tau outside (0,1)");
    }
};

struct SbaConfig {
    double fraction = 0.1;
    double scale_min = 0.95;
    double scale_max = 1.05;
    std::size_t context_window = 50;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(fraction > 0.0 && fraction < 1.0))
            throw std::invalid_argument("sba: fraction outside (0,1)");
        if (scale_min > scale_max) throw std::invalid_argument("sba: scale_min > scale_max");
        if (context_window < 1) throw std::invalid_argument("sba: context window must be >= 1");
    }
};

struct McConfig {
    int trials = 10;
    double noise_level = 0.1;
    double magnitude_min = 0.5;
    double magnitude_max = 3.0;
    int anomalies = 10;
    std::uint64_t seed = 0;

    void validate() const {
        if (trials < 1) throw std::invalid_argument("mc: trials must be >= 1");
        if (magnitude_min > magnitude_max) throw std::invalid_argument("mc: magnitude range empty");
        if (anomalies < 1) throw std::invalid_argument("mc: anomalies must be >= 1");
    }
};

// Per-feature linear map onto [-1,1] fitted on clean rows.
class MinMaxScaler {
public:
    void fit(const Matrix& rows) {
        lo_ = rows.colwise().minCoeff();
        hi_ = rows.colwise().maxCoeff();
        for (Eigen::Index j = 0; j < lo_.size(); ++j)
            if (hi_(j) <= lo_(j)) hi_(j) = lo_(j) + 1.0;
    }

    Matrix scale(const Matrix& rows) const {
        Matrix out(rows.rows(), rows.cols());
        for (Eigen::Index j = 0; j < rows.cols(); ++j)
            out.col(j) = 2.0 * (rows.col(j).array() - lo_(j)) / (hi_(j) - lo_(j)) - 1.0;
        return out;
    }

    Matrix unscale(const Matrix& rows) const {
        Matrix out(rows.rows(), rows.cols());
        for (Eigen::Index j = 0; j < rows.cols(); ++j)
            out.col(j) = (rows.col(j).array() + 1.0) / 2.0 * (hi_(j) - lo_(j)) + lo_(j);
        return out;
    }

private:
    Eigen::RowVectorXd lo_, hi_;
};

struct GanEpochRecord {
    int epoch = 0;
    double d_loss = 0.0;
    double g_loss = 0.0;
    double heldout_d_bce = 0.0;
};

struct TrainedGan {
    Mlp generator;
    Mlp discriminator;
    std::vector<GanEpochRecord> history;
};

inline Mlp make_generator(int noise_dim, Eigen::Index d, double dropout, Rng& rng) {
    Mlp g;
    g.add_layer(noise_dim, 256, Activation::kRelu, dropout, rng);
    g.add_layer(256, d, Activation::kTanh, 0.0, rng);
    return g;
}

inline Mlp make_discriminator(Eigen::Index d, double dropout, Rng& rng) {
    Mlp m;
    m.add_layer(d, 256, Activation::kRelu, dropout, rng);
    m.add_layer(256, 1, Activation::kSigmoid, 0.0, rng);
    return m;
}

// Adversarial training on rows already scaled to [-1,1]. Discriminator and
// generator alternate per mini-batch with smoothed targets and Gaussian input
// noise on the discriminator side; the last batch of rows is held out to
// record a per-epoch discriminator BCE on unseen real/fake samples.
inline TrainedGan train_gan(const Matrix& scaled_rows, const GanConfig& cfg) {
    cfg.validate();
    const Eigen::Index n = scaled_rows.rows();
    const Eigen::Index d = scaled_rows.cols();
    if (n < 2 * cfg.batch_size)
        throw std::invalid_argument("train_gan: need at least 2 * batch_size rows");

    Rng rng = make_rng(cfg.seed, "gan");
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto noise_batch = [&](Eigen::Index rows, Eigen::Index cols, double sigma) {
        return Matrix::NullaryExpr(rows, cols,
                                   [&](Eigen::Index, Eigen::Index) { return sigma * gauss(rng); });
    };

    TrainedGan gan;
    gan.generator = make_generator(cfg.noise_dim, d, cfg.dropout, rng);
    gan.discriminator = make_discriminator(d, cfg.dropout, rng);

    // held-out real rows and a frozen noise batch for the per-epoch probe
    const Eigen::Index held = cfg.batch_size;
    const Matrix held_real = scaled_rows.bottomRows(held);
    const Matrix held_noise = noise_batch(held, cfg.noise_dim, 1.0);
    const Eigen::Index train_n = n - held;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(train_n));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double d_loss_sum = 0.0, g_loss_sum = 0.0;
        int steps = 0;
        for (Eigen::Index at = 0; at + cfg.batch_size <= train_n; at += cfg.batch_size) {
            Matrix real(cfg.batch_size, d);
            for (Eigen::Index b = 0; b < cfg.batch_size; ++b)
                real.row(b) = scaled_rows.row(order[static_cast<std::size_t>(at + b)]);

            // discriminator step on noisy real + noisy fake
            const Matrix z = noise_batch(cfg.batch_size, cfg.noise_dim, 1.0);
            const Matrix fake = gan.generator.forward(z, false, nullptr);
            Matrix d_in(2 * cfg.batch_size, d);
            d_in.topRows(cfg.batch_size) = real + noise_batch(cfg.batch_size, d, cfg.input_noise);
            d_in.bottomRows(cfg.batch_size) =
                fake + noise_batch(cfg.batch_size, d, cfg.input_noise);
            Matrix d_target(2 * cfg.batch_size, 1);
            d_target.topRows(cfg.batch_size).setConstant(cfg.real_target);
            d_target.bottomRows(cfg.batch_size).setConstant(cfg.fake_target);

            MlpCache d_cache;
            const Matrix d_pred = gan.discriminator.forward(d_in, true, &rng, &d_cache);
            d_loss_sum += bce_loss(d_pred, d_target);
            gan.discriminator.adam_step(
                gan.discriminator.backward(d_cache, bce_grad(d_pred, d_target)),
                cfg.learning_rate);

            // generator step: non-saturating push toward the real target
            const Matrix z2 = noise_batch(cfg.batch_size, cfg.noise_dim, 1.0);
            MlpCache g_cache;
            const Matrix fake2 = gan.generator.forward(z2, true, &rng, &g_cache);
            MlpCache d_cache2;
            const Matrix g_in = fake2 + noise_batch(cfg.batch_size, d, cfg.input_noise);
            const Matrix d_on_fake = gan.discriminator.forward(g_in, true, &rng, &d_cache2);
            const Matrix g_target = Matrix::Constant(cfg.batch_size, 1, cfg.real_target);
            g_loss_sum += bce_loss(d_on_fake, g_target);

            // gradient flows through the frozen discriminator into the generator
            Matrix fake_grad;
            gan.discriminator.backward(d_cache2, bce_grad(d_on_fake, g_target), &fake_grad);
            gan.generator.adam_step(gan.generator.backward(g_cache, fake_grad), cfg.learning_rate);
            ++steps;
        }

        // probe: clean forward on held-out real rows and fresh fakes
        const Matrix held_fake = gan.generator.forward(held_noise, false, nullptr);
        Matrix probe_in(2 * held, d);
        probe_in.topRows(held) = held_real;
        probe_in.bottomRows(held) = held_fake;
        Matrix probe_target(2 * held, 1);
        probe_target.topRows(held).setConstant(cfg.real_target);
        probe_target.bottomRows(held).setConstant(cfg.fake_target);
        const Matrix probe = gan.discriminator.forward(probe_in, false, nullptr);

        GanEpochRecord rec;
        rec.epoch = epoch;
        rec.d_loss = steps > 0 ? d_loss_sum / steps : 0.0;
        rec.g_loss = steps > 0 ? g_loss_sum / steps : 0.0;
        rec.heldout_d_bce = bce_loss(probe, probe_target);
        gan.history.push_back(rec);
    }
    return gan;
}

// Distance of the discriminator verdict from the decision threshold.
inline double ambiguity(const Mlp& discriminator, const Eigen::RowVectorXd& x, double tau) {
    return std::abs(discriminator.forward(x, false, nullptr)(0, 0) - tau);
}

// Indices of the B candidates with the smallest ambiguity, ties by lower
// index; candidates stay in input order within the result.
inline std::vector<std::size_t> select_borderline(const Matrix& candidates,
                                                  const Mlp& discriminator, double tau,
                                                  std::size_t budget) {
    const auto k = static_cast<std::size_t>(candidates.rows());
    if (budget > k) throw std::invalid_argument("select_borderline: budget exceeds candidates");
    const Matrix verdicts = discriminator.forward(candidates, false, nullptr);
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(verdicts(static_cast<Eigen::Index>(a), 0) - tau) <
               std::abs(verdicts(static_cast<Eigen::Index>(b), 0) - tau);
    });
    order.resize(budget);
    std::sort(order.begin(), order.end());
    return order;
}

inline int surrogate_label(const Mlp& discriminator, const Eigen::RowVectorXd& x, double tau) {
    return discriminator.forward(x, false, nullptr)(0, 0) >= tau ? 1 : 0;
}

struct Augmented {
    TimeSeries series;
    std::vector<std::size_t> injected;  // positions in the augmented series
    std::vector<double> draws;          // SBA scale factors, parallel to injected
};

// Interleaves B points into the series at regular intervals (after every
// floor(T/B) original samples), shifting later samples. Original labels stay
// at original positions; injected positions carry the supplied labels.
inline Augmented inject(const TimeSeries& series, const Matrix& points,
                        const std::vector<int>& point_labels, double rho) {
    const auto t = static_cast<std::size_t>(series.length());
    const auto b = static_cast<std::size_t>(points.rows());
    const auto expected =
        static_cast<std::size_t>(std::ceil(rho * static_cast<double>(t) - 1e-9));
    if (b == 0 || b > t) throw std::invalid_argument("inject: budget outside (0, T]");
    if (b != expected)
        throw std::invalid_argument("inject: expected ceil(rho*T) = " + std::to_string(expected) +
                                    " points, got " + std::to_string(b));
    if (points.cols() != series.dim()) throw std::invalid_argument("inject: dimension mismatch");
    if (point_labels.size() != b) throw std::invalid_argument("inject: label count mismatch");

    const std::size_t gap = t / b;
    Augmented out;
    out.series.name = series.name + "+gan";
    out.series.values.resize(static_cast<Eigen::Index>(t + b), series.dim());
    out.series.labels.assign(t + b, 0);

    std::size_t next_original = 0;
    std::size_t write = 0;
    for (std::size_t k = 1; k <= b; ++k) {
        const std::size_t upto = std::min(k * gap, t);
        while (next_original < upto) {
            out.series.values.row(static_cast<Eigen::Index>(write)) =
                series.values.row(static_cast<Eigen::Index>(next_original));
            if (series.labeled()) out.series.labels[write] = series.labels[next_original];
            ++next_original;
            ++write;
        }
        out.series.values.row(static_cast<Eigen::Index>(write)) =
            points.row(static_cast<Eigen::Index>(k - 1));
        out.series.labels[write] = point_labels[k - 1];
        out.injected.push_back(write);
        ++write;
    }
    while (next_original < t) {
        out.series.values.row(static_cast<Eigen::Index>(write)) =
            series.values.row(static_cast<Eigen::Index>(next_original));
        if (series.labeled()) out.series.labels[write] = series.labels[next_original];
        ++next_original;
        ++write;
    }
    return out;
}

// Statistical border injection: points of local-context mean plus Gaussian
// noise scaled by the trailing per-feature deviation and a factor
// s ~ U[scale_min, scale_max]; label 1 iff s > 1.
inline Augmented sba_augment(const TimeSeries& series, const SbaConfig& cfg, Rng& rng) {
    cfg.validate();
    const auto t = static_cast<std::size_t>(series.length());
    if (t < cfg.context_window)
        throw std::invalid_argument("sba_augment: series shorter than context window");

    const auto b = static_cast<std::size_t>(std::ceil(cfg.fraction * static_cast<double>(t)));
    const std::size_t gap = t / b;
    std::uniform_real_distribution<double> scale(cfg.scale_min, cfg.scale_max);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Matrix points(static_cast<Eigen::Index>(b), series.dim());
    std::vector<int> labels(b);
    std::vector<double> draws(b);
    for (std::size_t k = 1; k <= b; ++k) {
        const std::size_t pos = std::max<std::size_t>(1, std::min(k * gap, t));
        const std::size_t ctx = std::min(cfg.context_window, pos);
        const auto block = series.values.middleRows(static_cast<Eigen::Index>(pos - ctx),
                                                    static_cast<Eigen::Index>(ctx));
        const Eigen::RowVectorXd mean = block.colwise().mean();
        Eigen::RowVectorXd sd(series.dim());
        for (Eigen::Index j = 0; j < series.dim(); ++j)
            sd(j) = std::sqrt((block.col(j).array() - mean(j)).square().sum() /
                              static_cast<double>(ctx));
        const double s = scale(rng);
        draws[k - 1] = s;
        labels[k - 1] = s > 1.0 ? 1 : 0;
        for (Eigen::Index j = 0; j < series.dim(); ++j)
            points(static_cast<Eigen::Index>(k - 1), j) = mean(j) + sd(j) * s * gauss(rng);
    }

    Augmented out = inject(series, points, labels, static_cast<double>(b) / static_cast<double>(t));
    out.series.name = series.name + "+sba";
    out.draws = std::move(draws);
    return out;
}

struct McOutcome {
    Ranking ranking;
    Matrix trial_f1;  // trials x detectors
};

// Monte-Carlo stress test: per trial, a fresh copy gets background Gaussian
// noise everywhere plus `anomalies` in-place additive bumps of magnitude
// s ~ U[magnitude range] times the local deviation at uniformly random
// positions; detectors are re-scored and their event F1 averaged over trials.
inline McOutcome run_mc(const std::vector<FittedDetector>& pool, const TimeSeries& series,
                        const McConfig& cfg, const std::vector<int>& base_labels) {
    cfg.validate();
    const auto t = static_cast<std::size_t>(series.length());
    if (!base_labels.empty() && base_labels.size() != t)
        throw std::invalid_argument("run_mc: base label length mismatch");
    const std::size_t local_window = std::min<std::size_t>(50, t);

    Eigen::RowVectorXd global_sd(series.dim());
    const Eigen::RowVectorXd global_mean = series.values.colwise().mean();
    for (Eigen::Index j = 0; j < series.dim(); ++j)
        global_sd(j) = std::sqrt((series.values.col(j).array() - global_mean(j)).square().sum() /
                                 static_cast<double>(t));

    McOutcome out;
    out.trial_f1 = Matrix::Zero(cfg.trials, static_cast<Eigen::Index>(pool.size()));
    Rng rng = make_rng(cfg.seed, "mc");
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> magnitude(cfg.magnitude_min, cfg.magnitude_max);
    std::uniform_int_distribution<std::size_t> position(0, t - 1);

    for (int trial = 0; trial < cfg.trials; ++trial) {
        Matrix noisy = series.values;
        for (Eigen::Index i = 0; i < noisy.rows(); ++i)
            for (Eigen::Index j = 0; j < noisy.cols(); ++j)
                noisy(i, j) += cfg.noise_level * global_sd(j) * gauss(rng);

        std::vector<int> labels = base_labels.empty() ? std::vector<int>(t, 0) : base_labels;
        std::set<std::size_t> positions;
        while (positions.size() < std::min<std::size_t>(static_cast<std::size_t>(cfg.anomalies), t))
            positions.insert(position(rng));
        for (std::size_t pos : positions) {
            const double s = magnitude(rng);
            const double sign = gauss(rng) >= 0.0 ? 1.0 : -1.0;
            const std::size_t ctx = std::min(local_window, std::max<std::size_t>(1, pos));
            const std::size_t lo = pos >= ctx ? pos - ctx : 0;
            for (Eigen::Index j = 0; j < noisy.cols(); ++j) {
                const auto block = series.values.col(j).segment(
                    static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(std::max<std::size_t>(1, pos - lo)));
                const double mean = block.mean();
                double sd = std::sqrt((block.array() - mean).square().sum() /
                                      static_cast<double>(block.size()));
                if (sd <= 0.0) sd = global_sd(j) > 0.0 ? global_sd(j) : 1.0;
                noisy(static_cast<Eigen::Index>(pos), j) += sign * s * sd;
            }
            labels[pos] = 1;
        }

        for (std::size_t m = 0; m < pool.size(); ++m) {
            const Vector scores = pool[m].normalized_scores(noisy);
            std::vector<double> sv(scores.data(), scores.data() + scores.size());
            out.trial_f1(trial, static_cast<Eigen::Index>(m)) =
                best_f1_threshold(sv, labels).second;
        }
    }

    const Eigen::RowVectorXd mean_f1 = out.trial_f1.colwise().mean();
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return mean_f1(static_cast<Eigen::Index>(a)) > mean_f1(static_cast<Eigen::Index>(b));
    });
    for (std::size_t m : order) {
        out.ranking.ids.push_back(pool[m].config().id);
        out.ranking.scores.push_back(mean_f1(static_cast<Eigen::Index>(m)));
    }
    return out;
}

struct RobustnessOutcome {
    Ranking gan;
    Ranking sba;
    Ranking mc;
    std::vector<GanEpochRecord> gan_history;
    std::vector<std::size_t> gan_injected;
    std::vector<std::size_t> sba_injected;
};

namespace detail {

inline Ranking rank_by_f1(const std::vector<FittedDetector>& pool, const TimeSeries& augmented) {
    std::vector<double> f1(pool.size());
    for (std::size_t m = 0; m < pool.size(); ++m) {
        const Vector scores = pool[m].normalized_scores(augmented.values);
        std::vector<double> sv(scores.data(), scores.data() + scores.size());
        f1[m] = best_f1_threshold(sv, augmented.labels).second;
    }
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return f1[a] > f1[b]; });
    Ranking r;
    for (std::size_t m : order) {
        r.ids.push_back(pool[m].config().id);
        r.scores.push_back(f1[m]);
    }
    return r;
}

}  // namespace detail

// The three robustness stress tests, each on its own augmented copy of the
// clean series, with detectors scored but never refit. base_labels supplies
// the non-injected positions (ground truth in oracle mode, zeros otherwise).
inline RobustnessOutcome robustness_rankings(const std::vector<FittedDetector>& pool,
                                             const TimeSeries& clean,
                                             const std::vector<int>& base_labels,
                                             const GanConfig& gan_cfg, const SbaConfig& sba_cfg,
                                             const McConfig& mc_cfg) {
    if (pool.empty()) throw std::invalid_argument("robustness_rankings: empty pool");
    RobustnessOutcome out;
    const auto t = static_cast<std::size_t>(clean.length());

    TimeSeries labeled = clean;
    labeled.labels = base_labels.empty() ? std::vector<int>(t, 0) : base_labels;

    // GAN branch
    {
        MinMaxScaler scaler;
        scaler.fit(clean.values);
        const TrainedGan gan = train_gan(scaler.scale(clean.values), gan_cfg);
        out.gan_history = gan.history;

        const auto budget =
            static_cast<std::size_t>(std::ceil(gan_cfg.rho * static_cast<double>(t)));
        const auto k = static_cast<Eigen::Index>(budget * gan_cfg.candidate_factor);
        Rng rng = make_rng(gan_cfg.seed, "gan:candidates");
        std::normal_distribution<double> gauss(0.0, 1.0);
        const Matrix z = Matrix::NullaryExpr(k, gan_cfg.noise_dim,
                                             [&](Eigen::Index, Eigen::Index) { return gauss(rng); });
        const Matrix candidates = gan.generator.forward(z, false, nullptr);
        const auto chosen = select_borderline(candidates, gan.discriminator, gan_cfg.tau, budget);

        Matrix borderline(static_cast<Eigen::Index>(budget), clean.dim());
        std::vector<int> labels(budget);
        for (std::size_t i = 0; i < chosen.size(); ++i) {
            borderline.row(static_cast<Eigen::Index>(i)) =
                candidates.row(static_cast<Eigen::Index>(chosen[i]));
            labels[i] = surrogate_label(gan.discriminator,
                                        candidates.row(static_cast<Eigen::Index>(chosen[i])),
                                        gan_cfg.tau);
        }
        Augmented aug = inject(labeled, scaler.unscale(borderline), labels, gan_cfg.rho);
        out.gan = detail::rank_by_f1(pool, aug.series);
        out.gan_injected = aug.injected;
    }

    // SBA branch
    {
        Rng rng = make_rng(sba_cfg.seed, "sba");
        Augmented aug = sba_augment(labeled, sba_cfg, rng);
        out.sba = detail::rank_by_f1(pool, aug.series);
        out.sba_injected = aug.injected;
    }

    // Monte-Carlo branch
    out.mc = run_mc(pool, clean, mc_cfg, labeled.labels).ranking;

    return out;
}

}  // namespace ramses
