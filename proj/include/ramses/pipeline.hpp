#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ramses/config.hpp"
#include "ramses/data.hpp"
#include "ramses/detectors.hpp"
#include "ramses/ga.hpp"
#include "ramses/lints.hpp"
#include "ramses/meta.hpp"
#include "ramses/metrics.hpp"
#include "ramses/online.hpp"
#include "ramses/perturb.hpp"
#include "ramses/rank.hpp"
#include "ramses/rng.hpp"

namespace ramses {

using Json = nlohmann::json;

struct SelectionReport {
    std::vector<DetectorConfig> pool_configs;
    GaResult ga;
    Ranking lints;
    Ranking gan;
    Ranking sba;
    Ranking mc;
    Ranking robustness_consensus;
    Ranking final_single;
    std::vector<GanEpochRecord> gan_history;
    std::vector<std::size_t> gan_injected;
    std::vector<std::size_t> sba_injected;
    SelectionModels models;
    std::vector<std::string> ensemble_ids;
    std::string single_id;
    std::map<std::string, double> durations_seconds;
    std::uint64_t seed = 0;
    LabelsMode labels_mode = LabelsMode::kSynthetic;
    std::map<std::string, std::string> config_echo;
};

namespace detail {

class StageTimer {
public:
    explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}

    // times the stage and names it in any propagated failure
    template <typename F>
    auto time(const std::string& stage, F&& f) {
        const auto start = std::chrono::steady_clock::now();
        try {
            auto result = f();
            sink_[stage] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            return result;
        } catch (const std::exception& e) {
            throw std::runtime_error("stage " + stage + " failed: " + e.what());
        }
    }

private:
    std::map<std::string, double>& sink_;
};

// Window-level labels: a window is anomalous when any covered timestep is.
inline std::vector<int> window_labels(const std::vector<int>& labels,
                                      const std::vector<Window>& windows) {
    std::vector<int> out(windows.size(), 0);
    for (std::size_t i = 0; i < windows.size(); ++i)
        for (std::size_t t = windows[i].start; t < windows[i].start + windows[i].width; ++t)
            if (labels[t]) {
                out[i] = 1;
                break;
            }
    return out;
}

// Offline windowing: explicit from the config, or 5% of the training split
// with stride = width (non-overlapping tiling). The same spec serves both
// folds so window-level features stay comparable.
inline WindowSpec offline_window_spec(const RunConfig& cfg, std::size_t train_length) {
    WindowSpec spec;
    if (cfg.window_width > 0) {
        spec.width = cfg.window_width;
        spec.stride = cfg.window_stride > 0 ? cfg.window_stride : cfg.window_width;
    } else {
        spec.width = std::max<std::size_t>(
            2, static_cast<std::size_t>(0.05 * static_cast<double>(train_length)));
        spec.stride = spec.width;
    }
    spec.width = std::min(spec.width, train_length);
    return spec;
}

// One fold prepared for subset evaluation: window-level scores plus labels,
// and the per-timestep view used for threshold calibration.
struct Fold {
    LabeledScores windows;
    TimeSeries evaluation;  // the series the scores were computed on
};

inline Fold make_fold(const std::vector<FittedDetector>& pool, const TimeSeries& fold_series,
                      const RunConfig& cfg, const WindowSpec& spec, LabelsMode mode,
                      const std::string& stage) {
    Fold fold;
    if (mode == LabelsMode::kSynthetic) {
        SbaConfig sba = cfg.sba;
        sba.context_window = std::min<std::size_t>(
            sba.context_window, static_cast<std::size_t>(fold_series.length()));
        Rng rng = make_rng(cfg.seed, "fold:" + stage);
        TimeSeries unlabeled = fold_series;
        unlabeled.labels.clear();
        fold.evaluation = sba_augment(unlabeled, sba, rng).series;
    } else {
        if (!fold_series.labeled())
            throw std::invalid_argument("ground_truth mode needs a labeled series");
        fold.evaluation = fold_series;
    }

    WindowSpec fold_spec = spec;
    fold_spec.width = std::min(fold_spec.width, static_cast<std::size_t>(fold.evaluation.length()));
    const auto windows = segment(fold.evaluation, fold_spec);
    fold.windows.scores = score_matrix(pool, fold.evaluation, windows);
    fold.windows.labels = window_labels(fold.evaluation.labels, windows);
    return fold;
}

inline std::pair<double, double> fitness_of_scores(const std::vector<double>& scores,
                                                   const std::vector<int>& labels, double sigma) {
    const double f1 = best_f1_threshold(scores, labels).second;
    const bool has_positive = std::any_of(labels.begin(), labels.end(), [](int l) { return l == 1; });
    const double auc = has_positive ? auc_pr(scores, labels) : 0.0;
    return {f1, sigma * f1 + (1.0 - sigma) * auc};
}

}  // namespace detail

// The offline selection engine shared by `select` and by every online
// re-optimization round: fits the pool, runs the ensemble branch (GA) and the
// single-model branch (LinTS + robustness + Markov fusion), and calibrates
// per-timestep decision thresholds over the full offline span.
inline SelectionReport run_offline(const TimeSeries& offline, const RunConfig& cfg) {
    offline.validate();
    SelectionReport report;
    report.seed = cfg.seed;
    report.labels_mode = cfg.labels_mode;
    report.config_echo = cfg.echo;
    detail::StageTimer timer(report.durations_seconds);

    // the label-redaction guard: in synthetic mode no stage may see truth
    TimeSeries series = offline;
    if (cfg.labels_mode == LabelsMode::kSynthetic) series.labels.clear();

    // chronological folds: first 75% trains, last 25% validates
    const auto cut = static_cast<Eigen::Index>(0.75 * static_cast<double>(series.length()));
    if (cut < 2 || series.length() - cut < 2)
        throw std::invalid_argument("run_offline: series too short for train/validation folds");
    TimeSeries train, val;
    train.name = series.name + "/train";
    val.name = series.name + "/val";
    train.values = series.values.topRows(cut);
    val.values = series.values.bottomRows(series.length() - cut);
    if (series.labeled()) {
        train.labels.assign(series.labels.begin(), series.labels.begin() + cut);
        val.labels.assign(series.labels.begin() + cut, series.labels.end());
    }

    report.pool_configs = build_pool(cfg.pool_requests, static_cast<std::size_t>(series.dim()),
                                     derive_seed(cfg.seed, "pool"));
    report.models.pool = timer.time("pool_fit", [&] {
        std::vector<FittedDetector> pool;
        pool.reserve(report.pool_configs.size());
        for (const auto& dc : report.pool_configs) pool.push_back(fit(dc, train));
        return pool;
    });
    const auto& pool = report.models.pool;

    const WindowSpec spec =
        detail::offline_window_spec(cfg, static_cast<std::size_t>(train.length()));
    const detail::Fold train_fold =
        detail::make_fold(pool, train, cfg, spec, cfg.labels_mode, "train");
    const detail::Fold val_fold = detail::make_fold(pool, val, cfg, spec, cfg.labels_mode, "val");

    // ensemble branch; a one-detector pool leaves nothing to search
    report.ga = timer.time("ga", [&] {
        if (pool.size() == 1) {
            GaResult trivial;
            trivial.best = Subset{{1}};
            trivial.record = evaluate_subset(trivial.best, cfg.meta_kind, train_fold.windows,
                                             val_fold.windows, cfg.ga.seed, cfg.ga.sigma,
                                             cfg.meta_params);
            trivial.history.push_back(
                {0, trivial.record.fitness, trivial.record.fitness, trivial.best});
            return trivial;
        }
        return run_ga(cfg.ga, cfg.meta_kind, train_fold.windows, val_fold.windows,
                      cfg.meta_params);
    });
    report.models.ensemble = report.ga.best;
    report.models.ensemble_fitness = report.ga.record.fitness;

    // thresholds calibrate on the whole offline span (both fold evaluations,
    // chronologically); the validation fold alone is often too short to hold
    // any positive, which would degenerate the sweep
    TimeSeries calibration;
    calibration.name = series.name + "/calibration";
    calibration.values.resize(train_fold.evaluation.length() + val_fold.evaluation.length(),
                              series.dim());
    calibration.values << train_fold.evaluation.values, val_fold.evaluation.values;
    calibration.labels = train_fold.evaluation.labels;
    calibration.labels.insert(calibration.labels.end(), val_fold.evaluation.labels.begin(),
                              val_fold.evaluation.labels.end());

    {
        const auto members = report.ga.best.members();
        const Matrix train_x = detail::select_columns(train_fold.windows.scores.scores, members);
        report.models.meta =
            train_meta(cfg.meta_kind, train_x, train_fold.windows.labels,
                       derive_seed(cfg.ga.seed, "eval:" + report.ga.best.to_string()),
                       cfg.meta_params);
        for (std::size_t m : members) report.ensemble_ids.push_back(pool[m].config().id);

        Matrix stacked(calibration.length(), static_cast<Eigen::Index>(members.size()));
        for (std::size_t m = 0; m < members.size(); ++m)
            stacked.col(static_cast<Eigen::Index>(m)) =
                pool[members[m]].normalized_scores(calibration.values);
        const Vector pred = predict_meta(report.models.meta, stacked);
        std::vector<double> scores(pred.data(), pred.data() + pred.size());
        report.models.ensemble_threshold = best_f1_threshold(scores, calibration.labels).first;
    }

    // single branch: LinTS over clean train windows, robustness on the train
    // split; rewards and stress labels are injected, never ground truth
    const auto lints_windows = segment(train, spec);
    report.lints = timer
                       .time("lints",
                             [&] {
                                 return run_lints(cfg.lints, pool, train, lints_windows, cfg.sba);
                             })
                       .ranking;

    const std::vector<int> base_labels =
        cfg.labels_mode == LabelsMode::kGroundTruth ? train.labels : std::vector<int>{};
    const RobustnessOutcome robustness = timer.time("robustness", [&] {
        SbaConfig sba = cfg.sba;
        sba.context_window =
            std::min<std::size_t>(sba.context_window, static_cast<std::size_t>(train.length()));
        return robustness_rankings(pool, train, base_labels, cfg.gan, sba, cfg.mc);
    });
    report.gan = robustness.gan;
    report.sba = robustness.sba;
    report.mc = robustness.mc;
    report.gan_history = robustness.gan_history;
    report.gan_injected = robustness.gan_injected;
    report.sba_injected = robustness.sba_injected;

    report.robustness_consensus =
        aggregate({report.gan, report.sba, report.mc}, cfg.rank_orientation);
    report.final_single =
        aggregate({report.robustness_consensus, report.lints}, cfg.rank_orientation);
    report.single_id = report.final_single.ids.front();
    for (std::size_t m = 0; m < pool.size(); ++m)
        if (pool[m].config().id == report.single_id) report.models.single_index = m;

    {
        // single-branch threshold over the calibration span; designation
        // fitness stays on the validation fold, the same currency as the GA's
        const Vector scores =
            pool[report.models.single_index].normalized_scores(calibration.values);
        std::vector<double> sv(scores.data(), scores.data() + scores.size());
        report.models.single_threshold = best_f1_threshold(sv, calibration.labels).first;

        const auto column = static_cast<Eigen::Index>(report.models.single_index);
        const Vector window_scores = val_fold.windows.scores.scores.col(column);
        std::vector<double> ws(window_scores.data(), window_scores.data() + window_scores.size());
        report.models.single_fitness =
            detail::fitness_of_scores(ws, val_fold.windows.labels, cfg.ga.sigma).second;
    }

    return report;
}

struct OnlineSummary {
    std::size_t windows = 0;
    std::size_t reopt_rounds = 0;
    bool labels_available = false;
    double f1_single = 0.0;
    double f1_ensemble = 0.0;
    double f1_final = 0.0;
};

struct OnlineRun {
    std::vector<WindowDecision> decisions;
    OnlineSummary summary;
    // de-overlapped per-timestep streams (first window whole, then the novel
    // trailing stride of each later window)
    std::vector<int> single_timeline;
    std::vector<int> ensemble_timeline;
    std::vector<int> final_timeline;
    std::vector<int> truth_timeline;  // empty when the stream is unlabeled
};

// Streams the online split through the selected models with periodic
// re-optimization over the sliding buffer. The summary's event F1 per branch
// uses ground-truth labels when present (final summary only).
inline OnlineRun run_online(const TimeSeries& offline, const TimeSeries& online,
                            const SelectionReport& offline_report, const RunConfig& cfg) {
    online.validate();
    OnlineRun run;

    TimeSeries buffer = offline;
    if (cfg.labels_mode == LabelsMode::kSynthetic) buffer.labels.clear();

    Reoptimizer reoptimizer = [&cfg](const TimeSeries& data, std::size_t round) {
        const RunConfig round_cfg =
            with_seed(cfg, derive_seed(cfg.seed, "reopt:" + std::to_string(round)));
        return run_offline(data, round_cfg).models;
    };

    OnlineRunner runner(offline_report.models, buffer,
                        static_cast<std::size_t>(online.length()), cfg.online, reoptimizer);
    const WindowSpec spec = runner.window_spec();
    const auto windows = segment(online, spec);

    // de-overlapped decision timelines: each window contributes its novel
    // trailing samples, the first window its full width
    const bool truth_known = online.labeled();
    auto& truth_timeline = run.truth_timeline;
    auto& single_timeline = run.single_timeline;
    auto& ensemble_timeline = run.ensemble_timeline;
    auto& final_timeline = run.final_timeline;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const Matrix view = windows[i].rows(online.values);
        std::vector<int> window_truth;
        if (truth_known) {
            window_truth.assign(online.labels.begin() + static_cast<std::ptrdiff_t>(windows[i].start),
                                online.labels.begin() +
                                    static_cast<std::ptrdiff_t>(windows[i].start + spec.width));
        }
        const WindowDecision decision =
            runner.step(view, cfg.labels_mode == LabelsMode::kGroundTruth && truth_known
                                  ? &window_truth
                                  : nullptr);

        const std::size_t novel = i == 0 ? spec.width : spec.stride;
        for (std::size_t k = spec.width - novel; k < spec.width; ++k) {
            single_timeline.push_back(decision.single_decisions[k]);
            ensemble_timeline.push_back(decision.ensemble_decisions[k]);
            final_timeline.push_back(decision.final_decisions[k]);
            if (truth_known) truth_timeline.push_back(window_truth[k]);
        }
        run.decisions.push_back(decision);
    }

    run.summary.windows = run.decisions.size();
    run.summary.reopt_rounds = runner.rounds();
    run.summary.labels_available = truth_known;
    if (truth_known) {
        run.summary.f1_single = event_f1(single_timeline, truth_timeline).f1;
        run.summary.f1_ensemble = event_f1(ensemble_timeline, truth_timeline).f1;
        run.summary.f1_final = event_f1(final_timeline, truth_timeline).f1;
    }
    return run;
}

namespace detail {

inline Json ranking_json(const Ranking& r) {
    Json j;
    j["ids"] = r.ids;
    if (!r.scores.empty()) j["scores"] = r.scores;
    return j;
}

}  // namespace detail

// One JSON object per line; the durations record is the only line allowed to
// differ between reruns of the same seed.
inline void write_report(const SelectionReport& report, std::ostream& out) {
    Json config;
    config["record"] = "config";
    config["seed"] = report.seed;
    config["labels_mode"] = to_string(report.labels_mode);
    config["echo"] = report.config_echo;
    out << config.dump() << "\n";

    Json pool;
    pool["record"] = "pool";
    pool["detectors"] = Json::array();
    for (const auto& dc : report.pool_configs) {
        Json d;
        d["id"] = dc.id;
        d["family"] = to_string(dc.family);
        d["params"] = dc.params;
        pool["detectors"].push_back(d);
    }
    out << pool.dump() << "\n";

    for (const auto& gen : report.ga.history) {
        Json g;
        g["record"] = "ga_generation";
        g["generation"] = gen.generation;
        g["best_fitness"] = gen.best_fitness;
        g["mean_fitness"] = gen.mean_fitness;
        std::vector<std::string> ids;
        for (std::size_t m : gen.best_subset.members())
            ids.push_back(report.pool_configs[m].id);
        g["best_subset"] = ids;
        out << g.dump() << "\n";
    }

    for (const auto& epoch : report.gan_history) {
        Json g;
        g["record"] = "gan_epoch";
        g["epoch"] = epoch.epoch;
        g["d_loss"] = epoch.d_loss;
        g["g_loss"] = epoch.g_loss;
        g["heldout_d_bce"] = epoch.heldout_d_bce;
        out << g.dump() << "\n";
    }

    Json injections;
    injections["record"] = "injections";
    injections["gan"] = report.gan_injected;
    injections["sba"] = report.sba_injected;
    out << injections.dump() << "\n";

    Json rankings;
    rankings["record"] = "rankings";
    rankings["lints"] = detail::ranking_json(report.lints);
    rankings["gan"] = detail::ranking_json(report.gan);
    rankings["sba"] = detail::ranking_json(report.sba);
    rankings["mc"] = detail::ranking_json(report.mc);
    rankings["robustness_consensus"] = detail::ranking_json(report.robustness_consensus);
    rankings["final_single"] = detail::ranking_json(report.final_single);
    out << rankings.dump() << "\n";

    Json selection;
    selection["record"] = "selection";
    selection["ensemble"] = {{"subset", report.ensemble_ids},
                             {"fitness", report.models.ensemble_fitness},
                             {"threshold", report.models.ensemble_threshold},
                             {"f1", report.ga.record.f1},
                             {"auc_pr", report.ga.record.auc_pr}};
    selection["single"] = {{"id", report.single_id},
                           {"fitness", report.models.single_fitness},
                           {"threshold", report.models.single_threshold}};
    selection["final_branch"] = to_string(report.models.designated());
    out << selection.dump() << "\n";

    Json durations;
    durations["record"] = "durations";
    for (const auto& [stage, seconds] : report.durations_seconds)
        durations[stage + "_seconds"] = seconds;
    out << durations.dump() << "\n";
}

inline void write_decisions(const OnlineRun& run, std::ostream& out) {
    for (const auto& d : run.decisions) {
        Json j;
        j["record"] = "decision";
        j["window"] = d.index;
        j["branch"] = to_string(d.branch);
        j["single"] = d.single_decisions;
        j["ensemble"] = d.ensemble_decisions;
        j["final"] = d.final_decisions;
        j["reopt"] = d.reopt_triggered;
        out << j.dump() << "\n";
    }
    Json s;
    s["record"] = "online_summary";
    s["windows"] = run.summary.windows;
    s["reopt_rounds"] = run.summary.reopt_rounds;
    if (run.summary.labels_available) {
        s["f1_single"] = run.summary.f1_single;
        s["f1_ensemble"] = run.summary.f1_ensemble;
        s["f1_final"] = run.summary.f1_final;
    } else {
        s["f1_single"] = nullptr;
        s["f1_ensemble"] = nullptr;
        s["f1_final"] = nullptr;
    }
    out << s.dump() << "\n";
}

}  // namespace ramses
