#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "ramses/pipeline.hpp"

using namespace ramses;

namespace {

// small, fast configuration for pipeline-level tests
RunConfig desk_config(std::uint64_t seed, LabelsMode mode) {
    std::map<std::string, std::string> layer = {
        {"seed", std::to_string(seed)},
        {"labels.mode", mode == LabelsMode::kSynthetic ? "synthetic" : "ground_truth"},
        {"ga.population", "8"},
        {"ga.generations", "4"},
        {"lints.windows", "10"},
        {"gan.epochs", "5"},
        {"gan.batch_size", "32"},
        {"mc.trials", "2"},
        {"pool.rm.count", "1"},
        {"pool.knn.count", "1"},
        {"pool.pca.count", "1"},
        {"pool.kmeans.count", "1"},
    };
    return resolve_config({layer});
}

std::vector<std::string> report_lines_without_durations(const SelectionReport& report) {
    std::ostringstream out;
    write_report(report, out);
    std::vector<std::string> lines;
    std::istringstream in(out.str());
    std::string line;
    while (std::getline(in, line))
        if (line.find("\"record\":\"durations\"") == std::string::npos) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("offline selection covers the pool and is deterministic", "[pipeline]") {
    TimeSeries series = synth_generate(AnomalyKind::kPoint, 1000, 1, 8, 31);
    auto [offline, online] = split_offline_online(series, {});

    RunConfig cfg = desk_config(7, LabelsMode::kSynthetic);
    SelectionReport a = run_offline(offline, cfg);

    REQUIRE(a.final_single.ids.size() == 4);
    a.final_single.validate();
    a.robustness_consensus.validate();
    a.lints.validate();
    CHECK(a.ga.best.count() >= 1);
    CHECK_FALSE(a.ensemble_ids.empty());
    CHECK(a.models.pool.size() == 4);
    CHECK(a.durations_seconds.count("ga") == 1);
    CHECK(a.durations_seconds.count("lints") == 1);
    CHECK(a.durations_seconds.count("robustness") == 1);

    SelectionReport b = run_offline(offline, cfg);
    CHECK(report_lines_without_durations(a) == report_lines_without_durations(b));
}

TEST_CASE("synthetic mode never consults ground truth", "[pipeline]") {
    TimeSeries series = synth_generate(AnomalyKind::kPoint, 900, 1, 6, 33);
    auto [offline, online] = split_offline_online(series, {});

    TimeSeries redacted = offline;
    redacted.labels.clear();

    RunConfig cfg = desk_config(11, LabelsMode::kSynthetic);
    SelectionReport with_labels = run_offline(offline, cfg);
    SelectionReport without_labels = run_offline(redacted, cfg);
    CHECK(report_lines_without_durations(with_labels) ==
          report_lines_without_durations(without_labels));
}

TEST_CASE("ground_truth mode requires labels", "[pipeline]") {
    TimeSeries series = synth_generate(AnomalyKind::kPoint, 900, 1, 6, 35);
    auto [offline, online] = split_offline_online(series, {});
    offline.labels.clear();
    RunConfig cfg = desk_config(3, LabelsMode::kGroundTruth);
    CHECK_THROWS_AS(run_offline(offline, cfg), std::invalid_argument);
}

TEST_CASE("a strong detector beats a degenerate one end to end", "[pipeline]") {
    // pca with components = d reconstructs perfectly: constant zero scores
    TimeSeries series = synth_generate(AnomalyKind::kPoint, 1200, 1, 10, 37);
    auto [offline, online] = split_offline_online(series, {});

    std::map<std::string, std::string> layer = {
        {"seed", "5"},           {"labels.mode", "ground_truth"},
        {"ga.population", "4"},  {"ga.generations", "3"},
        {"lints.windows", "12"}, {"gan.epochs", "5"},
        {"gan.batch_size", "32"}, {"mc.trials", "2"},
        {"pool.rm.count", "1"},  {"pool.rm.window", "5"},
        {"pool.pca.count", "1"}, {"pool.pca.components", "1"},
    };
    RunConfig cfg = resolve_config({layer});
    SelectionReport report = run_offline(offline, cfg);

    // the responsive detector tops the fused single ranking and sits in the
    // chosen ensemble
    CHECK(report.single_id == "rm_1");
    CHECK(std::count(report.ensemble_ids.begin(), report.ensemble_ids.end(), "rm_1") == 1);
    CHECK(report.models.ensemble_fitness > 0.5);
}

TEST_CASE("online run emits decisions and summary", "[pipeline]") {
    TimeSeries series = synth_generate(AnomalyKind::kPoint, 1000, 1, 8, 41);
    auto [offline, online] = split_offline_online(series, {});

    RunConfig cfg = desk_config(13, LabelsMode::kSynthetic);
    // keep re-optimization cheap and infrequent
    cfg.online.period = 80;
    SelectionReport report = run_offline(offline, cfg);
    OnlineRun run = run_online(offline, online, report, cfg);

    const auto spec = online_window_spec(static_cast<std::size_t>(online.length()));
    const auto expected_windows = segment(online, spec).size();
    CHECK(run.decisions.size() == expected_windows);
    CHECK(run.summary.reopt_rounds == expected_windows / 80);
    REQUIRE(run.summary.labels_available);
    CHECK(run.summary.f1_final >= 0.0);

    std::size_t triggers = 0;
    for (const auto& d : run.decisions) triggers += d.reopt_triggered;
    CHECK(triggers == run.summary.reopt_rounds);

    // unlabeled online split: decisions still flow, summary has no f1
    TimeSeries unlabeled_online = online;
    unlabeled_online.labels.clear();
    OnlineRun blind = run_online(offline, unlabeled_online, report, cfg);
    CHECK(blind.decisions.size() == expected_windows);
    CHECK_FALSE(blind.summary.labels_available);

    std::ostringstream decisions_out;
    write_decisions(blind, decisions_out);
    CHECK(decisions_out.str().find("\"record\":\"online_summary\"") != std::string::npos);
    CHECK(decisions_out.str().find("\"f1_final\":null") != std::string::npos);
}

TEST_CASE("re-optimization count follows the period", "[pipeline]") {
    TimeSeries series = synth_generate(AnomalyKind::kPoint, 600, 1, 4, 43);
    auto [offline, online] = split_offline_online(series, {});

    RunConfig cfg = desk_config(17, LabelsMode::kSynthetic);
    cfg.online.period = 5;
    cfg.ga.population = 4;
    cfg.ga.generations = 2;
    cfg.lints.windows = 4;
    cfg.gan.epochs = 2;

    SelectionReport report = run_offline(offline, cfg);
    // online length 120: w = 6, s = 1 -> 115 windows, 23 re-optimizations
    const auto spec = online_window_spec(static_cast<std::size_t>(online.length()));
    auto windows = segment(online, spec);
    REQUIRE(windows.size() >= 23);

    OnlineRunner runner(report.models, offline, static_cast<std::size_t>(online.length()),
                        cfg.online, [&](const TimeSeries& buffer, std::size_t round) {
                            const RunConfig round_cfg = with_seed(
                                cfg, derive_seed(cfg.seed, "reopt:" + std::to_string(round)));
                            return run_offline(buffer, round_cfg).models;
                        });
    std::size_t triggers = 0;
    for (std::size_t i = 0; i < 23; ++i)
        triggers += runner.step(windows[i].rows(online.values)).reopt_triggered;
    CHECK(triggers == 4);  // floor(23 / 5)
}

TEST_CASE("a pool of one detector needs no search", "[pipeline]") {
    TimeSeries series = synth_generate(AnomalyKind::kPoint, 900, 1, 6, 61);
    auto [offline, online] = split_offline_online(series, {});

    std::map<std::string, std::string> layer = {
        {"seed", "2"},           {"ga.population", "4"},  {"ga.generations", "2"},
        {"lints.windows", "6"},  {"gan.epochs", "3"},     {"gan.batch_size", "32"},
        {"mc.trials", "2"},      {"pool.rm.count", "1"},
    };
    RunConfig cfg = resolve_config({layer});
    SelectionReport report = run_offline(offline, cfg);
    CHECK(report.ensemble_ids == std::vector<std::string>{"rm_1"});
    CHECK(report.final_single.ids == std::vector<std::string>{"rm_1"});
    CHECK(report.single_id == "rm_1");
}

TEST_CASE("stationary stream keeps re-selected fitness and summary stable", "[pipeline]") {
    int fitness_stable = 0;
    int summary_stable = 0;
    const int seeds = 5;
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        // a dense anomaly rate keeps the event count in the sliding
        // validation fold high enough for F1 to resolve a 0.05 band
        TimeSeries series = synth_generate(AnomalyKind::kPoint, 1000, 1, 100, 70 + seed);
        auto [offline, online] = split_offline_online(series, {});

        RunConfig cfg = desk_config(seed + 200, LabelsMode::kGroundTruth);
        cfg.online.period = 60;
        const SelectionReport report = run_offline(offline, cfg);

        // consecutive re-optimization rounds select at similar fitness
        std::vector<double> fitness_per_round;
        OnlineRunner runner(report.models, offline, static_cast<std::size_t>(online.length()),
                            cfg.online, [&](const TimeSeries& buffer, std::size_t round) {
                                const RunConfig round_cfg = with_seed(
                                    cfg, derive_seed(cfg.seed, "reopt:" + std::to_string(round)));
                                auto models = run_offline(buffer, round_cfg).models;
                                fitness_per_round.push_back(models.ensemble_fitness);
                                return models;
                            });
        auto windows = segment(online, runner.window_spec());
        for (std::size_t i = 0; i < 125 && i < windows.size(); ++i) {
            std::vector<int> truth(online.labels.begin() + static_cast<std::ptrdiff_t>(windows[i].start),
                                   online.labels.begin() +
                                       static_cast<std::ptrdiff_t>(windows[i].start + runner.window_spec().width));
            runner.step(windows[i].rows(online.values), &truth);
        }
        REQUIRE(fitness_per_round.size() >= 2);
        bool stable = true;
        for (std::size_t r = 1; r < fitness_per_round.size(); ++r)
            stable = stable && std::abs(fitness_per_round[r] - fitness_per_round[r - 1]) <= 0.05;
        fitness_stable += stable;

        // and the end-to-end summary barely moves with re-optimization off
        RunConfig off_cfg = cfg;
        off_cfg.online.reopt = false;
        const OnlineRun with_reopt = run_online(offline, online, report, cfg);
        const OnlineRun without_reopt = run_online(offline, online, report, off_cfg);
        summary_stable +=
            std::abs(with_reopt.summary.f1_final - without_reopt.summary.f1_final) <= 0.05;
    }
    CHECK(fitness_stable >= seeds - 1);
    CHECK(summary_stable >= seeds - 1);
}

TEST_CASE("config parsing and overrides", "[pipeline]") {
    const auto path = std::filesystem::temp_directory_path() / "ramses_cfg.txt";
    {
        std::ofstream out(path);
        out << "# comment\n";
        out << "seed = 9\n";
        out << "ga.population = 12\n";
        out << "pool.knn.count = 2\n";
        out << "pool.knn.k = 7\n";
    }
    auto file_layer = parse_config_file(path.string());
    RunConfig cfg = resolve_config({file_layer, {{"ga.population", "6"}}});
    CHECK(cfg.seed == 9);
    CHECK(cfg.ga.population == 6);  // override wins
    REQUIRE(cfg.pool_requests.size() == 1);
    CHECK(cfg.pool_requests[0].count == 2);
    CHECK(cfg.pool_requests[0].fixed.at("k") == 7);

    CHECK_THROWS_WITH(resolve_config({{{"nope.key", "1"}}}),
                      Catch::Matchers::ContainsSubstring("unknown key"));
    CHECK_THROWS_AS(resolve_config({{{"ga.population", "abc"}}}), std::invalid_argument);
    CHECK_THROWS_AS(resolve_config({{{"online.reopt", "maybe"}}}), std::invalid_argument);
}

TEST_CASE("RAMSES_SEED is the seed fallback", "[pipeline]") {
    setenv("RAMSES_SEED", "777", 1);
    CHECK(resolve_config({}).seed == 777);
    // explicit keys win over the environment
    CHECK(resolve_config({{{"seed", "5"}}}).seed == 5);
    unsetenv("RAMSES_SEED");
    CHECK(resolve_config({}).seed == 42);
}
