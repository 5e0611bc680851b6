#include <catch2/catch_amalgamated.hpp>

#include "ramses/data.hpp"
#include "ramses/online.hpp"

using namespace ramses;

namespace {

SelectionModels stub_models(const TimeSeries& train) {
    SelectionModels m;
    DetectorConfig a;
    a.family = Family::kRm;
    a.params["window"] = 5;
    a.id = "rm_a";
    DetectorConfig b = a;
    b.params["window"] = 9;
    b.id = "rm_b";
    m.pool = {fit(a, train), fit(b, train)};
    m.ensemble = Subset{{1, 1}};

    Matrix x(4, 2);
    x << 0.1, 0.1, 0.2, 0.1, 0.9, 0.8, 0.8, 0.9;
    m.meta = train_meta(MetaKind::kLogistic, x, {0, 0, 1, 1}, 1);
    m.ensemble_threshold = 0.5;
    m.ensemble_fitness = 0.9;
    m.single_index = 0;
    m.single_threshold = 0.5;
    m.single_fitness = 0.4;
    return m;
}

}  // namespace

TEST_CASE("online window sizing rule", "[online]") {
    CHECK(online_window_spec(200).width == 10);
    CHECK(online_window_spec(200).stride == 1);
    CHECK(online_window_spec(40).width == 2);
    CHECK(online_window_spec(40).stride == 1);
    CHECK(online_window_spec(10).width == 2);
    CHECK_THROWS_AS(online_window_spec(1), std::invalid_argument);
    CHECK(online_window_spec(2000).width == 100);
    CHECK(online_window_spec(2000).stride == 5);
}

TEST_CASE("buffer length is invariant across rounds and slides FIFO", "[online]") {
    TimeSeries offline = synth_generate(AnomalyKind::kPoint, 300, 1, 2, 5);
    TimeSeries online = synth_generate(AnomalyKind::kPoint, 200, 1, 2, 6);

    int reopt_calls = 0;
    Reoptimizer stub = [&](const TimeSeries& buffer, std::size_t) {
        ++reopt_calls;
        return stub_models(buffer);
    };

    OnlineConfig cfg;
    cfg.period = 4;
    OnlineRunner runner(stub_models(offline), offline, 200, cfg, stub);
    const auto spec = runner.window_spec();
    auto windows = segment(online, spec);

    const Eigen::Index initial_length = runner.buffer().length();
    const Matrix first_row_before = runner.buffer().values.topRows(1);

    std::size_t steps = 0;
    for (const auto& w : windows) {
        if (steps >= 41) break;
        runner.step(w.rows(online.values));
        ++steps;
        CHECK(runner.buffer().length() == initial_length);
    }
    CHECK(reopt_calls == 10);  // floor(41 / 4)
    CHECK(runner.rounds() == 10);

    // oldest offline samples are gone
    CHECK((runner.buffer().values.topRows(1) - first_row_before).cwiseAbs().maxCoeff() > 0.0);
    // the newest buffer row is the trailing novel sample of the last window
    // absorbed by a re-optimization (step 40 = windows[39]); step 41 is pending
    const auto& last_absorbed = windows[39];
    const Matrix tail = runner.buffer().values.bottomRows(1);
    CHECK((tail -
           online.values.row(static_cast<Eigen::Index>(last_absorbed.start + spec.width - 1)))
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("re-optimizations land exactly on counter multiples", "[online]") {
    TimeSeries offline = synth_generate(AnomalyKind::kPoint, 250, 1, 0, 7);
    std::vector<std::size_t> trigger_steps;
    Reoptimizer stub = [&](const TimeSeries& buffer, std::size_t) {
        return stub_models(buffer);
    };
    OnlineConfig cfg;
    cfg.period = 5;
    OnlineRunner runner(stub_models(offline), offline, 200, cfg, stub);

    TimeSeries online = synth_generate(AnomalyKind::kPoint, 200, 1, 0, 8);
    auto windows = segment(online, runner.window_spec());
    std::size_t steps = 0;
    for (const auto& w : windows) {
        if (steps >= 23) break;
        auto decision = runner.step(w.rows(online.values));
        ++steps;
        if (decision.reopt_triggered) trigger_steps.push_back(steps);
    }
    CHECK(trigger_steps == std::vector<std::size_t>{5, 10, 15, 20});
}

TEST_CASE("disabled re-optimization keeps models and decisions frozen", "[online]") {
    TimeSeries offline = synth_generate(AnomalyKind::kPoint, 300, 1, 2, 9);
    TimeSeries online = synth_generate(AnomalyKind::kPoint, 120, 1, 1, 10);

    int calls = 0;
    Reoptimizer counting = [&](const TimeSeries& buffer, std::size_t) {
        ++calls;
        return stub_models(buffer);
    };
    OnlineConfig cfg;
    cfg.period = 3;
    cfg.reopt = false;
    OnlineRunner runner(stub_models(offline), offline, 120, cfg, counting);
    auto windows = segment(online, runner.window_spec());
    for (std::size_t i = 0; i < 10; ++i) runner.step(windows[i].rows(online.values));
    CHECK(calls == 0);
    CHECK(runner.rounds() == 0);

    // replaying the same windows yields identical decisions
    OnlineRunner replay(stub_models(offline), offline, 120, cfg, counting);
    OnlineRunner replay2(stub_models(offline), offline, 120, cfg, counting);
    for (std::size_t i = 0; i < 10; ++i) {
        auto d1 = replay.step(windows[i].rows(online.values));
        auto d2 = replay2.step(windows[i].rows(online.values));
        CHECK(d1.final_decisions == d2.final_decisions);
        CHECK(d1.single_decisions == d2.single_decisions);
        CHECK(d1.ensemble_decisions == d2.ensemble_decisions);
    }
}

TEST_CASE("designation follows the higher validation fitness", "[online]") {
    TimeSeries offline = synth_generate(AnomalyKind::kPoint, 300, 1, 2, 11);
    SelectionModels m = stub_models(offline);
    CHECK(m.designated() == BranchKind::kEnsemble);
    m.single_fitness = 0.99;
    CHECK(m.designated() == BranchKind::kSingle);

    OnlineConfig cfg;
    OnlineRunner runner(m, offline, 100, cfg, {});
    TimeSeries online = synth_generate(AnomalyKind::kPoint, 100, 1, 0, 12);
    auto windows = segment(online, runner.window_spec());
    auto decision = runner.step(windows[0].rows(online.values));
    CHECK(decision.branch == BranchKind::kSingle);
    CHECK(decision.final_decisions == decision.single_decisions);
}

TEST_CASE("feedback labels reach the buffer at the next re-optimization", "[online]") {
    TimeSeries offline = synth_generate(AnomalyKind::kPoint, 300, 1, 2, 13);
    REQUIRE(offline.labeled());

    Reoptimizer stub = [&](const TimeSeries& buffer, std::size_t) { return stub_models(buffer); };
    OnlineConfig cfg;
    cfg.period = 2;
    OnlineRunner runner(stub_models(offline), offline, 200, cfg, stub);
    const auto spec = runner.window_spec();

    TimeSeries online = synth_generate(AnomalyKind::kPoint, 200, 1, 0, 14);
    auto windows = segment(online, spec);

    runner.step(windows[0].rows(online.values));
    std::vector<int> correction(spec.width, 1);
    runner.provide_feedback(0, correction);
    runner.step(windows[1].rows(online.values));  // triggers re-optimization

    // the first window's samples entered the buffer with corrected labels
    const auto& labels = runner.buffer().labels;
    REQUIRE(labels.size() == 300);
    const std::size_t incoming = spec.width + spec.stride;
    for (std::size_t i = labels.size() - incoming; i < labels.size() - spec.stride; ++i)
        CHECK(labels[i] == 1);
}

TEST_CASE("assembling with no pending samples leaves the buffer untouched", "[online]") {
    TimeSeries offline = synth_generate(AnomalyKind::kPoint, 200, 1, 0, 19);
    OnlineRunner runner(stub_models(offline), offline, 100, {}, {});
    const Matrix before = runner.buffer().values;
    runner.assemble_reopt_buffer();
    CHECK((runner.buffer().values - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("window width is enforced", "[online]") {
    TimeSeries offline = synth_generate(AnomalyKind::kPoint, 200, 1, 0, 15);
    OnlineRunner runner(stub_models(offline), offline, 200, {}, {});
    Matrix wrong = Matrix::Zero(3, 1);
    CHECK_THROWS_AS(runner.step(wrong), std::invalid_argument);
}
