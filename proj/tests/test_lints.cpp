#include <catch2/catch_amalgamated.hpp>

#include "ramses/data.hpp"
#include "ramses/lints.hpp"

using namespace ramses;

TEST_CASE("anneal schedules", "[lints]") {
    LinTsConfig cfg;
    CHECK(anneal(0.2, cfg, 0) == 0.2);
    CHECK(anneal(0.2, cfg, 100) == Catch::Approx(0.2 * std::pow(0.99, 100)).epsilon(1e-12));
    CHECK(anneal(0.2, cfg, 100) == Catch::Approx(0.0732).margin(5e-4));

    LinTsConfig expo;
    expo.decay_mode = EpsilonDecay::kExponential;
    expo.kappa = 0.0;
    CHECK(anneal(0.2, expo, 50) == 0.2);
    expo.kappa = -std::log(0.99);
    CHECK(anneal(0.2, expo, 100) == Catch::Approx(0.2 * std::pow(0.99, 100)).epsilon(1e-9));

    // strictly decreasing for decay < 1
    for (int t = 1; t < 20; ++t) CHECK(anneal(0.2, cfg, t) < anneal(0.2, cfg, t - 1));

    CHECK_THROWS_AS(anneal(0.2, cfg, -1), std::invalid_argument);
}

TEST_CASE("context features", "[lints]") {
    ContextExtractor ctx;
    const Matrix constant = Matrix::Constant(5, 2, 3.0);
    Vector raw = ctx.raw_features(constant);
    CHECK(raw(0) == 3.0);  // mean
    CHECK(raw(1) == 0.0);  // std
    CHECK(raw(4) == 0.0);  // mean abs diff
    CHECK(raw(5) == 0.0);  // autocorr convention
    CHECK(raw(6) == 0.0);  // range/std convention
    CHECK(raw(7) == 1.0);  // bias

    Matrix alternating(4, 1);
    alternating << 0, 1, 0, 1;
    Vector alt = ctx.raw_features(alternating);
    CHECK(alt(0) == 0.5);
    CHECK(alt(4) == 1.0);

    CHECK((ctx.raw_features(alternating) - alt).cwiseAbs().maxCoeff() == 0.0);

    Matrix too_short = Matrix::Zero(1, 1);
    CHECK_THROWS_AS(ctx.raw_features(too_short), std::invalid_argument);
}

TEST_CASE("running standardization updates after emission", "[lints]") {
    ContextExtractor ctx;
    Matrix w1(4, 1);
    w1 << 0, 1, 2, 3;
    const Vector first = ctx.extract(w1);
    CHECK((first - ctx.raw_features(w1)).cwiseAbs().maxCoeff() == 0.0);  // first is raw
    CHECK(ctx.seen() == 1);

    Matrix w2(4, 1);
    w2 << 10, 11, 12, 13;
    const Vector second = ctx.extract(w2);
    CHECK(second(7) == 1.0);                  // bias untouched
    CHECK(second(0) != ctx.raw_features(w2)(0));  // standardized against w1 stats
}

TEST_CASE("posterior updates follow the closed form", "[lints]") {
    Posterior p = Posterior::prior(1.0, 1);
    Vector x(1);
    x << 1.0;
    Posterior next = update_posterior(p, x, 1.0);
    CHECK(next.precision(0, 0) == Catch::Approx(2.0));
    CHECK(next.mean(0) == Catch::Approx(0.5));
    CHECK(next.observations == 1);

    Posterior zero = update_posterior(Posterior::prior(1.0, 1), x, 0.0);
    CHECK(zero.mean(0) == 0.0);

    CHECK_THROWS_AS(update_posterior(p, x, 1.5), std::invalid_argument);
}

TEST_CASE("sequential updates equal batch ridge regression", "[lints]") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 50);
        const double lambda = 1.0;
        Posterior p = Posterior::prior(lambda);
        Matrix x(n, kContextDim);
        Vector r(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < kContextDim; ++j) x(i, j) = g(rng);
            r(i) = unit(rng);
            p = update_posterior(p, x.row(i).transpose(), r(i));
        }
        const Matrix ridge =
            x.transpose() * x + lambda * Matrix::Identity(kContextDim, kContextDim);
        const Vector closed = ridge.llt().solve(x.transpose() * r);
        CHECK((p.mean - closed).cwiseAbs().maxCoeff() < 1e-8);

        // precision eigenvalues never fall below the prior
        Eigen::SelfAdjointEigenSolver<Matrix> eig(p.precision);
        CHECK(eig.eigenvalues().minCoeff() >= lambda - 1e-9);
    }
}

TEST_CASE("epsilon 1 selects uniformly", "[lints]") {
    const std::size_t arms = 4;
    std::vector<Posterior> posteriors(arms, Posterior::prior(1.0));
    Vector x = Vector::Ones(kContextDim);
    Rng rng(7);
    std::vector<int> counts(arms, 0);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) ++counts[select_arm(posteriors, x, 1.0, rng)];

    const double expected = draws / static_cast<double>(arms);
    const double sigma = std::sqrt(draws * (1.0 / arms) * (1.0 - 1.0 / arms));
    double chi2 = 0.0;
    for (int c : counts) {
        CHECK(std::abs(c - expected) < 3.0 * sigma);
        chi2 += (c - expected) * (c - expected) / expected;
    }
    CHECK(chi2 < 16.27);  // chi-square critical value, df = 3, p = 0.001
}

TEST_CASE("epsilon 0 exploits a dominant posterior", "[lints]") {
    std::vector<Posterior> posteriors(3, Posterior::prior(1.0));
    // push one arm's mean high along the bias coordinate with tight precision
    posteriors[1].mean = Vector::Zero(kContextDim);
    posteriors[1].mean(kContextDim - 1) = 10.0;
    posteriors[1].precision = 1e4 * Matrix::Identity(kContextDim, kContextDim);
    for (auto& p : {0, 2})
        posteriors[static_cast<std::size_t>(p)].precision =
            1e4 * Matrix::Identity(kContextDim, kContextDim);

    Vector x = Vector::Zero(kContextDim);
    x(kContextDim - 1) = 1.0;
    Rng rng(11);
    int wins = 0;
    for (int i = 0; i < 1000; ++i) wins += select_arm(posteriors, x, 0.0, rng) == 1;
    CHECK(wins >= 990);

    std::vector<Posterior> solo(1, Posterior::prior(1.0));
    CHECK(select_arm(solo, x, 0.0, rng) == 0);
}

TEST_CASE("stubbed rewards rank the good arm first across seeds", "[lints]") {
    TimeSeries series = synth_generate(AnomalyKind::kPoint, 400, 1, 0, 5);
    auto windows = segment(series, {40, 40});

    DetectorConfig rm;
    rm.family = Family::kRm;
    rm.params["window"] = 5;
    rm.id = "rm_a";
    DetectorConfig rm2 = rm;
    rm2.id = "rm_b";
    std::vector<FittedDetector> pool = {fit(rm, series), fit(rm2, series)};

    int good_first = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        LinTsConfig cfg;
        cfg.windows = 50;
        cfg.seed = seed;
        auto result = run_lints(cfg, pool, series, windows, SbaConfig{},
                                [](std::size_t arm, int) { return arm == 0 ? 1.0 : 0.0; });
        good_first += result.ranking.ids.front() == "rm_a";
    }
    CHECK(good_first >= 9);
}

TEST_CASE("default reward path runs and ranks everything once", "[lints]") {
    TimeSeries series = synth_generate(AnomalyKind::kPoint, 500, 1, 4, 9);
    auto windows = segment(series, {50, 50});

    std::vector<FamilyRequest> req = {{Family::kRm, 1, {}}, {Family::kKnn, 1, {}}};
    auto configs = build_pool(req, 1, 3);
    std::vector<FittedDetector> pool;
    for (const auto& c : configs) pool.push_back(fit(c, series));

    LinTsConfig cfg;
    cfg.windows = 12;
    cfg.seed = 21;
    SbaConfig sba;
    sba.seed = 22;
    auto result = run_lints(cfg, pool, series, windows, sba);
    REQUIRE(result.ranking.ids.size() == 2);
    result.ranking.validate();
    CHECK(result.steps.size() == 12);
    for (const auto& s : result.steps) {
        CHECK(s.reward >= 0.0);
        CHECK(s.reward <= 1.0);
    }

    auto again = run_lints(cfg, pool, series, windows, sba);
    CHECK(result.ranking.ids == again.ranking.ids);
    for (std::size_t i = 0; i < result.steps.size(); ++i) {
        CHECK(result.steps[i].arm == again.steps[i].arm);
        CHECK(result.steps[i].reward == again.steps[i].reward);
    }
}

namespace {

struct EchoState final : ramses::detail::ModelState {
    Vector raw_scores(const Matrix& data) const override { return data.col(0); }
};

// a detector whose normalized score equals feature 0 (calibrated to [0,1])
FittedDetector echo_detector() {
    DetectorConfig cfg;
    cfg.family = Family::kRm;
    cfg.id = "echo";
    return FittedDetector(cfg, std::make_shared<EchoState>(), 1, 0.0, 1.0);
}

TimeSeries labeled_window(std::initializer_list<int> labels) {
    TimeSeries ts;
    ts.values.resize(static_cast<Eigen::Index>(labels.size()), 1);
    Eigen::Index i = 0;
    for (int l : labels) {
        ts.values(i++, 0) = l;
        ts.labels.push_back(l);
    }
    return ts;
}

}  // namespace

TEST_CASE("reward blends f1 and buffer auc by alpha", "[lints]") {
    const FittedDetector echo = echo_detector();
    const TimeSeries perfect = labeled_window({0, 0, 1, 0, 0, 1});

    // perfect on both operands: r = 1 for any alpha
    std::vector<const TimeSeries*> buffer = {&perfect};
    CHECK(compute_reward(echo, perfect, buffer, 0.7) == 1.0);
    CHECK(compute_reward(echo, perfect, buffer, 0.3) == 1.0);

    // alpha = 1 collapses to the f1 term
    TimeSeries empty_buffer_window = labeled_window({0, 0, 0, 0});
    std::vector<const TimeSeries*> no_positive = {&empty_buffer_window};
    CHECK(compute_reward(echo, perfect, no_positive, 1.0) == 1.0);

    // f1 = 1 with a positive-free buffer: the auc term is 0, r = alpha
    CHECK(compute_reward(echo, perfect, no_positive, 0.7) == Catch::Approx(0.7));
}

TEST_CASE("single arm is always selected and ranked alone", "[lints]") {
    TimeSeries series = synth_generate(AnomalyKind::kPoint, 300, 1, 0, 4);
    auto windows = segment(series, {30, 30});
    DetectorConfig cfg;
    cfg.family = Family::kRm;
    cfg.params["window"] = 5;
    cfg.id = "only";
    std::vector<FittedDetector> pool = {fit(cfg, series)};

    LinTsConfig lc;
    lc.windows = 5;
    lc.seed = 8;
    auto result = run_lints(lc, pool, series, windows, SbaConfig{});
    CHECK(result.ranking.ids == std::vector<std::string>{"only"});
    for (const auto& s : result.steps) CHECK(s.arm == 0);
}

TEST_CASE("never-selected arms rank last in pool order", "[lints]") {
    TimeSeries series = synth_generate(AnomalyKind::kPoint, 300, 1, 0, 2);
    auto windows = segment(series, {30, 30});
    std::vector<FittedDetector> pool;
    for (int i = 0; i < 4; ++i) {
        DetectorConfig cfg;
        cfg.family = Family::kRm;
        cfg.params["window"] = 5 + i;
        cfg.id = "rm_" + std::to_string(i);
        pool.push_back(fit(cfg, series));
    }

    LinTsConfig cfg;
    cfg.windows = 3;  // fewer steps than arms, epsilon 0: greedy repeats
    cfg.epsilon0 = 0.0;
    cfg.seed = 3;
    auto result = run_lints(cfg, pool, series, windows, SbaConfig{},
                            [](std::size_t, int) { return 0.5; });
    std::set<std::size_t> selected;
    for (const auto& s : result.steps) selected.insert(s.arm);
    REQUIRE(result.ranking.ids.size() == 4);

    // the unselected tail appears in pool-index order
    std::vector<std::string> tail(result.ranking.ids.end() - (4 - selected.size()),
                                  result.ranking.ids.end());
    std::vector<std::string> expected;
    for (int i = 0; i < 4; ++i)
        if (!selected.count(static_cast<std::size_t>(i))) expected.push_back("rm_" + std::to_string(i));
    CHECK(tail == expected);
}
