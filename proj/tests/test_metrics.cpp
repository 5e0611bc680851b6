#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "ramses/metrics.hpp"

using namespace ramses;

namespace {

// Independent step-rule AUC-PR: enumerate every distinct threshold and
// recompute precision/recall from scratch.
double auc_pr_oracle(const std::vector<double>& scores, const std::vector<int>& truth) {
    std::set<double, std::greater<double>> thresholds(scores.begin(), scores.end());
    std::size_t positives = 0;
    for (int t : truth) positives += static_cast<std::size_t>(t);
    double area = 0.0;
    double prev_recall = 0.0;
    for (double tau : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= tau) {
                if (truth[i]) ++tp;
                else ++fp;
            }
        }
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double recall = static_cast<double>(tp) / static_cast<double>(positives);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return area;
}

}  // namespace

TEST_CASE("event_f1 basics", "[metrics]") {
    SECTION("perfect match") {
        auto r = event_f1({0, 1, 1, 0}, {0, 1, 1, 0});
        CHECK(r.f1 == 1.0);
        CHECK(r.precision == 1.0);
        CHECK(r.recall == 1.0);
    }
    SECTION("disjoint events") {
        auto r = event_f1({1, 0, 0, 0}, {0, 0, 1, 1});
        CHECK(r.f1 == 0.0);
        CHECK(r.precision == 0.0);
        CHECK(r.recall == 0.0);
    }
    SECTION("two predicted events both overlapping one true event") {
        auto r = event_f1({0, 1, 0, 1, 0}, {0, 1, 1, 1, 0});
        CHECK(r.precision == 1.0);
        CHECK(r.recall == 1.0);
        CHECK(r.f1 == 1.0);
    }
    SECTION("predict-everything is penalized on sparse truth") {
        auto r = event_f1({1, 1, 1, 1, 1}, {0, 0, 1, 0, 0});
        CHECK(r.recall == 1.0);
        CHECK(r.precision == Catch::Approx(0.2));
    }
    SECTION("empty conventions") {
        CHECK(event_f1({0, 0}, {0, 0}).f1 == 1.0);
        CHECK(event_f1({0, 1}, {0, 0}).f1 == 0.0);
        CHECK(event_f1({0, 0}, {0, 1}).f1 == 0.0);
    }
    SECTION("length mismatch") {
        CHECK_THROWS_AS(event_f1({0}, {0, 1}), std::invalid_argument);
    }
}

TEST_CASE("event_f1 properties", "[metrics]") {
    std::mt19937_64 rng(7);
    std::bernoulli_distribution bit(0.3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 40;
        std::vector<int> pred(n), truth(n);
        for (auto& v : pred) v = bit(rng);
        for (auto& v : truth) v = bit(rng);

        // reversal invariance
        std::vector<int> rp(pred.rbegin(), pred.rend());
        std::vector<int> rt(truth.rbegin(), truth.rend());
        auto a = event_f1(pred, truth);
        auto b = event_f1(rp, rt);
        CHECK(a.f1 == Catch::Approx(b.f1).margin(1e-12));

        // identical vectors score 1 regardless of event count
        CHECK(event_f1(truth, truth).f1 == 1.0);
    }
}

TEST_CASE("auc_pr matches hand example and oracle", "[metrics]") {
    SECTION("perfect ranking") {
        CHECK(auc_pr({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);
    }
    SECTION("two-point sweep") {
        CHECK(auc_pr({0.9, 0.1}, {0, 1}) == Catch::Approx(0.5));
    }
    SECTION("no positives") {
        CHECK_THROWS_AS(auc_pr({0.5}, {0}), std::invalid_argument);
    }
    SECTION("oracle equivalence on random instances") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> score(0.0, 1.0);
        std::bernoulli_distribution bit(0.4);
        std::uniform_int_distribution<int> quant(0, 4);
        for (int trial = 0; trial < 300; ++trial) {
            const std::size_t n = 2 + rng() % 49;
            std::vector<double> s(n);
            std::vector<int> y(n, 0);
            // coarse scores force threshold ties
            for (auto& v : s) v = trial % 2 ? quant(rng) / 4.0 : score(rng);
            bool any = false;
            for (auto& v : y) any |= (v = bit(rng)) != 0;
            if (!any) y[0] = 1;
            CHECK(auc_pr(s, y) == auc_pr_oracle(s, y));
        }
    }
}

TEST_CASE("best_f1_threshold", "[metrics]") {
    SECTION("separable") {
        auto [tau, f1] = best_f1_threshold({0.1, 0.9}, {0, 1});
        CHECK(tau == 0.9);
        CHECK(f1 == 1.0);
    }
    SECTION("constant scores pick the single candidate") {
        auto [tau, f1] = best_f1_threshold({0.4, 0.4, 0.4}, {0, 1, 0});
        CHECK(tau == 0.4);
        CHECK(f1 == event_f1({1, 1, 1}, {0, 1, 0}).f1);
    }
    SECTION("scores equal to truth") {
        auto [tau, f1] = best_f1_threshold({0.0, 1.0, 1.0, 0.0}, {0, 1, 1, 0});
        CHECK(f1 == 1.0);
        CHECK(tau == 1.0);
    }
    SECTION("middle threshold wins when extremes misfire") {
        auto [tau, f1] = best_f1_threshold({0.2, 0.6, 0.2, 0.9, 0.2}, {0, 1, 0, 0, 0});
        CHECK(tau == 0.6);  // all-ones dilutes precision, 0.9 misses the event
        CHECK(f1 == Catch::Approx(2.0 / 3.0));
    }
    SECTION("empty input") {
        CHECK_THROWS_AS(best_f1_threshold({}, {}), std::invalid_argument);
    }
}
