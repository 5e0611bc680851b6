#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ramses/detectors.hpp"
#include "ramses/meta.hpp"
#include "ramses/metrics.hpp"
#include "ramses/rng.hpp"

namespace ramses {

// A nonempty bit-set over detector pool indices; the genome of the search
// and the identity of a stacking ensemble.
struct Subset {
    std::vector<char> mask;  // one flag per pool index

    static Subset empty(std::size_t pool_size) { return Subset{std::vector<char>(pool_size, 0)}; }

    std::size_t pool_size() const { return mask.size(); }
    std::size_t count() const {
        return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
    }
    bool contains(std::size_t i) const { return mask[i] != 0; }

    std::vector<std::size_t> members() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask[i]) out.push_back(i);
        return out;
    }

    bool operator==(const Subset& other) const { return mask == other.mask; }
    bool operator<(const Subset& other) const { return mask < other.mask; }

    std::string to_string() const {
        std::string s(mask.size(), '0');
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask[i]) s[i] = '1';
        return s;
    }

    void validate() const {
        if (count() == 0) throw std::invalid_argument("Subset: empty");
    }
};

struct GaConfig {
    std::size_t population = 20;
    std::size_t generations = 20;
    double mutation_rate = 0.1;
    std::size_t elite = 0;       // 0 = max(2, population / 5)
    std::size_t parents = 2;
    double sigma = 1.0;          // fitness = sigma * f1 + (1 - sigma) * auc_pr
    std::uint64_t seed = 0;

    std::size_t elite_count() const {
        const std::size_t k = elite > 0 ? elite : std::max<std::size_t>(2, population / 5);
        return std::min(k, population - 1);
    }

    void validate() const {
        if (population < 2) throw std::invalid_argument("ga: population must be >= 2");
        if (generations < 1) throw std::invalid_argument("ga: generations must be >= 1");
        if (mutation_rate < 0.0 || mutation_rate > 1.0)
            throw std::invalid_argument("ga: mutation rate outside [0,1]");
        if (sigma < 0.0 || sigma > 1.0) throw std::invalid_argument("ga: sigma outside [0,1]");
        if (elite_count() < 1 || elite_count() >= population)
            throw std::invalid_argument("ga: elite count outside [1, population)");
    }
};

struct FitnessRecord {
    Subset subset;
    double f1 = 0.0;
    double auc_pr = 0.0;
    double fitness = 0.0;
    std::size_t generation = 0;
};

// Window-level scores and labels for one fold.
struct LabeledScores {
    ScoreMatrix scores;
    std::vector<int> labels;

    void validate() const {
        scores.validate();
        if (static_cast<std::size_t>(scores.scores.rows()) != labels.size())
            throw std::invalid_argument("LabeledScores: label count mismatch");
    }
};

struct GaGeneration {
    std::size_t generation = 0;
    double best_fitness = 0.0;
    double mean_fitness = 0.0;
    Subset best_subset;
};

struct GaResult {
    Subset best;
    FitnessRecord record;
    std::vector<GaGeneration> history;
};

namespace detail {

inline Matrix select_columns(const Matrix& m, const std::vector<std::size_t>& cols) {
    Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
        out.col(static_cast<Eigen::Index>(c)) = m.col(static_cast<Eigen::Index>(cols[c]));
    return out;
}

}  // namespace detail

// Trains the fixed meta-learner on the subset's train-fold score columns and
// scores it on the validation fold. The evaluation seed depends only on
// (seed, subset), so re-evaluations are pure replays.
inline FitnessRecord evaluate_subset(const Subset& subset, MetaKind meta_kind,
                                     const LabeledScores& train, const LabeledScores& val,
                                     std::uint64_t seed, double sigma = 1.0,
                                     const MetaParams& params = {}) {
    subset.validate();
    train.validate();
    val.validate();

    const auto members = subset.members();
    const Matrix train_x = detail::select_columns(train.scores.scores, members);
    const Matrix val_x = detail::select_columns(val.scores.scores, members);

    const std::uint64_t eval_seed = derive_seed(seed, "eval:" + subset.to_string());
    const TrainedMeta meta = train_meta(meta_kind, train_x, train.labels, eval_seed, params);
    const Vector pred = predict_meta(meta, val_x);

    std::vector<double> scores(pred.data(), pred.data() + pred.size());
    FitnessRecord rec;
    rec.subset = subset;
    rec.f1 = best_f1_threshold(scores, val.labels).second;
    const bool has_positive =
        std::any_of(val.labels.begin(), val.labels.end(), [](int l) { return l == 1; });
    rec.auc_pr = has_positive ? auc_pr(scores, val.labels) : 0.0;
    rec.fitness = sigma * rec.f1 + (1.0 - sigma) * rec.auc_pr;
    return rec;
}

// Uniform crossover: each pool index inherits membership from either parent
// with probability 1/2; an empty child gets one uniformly chosen member of
// the parents' union.
inline Subset crossover(const Subset& a, const Subset& b, Rng& rng) {
    a.validate();
    b.validate();
    if (a.pool_size() != b.pool_size()) throw std::invalid_argument("crossover: size mismatch");
    std::bernoulli_distribution coin(0.5);
    Subset child = Subset::empty(a.pool_size());
    for (std::size_t i = 0; i < child.pool_size(); ++i)
        child.mask[i] = coin(rng) ? a.mask[i] : b.mask[i];
    if (child.count() == 0) {
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < a.pool_size(); ++i)
            if (a.mask[i] || b.mask[i]) pool.push_back(i);
        child.mask[pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]] = 1;
    }
    return child;
}

// Single-gate mutation: with probability rate, one action chosen uniformly
// from add / remove / swap. Impossible actions (add when full, remove when
// removing would empty a singleton) degrade to no-ops.
inline Subset mutate(const Subset& subset, double rate, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) >= rate) return subset;

    Subset out = subset;
    std::vector<std::size_t> members, non_members;
    for (std::size_t i = 0; i < out.pool_size(); ++i)
        (out.mask[i] ? members : non_members).push_back(i);

    auto pick = [&](const std::vector<std::size_t>& v) {
        return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
    };
    switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
        case 0:  // add
            if (!non_members.empty()) out.mask[pick(non_members)] = 1;
            break;
        case 1:  // remove
            if (!members.empty()) out.mask[pick(members)] = 0;
            break;
        default:  // swap
            if (!members.empty() && !non_members.empty()) {
                out.mask[pick(members)] = 0;
                out.mask[pick(non_members)] = 1;
            }
            break;
    }
    if (out.count() == 0) out.mask[pick(members)] = 1;  // repair as in crossover
    return out;
}

// Generation 0 holds P distinct random nonempty subsets; when fewer than P
// exist (P >= 2^M - 1) every subset is enumerated, which makes generation 0
// an exhaustive search, and the remainder is filled with random duplicates.
inline std::vector<Subset> initial_population(std::size_t pool_size, std::size_t population,
                                              Rng& rng) {
    std::vector<Subset> out;
    std::bernoulli_distribution coin(0.5);
    auto random_subset = [&]() {
        Subset s = Subset::empty(pool_size);
        for (auto& bit : s.mask) bit = coin(rng);
        if (s.count() == 0)
            s.mask[std::uniform_int_distribution<std::size_t>(0, pool_size - 1)(rng)] = 1;
        return s;
    };

    const double distinct_total = std::pow(2.0, static_cast<double>(pool_size)) - 1.0;
    if (distinct_total <= static_cast<double>(population)) {
        for (std::uint64_t bits = 1; bits < (1ull << pool_size); ++bits) {
            Subset s = Subset::empty(pool_size);
            for (std::size_t i = 0; i < pool_size; ++i) s.mask[i] = (bits >> i) & 1u;
            out.push_back(std::move(s));
        }
        while (out.size() < population) out.push_back(random_subset());
        return out;
    }

    std::set<std::vector<char>> seen;
    while (out.size() < population) {
        Subset s = random_subset();
        if (seen.insert(s.mask).second) out.push_back(std::move(s));
    }
    return out;
}

// Elitist genetic search over detector subsets (fitness via evaluate_subset,
// memoized). Deterministic given the config seed.
inline GaResult run_ga(const GaConfig& config, MetaKind meta_kind, const LabeledScores& train,
                       const LabeledScores& val, const MetaParams& params = {}) {
    config.validate();
    train.validate();
    val.validate();
    const std::size_t pool_size = train.scores.detector_ids.size();
    if (pool_size < 2) throw std::invalid_argument("run_ga: need a pool of at least 2");
    if (pool_size > 63) throw std::invalid_argument("run_ga: pool too large for subset masks");

    std::map<std::vector<char>, FitnessRecord> memo;
    auto evaluate = [&](const Subset& s, std::size_t generation) {
        auto it = memo.find(s.mask);
        if (it != memo.end()) return it->second;
        FitnessRecord rec =
            evaluate_subset(s, meta_kind, train, val, config.seed, config.sigma, params);
        rec.generation = generation;
        return memo.emplace(s.mask, std::move(rec)).first->second;
    };

    Rng init_rng = make_rng(config.seed, "ga:init");
    std::vector<Subset> population = initial_population(pool_size, config.population, init_rng);

    GaResult result;
    bool have_best = false;
    const std::size_t elites = config.elite_count();

    for (std::size_t gen = 0; gen < config.generations; ++gen) {
        std::vector<FitnessRecord> records;
        records.reserve(population.size());
        double fitness_sum = 0.0;
        for (const auto& s : population) {
            records.push_back(evaluate(s, gen));
            fitness_sum += records.back().fitness;
        }

        std::vector<std::size_t> order(population.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return records[a].fitness > records[b].fitness;
        });

        const FitnessRecord& gen_best = records[order.front()];
        if (!have_best || gen_best.fitness > result.record.fitness) {
            result.record = gen_best;
            result.best = gen_best.subset;
            have_best = true;
        }
        result.history.push_back(
            {gen, gen_best.fitness, fitness_sum / static_cast<double>(population.size()),
             gen_best.subset});

        if (gen + 1 == config.generations) break;

        // elites carry over unchanged; children refill the rest
        std::vector<Subset> next;
        next.reserve(population.size());
        for (std::size_t e = 0; e < elites; ++e) next.push_back(population[order[e]]);

        Rng gen_rng = make_rng(config.seed, "ga:gen:" + std::to_string(gen));
        std::uniform_int_distribution<std::size_t> pick_elite(0, elites - 1);
        while (next.size() < population.size()) {
            std::size_t p1 = pick_elite(gen_rng);
            std::size_t p2 = pick_elite(gen_rng);
            if (elites >= 2 && config.parents >= 2)
                while (p2 == p1) p2 = pick_elite(gen_rng);
            Subset child =
                crossover(population[order[p1]], population[order[p2]], gen_rng);
            child = mutate(child, config.mutation_rate, gen_rng);
            next.push_back(std::move(child));
        }
        population = std::move(next);
    }
    return result;
}

}  // namespace ramses
