#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ramses/data.hpp"
#include "ramses/detectors.hpp"
#include "ramses/ga.hpp"
#include "ramses/lints.hpp"
#include "ramses/meta.hpp"
#include "ramses/online.hpp"
#include "ramses/perturb.hpp"
#include "ramses/rank.hpp"

namespace ramses {

enum class LabelsMode { kSynthetic, kGroundTruth };

inline LabelsMode labels_mode_from_string(const std::string& s) {
    if (s == "synthetic") return LabelsMode::kSynthetic;
    if (s == "ground_truth") return LabelsMode::kGroundTruth;
    throw std::invalid_argument("unknown labels.mode: " + s);
}

inline const char* to_string(LabelsMode m) {
    return m == LabelsMode::kSynthetic ? "synthetic" : "ground_truth";
}

// Every module's knobs under one roof, resolved from a flat key = value file
// plus command-line overrides. Unknown keys are rejected.
struct RunConfig {
    std::uint64_t seed = 42;
    LabelsMode labels_mode = LabelsMode::kSynthetic;
    double offline_fraction = 0.8;
    std::size_t window_width = 0;   // 0 = 5% of the split, stride = width
    std::size_t window_stride = 0;
    std::vector<FamilyRequest> pool_requests;
    MetaKind meta_kind = MetaKind::kForest;
    MetaParams meta_params;
    GaConfig ga;
    LinTsConfig lints;
    GanConfig gan;
    SbaConfig sba;
    McConfig mc;
    Orientation rank_orientation = Orientation::kWinnerMass;
    OnlineConfig online;

    // raw key/value echo for reporting
    std::map<std::string, std::string> echo;
};

namespace detail {

inline const std::set<std::string>& known_scalar_keys() {
    static const std::set<std::string> keys = {
        "seed", "labels.mode", "split.offline_fraction", "window.width", "window.stride",
        "meta.kind", "meta.lr.rate", "meta.lr.epochs", "meta.lr.l2", "meta.rf.trees",
        "meta.rf.max_depth", "meta.rf.min_leaf", "meta.rf.features", "meta.svm.rate",
        "meta.svm.epochs", "meta.svm.l2", "ga.population", "ga.generations", "ga.mutation_rate",
        "ga.elite", "ga.sigma", "lints.windows", "lints.epsilon0", "lints.decay",
        "lints.decay_mode", "lints.kappa", "lints.alpha", "lints.lambda", "lints.buffer",
        "lints.smoothing", "gan.epochs", "gan.batch_size", "gan.noise_dim", "gan.learning_rate",
        "gan.dropout", "gan.real_target", "gan.fake_target", "gan.input_noise", "gan.tau",
        "gan.candidate_factor", "gan.rho", "sba.fraction", "sba.scale_min", "sba.scale_max",
        "sba.context_window", "mc.trials", "mc.noise_level", "mc.magnitude_min",
        "mc.magnitude_max", "mc.anomalies", "rank.orientation", "online.period", "online.reopt"};
    return keys;
}

inline const std::set<std::string>& known_pool_params() {
    static const std::set<std::string> keys = {"count", "k", "window", "bins", "components",
                                               "trees", "subsample", "clusters"};
    return keys;
}

inline bool is_known_key(const std::string& key) {
    if (known_scalar_keys().count(key)) return true;
    // pool.<family>.<param>
    if (key.rfind("pool.", 0) == 0) {
        const auto second_dot = key.find('.', 5);
        if (second_dot == std::string::npos) return false;
        const std::string family = key.substr(5, second_dot - 5);
        const std::string param = key.substr(second_dot + 1);
        try {
            family_from_string(family);
        } catch (const std::invalid_argument&) {
            return false;
        }
        return known_pool_params().count(param) > 0;
    }
    return false;
}

inline double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad numeric value for " + key + ": " + value);
    }
}

inline long long to_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer value for " + key + ": " + value);
    }
}

}  // namespace detail

// Parses "key = value" lines; '#' starts a comment; blank lines are skipped.
inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const std::string trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                        " is not key = value");
        const std::string key = detail::trim(trimmed.substr(0, eq));
        const std::string value = detail::trim(trimmed.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("config: empty key or value at line " +
                                        std::to_string(line_no));
        kv[key] = value;
    }
    return kv;
}

// Resolves raw key/value pairs into a RunConfig; later maps win (file first,
// then command-line overrides). RAMSES_SEED is the seed fallback when the
// key is absent everywhere.
inline RunConfig resolve_config(const std::vector<std::map<std::string, std::string>>& layers) {
    std::map<std::string, std::string> merged;
    for (const auto& layer : layers)
        for (const auto& [k, v] : layer) merged[k] = v;

    for (const auto& [k, v] : merged)
        if (!detail::is_known_key(k)) throw std::invalid_argument("config: unknown key " + k);

    RunConfig cfg;
    cfg.echo = merged;

    if (!merged.count("seed")) {
        if (const char* env = std::getenv("RAMSES_SEED"))
            merged["seed"] = env;
    }

    auto get_int = [&](const std::string& key, long long fallback) {
        const auto it = merged.find(key);
        return it == merged.end() ? fallback : detail::to_int(key, it->second);
    };
    auto get_double = [&](const std::string& key, double fallback) {
        const auto it = merged.find(key);
        return it == merged.end() ? fallback : detail::to_double(key, it->second);
    };
    auto get_string = [&](const std::string& key, const std::string& fallback) {
        const auto it = merged.find(key);
        return it == merged.end() ? fallback : it->second;
    };

    cfg.seed = static_cast<std::uint64_t>(get_int("seed", 42));
    cfg.labels_mode = labels_mode_from_string(get_string("labels.mode", "synthetic"));
    cfg.offline_fraction = get_double("split.offline_fraction", 0.8);
    cfg.window_width = static_cast<std::size_t>(get_int("window.width", 0));
    cfg.window_stride = static_cast<std::size_t>(get_int("window.stride", 0));

    cfg.meta_kind = meta_kind_from_string(get_string("meta.kind", "rf"));
    cfg.meta_params.lr_rate = get_double("meta.lr.rate", cfg.meta_params.lr_rate);
    cfg.meta_params.lr_epochs = static_cast<int>(get_int("meta.lr.epochs", cfg.meta_params.lr_epochs));
    cfg.meta_params.lr_l2 = get_double("meta.lr.l2", cfg.meta_params.lr_l2);
    cfg.meta_params.rf_trees = static_cast<int>(get_int("meta.rf.trees", cfg.meta_params.rf_trees));
    cfg.meta_params.rf_max_depth =
        static_cast<int>(get_int("meta.rf.max_depth", cfg.meta_params.rf_max_depth));
    cfg.meta_params.rf_min_leaf =
        static_cast<int>(get_int("meta.rf.min_leaf", cfg.meta_params.rf_min_leaf));
    cfg.meta_params.rf_features =
        static_cast<int>(get_int("meta.rf.features", cfg.meta_params.rf_features));
    cfg.meta_params.svm_rate = get_double("meta.svm.rate", cfg.meta_params.svm_rate);
    cfg.meta_params.svm_epochs =
        static_cast<int>(get_int("meta.svm.epochs", cfg.meta_params.svm_epochs));
    cfg.meta_params.svm_l2 = get_double("meta.svm.l2", cfg.meta_params.svm_l2);

    cfg.ga.population = static_cast<std::size_t>(get_int("ga.population", 20));
    cfg.ga.generations = static_cast<std::size_t>(get_int("ga.generations", 20));
    cfg.ga.mutation_rate = get_double("ga.mutation_rate", 0.1);
    cfg.ga.elite = static_cast<std::size_t>(get_int("ga.elite", 0));
    cfg.ga.sigma = get_double("ga.sigma", 1.0);

    cfg.lints.windows = static_cast<int>(get_int("lints.windows", 50));
    cfg.lints.epsilon0 = get_double("lints.epsilon0", 0.2);
    cfg.lints.decay = get_double("lints.decay", 0.99);
    const std::string decay_mode = get_string("lints.decay_mode", "multiplicative");
    if (decay_mode == "multiplicative") cfg.lints.decay_mode = EpsilonDecay::kMultiplicative;
    else if (decay_mode == "exponential") cfg.lints.decay_mode = EpsilonDecay::kExponential;
    else throw std::invalid_argument("config: unknown lints.decay_mode " + decay_mode);
    cfg.lints.kappa = get_double("lints.kappa", -std::log(0.99));
    cfg.lints.alpha = get_double("lints.alpha", 0.7);
    cfg.lints.lambda = get_double("lints.lambda", 1.0);
    cfg.lints.buffer = static_cast<int>(get_int("lints.buffer", 5));
    cfg.lints.smoothing = get_double("lints.smoothing", 0.0);

    cfg.gan.epochs = static_cast<int>(get_int("gan.epochs", 100));
    cfg.gan.batch_size = static_cast<int>(get_int("gan.batch_size", 64));
    cfg.gan.noise_dim = static_cast<int>(get_int("gan.noise_dim", 32));
    cfg.gan.learning_rate = get_double("gan.learning_rate", 1e-4);
    cfg.gan.dropout = get_double("gan.dropout", 0.4);
    cfg.gan.real_target = get_double("gan.real_target", 0.9);
    cfg.gan.fake_target = get_double("gan.fake_target", 0.1);
    cfg.gan.input_noise = get_double("gan.input_noise", 0.05);
    cfg.gan.tau = get_double("gan.tau", 0.5);
    cfg.gan.candidate_factor = static_cast<int>(get_int("gan.candidate_factor", 10));
    cfg.gan.rho = get_double("gan.rho", 0.1);

    cfg.sba.fraction = get_double("sba.fraction", 0.1);
    cfg.sba.scale_min = get_double("sba.scale_min", 0.95);
    cfg.sba.scale_max = get_double("sba.scale_max", 1.05);
    cfg.sba.context_window = static_cast<std::size_t>(get_int("sba.context_window", 50));

    cfg.mc.trials = static_cast<int>(get_int("mc.trials", 10));
    cfg.mc.noise_level = get_double("mc.noise_level", 0.1);
    cfg.mc.magnitude_min = get_double("mc.magnitude_min", 0.5);
    cfg.mc.magnitude_max = get_double("mc.magnitude_max", 3.0);
    cfg.mc.anomalies = static_cast<int>(get_int("mc.anomalies", 10));

    cfg.rank_orientation = orientation_from_string(get_string("rank.orientation", "winner_mass"));

    cfg.online.period = static_cast<std::size_t>(get_int("online.period", 5));
    const std::string reopt = get_string("online.reopt", "on");
    if (reopt == "on") cfg.online.reopt = true;
    else if (reopt == "off") cfg.online.reopt = false;
    else throw std::invalid_argument("config: online.reopt must be on or off");

    // pool requests, family by family, in a fixed order
    for (Family family : {Family::kKnn, Family::kLof, Family::kMd, Family::kRm, Family::kHbos,
                          Family::kPca, Family::kIforest, Family::kKmeans}) {
        const std::string prefix = std::string("pool.") + to_string(family) + ".";
        const auto count = get_int(prefix + "count", 0);
        if (count <= 0) continue;
        FamilyRequest req;
        req.family = family;
        req.count = static_cast<std::size_t>(count);
        for (const std::string& param : detail::known_pool_params()) {
            if (param == "count") continue;
            const auto it = merged.find(prefix + param);
            if (it != merged.end())
                req.fixed[param] = static_cast<int>(detail::to_int(prefix + param, it->second));
        }
        cfg.pool_requests.push_back(std::move(req));
    }
    if (cfg.pool_requests.empty()) {
        // default desk-scale pool: one of each statistical family
        for (Family family : {Family::kKnn, Family::kLof, Family::kMd, Family::kRm, Family::kHbos,
                              Family::kPca, Family::kIforest, Family::kKmeans})
            cfg.pool_requests.push_back({family, 1, {}});
    }

    cfg.ga.seed = derive_seed(cfg.seed, "ga");
    cfg.lints.seed = derive_seed(cfg.seed, "lints");
    cfg.gan.seed = derive_seed(cfg.seed, "gan");
    cfg.sba.seed = derive_seed(cfg.seed, "sba");
    cfg.mc.seed = derive_seed(cfg.seed, "mc");

    SplitSpec{cfg.offline_fraction}.validate();
    cfg.ga.validate();
    cfg.lints.validate();
    cfg.gan.validate();
    cfg.sba.validate();
    cfg.mc.validate();
    cfg.online.validate();
    return cfg;
}

// The same configuration under a different global seed (stage seeds
// re-derived); used by per-round re-optimization.
inline RunConfig with_seed(RunConfig cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.ga.seed = derive_seed(seed, "ga");
    cfg.lints.seed = derive_seed(seed, "lints");
    cfg.gan.seed = derive_seed(seed, "gan");
    cfg.sba.seed = derive_seed(seed, "sba");
    cfg.mc.seed = derive_seed(seed, "mc");
    return cfg;
}

}  // namespace ramses
