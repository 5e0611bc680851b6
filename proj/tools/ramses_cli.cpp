#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ramses/config.hpp"
#include "ramses/data.hpp"
#include "ramses/pipeline.hpp"
#include "ramses/rank.hpp"

namespace {

using ramses::Json;

std::map<std::string, std::string> override_layer(const std::vector<std::string>& sets,
                                                  const std::string& seed) {
    std::map<std::string, std::string> layer;
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--set", "expected key=value, got " + kv);
        layer[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (!seed.empty()) layer["seed"] = seed;
    return layer;
}

ramses::RunConfig load_config(const std::string& config_path, const std::vector<std::string>& sets,
                              const std::string& seed) {
    std::vector<std::map<std::string, std::string>> layers;
    if (!config_path.empty()) layers.push_back(ramses::parse_config_file(config_path));
    layers.push_back(override_layer(sets, seed));
    return ramses::resolve_config(layers);
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    return out;
}

int run_select(const std::string& data, const std::string& config_path,
               const std::vector<std::string>& sets, const std::string& seed,
               const std::string& out_dir, bool with_stream) {
    const ramses::RunConfig cfg = load_config(config_path, sets, seed);
    const ramses::TimeSeries series = ramses::load_csv(data);
    const auto [offline, online] =
        ramses::split_offline_online(series, ramses::SplitSpec{cfg.offline_fraction});

    const ramses::SelectionReport report = ramses::run_offline(offline, cfg);
    {
        auto out = open_out(out_dir, "report.jsonl");
        ramses::write_report(report, out);
    }
    std::cout << "selected ensemble {";
    for (std::size_t i = 0; i < report.ensemble_ids.size(); ++i)
        std::cout << (i ? ", " : "") << report.ensemble_ids[i];
    std::cout << "}, single " << report.single_id << ", final branch "
              << to_string(report.models.designated()) << "\n";

    if (with_stream) {
        const ramses::OnlineRun run = ramses::run_online(offline, online, report, cfg);
        auto out = open_out(out_dir, "decisions.jsonl");
        ramses::write_decisions(run, out);
        std::cout << "streamed " << run.summary.windows << " windows, "
                  << run.summary.reopt_rounds << " re-optimizations";
        if (run.summary.labels_available)
            std::cout << ", final F1 " << run.summary.f1_final;
        std::cout << "\n";
    }
    return 0;
}

int run_synth(const std::string& kind, std::size_t length, std::size_t dim,
              std::size_t anomalies, std::uint64_t seed, const std::string& out_dir) {
    ramses::AnomalyKind k;
    if (kind == "point") k = ramses::AnomalyKind::kPoint;
    else if (kind == "contextual") k = ramses::AnomalyKind::kContextual;
    else if (kind == "collective") k = ramses::AnomalyKind::kCollective;
    else throw CLI::ValidationError("--kind", "must be point, contextual, or collective");

    const ramses::TimeSeries ts = ramses::synth_generate(k, length, dim, anomalies, seed);
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / "synthetic.csv";
    ramses::save_csv(ts, path.string());
    std::cout << "wrote " << path.string() << " (" << length << " x " << dim << ", " << anomalies
              << " " << kind << " anomalies)\n";
    return 0;
}

int run_aggregate(const std::string& rankings_path, const std::string& orientation,
                  const std::string& out_dir) {
    std::ifstream in(rankings_path);
    if (!in) throw std::runtime_error("cannot open " + rankings_path);
    std::vector<ramses::Ranking> rankings;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const Json j = Json::parse(line);
        ramses::Ranking r;
        r.ids = j.at("ids").get<std::vector<std::string>>();
        rankings.push_back(std::move(r));
    }
    if (rankings.empty()) throw std::runtime_error("no rankings in " + rankings_path);

    const ramses::Ranking consensus =
        ramses::aggregate(rankings, ramses::orientation_from_string(orientation));
    Json j;
    j["record"] = "consensus";
    j["ids"] = consensus.ids;
    j["stationary"] = consensus.scores;
    if (!out_dir.empty()) {
        auto out = open_out(out_dir, "consensus.jsonl");
        out << j.dump() << "\n";
    }
    std::cout << j.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"label-free model selection for time-series anomaly detection"};
    app.require_subcommand(1);

    std::string data, config_path, seed, out_dir = "out";
    std::vector<std::string> sets;

    auto add_common = [&](CLI::App* cmd, bool needs_data) {
        if (needs_data)
            cmd->add_option("--data", data, "input CSV (header row, optional label column)")
                ->required();
        cmd->add_option("--config", config_path, "flat key = value configuration file");
        cmd->add_option("--seed", seed, "global seed (overrides config and RAMSES_SEED)");
        cmd->add_option("--set", sets, "extra config overrides as key=value")->take_all();
        cmd->add_option("--out", out_dir, "output directory");
    };

    CLI::App* select = app.add_subcommand("select", "offline two-branch model selection");
    add_common(select, true);
    CLI::App* stream =
        app.add_subcommand("stream", "offline selection plus online simulation");
    add_common(stream, true);

    CLI::App* synth = app.add_subcommand("synth", "generate a labeled synthetic series");
    std::string kind = "point";
    std::size_t length = 1000, dim = 1, anomalies = 5;
    std::uint64_t synth_seed = 42;
    synth->add_option("--kind", kind, "point, contextual, or collective");
    synth->add_option("--length", length, "timesteps (>= 100)");
    synth->add_option("--dim", dim, "features");
    synth->add_option("--anomalies", anomalies, "anomaly count");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--out", out_dir, "output directory");

    CLI::App* aggregate = app.add_subcommand("aggregate", "fuse serialized rankings");
    std::string rankings_path, orientation = "winner_mass", agg_out;
    aggregate->add_option("--rankings", rankings_path, "JSON-lines file of {\"ids\": [...]}")
        ->required();
    aggregate->add_option("--orientation", orientation, "winner_mass or literal");
    aggregate->add_option("--out", agg_out, "directory to also write consensus.jsonl into");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (select->parsed()) return run_select(data, config_path, sets, seed, out_dir, false);
        if (stream->parsed()) return run_select(data, config_path, sets, seed, out_dir, true);
        if (synth->parsed()) return run_synth(kind, length, dim, anomalies, synth_seed, out_dir);
        if (aggregate->parsed()) return run_aggregate(rankings_path, orientation, agg_out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
