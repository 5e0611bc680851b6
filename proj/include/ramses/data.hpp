#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ramses/rng.hpp"
#include "ramses/types.hpp"

namespace ramses {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back("");
    return cells;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

// Loads a comma-separated UTF-8 file with a header row. Feature columns are
// named freely; an optional final column named "label" holds 0/1. Row order
// is time order; there is no timestamp parsing.
inline TimeSeries load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file " + path);
    auto header = detail::split_csv_line(line);
    for (auto& h : header) h = detail::trim(h);
    if (header.empty()) throw std::runtime_error("load_csv: missing header in " + path);

    const bool has_label = header.back() == "label";
    const std::size_t d = header.size() - (has_label ? 1 : 0);
    if (d == 0) throw std::runtime_error("load_csv: no feature columns in " + path);

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        ++row_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("load_csv: ragged row " + std::to_string(row_no) +
                                     " (" + std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()) + ")");
        std::vector<double> row(d);
        for (std::size_t c = 0; c < d; ++c) {
            const std::string cell = detail::trim(cells[c]);
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != cell.size() || cell.empty())
                throw std::runtime_error("load_csv: non-numeric cell at row " +
                                         std::to_string(row_no) + ", column " + header[c]);
            row[c] = v;
        }
        rows.push_back(std::move(row));
        if (has_label) {
            const std::string cell = detail::trim(cells.back());
            if (cell == "0") labels.push_back(0);
            else if (cell == "1") labels.push_back(1);
            else
                throw std::runtime_error("load_csv: label outside {0,1} at row " +
                                         std::to_string(row_no));
        }
    }
    if (rows.empty()) throw std::runtime_error("load_csv: no data rows in " + path);

    TimeSeries ts;
    ts.name = path;
    ts.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < d; ++c)
            ts.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    ts.labels = std::move(labels);
    ts.validate();
    return ts;
}

inline void save_csv(const TimeSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_csv: cannot open " + path);
    for (Eigen::Index c = 0; c < series.dim(); ++c) {
        if (c > 0) out << ",";
        out << "f" << c;
    }
    if (series.labeled()) out << ",label";
    out << "\n";
    out.precision(17);
    for (Eigen::Index r = 0; r < series.length(); ++r) {
        for (Eigen::Index c = 0; c < series.dim(); ++c) {
            if (c > 0) out << ",";
            out << series.values(r, c);
        }
        if (series.labeled()) out << "," << series.labels[static_cast<std::size_t>(r)];
        out << "\n";
    }
}

// Sliding windows with 0-based starts t_i = i * stride; the last window is
// the final one fully inside the series. Trailing samples that do not fill a
// window are dropped.
inline std::vector<Window> segment(const TimeSeries& series, const WindowSpec& spec) {
    spec.validate();
    const std::size_t t = static_cast<std::size_t>(series.length());
    if (spec.width > t) throw std::invalid_argument("segment: window wider than series");
    const std::size_t count = (t - spec.width) / spec.stride + 1;
    std::vector<Window> windows;
    windows.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        windows.push_back(Window{i * spec.stride, spec.width});
    return windows;
}

// Chronological split: offline = first floor(fraction * T) rows, online = the
// rest. Labels split accordingly.
inline std::pair<TimeSeries, TimeSeries> split_offline_online(const TimeSeries& series,
                                                              const SplitSpec& spec) {
    spec.validate();
    const Eigen::Index t = series.length();
    const Eigen::Index cut =
        static_cast<Eigen::Index>(std::floor(spec.offline_fraction * static_cast<double>(t)));
    if (cut < 1 || t - cut < 1)
        throw std::invalid_argument("split_offline_online: series too short to split");

    TimeSeries offline, online;
    offline.name = series.name + "/offline";
    online.name = series.name + "/online";
    offline.values = series.values.topRows(cut);
    online.values = series.values.bottomRows(t - cut);
    if (series.labeled()) {
        offline.labels.assign(series.labels.begin(), series.labels.begin() + cut);
        online.labels.assign(series.labels.begin() + cut, series.labels.end());
    }
    return {std::move(offline), std::move(online)};
}

enum class AnomalyKind { kPoint, kContextual, kCollective };

inline const char* to_string(AnomalyKind k) {
    switch (k) {
        case AnomalyKind::kPoint: return "point";
        case AnomalyKind::kContextual: return "contextual";
        case AnomalyKind::kCollective: return "collective";
    }
    return "?";
}

// Labeled synthetic series: per-feature sinusoid plus Gaussian noise, with
// anomaly_count injected anomalies of the requested archetype. Labels mark
// exactly the perturbed timesteps. Deterministic given the seed.
inline TimeSeries synth_generate(AnomalyKind kind, std::size_t length, std::size_t d,
                                 std::size_t anomaly_count, std::uint64_t seed) {
    if (length < 100) throw std::invalid_argument("synth_generate: length must be >= 100");
    if (d < 1) throw std::invalid_argument("synth_generate: d must be >= 1");

    Rng rng = make_rng(seed, std::string("synth:") + to_string(kind));
    std::normal_distribution<double> noise(0.0, 0.1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    TimeSeries ts;
    ts.name = to_string(kind);
    ts.values.resize(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(d));
    ts.labels.assign(length, 0);

    std::vector<double> period(d), phase(d);
    for (std::size_t j = 0; j < d; ++j) {
        period[j] = 40.0 + 20.0 * unit(rng);
        phase[j] = unit(rng);
    }
    for (std::size_t t = 0; t < length; ++t)
        for (std::size_t j = 0; j < d; ++j)
            ts.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
                std::sin(2.0 * std::numbers::pi *
                         (static_cast<double>(t) / period[j] + phase[j])) +
                noise(rng);

    const std::size_t margin = 8;
    const std::size_t event_len = (kind == AnomalyKind::kCollective) ? 12 : 1;
    const std::size_t gap = (kind == AnomalyKind::kCollective) ? event_len + 6 : 6;

    // non-overlapping placement with a minimum gap between event starts
    std::vector<std::size_t> starts;
    if (anomaly_count > 0) {
        if (length < 2 * margin + anomaly_count * (event_len + gap))
            throw std::invalid_argument("synth_generate: anomaly_count too large to place");
        const std::size_t usable = length - 2 * margin - event_len;
        std::uniform_int_distribution<std::size_t> pos(0, usable);
        std::size_t attempts = 0;
        while (starts.size() < anomaly_count) {
            if (++attempts > 100000)
                throw std::invalid_argument("synth_generate: anomaly_count too large to place");
            const std::size_t s = margin + pos(rng);
            bool ok = true;
            for (std::size_t other : starts)
                if (s + event_len + gap > other && other + event_len + gap > s) { ok = false; break; }
            if (ok) starts.push_back(s);
        }
        std::sort(starts.begin(), starts.end());
    }

    for (std::size_t s : starts) {
        switch (kind) {
            case AnomalyKind::kPoint: {
                // isolated spike of 6..9 local (noise) standard deviations
                const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
                const double mag = sign * (6.0 + 3.0 * unit(rng)) * 0.1;
                for (std::size_t j = 0; j < d; ++j)
                    ts.values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) += mag;
                ts.labels[s] = 1;
                break;
            }
            case AnomalyKind::kContextual: {
                // value from the opposite phase: inside the global range but
                // violating the local trajectory
                for (std::size_t j = 0; j < d; ++j)
                    ts.values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) =
                        std::sin(2.0 * std::numbers::pi *
                                 (static_cast<double>(s) / period[j] + phase[j] + 0.5)) +
                        noise(rng);
                ts.labels[s] = 1;
                break;
            }
            case AnomalyKind::kCollective: {
                // subsequence replaced by a flat segment or a frequency-shifted one
                const bool flat = unit(rng) < 0.5;
                for (std::size_t t = s; t < s + event_len; ++t) {
                    for (std::size_t j = 0; j < d; ++j) {
                        const double v =
                            flat ? std::sin(2.0 * std::numbers::pi *
                                            (static_cast<double>(s) / period[j] + phase[j]))
                                 : std::sin(2.0 * std::numbers::pi *
                                            (4.0 * static_cast<double>(t) / period[j] + phase[j]));
                        ts.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
                            v + noise(rng);
                    }
                    ts.labels[t] = 1;
                }
                break;
            }
        }
    }
    return ts;
}

}  // namespace ramses
