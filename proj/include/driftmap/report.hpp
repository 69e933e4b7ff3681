#pragma once

/// @file report.hpp
/// @brief Summary and plot-ready series from a run's metrics directory.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "driftmap/core.hpp"
#include "driftmap/pipeline.hpp"

namespace driftmap {

/// A parsed TSV file: header plus string cells.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw Error("column '" + name + "' not found");
    }
};

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) out.push_back(cell);
    return out;
}

inline Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw Error("'" + path.string() + "' is empty");
    t.header = split_tabs(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_tabs(line);
        if (cells.size() != t.header.size()) throw Error("ragged row in '" + path.string() + "'");
        t.rows.push_back(std::move(cells));
    }
    return t;
}

struct RunSummary {
    std::size_t windows = 0;
    std::size_t batches = 0;
    std::size_t detections = 0;
    std::size_t adaptations = 0;
    std::size_t final_models = 0;
    double mean_precision = 0.0;
    double mean_recall = 0.0;
    double mean_f = 0.0;
};

inline double mean_column(const Table& t, const std::string& name) {
    const std::size_t c = t.column(name);
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& r : t.rows) {
        if (r[c] == "NA") continue;
        s += std::stod(r[c]);
        ++n;
    }
    return n ? s / static_cast<double>(n) : 0.0;
}

inline RunSummary summarize(const Table& windows, const Table& batches) {
    RunSummary s;
    s.windows = windows.rows.size();
    s.batches = batches.rows.size();
    const std::size_t det = windows.column("drift_detected"), ad = windows.column("adapted"),
                      mc = windows.column("model_count");
    for (const auto& r : windows.rows) {
        s.detections += r[det] == "1";
        s.adaptations += r[ad] == "1";
    }
    if (!windows.rows.empty()) s.final_models = std::stoul(windows.rows.back()[mc]);
    s.mean_precision = mean_column(batches, "precision");
    s.mean_recall = mean_column(batches, "recall");
    s.mean_f = mean_column(batches, "f_score");
    return s;
}

/// Writes summary.txt plus the series files. Each series has one row per window;
/// detection_markers.tsv has one row per detection.
inline RunSummary write_report(const std::filesystem::path& metrics_dir, const std::filesystem::path& out_dir) {
    const Table windows = read_table(metrics_dir / "windows.tsv");
    const Table batches = read_table(metrics_dir / "batches.tsv");
    std::filesystem::create_directories(out_dir);

    auto series = [&](const std::string& file, const std::vector<std::string>& cols, bool detections_only = false) {
        std::ofstream out(out_dir / file);
        if (!out) throw Error("cannot write '" + (out_dir / file).string() + "'");
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            idx.push_back(windows.column(cols[i]));
            out << (i ? "\t" : "") << cols[i];
        }
        out << '\n';
        const std::size_t det = windows.column("drift_detected");
        for (const auto& r : windows.rows) {
            if (detections_only && r[det] != "1") continue;
            for (std::size_t i = 0; i < idx.size(); ++i) out << (i ? "\t" : "") << r[idx[i]];
            out << '\n';
        }
    };
    series("series_performance.tsv", {"window_index", "precision", "recall", "f_score"});
    series("series_kl.tsv", {"window_index", "kl_score", "theta_kl", "drift_detected"});
    series("series_models.tsv", {"window_index", "model_count", "general_memory", "adapted"});
    series("detection_markers.tsv", {"window_index", "start", "kl_score", "theta_kl"}, true);

    const RunSummary s = summarize(windows, batches);
    std::ofstream out(out_dir / "summary.txt");
    out << "windows\t" << s.windows << '\n'
        << "batches\t" << s.batches << '\n'
        << "detections\t" << s.detections << '\n'
        << "adaptations\t" << s.adaptations << '\n'
        << "final_models\t" << s.final_models << '\n'
        << "mean_batch_precision\t" << detail::fmt(s.mean_precision) << '\n'
        << "mean_batch_recall\t" << detail::fmt(s.mean_recall) << '\n'
        << "mean_batch_f_score\t" << detail::fmt(s.mean_f) << '\n';
    if (!out) throw Error("cannot write summary into '" + out_dir.string() + "'");
    return s;
}

} // namespace driftmap
