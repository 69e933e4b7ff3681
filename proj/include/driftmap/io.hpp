#pragma once

/// @file io.hpp
/// @brief Line-delimited record files and JSON forms of stream specs.
///
/// One record per line:
///
///     {"id": "r000000001", "vector": [..n reals..], "oracle_label": 1, "timestamp": 1, "label": 0}
///
/// `oracle_label` and `label` (hidden ground truth, evaluation only) are optional
/// and may be null.

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftmap/core.hpp"
#include "driftmap/stream_gen.hpp"

namespace driftmap {

using json = nlohmann::json;

class IngestError : public Error {
public:
    using Error::Error;
};

inline json label_json(const std::optional<Label>& l) { return l ? json(to_int(*l)) : json(nullptr); }

inline std::optional<Label> label_from_json(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer()) throw Error(std::string(key) + " must be 0, 1 or null");
    return label_from_int(it->get<long long>());
}

inline json record_to_json(const Record& r, bool with_predicted = false) {
    json j;
    j["id"] = r.id;
    j["vector"] = r.vector;
    j["oracle_label"] = label_json(r.oracle_label);
    j["timestamp"] = r.timestamp;
    if (r.truth) j["label"] = to_int(*r.truth);
    if (with_predicted && r.predicted_label) j["predicted_label"] = to_int(*r.predicted_label);
    return j;
}

/// Parses and validates one record. `dimension` 0 accepts any non-empty vector.
inline RecordPtr record_from_json(const json& j, std::size_t dimension) {
    if (!j.is_object()) throw Error("record is not a JSON object");
    auto r = std::make_shared<Record>();
    r->id = j.at("id").get<std::string>();
    const auto& v = j.at("vector");
    if (!v.is_array() || v.empty()) throw Error("vector must be a non-empty array");
    r->vector.reserve(v.size());
    for (const auto& x : v) {
        if (!x.is_number()) throw Error("vector components must be numbers");
        r->vector.push_back(x.get<double>());
    }
    if (dimension != 0 && r->vector.size() != dimension)
        throw DimensionMismatch("vector has " + std::to_string(r->vector.size()) + " components, expected " +
                                std::to_string(dimension));
    r->timestamp = j.at("timestamp").get<std::int64_t>();
    r->oracle_label = label_from_json(j, "oracle_label");
    r->truth = label_from_json(j, "label");
    r->predicted_label = label_from_json(j, "predicted_label");
    return r;
}

struct IngestResult {
    std::vector<RecordPtr> records;
    std::size_t malformed = 0;
    std::vector<std::string> warnings;
};

/// Reads a record file. Bad lines are skipped and counted; more than
/// `max_malformed_fraction` of bad lines aborts with IngestError.
inline IngestResult ingest(const std::string& path, std::size_t dimension, double max_malformed_fraction = 0.01) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open record file '" + path + "'");
    IngestResult out;
    std::string line;
    std::size_t lineno = 0, total = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++total;
        try {
            auto r = record_from_json(json::parse(line), dimension);
            if (dimension == 0) dimension = r->vector.size();
            out.records.push_back(std::move(r));
        } catch (const std::exception& e) {
            ++out.malformed;
            if (out.warnings.size() < 20) out.warnings.push_back(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (total > 0 && static_cast<double>(out.malformed) > max_malformed_fraction * static_cast<double>(total))
        throw IngestError(std::to_string(out.malformed) + " of " + std::to_string(total) + " lines in '" + path +
                          "' are malformed");
    return out;
}

inline void write_records(const std::string& path, const std::vector<RecordPtr>& records) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write record file '" + path + "'");
    for (const auto& r : records) out << record_to_json(*r).dump() << '\n';
    if (!out) throw Error("failed writing '" + path + "'");
}

inline json to_json(const StreamSpec& s) {
    json clusters = json::array();
    for (const auto& c : s.clusters) {
        json cj{{"mean_norm", c.mean_norm}, {"scale", c.scale}, {"label", to_int(c.label)}, {"weight", c.weight}};
        if (!c.mean.empty()) cj["mean"] = c.mean;
        clusters.push_back(std::move(cj));
    }
    json events = json::array();
    for (const auto& e : s.events) {
        json ej{{"type", std::string(to_string(e.type))}, {"onset", e.onset}, {"magnitude", e.magnitude},
                {"duration", e.duration}, {"period", e.period}, {"cluster", e.cluster}};
        if (!e.direction.empty()) ej["direction"] = e.direction;
        events.push_back(std::move(ej));
    }
    return json{{"dimension", s.dimension},
                {"length", s.length},
                {"clusters", clusters},
                {"events", events},
                {"noise_fraction", s.noise_fraction},
                {"oracle_fraction", s.oracle_fraction},
                {"noise",
                 {{"scale", s.noise.scale},
                  {"tail_dof", s.noise.tail_dof},
                  {"offset", s.noise.offset},
                  {"drift_per_record", s.noise.drift_per_record}}},
                {"seed", s.seed}};
}

inline StreamSpec stream_spec_from_json(const json& j) {
    StreamSpec s;
    s.dimension = j.value("dimension", s.dimension);
    s.length = j.value("length", s.length);
    s.noise_fraction = j.value("noise_fraction", s.noise_fraction);
    s.oracle_fraction = j.value("oracle_fraction", s.oracle_fraction);
    s.seed = j.value("seed", s.seed);
    if (auto it = j.find("noise"); it != j.end()) {
        s.noise.scale = it->value("scale", s.noise.scale);
        s.noise.tail_dof = it->value("tail_dof", s.noise.tail_dof);
        s.noise.offset = it->value("offset", s.noise.offset);
        s.noise.drift_per_record = it->value("drift_per_record", s.noise.drift_per_record);
    }
    for (const auto& cj : j.at("clusters")) {
        ClusterSpec c;
        c.mean = cj.value("mean", std::vector<double>{});
        c.mean_norm = cj.value("mean_norm", c.mean_norm);
        c.scale = cj.value("scale", c.scale);
        c.label = label_from_int(cj.value("label", 0));
        c.weight = cj.value("weight", c.weight);
        s.clusters.push_back(std::move(c));
    }
    if (auto it = j.find("events"); it != j.end()) {
        for (const auto& ej : *it) {
            DriftEvent e;
            e.type = drift_type_from_string(ej.at("type").get<std::string>());
            e.onset = ej.value("onset", e.onset);
            e.magnitude = ej.value("magnitude", e.magnitude);
            e.duration = ej.value("duration", e.duration);
            e.period = ej.value("period", e.period);
            e.cluster = ej.value("cluster", e.cluster);
            e.direction = ej.value("direction", std::vector<double>{});
            s.events.push_back(std::move(e));
        }
    }
    s.validate();
    return s;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline void write_json_file(const std::string& path, const json& j, int indent = 2) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << j.dump(indent) << '\n';
}

} // namespace driftmap
