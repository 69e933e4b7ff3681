#pragma once

/// @file config.hpp
/// @brief Run configuration and its JSON form.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "driftmap/classifier.hpp"
#include "driftmap/core.hpp"
#include "driftmap/drift_detector.hpp"
#include "driftmap/ensemble.hpp"
#include "driftmap/memory_manager.hpp"
#include "driftmap/weak_supervision.hpp"

namespace driftmap {

enum class RunMode : std::uint8_t {
    /// Initial models only; no detection, routing or adaptation.
    BaselineStatic,
    /// Detection with reference smoothing; models never change.
    DetectOnly,
    FullAdaptive,
};

inline std::string_view to_string(RunMode m) {
    switch (m) {
    case RunMode::BaselineStatic: return "baseline-static";
    case RunMode::DetectOnly: return "detect-only";
    case RunMode::FullAdaptive: return "full-adaptive";
    }
    return "unknown";
}

inline RunMode run_mode_from_string(std::string_view s) {
    for (auto m : {RunMode::BaselineStatic, RunMode::DetectOnly, RunMode::FullAdaptive})
        if (to_string(m) == s) return m;
    throw Error("unknown run mode '" + std::string(s) + "' (expected baseline-static, detect-only or full-adaptive)");
}

struct RunConfig {
    std::string input;
    std::string output_dir = "driftmap-out";
    std::size_t dimension = 300;
    RunMode mode = RunMode::FullAdaptive;

    DistanceMetric metric = DistanceMetric::Cosine;
    double rho = 0.5;
    std::optional<double> theta_kl;
    double calibration_percentile = 0.95;
    int calibration_resamples = 200;
    bool recalibrate_threshold = true;
    int smoothing_windows = 2;
    std::size_t stream_window_size = 1000;
    std::size_t histogram_bins = kDefaultHistogramBins;
    double band_epsilon = kDefaultBandEpsilon;
    ReferenceMode detector_reference = ReferenceMode::Pooled;
    std::size_t reference_capacity = 0;

    LambdaConfig lambda;
    double theta_w = 0.01;
    WeightFormula weight_formula = WeightFormula::Corrected;

    SelectionPolicy prediction_policy{SelectionKind::KNearestCentroid, 5, 3, false};
    SelectionPolicy routing_policy{SelectionKind::RhoBandContaining, 5, 3, true};
    Weighting weighting = Weighting::Performance;
    bool tie_positive = false;

    std::size_t memory_capacity = kDefaultMemoryCapacity;
    std::size_t general_capacity = kDefaultMemoryCapacity;
    std::size_t window_capacity = kDefaultMemoryCapacity;
    std::size_t min_spawn_records = 200;
    std::size_t min_spawn_oracle = 20;
    std::size_t min_update_oracle = 1;

    /// 0 picks min(10% of the stream, 5000).
    std::size_t initial_segment = 0;
    std::size_t initial_models = 3;
    /// Train the initial models on ground truth where the stream carries it.
    bool initial_truth_labels = true;
    LogisticOptions classifier;

    std::size_t eval_batch = 100;
    /// Write a checkpoint every this many windows; 0 disables.
    std::size_t checkpoint_every = 0;
    /// Stop (and checkpoint) after this many windows; 0 runs to the end.
    std::size_t max_windows = 0;
    std::uint64_t seed = 42;

    DetectorConfig detector_config() const {
        DetectorConfig d;
        d.rho = rho;
        d.theta_kl = theta_kl;
        d.smoothing_windows = smoothing_windows;
        d.stream_window_size = stream_window_size;
        d.metric = metric;
        d.bins = histogram_bins;
        d.band_epsilon = band_epsilon;
        d.reference_mode = detector_reference;
        d.reference_capacity = reference_capacity;
        d.calibration_percentile = calibration_percentile;
        d.calibration_resamples = calibration_resamples;
        d.recalibrate = recalibrate_threshold;
        return d;
    }

    AdaptConfig adapt_config() const {
        AdaptConfig a;
        a.metric = metric;
        a.rho = rho;
        a.bins = histogram_bins;
        a.band_epsilon = band_epsilon;
        a.lambda = lambda;
        a.theta_w = theta_w;
        a.formula = weight_formula;
        a.min_update_oracle = min_update_oracle;
        a.min_spawn_records = min_spawn_records;
        a.min_spawn_oracle = min_spawn_oracle;
        a.window_capacity = window_capacity;
        a.memory_capacity = memory_capacity;
        return a;
    }

    SelectionContext selection_context(std::int64_t last_adaptation) const {
        return SelectionContext{metric, lambda, last_adaptation};
    }

    void validate() const {
        detector_config().validate();
        check_weight_params(theta_w, 1.0);
        if (dimension == 0) throw Error("dimension must be positive");
        if (memory_capacity == 0 || general_capacity == 0 || window_capacity == 0)
            throw Error("memory, general and window capacities must be positive");
        if (initial_models == 0) throw Error("initial_models must be at least 1");
        if (eval_batch == 0) throw Error("eval_batch must be positive");
        if (lambda.mode == LambdaMode::Raw && !(lambda.value > 0.0 && lambda.value <= 1.0))
            throw Error("raw lambda must lie in (0,1]");
        if (prediction_policy.kind == SelectionKind::KNearestCentroid && prediction_policy.k == 0)
            throw Error("prediction policy k must be positive");
    }
};

namespace detail {

inline nlohmann::json policy_json(const SelectionPolicy& p) {
    return {{"kind", std::string(to_string(p.kind))}, {"k", p.k}, {"m", p.m}, {"include_generalization", p.include_generalization}};
}

inline SelectionPolicy policy_from_json(const nlohmann::json& j, SelectionPolicy p) {
    if (j.is_string()) {
        p.kind = selection_from_string(j.get<std::string>());
        return p;
    }
    p.kind = selection_from_string(j.at("kind").get<std::string>());
    p.k = j.value("k", p.k);
    p.m = j.value("m", p.m);
    p.include_generalization = j.value("include_generalization", p.include_generalization);
    return p;
}

} // namespace detail

inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["input"] = c.input;
    j["output_dir"] = c.output_dir;
    j["dimension"] = c.dimension;
    j["mode"] = std::string(to_string(c.mode));
    j["metric"] = std::string(to_string(c.metric));
    j["rho"] = c.rho;
    j["theta_kl"] = c.theta_kl ? nlohmann::json(*c.theta_kl) : nlohmann::json(nullptr);
    j["calibration_percentile"] = c.calibration_percentile;
    j["calibration_resamples"] = c.calibration_resamples;
    j["recalibrate_threshold"] = c.recalibrate_threshold;
    j["smoothing_windows"] = c.smoothing_windows;
    j["stream_window_size"] = c.stream_window_size;
    j["histogram_bins"] = c.histogram_bins;
    j["band_epsilon"] = c.band_epsilon;
    j["detector_reference"] = c.detector_reference == ReferenceMode::Pooled ? "pooled" : "per-model";
    j["reference_capacity"] = c.reference_capacity;
    j["lambda"] = {{"mode", c.lambda.mode == LambdaMode::Offset ? "offset" : "raw"}, {"value", c.lambda.value}};
    j["theta_w"] = c.theta_w;
    j["weight_formula"] = c.weight_formula == WeightFormula::Corrected ? "corrected" : "literal";
    j["prediction_policy"] = detail::policy_json(c.prediction_policy);
    j["routing_policy"] = detail::policy_json(c.routing_policy);
    j["weighting"] = c.weighting == Weighting::Performance ? "performance" : "unweighted";
    j["tie_positive"] = c.tie_positive;
    j["memory_capacity"] = c.memory_capacity;
    j["general_capacity"] = c.general_capacity;
    j["window_capacity"] = c.window_capacity;
    j["min_spawn_records"] = c.min_spawn_records;
    j["min_spawn_oracle"] = c.min_spawn_oracle;
    j["min_update_oracle"] = c.min_update_oracle;
    j["initial_segment"] = c.initial_segment;
    j["initial_models"] = c.initial_models;
    j["initial_labels"] = c.initial_truth_labels ? "truth" : "oracle";
    j["classifier"] = {{"kind", "logistic"},
                       {"epochs", c.classifier.epochs},
                       {"learning_rate", c.classifier.learning_rate},
                       {"l2", c.classifier.l2}};
    j["eval_batch"] = c.eval_batch;
    j["checkpoint_every"] = c.checkpoint_every;
    j["max_windows"] = c.max_windows;
    j["seed"] = c.seed;
    return j;
}

/// Parses a run config; every key is optional but unknown keys are rejected.
inline RunConfig run_config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "input", "output_dir", "dimension", "mode", "metric", "rho", "theta_kl", "calibration_percentile",
        "calibration_resamples", "recalibrate_threshold", "smoothing_windows", "stream_window_size", "histogram_bins", "band_epsilon",
        "detector_reference", "reference_capacity", "lambda", "theta_w", "weight_formula", "prediction_policy",
        "routing_policy", "weighting", "tie_positive", "memory_capacity", "general_capacity", "window_capacity",
        "min_spawn_records", "min_spawn_oracle", "min_update_oracle", "initial_segment", "initial_models",
        "initial_labels", "classifier", "eval_batch", "checkpoint_every", "max_windows", "seed"};
    if (!j.is_object()) throw Error("run config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!known.contains(key)) throw Error("unknown run config key '" + key + "'");

    RunConfig c;
    try {
        c.input = j.value("input", c.input);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.dimension = j.value("dimension", c.dimension);
        if (j.contains("mode")) c.mode = run_mode_from_string(j["mode"].get<std::string>());
        if (j.contains("metric")) c.metric = metric_from_string(j["metric"].get<std::string>());
        c.rho = j.value("rho", c.rho);
        if (j.contains("theta_kl") && !j["theta_kl"].is_null()) c.theta_kl = j["theta_kl"].get<double>();
        c.calibration_percentile = j.value("calibration_percentile", c.calibration_percentile);
        c.calibration_resamples = j.value("calibration_resamples", c.calibration_resamples);
        c.recalibrate_threshold = j.value("recalibrate_threshold", c.recalibrate_threshold);
        c.smoothing_windows = j.value("smoothing_windows", c.smoothing_windows);
        c.stream_window_size = j.value("stream_window_size", c.stream_window_size);
        c.histogram_bins = j.value("histogram_bins", c.histogram_bins);
        c.band_epsilon = j.value("band_epsilon", c.band_epsilon);
        if (j.contains("detector_reference")) {
            const auto s = j["detector_reference"].get<std::string>();
            if (s == "pooled") c.detector_reference = ReferenceMode::Pooled;
            else if (s == "per-model") c.detector_reference = ReferenceMode::PerModel;
            else throw Error("detector_reference must be 'pooled' or 'per-model'");
        }
        c.reference_capacity = j.value("reference_capacity", c.reference_capacity);
        if (j.contains("lambda")) {
            const auto& l = j["lambda"];
            const auto mode = l.value("mode", std::string("offset"));
            if (mode == "offset") c.lambda.mode = LambdaMode::Offset;
            else if (mode == "raw") c.lambda.mode = LambdaMode::Raw;
            else throw Error("lambda.mode must be 'offset' or 'raw'");
            c.lambda.value = l.value("value", 0.0);
        }
        c.theta_w = j.value("theta_w", c.theta_w);
        if (j.contains("weight_formula")) {
            const auto s = j["weight_formula"].get<std::string>();
            if (s == "corrected") c.weight_formula = WeightFormula::Corrected;
            else if (s == "literal") c.weight_formula = WeightFormula::Literal;
            else throw Error("weight_formula must be 'corrected' or 'literal'");
        }
        if (j.contains("prediction_policy")) c.prediction_policy = detail::policy_from_json(j["prediction_policy"], c.prediction_policy);
        if (j.contains("routing_policy")) c.routing_policy = detail::policy_from_json(j["routing_policy"], c.routing_policy);
        if (j.contains("weighting")) {
            const auto s = j["weighting"].get<std::string>();
            if (s == "performance") c.weighting = Weighting::Performance;
            else if (s == "unweighted") c.weighting = Weighting::Unweighted;
            else throw Error("weighting must be 'performance' or 'unweighted'");
        }
        c.tie_positive = j.value("tie_positive", c.tie_positive);
        c.memory_capacity = j.value("memory_capacity", c.memory_capacity);
        c.general_capacity = j.value("general_capacity", c.general_capacity);
        c.window_capacity = j.value("window_capacity", c.window_capacity);
        c.min_spawn_records = j.value("min_spawn_records", c.min_spawn_records);
        c.min_spawn_oracle = j.value("min_spawn_oracle", c.min_spawn_oracle);
        c.min_update_oracle = j.value("min_update_oracle", c.min_update_oracle);
        c.initial_segment = j.value("initial_segment", c.initial_segment);
        c.initial_models = j.value("initial_models", c.initial_models);
        if (j.contains("initial_labels")) {
            const auto s = j["initial_labels"].get<std::string>();
            if (s == "truth") c.initial_truth_labels = true;
            else if (s == "oracle") c.initial_truth_labels = false;
            else throw Error("initial_labels must be 'truth' or 'oracle'");
        }
        if (j.contains("classifier")) {
            const auto& cl = j["classifier"];
            if (cl.value("kind", std::string("logistic")) != "logistic") throw Error("only the 'logistic' classifier is built in");
            c.classifier.epochs = cl.value("epochs", c.classifier.epochs);
            c.classifier.learning_rate = cl.value("learning_rate", c.classifier.learning_rate);
            c.classifier.l2 = cl.value("l2", c.classifier.l2);
        }
        c.eval_batch = j.value("eval_batch", c.eval_batch);
        c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
        c.max_windows = j.value("max_windows", c.max_windows);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("invalid run config: ") + e.what());
    }
    c.validate();
    return c;
}

} // namespace driftmap
