#pragma once

/// @file ensemble.hpp
/// @brief The evolving model collection: selection policies, vote aggregation,
/// evaluation and the drift adaptation cycle.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftmap/classifier.hpp"
#include "driftmap/core.hpp"
#include "driftmap/density_band.hpp"
#include "driftmap/memory_manager.hpp"
#include "driftmap/model.hpp"
#include "driftmap/weak_supervision.hpp"

namespace driftmap {

enum class SelectionKind : std::uint8_t { All, Recent, TopPerforming, RecentTopPerforming, KNearestCentroid, RhoBandContaining };

inline std::string_view to_string(SelectionKind k) {
    switch (k) {
    case SelectionKind::All: return "all";
    case SelectionKind::Recent: return "recent";
    case SelectionKind::TopPerforming: return "top-performing";
    case SelectionKind::RecentTopPerforming: return "recent-top-performing";
    case SelectionKind::KNearestCentroid: return "k-nearest-centroid";
    case SelectionKind::RhoBandContaining: return "rho-band-containing";
    }
    return "unknown";
}

inline SelectionKind selection_from_string(std::string_view s) {
    for (auto k : {SelectionKind::All, SelectionKind::Recent, SelectionKind::TopPerforming,
                   SelectionKind::RecentTopPerforming, SelectionKind::KNearestCentroid, SelectionKind::RhoBandContaining})
        if (to_string(k) == s) return k;
    throw Error("unknown selection policy '" + std::string(s) + "'");
}

struct SelectionPolicy {
    SelectionKind kind = SelectionKind::KNearestCentroid;
    /// Neighbour count for KNearestCentroid.
    std::size_t k = 5;
    /// Subset size for the performance-ranked policies.
    std::size_t m = 3;
    /// RhoBandContaining: also accept points in the generalization shell beyond delta_h.
    bool include_generalization = false;
};

/// Ensemble-wide facts some policies need.
struct SelectionContext {
    DistanceMetric metric = DistanceMetric::Cosine;
    LambdaConfig lambda;
    /// Window index of the last adaptation cycle; -1 before any.
    std::int64_t last_adaptation = -1;
};

inline bool is_recent(const ModelEntry& m, const SelectionContext& ctx) {
    if (ctx.last_adaptation < 0) return true;
    return m.created_at >= ctx.last_adaptation || m.updated_at >= ctx.last_adaptation;
}

/// Indices of the chosen models, in policy order. An empty result is valid.
inline std::vector<std::size_t> select(const SelectionPolicy& policy, std::span<const double> x,
                                       std::span<const ModelEntry> models, const SelectionContext& ctx) {
    std::vector<std::size_t> idx;
    auto by_perf = [&](std::vector<std::size_t> pool) {
        std::stable_sort(pool.begin(), pool.end(),
                         [&](std::size_t a, std::size_t b) { return models[a].latest_perf() > models[b].latest_perf(); });
        if (pool.size() > policy.m) pool.resize(policy.m);
        return pool;
    };
    switch (policy.kind) {
    case SelectionKind::All:
        idx.resize(models.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        return idx;
    case SelectionKind::Recent:
        for (std::size_t i = 0; i < models.size(); ++i)
            if (is_recent(models[i], ctx)) idx.push_back(i);
        return idx;
    case SelectionKind::TopPerforming:
        idx.resize(models.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        return by_perf(std::move(idx));
    case SelectionKind::RecentTopPerforming:
        for (std::size_t i = 0; i < models.size(); ++i)
            if (is_recent(models[i], ctx)) idx.push_back(i);
        return by_perf(std::move(idx));
    case SelectionKind::KNearestCentroid: {
        std::vector<std::pair<double, std::size_t>> d;
        d.reserve(models.size());
        for (std::size_t i = 0; i < models.size(); ++i) d.emplace_back(models[i].distance_to(ctx.metric, x), i);
        std::stable_sort(d.begin(), d.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 0; i < d.size() && i < policy.k; ++i) idx.push_back(d[i].second);
        return idx;
    }
    case SelectionKind::RhoBandContaining:
        for (std::size_t i = 0; i < models.size(); ++i) {
            const double d = models[i].distance_to(ctx.metric, x);
            const bool inside = in_band(models[i].band, d) ||
                                (policy.include_generalization && models[i].band.delta_h <= d &&
                                 d < generalization_boundary(models[i].band, ctx.lambda));
            if (inside) idx.push_back(i);
        }
        return idx;
    }
    return idx;
}

enum class Weighting : std::uint8_t { Unweighted, Performance };

/// Normalized vote weights f_k / sum(f). All-zero performance falls back to equal weights.
inline std::vector<double> vote_weights(std::span<const double> perf) {
    std::vector<double> w(perf.begin(), perf.end());
    double sum = 0.0;
    for (double& v : w) {
        v = std::max(v, 0.0);
        sum += v;
    }
    if (sum <= 0.0) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
        return w;
    }
    for (double& v : w) v /= sum;
    return w;
}

inline Prediction predict(std::span<const double> x, std::span<const ModelEntry* const> members, Weighting weighting,
                          Label tie = Label::Negative) {
    if (members.empty()) throw Error("cannot predict with an empty model subset");
    std::vector<double> perf;
    perf.reserve(members.size());
    for (const auto* m : members) perf.push_back(weighting == Weighting::Performance ? m->latest_perf() : 1.0);
    const std::vector<double> w = vote_weights(perf);
    double score = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) score += w[i] * members[i]->classifier->score(x);
    return {threshold_label(score, tie), score};
}

struct BinaryMetrics {
    double tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 1.0, recall = 1.0, f_score = 1.0;

    void add(Label truth, Label predicted, double weight = 1.0) {
        if (truth == Label::Positive) (predicted == Label::Positive ? tp : fn) += weight;
        else (predicted == Label::Positive ? fp : tn) += weight;
    }

    /// With no positives on either side every prediction was a correct
    /// negative, which scores 1; otherwise empty denominators score 0.
    BinaryMetrics& finalize() {
        if (tp + fp + fn == 0) {
            precision = recall = f_score = 1.0;
            return *this;
        }
        precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        f_score = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
        return *this;
    }

    double count() const { return tp + fp + fn + tn; }
};

inline BinaryMetrics score_predictions(std::span<const Label> truth, std::span<const Label> predicted) {
    if (truth.size() != predicted.size()) throw Error("truth and prediction counts differ");
    BinaryMetrics m;
    for (std::size_t i = 0; i < truth.size(); ++i) m.add(truth[i], predicted[i]);
    return m.finalize();
}

/// Splits a labelled series into consecutive batches of `batch` and scores each.
/// A trailing partial batch is dropped.
inline std::vector<BinaryMetrics> batch_metrics(std::span<const Label> truth, std::span<const Label> predicted,
                                                std::size_t batch = 100) {
    if (truth.size() != predicted.size()) throw Error("truth and prediction counts differ");
    std::vector<BinaryMetrics> out;
    for (std::size_t s = 0; s + batch <= truth.size(); s += batch)
        out.push_back(score_predictions(truth.subspan(s, batch), predicted.subspan(s, batch)));
    return out;
}

struct AdaptConfig {
    DistanceMetric metric = DistanceMetric::Cosine;
    double rho = 0.5;
    std::size_t bins = kDefaultHistogramBins;
    double band_epsilon = kDefaultBandEpsilon;
    LambdaConfig lambda;
    double theta_w = 0.01;
    WeightFormula formula = WeightFormula::Corrected;
    std::size_t min_update_oracle = 1;
    std::size_t min_spawn_records = 200;
    std::size_t min_spawn_oracle = 20;
    std::size_t window_capacity = kDefaultMemoryCapacity;
    std::size_t memory_capacity = kDefaultMemoryCapacity;
};

struct AdaptReport {
    std::vector<std::int64_t> updated;
    std::vector<std::int64_t> skipped;
    std::int64_t spawned = -1;
};

/// Weighted f-score of a classifier on the samples it was trained on.
inline double training_fscore(const Classifier& c, std::span<const WeightedSample> samples) {
    BinaryMetrics m;
    for (const auto& s : samples)
        if (s.weight > 0.0) m.add(s.label, c.predict(s.record->vector).label, s.weight);
    return m.finalize().f_score;
}

inline std::vector<TrainingSample> as_training(std::span<const WeightedSample> samples) {
    std::vector<TrainingSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(TrainingSample{s.record->vector, s.label, s.weight});
    return out;
}

/// The model collection plus the shared general memory.
class Ensemble {
public:
    Ensemble() = default;
    Ensemble(std::size_t dimension, ClassifierFactory factory, std::size_t general_capacity = kDefaultMemoryCapacity)
        : dimension_(dimension), factory_(std::move(factory)), general_(general_capacity) {}

    std::vector<ModelEntry>& models() { return models_; }
    const std::vector<ModelEntry>& models() const { return models_; }
    GeneralMemory& general() { return general_; }
    const GeneralMemory& general() const { return general_; }
    std::size_t dimension() const { return dimension_; }
    std::int64_t last_adaptation() const { return last_adaptation_; }
    std::int64_t next_id() const { return next_id_; }
    const ClassifierFactory& factory() const { return factory_; }

    void restore_counters(std::int64_t next_id, std::int64_t last_adaptation) {
        next_id_ = next_id;
        last_adaptation_ = last_adaptation;
    }

    /// Trains a new model on fully labelled samples and fits its band.
    ModelEntry& add_model(std::span<const WeightedSample> samples, std::vector<RecordPtr> window_records,
                          std::int64_t window_index, const AdaptConfig& cfg, NormalizationState& norm, std::uint64_t seed) {
        ModelEntry m;
        m.model_id = next_id_++;
        m.classifier = factory_(dimension_);
        m.classifier->train(as_training(samples), mix_seed(seed, static_cast<std::uint64_t>(m.model_id)));
        m.window = BoundedMemory(cfg.window_capacity);
        for (auto& r : window_records) m.window.push(std::move(r));
        m.memory = ModelMemory(cfg.memory_capacity);
        m.created_at = m.updated_at = window_index;
        m.perf_history.push_back(training_fscore(*m.classifier, samples));
        recompute_band(m, cfg.metric, cfg.rho, norm, cfg.bins, cfg.band_epsilon);
        models_.push_back(std::move(m));
        return models_.back();
    }

    void push_restored(ModelEntry m) { models_.push_back(std::move(m)); }

    /// Drops memory content older than the current drift epoch.
    void trim_memories(std::int64_t timestamp) {
        for (auto& m : models_) m.memory.trim_before(timestamp);
        general_.trim_before(timestamp);
    }

    /// One adaptation cycle.
    ///
    /// Each model whose memory holds enough oracle records is updated on its
    /// weighted memory, which then moves into the model's window. A large enough
    /// general memory seeds a new model and is emptied. `general_lambda` is the
    /// weighting distance used for the general memory, which has no band of its own.
    AdaptReport adapt(const AdaptConfig& cfg, NormalizationState& norm, std::int64_t window_index, double general_lambda,
                      std::uint64_t seed) {
        AdaptReport report;
        for (auto& m : models_) {
            if (m.memory.empty()) continue;
            if (m.memory.oracle_count() < std::max<std::size_t>(cfg.min_update_oracle, 1)) {
                report.skipped.push_back(m.model_id);
                continue;
            }
            const std::vector<RecordPtr> mem = m.memory.snapshot();
            const OracleIndex index = build_index(mem, cfg.metric, m.scale);
            const double lambda = weighting_lambda(m.band, cfg.lambda);
            const std::vector<WeightedSample> samples = weigh_memory(mem, index, cfg.theta_w, lambda, cfg.formula);
            m.classifier->train(as_training(samples),
                                mix_seed(mix_seed(seed, static_cast<std::uint64_t>(m.model_id)),
                                         static_cast<std::uint64_t>(window_index)));
            for (const auto& r : mem) m.window.push(r);
            m.memory.clear();
            m.updated_at = window_index;
            m.perf_history.push_back(training_fscore(*m.classifier, samples));
            recompute_band(m, cfg.metric, cfg.rho, norm, cfg.bins, cfg.band_epsilon);
            report.updated.push_back(m.model_id);
        }

        if (general_.size() >= cfg.min_spawn_records && general_.oracle_count() >= std::max<std::size_t>(cfg.min_spawn_oracle, 1)) {
            const std::vector<RecordPtr> mem = general_.snapshot();
            NormalizationState scale = norm;
            const OracleIndex index = build_index(mem, cfg.metric, scale);
            const std::vector<WeightedSample> samples =
                weigh_memory(mem, index, cfg.theta_w, std::max(general_lambda, 1e-12), cfg.formula);
            const ModelEntry& fresh = add_model(samples, mem, window_index, cfg, norm,
                                                mix_seed(seed, static_cast<std::uint64_t>(window_index)));
            report.spawned = fresh.model_id;
            general_.clear();
        }
        last_adaptation_ = window_index;
        return report;
    }

private:
    std::size_t dimension_ = 0;
    ClassifierFactory factory_;
    std::vector<ModelEntry> models_;
    GeneralMemory general_;
    std::int64_t next_id_ = 0;
    std::int64_t last_adaptation_ = -1;
};

} // namespace driftmap
