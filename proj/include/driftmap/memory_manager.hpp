#pragma once

/// @file memory_manager.hpp
/// @brief Routing of incoming points into model memories and the general memory.
///
/// For each model consulted for a point x with normalized centroid distance d:
///   - delta_l < d < delta_h        : x joins the model's memory (in band);
///   - delta_h <= d < generalization: x joins the model's memory (generalization shell);
/// and x joins the general memory whenever it was in no consulted model's band.
/// A point in a generalization shell only is therefore written to both.

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "driftmap/core.hpp"
#include "driftmap/density_band.hpp"
#include "driftmap/model.hpp"

namespace driftmap {

enum class LambdaMode : std::uint8_t {
    /// Generalization boundary = delta_h + (delta_h - delta_l), clamped to 1.
    Offset,
    /// Generalization boundary = value, used as given.
    Raw,
};

struct LambdaConfig {
    LambdaMode mode = LambdaMode::Offset;
    double value = 0.0;
};

/// Outer edge of the generalization shell. A raw value at or below delta_h
/// leaves the shell empty.
inline double generalization_boundary(const RhoBand& band, const LambdaConfig& cfg) {
    if (cfg.mode == LambdaMode::Raw) return std::clamp(cfg.value, band.delta_h, 1.0);
    return std::min(1.0, band.delta_h + band.width());
}

/// Distance at which weak-supervision weights reach theta_w for this band.
inline double weighting_lambda(const RhoBand& band, const LambdaConfig& cfg) {
    if (cfg.mode == LambdaMode::Raw) return std::max(cfg.value, 1e-12);
    return std::max(band.width(), 1e-12);
}

struct RoutingOutcome {
    std::vector<std::int64_t> in_band;
    std::vector<std::int64_t> generalization;
    bool general = false;

    std::size_t destinations() const { return in_band.size() + generalization.size() + (general ? 1 : 0); }
};

/// Routes one point through the models selected for it.
///
/// Raw L1/L2 distances are reported to `norm` (the running bound); membership is
/// judged on each model's own normalization snapshot.
inline RoutingOutcome route_point(const RecordPtr& x, std::span<ModelEntry* const> ensemble, GeneralMemory& general,
                                  DistanceMetric metric, const LambdaConfig& lambda, NormalizationState* norm = nullptr) {
    RoutingOutcome out;
    for (ModelEntry* m : ensemble) {
        const double raw = raw_distance(metric, x->vector, m->centroid);
        if (norm) norm->observe(raw);
        const double d = normalize_raw(metric, raw, m->scale);
        if (in_band(m->band, d)) {
            m->memory.push(x);
            out.in_band.push_back(m->model_id);
        } else if (m->band.delta_h <= d && d < generalization_boundary(m->band, lambda)) {
            m->memory.push(x);
            out.generalization.push_back(m->model_id);
        }
    }
    if (out.in_band.empty()) {
        general.push(x);
        out.general = true;
    }
    return out;
}

/// Refits centroid, scale snapshot and band over the model's window and memory.
inline RhoBand recompute_band(ModelEntry& model, DistanceMetric metric, double rho, NormalizationState& norm,
                              std::size_t bins = kDefaultHistogramBins, double band_epsilon = kDefaultBandEpsilon) {
    const std::vector<RecordPtr> region = model.region_records();
    if (region.empty()) throw DegenerateInput("model " + std::to_string(model.model_id) + " has no data to fit");
    model.centroid = centroid(region);
    const std::vector<double> raw = raw_distances(metric, region, model.centroid);
    for (double d : raw) norm.observe(d);
    model.scale = norm;
    std::vector<double> d;
    d.reserve(raw.size());
    for (double r : raw) d.push_back(normalize_raw(metric, r, model.scale));
    model.band = compute_band(fit_distances(std::move(d), bins), rho, band_epsilon);
    return model.band;
}

} // namespace driftmap
