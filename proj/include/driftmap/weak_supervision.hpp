#pragma once

/// @file weak_supervision.hpp
/// @brief Distance-decay training weights for records without oracle labels.
///
/// A non-oracle record x with predicted label y is weighted against its nearest
/// oracle-labelled neighbour x_o (label y_o) at distance d:
///
///     w = exp(alpha * d) * [y == y_o],   alpha = ln(theta_w) / lambda
///
/// so w(0) = 1 and w(lambda) = theta_w exactly. The literal exponent
/// alpha = -ln(theta_w / lambda) does not reach theta_w at lambda; it is kept
/// behind WeightFormula::Literal (clamped to 1) for comparison runs only.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "driftmap/core.hpp"
#include "driftmap/kd_tree.hpp"

namespace driftmap {

enum class WeightFormula : std::uint8_t { Corrected, Literal };

enum class SampleSource : std::uint8_t { Oracle, Weak };

struct WeightedSample {
    RecordPtr record;
    double weight = 1.0;
    /// Label used for training: the oracle label, or the prediction for weak samples.
    Label label = Label::Negative;
    SampleSource source = SampleSource::Oracle;
};

inline void check_weight_params(double theta_w, double lambda) {
    if (!(theta_w > 0.0 && theta_w < 1.0)) throw Error("theta_w must lie in (0,1), got " + std::to_string(theta_w));
    if (!(lambda > 0.0)) throw Error("lambda must be positive, got " + std::to_string(lambda));
}

inline double weight_alpha(double theta_w, double lambda, WeightFormula formula = WeightFormula::Corrected) {
    check_weight_params(theta_w, lambda);
    return formula == WeightFormula::Corrected ? std::log(theta_w) / lambda : -std::log(theta_w / lambda);
}

/// Weight for a label-agreeing sample at normalized distance `d`.
inline double decay_weight(double d, double theta_w, double lambda, WeightFormula formula = WeightFormula::Corrected) {
    const double w = std::exp(weight_alpha(theta_w, lambda, formula) * d);
    return formula == WeightFormula::Literal ? std::min(w, 1.0) : w;
}

/// Index over the oracle-labelled records of a memory.
inline OracleIndex build_index(std::span<const RecordPtr> memory, DistanceMetric metric, NormalizationState scale = {}) {
    std::vector<RecordPtr> oracle;
    for (const auto& r : memory)
        if (r->has_oracle()) oracle.push_back(r);
    if (oracle.empty()) throw DegenerateInput("memory holds no oracle-labelled records");
    return OracleIndex(std::move(oracle), metric, scale);
}

inline WeightedSample weigh_sample(const RecordPtr& x, const OracleIndex& index, double theta_w, double lambda,
                                   WeightFormula formula = WeightFormula::Corrected) {
    check_weight_params(theta_w, lambda);
    if (!x->predicted_label) throw Error("record '" + x->id + "' has no predicted label to weigh");
    const auto nn = index.nearest(x->vector);
    WeightedSample s;
    s.record = x;
    s.source = SampleSource::Weak;
    s.label = *x->predicted_label;
    s.weight = (*nn.record->oracle_label == *x->predicted_label) ? decay_weight(nn.distance, theta_w, lambda, formula)
                                                                 : 0.0;
    return s;
}

/// Oracle records pass through with weight 1; every other record is weighed.
inline std::vector<WeightedSample> weigh_memory(std::span<const RecordPtr> memory, const OracleIndex& index,
                                                double theta_w, double lambda,
                                                WeightFormula formula = WeightFormula::Corrected) {
    std::vector<WeightedSample> out;
    out.reserve(memory.size());
    for (const auto& r : memory) {
        if (r->has_oracle())
            out.push_back(WeightedSample{r, 1.0, *r->oracle_label, SampleSource::Oracle});
        else
            out.push_back(weigh_sample(r, index, theta_w, lambda, formula));
    }
    return out;
}

} // namespace driftmap
