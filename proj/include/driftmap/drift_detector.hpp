#pragma once

/// @file drift_detector.hpp
/// @brief Unsupervised virtual-drift detection: KL divergence between the rho-band
/// distance histograms of a reference (model) window and each streaming window.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "driftmap/core.hpp"
#include "driftmap/density_band.hpp"

namespace driftmap {

/// Half-open range of histogram bins [first, last).
struct BinRange {
    std::size_t first = 0;
    std::size_t last = 0;

    std::size_t size() const { return last - first; }
};

/// Bins whose span overlaps the open band (delta_l, delta_h).
inline BinRange band_bins(const RhoBand& band, std::size_t bins) {
    const double w = 1.0 / static_cast<double>(bins);
    BinRange r{bins, 0};
    for (std::size_t i = 0; i < bins; ++i) {
        const double lo = static_cast<double>(i) * w;
        const double hi = static_cast<double>(i + 1) * w;
        if (hi > band.delta_l && lo < band.delta_h) {
            r.first = std::min(r.first, i);
            r.last = std::max(r.last, i + 1);
        }
    }
    if (r.first >= r.last) r = {bin_of(band.delta_l, bins), bin_of(band.delta_l, bins) + 1};
    return r;
}

/// KL(P_A || P_B) in nats over the bins in `range`.
///
/// Zero bins in either histogram are replaced by the smallest nonzero mass seen
/// in the pair over the range, then both sides are renormalized over the range.
inline double kl_divergence(std::span<const double> p_a, std::span<const double> p_b, BinRange range) {
    if (p_a.size() != p_b.size())
        throw Error("histogram bin counts differ: " + std::to_string(p_a.size()) + " vs " +
                    std::to_string(p_b.size()));
    if (range.last > p_a.size() || range.first >= range.last) throw Error("bin range outside histogram");

    double eps = std::numeric_limits<double>::infinity();
    for (std::size_t i = range.first; i < range.last; ++i) {
        if (p_a[i] > 0.0) eps = std::min(eps, p_a[i]);
        if (p_b[i] > 0.0) eps = std::min(eps, p_b[i]);
    }
    if (!std::isfinite(eps)) throw DegenerateInput("no comparable mass inside the band");

    double sa = 0.0, sb = 0.0;
    for (std::size_t i = range.first; i < range.last; ++i) {
        sa += p_a[i] > 0.0 ? p_a[i] : eps;
        sb += p_b[i] > 0.0 ? p_b[i] : eps;
    }
    double kl = 0.0;
    for (std::size_t i = range.first; i < range.last; ++i) {
        const double a = (p_a[i] > 0.0 ? p_a[i] : eps) / sa;
        const double b = (p_b[i] > 0.0 ? p_b[i] : eps) / sb;
        kl += a * std::log(a / b);
    }
    return std::max(kl, 0.0);
}

inline double kl_divergence(std::span<const double> p_a, std::span<const double> p_b) {
    return kl_divergence(p_a, p_b, BinRange{0, p_a.size()});
}

inline double kl_divergence(const Histogram& a, const Histogram& b, BinRange range) {
    return kl_divergence(a.mass, b.mass, range);
}

enum class ReferenceMode : std::uint8_t { Pooled, PerModel };

struct DetectorConfig {
    double rho = 0.5;
    /// Unset: calibrated from the initial segment.
    std::optional<double> theta_kl;
    int smoothing_windows = 2;
    std::size_t stream_window_size = 1000;
    DistanceMetric metric = DistanceMetric::Cosine;
    std::size_t bins = kDefaultHistogramBins;
    double band_epsilon = kDefaultBandEpsilon;
    ReferenceMode reference_mode = ReferenceMode::Pooled;
    /// Max records kept in the pooled reference; 0 keeps everything blended in.
    std::size_t reference_capacity = 0;
    double calibration_percentile = 0.95;
    int calibration_resamples = 200;
    /// With a calibrated threshold, recalibrate on each new reference once its
    /// smoothing period ends.
    bool recalibrate = true;

    void validate() const {
        if (!(rho > 0.0 && rho <= 1.0)) throw Error("detector rho must lie in (0,1]");
        if (theta_kl && !(*theta_kl > 0.0)) throw Error("theta_kl must be positive");
        if (smoothing_windows < 0) throw Error("smoothing window count must be non-negative");
        if (stream_window_size < 2) throw Error("stream window size must be at least 2");
        if (bins == 0) throw Error("histogram bin count must be positive");
        if (!(calibration_percentile > 0.0 && calibration_percentile <= 1.0))
            throw Error("calibration percentile must lie in (0,1]");
        if (calibration_resamples < 1) throw Error("calibration needs at least one resample");
    }
};

struct DriftVerdict {
    double kl_score = 0.0;
    double theta_kl = 0.0;
    bool drift_detected = false;
    std::int64_t window_index = 0;
    bool in_smoothing = false;
};

/// A reference distribution: a centroid and the raw distances of its window to it.
struct ReferenceView {
    std::span<const double> centroid;
    std::span<const double> raw_distances;
};

struct WindowScore {
    double kl = 0.0;
    RhoBand band;
    double reference_mu = 0.0;
    double reference_sigma = 0.0;
};

/// KL between a reference and a stream window, both measured against the
/// reference centroid and normalized with one frozen snapshot of `norm`.
inline WindowScore score_window(const ReferenceView& ref, std::span<const RecordPtr> stream, const DetectorConfig& cfg,
                                NormalizationState& norm) {
    std::vector<double> stream_raw = raw_distances(cfg.metric, stream, ref.centroid);
    for (double d : stream_raw) norm.observe(d);
    for (double d : ref.raw_distances) norm.observe(d);
    const NormalizationState frozen = norm;

    std::vector<double> ref_norm;
    ref_norm.reserve(ref.raw_distances.size());
    for (double d : ref.raw_distances) ref_norm.push_back(normalize_raw(cfg.metric, d, frozen));
    for (double& d : stream_raw) d = normalize_raw(cfg.metric, d, frozen);

    const DistanceDistribution dist = fit_distances(std::move(ref_norm), cfg.bins);
    WindowScore s;
    s.band = compute_band(dist, cfg.rho, cfg.band_epsilon);
    s.reference_mu = dist.mu;
    s.reference_sigma = dist.sigma;
    const Histogram stream_hist = make_histogram(stream_raw, cfg.bins);
    s.kl = kl_divergence(dist.histogram, stream_hist, band_bins(s.band, cfg.bins));
    return s;
}

/// Threshold as a percentile of null KL scores on a stationary segment.
///
/// Each resample holds out a random stream-window-sized subset, fits the
/// reference on the remainder and scores the held-out part against it, which
/// mimics a fresh window drawn from the same distribution.
inline double calibrate_threshold(std::span<const RecordPtr> segment, const DetectorConfig& cfg,
                                  NormalizationState& norm, std::uint64_t seed) {
    if (segment.size() < 4) throw DegenerateInput("calibration segment needs at least 4 records");
    const std::size_t holdout = std::min(cfg.stream_window_size, segment.size() / 2);
    std::vector<std::size_t> idx(segment.size());
    std::vector<double> scores;
    scores.reserve(static_cast<std::size_t>(cfg.calibration_resamples));
    std::vector<RecordPtr> ref, held;
    for (int r = 0; r < cfg.calibration_resamples; ++r) {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r) * 0x9E3779B97F4A7C15ULL);
        std::shuffle(idx.begin(), idx.end(), rng);
        held.clear();
        ref.clear();
        for (std::size_t i = 0; i < idx.size(); ++i) (i < holdout ? held : ref).push_back(segment[idx[i]]);
        const std::vector<double> c = centroid(ref);
        const std::vector<double> ref_raw = raw_distances(cfg.metric, ref, c);
        NormalizationState scratch = norm;
        scores.push_back(score_window(ReferenceView{c, ref_raw}, held, cfg, scratch).kl);
    }
    std::sort(scores.begin(), scores.end());
    const auto rank = static_cast<std::size_t>(std::ceil(cfg.calibration_percentile * static_cast<double>(scores.size())));
    const double theta = scores[std::clamp<std::size_t>(rank, 1, scores.size()) - 1];
    // a perfectly flat segment yields zero divergence everywhere
    return std::max(theta, 1e-12);
}

/// Stateful detector over one stream.
///
/// The pooled reference starts as the initial training segment. A detection
/// restarts it from the detecting window; the following `smoothing_windows`
/// windows are appended to it and cannot trigger a new detection.
class DriftDetector {
public:
    DriftDetector() = default;

    DriftDetector(DetectorConfig cfg, std::span<const RecordPtr> initial, NormalizationState& norm, std::uint64_t seed)
        : cfg_(std::move(cfg)), seed_(seed) {
        cfg_.validate();
        if (initial.empty()) throw DegenerateInput("detector needs a non-empty initial reference");
        reference_.assign(initial.begin(), initial.end());
        trim_reference();
        refresh_reference(norm);
        theta_ = cfg_.theta_kl ? *cfg_.theta_kl : calibrate_threshold(initial, cfg_, norm, seed);
    }

    const DetectorConfig& config() const { return cfg_; }
    double theta() const { return theta_; }
    std::uint64_t seed() const { return seed_; }
    int smoothing_remaining() const { return smoothing_remaining_; }
    std::int64_t windows_seen() const { return window_counter_; }
    const std::deque<RecordPtr>& reference() const { return reference_; }
    const std::vector<double>& reference_centroid() const { return centroid_; }
    const std::vector<double>& reference_raw_distances() const { return raw_; }
    const WindowScore& last_score() const { return last_score_; }

    /// Band of the pooled reference under the current normalization bound.
    RhoBand reference_band(const NormalizationState& norm) const {
        std::vector<double> d;
        d.reserve(raw_.size());
        for (double r : raw_) d.push_back(normalize_raw(cfg_.metric, r, norm));
        return compute_band(fit_distances(std::move(d), cfg_.bins), cfg_.rho, cfg_.band_epsilon);
    }

    /// `per_model` is consulted only in PerModel mode; the score is then the
    /// smallest divergence over the supplied references.
    DriftVerdict process_window(const Window& window, NormalizationState& norm,
                                std::span<const ReferenceView> per_model = {}) {
        if (window.size() < cfg_.stream_window_size)
            throw Error("stream window holds " + std::to_string(window.size()) + " records, need " +
                        std::to_string(cfg_.stream_window_size));
        DriftVerdict v;
        v.window_index = window_counter_++;
        v.theta_kl = theta_;

        if (cfg_.reference_mode == ReferenceMode::PerModel && !per_model.empty()) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& ref : per_model) {
                WindowScore s = score_window(ref, window.records, cfg_, norm);
                if (s.kl < best) {
                    best = s.kl;
                    last_score_ = s;
                }
            }
        } else {
            last_score_ = score_window(ReferenceView{centroid_, raw_}, window.records, cfg_, norm);
        }
        v.kl_score = last_score_.kl;

        if (smoothing_remaining_ > 0) {
            v.in_smoothing = true;
            --smoothing_remaining_;
            blend(window, norm);
            if (smoothing_remaining_ == 0) recalibrate(norm);
        } else if (v.kl_score > theta_) {
            v.drift_detected = true;
            smoothing_remaining_ = cfg_.smoothing_windows;
            reference_.clear();
            blend(window, norm);
            if (smoothing_remaining_ == 0) recalibrate(norm);
        }
        return v;
    }

    /// Restores serialized state without recalibrating.
    void restore(DetectorConfig cfg, std::deque<RecordPtr> reference, double theta, int smoothing_remaining,
                 std::int64_t window_counter, std::uint64_t seed, NormalizationState& norm) {
        cfg_ = std::move(cfg);
        seed_ = seed;
        reference_ = std::move(reference);
        theta_ = theta;
        smoothing_remaining_ = smoothing_remaining;
        window_counter_ = window_counter;
        refresh_reference(norm);
    }

private:
    void recalibrate(NormalizationState& norm) {
        if (cfg_.theta_kl || !cfg_.recalibrate) return;
        const std::vector<RecordPtr> recs(reference_.begin(), reference_.end());
        if (recs.size() < 4) return;
        theta_ = calibrate_threshold(recs, cfg_, norm, mix_seed(seed_, static_cast<std::uint64_t>(window_counter_)));
    }

    void blend(const Window& window, NormalizationState& norm) {
        reference_.insert(reference_.end(), window.records.begin(), window.records.end());
        trim_reference();
        refresh_reference(norm);
    }

    void trim_reference() {
        if (cfg_.reference_capacity == 0) return;
        while (reference_.size() > cfg_.reference_capacity) reference_.pop_front();
    }

    void refresh_reference(NormalizationState& norm) {
        const std::vector<RecordPtr> recs(reference_.begin(), reference_.end());
        centroid_ = centroid(recs);
        raw_ = raw_distances(cfg_.metric, recs, centroid_);
        for (double d : raw_) norm.observe(d);
    }

    DetectorConfig cfg_;
    std::deque<RecordPtr> reference_;
    std::vector<double> centroid_;
    std::vector<double> raw_;
    double theta_ = 0.0;
    std::uint64_t seed_ = 0;
    int smoothing_remaining_ = 0;
    std::int64_t window_counter_ = 0;
    WindowScore last_score_;
};

} // namespace driftmap
