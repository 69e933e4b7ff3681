#pragma once

/// @file density_band.hpp
/// @brief Gaussian fit of a window's distance-to-centroid distribution and its rho-band.

#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "driftmap/core.hpp"

namespace driftmap {

inline constexpr std::size_t kDefaultHistogramBins = 50;
inline constexpr double kDefaultBandEpsilon = 0.01;

/// Equal-width bin masses over [0,1].
struct Histogram {
    std::vector<double> mass;

    std::size_t bins() const { return mass.size(); }
};

inline std::size_t bin_of(double d, std::size_t bins) {
    const auto b = static_cast<std::size_t>(std::floor(std::clamp(d, 0.0, 1.0) * static_cast<double>(bins)));
    return std::min(b, bins - 1);
}

inline Histogram make_histogram(std::span<const double> samples, std::size_t bins = kDefaultHistogramBins) {
    if (bins == 0) throw Error("histogram needs at least one bin");
    Histogram h{std::vector<double>(bins, 0.0)};
    if (samples.empty()) return h;
    for (double d : samples) h.mass[bin_of(d, bins)] += 1.0;
    const double inv = 1.0 / static_cast<double>(samples.size());
    for (auto& m : h.mass) m *= inv;
    return h;
}

struct DistanceDistribution {
    std::vector<double> samples;
    double mu = 0.0;
    double sigma = 0.0;
    Histogram histogram;
    /// sigma == 0: the band falls back to a fixed-width interval around mu.
    bool degenerate = false;
};

/// Population moments and histogram of already-normalized distances.
inline DistanceDistribution fit_distances(std::vector<double> distances, std::size_t bins = kDefaultHistogramBins) {
    if (distances.empty()) throw DegenerateInput("distance distribution of an empty window");
    DistanceDistribution out;
    const double n = static_cast<double>(distances.size());
    out.mu = std::accumulate(distances.begin(), distances.end(), 0.0) / n;
    double ss = 0.0;
    for (double d : distances) ss += (d - out.mu) * (d - out.mu);
    out.sigma = std::sqrt(ss / n);
    out.degenerate = out.sigma == 0.0;
    out.histogram = make_histogram(distances, bins);
    out.samples = std::move(distances);
    return out;
}

/// Distances of every window record to `center`, normalized with `norm`.
inline DistanceDistribution fit_distribution(const Window& window, std::span<const double> center,
                                             DistanceMetric metric, const NormalizationState& norm,
                                             std::size_t bins = kDefaultHistogramBins) {
    if (window.empty()) throw DegenerateInput("distance distribution of an empty window");
    std::vector<double> d;
    d.reserve(window.size());
    for (const auto& r : window.records) d.push_back(distance(metric, r->vector, center, norm));
    return fit_distances(std::move(d), bins);
}

struct RhoBand {
    double rho = 0.0;
    double delta_l = 0.0;
    double delta_h = 1.0;

    double width() const { return delta_h - delta_l; }
};

/// Standard-normal quantile.
inline double normal_quantile(double p) {
    static const boost::math::normal_distribution<double> standard;
    return boost::math::quantile(standard, p);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Central (equal-tailed) Gaussian interval holding `rho` mass, clamped into [0,1].
///
/// When one side is clipped by [0,1], the other side is pushed outward until the
/// interval again holds `rho` of the unclipped Gaussian, stopping at the unit
/// interval's edge.
inline RhoBand compute_band(const DistanceDistribution& dist, double rho, double band_epsilon = kDefaultBandEpsilon) {
    if (!(rho > 0.0 && rho <= 1.0)) throw Error("rho must lie in (0,1], got " + std::to_string(rho));
    RhoBand band{rho, 0.0, 1.0};
    if (dist.degenerate || dist.sigma <= 0.0) {
        band.delta_l = std::max(0.0, dist.mu - band_epsilon);
        band.delta_h = std::min(1.0, dist.mu + band_epsilon);
        if (band.delta_l >= band.delta_h) { // mu sits exactly on an edge with epsilon 0
            band.delta_l = std::max(0.0, std::min(band.delta_l, 1.0 - band_epsilon));
            band.delta_h = std::min(1.0, band.delta_l + std::max(band_epsilon, 1e-12));
        }
        return band;
    }
    if (rho >= 1.0) return band;

    const double mu = dist.mu;
    const double sigma = dist.sigma;
    const double z = normal_quantile(0.5 * (1.0 + rho));
    double lo = mu - z * sigma;
    double hi = mu + z * sigma;

    if (lo < 0.0 && hi > 1.0) return band;
    if (lo < 0.0) {
        lo = 0.0;
        const double target = rho + normal_cdf((0.0 - mu) / sigma);
        hi = target >= 1.0 ? 1.0 : std::min(1.0, mu + sigma * normal_quantile(target));
    } else if (hi > 1.0) {
        hi = 1.0;
        const double target = normal_cdf((1.0 - mu) / sigma) - rho;
        lo = target <= 0.0 ? 0.0 : std::max(0.0, mu + sigma * normal_quantile(target));
    }
    band.delta_l = lo;
    band.delta_h = hi;
    return band;
}

/// Strict membership, matching the routing rule delta_l < d < delta_h.
inline bool in_band(const RhoBand& band, double d) { return band.delta_l < d && d < band.delta_h; }

/// Fraction of `samples` strictly inside the band.
inline double band_coverage(const RhoBand& band, std::span<const double> samples) {
    if (samples.empty()) return 0.0;
    std::size_t inside = 0;
    for (double d : samples)
        if (in_band(band, d)) ++inside;
    return static_cast<double>(inside) / static_cast<double>(samples.size());
}

} // namespace driftmap
