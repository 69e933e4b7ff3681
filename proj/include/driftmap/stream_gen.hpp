#pragma once

/// @file stream_gen.hpp
/// @brief Seeded synthetic drifting streams of labelled Gaussian clusters plus noise.
///
/// Every record i draws from its own generator seeded with (seed, i), so any
/// index range can be produced independently and a spec always yields the
/// same stream. Drift events never change which random numbers a record draws:
/// a label flip produces the same vectors as the unflipped stream.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "driftmap/core.hpp"
#include "driftmap/ensemble.hpp"

namespace driftmap {

struct ClusterSpec {
    /// Explicit centre; when empty a random direction scaled to `mean_norm` is drawn.
    std::vector<double> mean;
    double mean_norm = 10.0;
    /// Per-coordinate standard deviation.
    double scale = 1.0;
    Label label = Label::Negative;
    /// Relative share among non-noise records.
    double weight = 1.0;
};

enum class DriftType : std::uint8_t { VirtualShift, RealBoundaryFlip, Gradual, Sudden, Cyclic, Flash };

inline std::string_view to_string(DriftType t) {
    switch (t) {
    case DriftType::VirtualShift: return "virtual-shift";
    case DriftType::RealBoundaryFlip: return "real-boundary-flip";
    case DriftType::Gradual: return "gradual";
    case DriftType::Sudden: return "sudden";
    case DriftType::Cyclic: return "cyclic";
    case DriftType::Flash: return "flash";
    }
    return "unknown";
}

inline DriftType drift_type_from_string(std::string_view s) {
    for (auto t : {DriftType::VirtualShift, DriftType::RealBoundaryFlip, DriftType::Gradual, DriftType::Sudden,
                   DriftType::Cyclic, DriftType::Flash})
        if (to_string(t) == s) return t;
    throw Error("unknown drift type '" + std::string(s) + "'");
}

/// One drift event.
///
/// Translation events move the target cluster's centre by
/// magnitude * (target cluster scale) along `direction`; cluster -1 moves every
/// cluster and the noise by the same vector, measured in the first cluster's
/// scale. Temporal profile: VirtualShift and Sudden switch on at `onset` and
/// stay; Gradual ramps linearly over `duration`; Cyclic alternates on/off every
/// `period` records; Flash is on for `duration` records only. RealBoundaryFlip
/// inverts the target cluster's labels from `onset` (for `duration` records if
/// positive, otherwise for good).
struct DriftEvent {
    DriftType type = DriftType::VirtualShift;
    std::int64_t onset = 0;
    double magnitude = 0.0;
    std::int64_t duration = 0;
    std::int64_t period = 0;
    int cluster = 0;
    /// Optional translation direction; normalized before use. Random when empty.
    std::vector<double> direction;
};

struct NoiseSpec {
    /// Half-width of the uniform box, or the scale of the t-distributed coordinates.
    double scale = 5.0;
    /// Student-t degrees of freedom for heavy-tailed noise; 0 draws uniform noise.
    double tail_dof = 0.0;
    /// Distance of the noise centre from the origin, along a random direction.
    double offset = 0.0;
    /// Translation per record of the noise centre along a random direction.
    double drift_per_record = 0.0;
};

struct StreamSpec {
    std::size_t dimension = 300;
    std::int64_t length = 10000;
    std::vector<ClusterSpec> clusters;
    std::vector<DriftEvent> events;
    double noise_fraction = 0.94;
    double oracle_fraction = 0.05;
    NoiseSpec noise;
    std::uint64_t seed = 1;

    void validate() const {
        if (dimension == 0) throw Error("stream dimension must be positive");
        if (length < 0) throw Error("stream length must be non-negative");
        if (!(noise_fraction >= 0.0 && noise_fraction < 1.0)) throw Error("noise_fraction must lie in [0,1)");
        if (!(oracle_fraction >= 0.0 && oracle_fraction <= 1.0)) throw Error("oracle_fraction must lie in [0,1]");
        if (clusters.empty()) throw Error("stream needs at least one cluster");
        double total = 0.0;
        for (const auto& c : clusters) {
            if (!c.mean.empty() && c.mean.size() != dimension) throw DimensionMismatch("cluster mean has the wrong dimension");
            if (!(c.scale > 0.0)) throw Error("cluster scale must be positive");
            if (c.weight < 0.0) throw Error("cluster weight must be non-negative");
            total += c.weight;
        }
        if (!(total > 0.0)) throw Error("cluster weights must not all be zero");
        if (noise.scale < 0.0 || noise.tail_dof < 0.0 || noise.offset < 0.0) throw Error("noise scale, tail and offset must be non-negative");
        for (const auto& e : events) {
            if (e.onset < 0 || e.onset >= std::max<std::int64_t>(length, 1)) throw Error("drift onset outside the stream");
            if (e.cluster < -1 || e.cluster >= static_cast<int>(clusters.size())) throw Error("drift event targets an unknown cluster");
            if (e.type == DriftType::RealBoundaryFlip && e.cluster < 0) throw Error("label flips need a specific cluster");
            if ((e.type == DriftType::Gradual || e.type == DriftType::Flash) && e.duration <= 0)
                throw Error("gradual and flash drift need a positive duration");
            if (e.type == DriftType::Cyclic && e.period <= 0) throw Error("cyclic drift needs a positive period");
            if (!e.direction.empty() && e.direction.size() != dimension) throw DimensionMismatch("drift direction has the wrong dimension");
        }
    }
};

struct GeneratedStream {
    std::vector<RecordPtr> records;
    /// Source of each record: cluster index, or -1 for noise.
    std::vector<int> component;
};

namespace detail {

inline std::vector<double> random_unit(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(n);
    double s = 0.0;
    for (auto& x : v) {
        x = g(rng);
        s += x * x;
    }
    s = std::sqrt(s);
    for (auto& x : v) x /= s;
    return v;
}

inline std::vector<double> unit(std::vector<double> v) {
    const double n = std::sqrt(dot(v, v));
    if (n == 0.0) throw Error("drift direction must be non-zero");
    for (auto& x : v) x /= n;
    return v;
}

/// Activation of a translation event at index i, in [0,1].
inline double profile(const DriftEvent& e, std::int64_t i) {
    if (i < e.onset) return 0.0;
    switch (e.type) {
    case DriftType::VirtualShift:
    case DriftType::Sudden: return 1.0;
    case DriftType::Gradual: return std::min(1.0, static_cast<double>(i - e.onset + 1) / static_cast<double>(e.duration));
    case DriftType::Cyclic: return ((i - e.onset) / e.period) % 2 == 0 ? 1.0 : 0.0;
    case DriftType::Flash: return i < e.onset + e.duration ? 1.0 : 0.0;
    case DriftType::RealBoundaryFlip: return 0.0;
    }
    return 0.0;
}

} // namespace detail

/// Resolved cluster centres, translation directions and noise direction of a spec.
struct StreamGeometry {
    std::vector<std::vector<double>> means;
    std::vector<std::vector<double>> directions;
    std::vector<double> noise_direction;
    std::vector<double> noise_center;

    explicit StreamGeometry(const StreamSpec& spec) {
        for (std::size_t c = 0; c < spec.clusters.size(); ++c) {
            const auto& cl = spec.clusters[c];
            if (!cl.mean.empty()) {
                means.push_back(cl.mean);
            } else {
                auto u = detail::random_unit(spec.dimension, mix_seed(spec.seed, 0x1000 + c));
                for (auto& x : u) x *= cl.mean_norm;
                means.push_back(std::move(u));
            }
        }
        for (std::size_t e = 0; e < spec.events.size(); ++e) {
            const auto& ev = spec.events[e];
            directions.push_back(ev.direction.empty() ? detail::random_unit(spec.dimension, mix_seed(spec.seed, 0x2000 + e))
                                                      : detail::unit(ev.direction));
        }
        noise_direction = detail::random_unit(spec.dimension, mix_seed(spec.seed, 0x3000));
        noise_center = detail::random_unit(spec.dimension, mix_seed(spec.seed, 0x3001));
        for (auto& x : noise_center) x *= spec.noise.offset;
    }

    /// Centre of `component` (-1 = noise) at index i, drift included.
    std::vector<double> center(const StreamSpec& spec, int component, std::int64_t i) const {
        std::vector<double> c = component >= 0 ? means[static_cast<std::size_t>(component)]
                                               : noise_center;
        if (component < 0 && spec.noise.drift_per_record != 0.0)
            for (std::size_t k = 0; k < c.size(); ++k)
                c[k] += spec.noise.drift_per_record * static_cast<double>(i) * noise_direction[k];
        for (std::size_t e = 0; e < spec.events.size(); ++e) {
            const auto& ev = spec.events[e];
            if (ev.type == DriftType::RealBoundaryFlip) continue;
            if (ev.cluster != -1 && ev.cluster != component) continue;
            const double a = detail::profile(ev, i);
            if (a == 0.0) continue;
            const double unit_scale = spec.clusters[static_cast<std::size_t>(std::max(ev.cluster, 0))].scale;
            for (std::size_t k = 0; k < c.size(); ++k) c[k] += a * ev.magnitude * unit_scale * directions[e][k];
        }
        return c;
    }

    Label label(const StreamSpec& spec, int component, std::int64_t i) const {
        if (component < 0) return Label::Negative;
        Label l = spec.clusters[static_cast<std::size_t>(component)].label;
        for (const auto& ev : spec.events) {
            if (ev.type != DriftType::RealBoundaryFlip || ev.cluster != component || i < ev.onset) continue;
            if (ev.duration > 0 && i >= ev.onset + ev.duration) continue;
            l = l == Label::Positive ? Label::Negative : Label::Positive;
        }
        return l;
    }
};

inline std::string record_id(std::int64_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "r%09lld", static_cast<long long>(i));
    return buf;
}

inline GeneratedStream generate(const StreamSpec& spec) {
    spec.validate();
    const StreamGeometry geo(spec);
    std::vector<double> cum;
    double total = 0.0;
    for (const auto& c : spec.clusters) cum.push_back(total += c.weight);

    GeneratedStream out;
    out.records.reserve(static_cast<std::size_t>(spec.length));
    out.component.reserve(static_cast<std::size_t>(spec.length));
    for (std::int64_t i = 0; i < spec.length; ++i) {
        std::mt19937_64 rng(mix_seed(spec.seed, static_cast<std::uint64_t>(i)));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double pick_noise = unif(rng);
        const double pick_cluster = unif(rng) * total;
        const double pick_oracle = unif(rng);

        int comp = -1;
        if (pick_noise >= spec.noise_fraction) {
            comp = static_cast<int>(spec.clusters.size()) - 1;
            for (std::size_t c = 0; c < cum.size(); ++c)
                if (pick_cluster < cum[c]) {
                    comp = static_cast<int>(c);
                    break;
                }
        }
        std::vector<double> v = geo.center(spec, comp, i);
        if (comp >= 0) {
            std::normal_distribution<double> g(0.0, spec.clusters[static_cast<std::size_t>(comp)].scale);
            for (auto& x : v) x += g(rng);
        } else if (spec.noise.tail_dof > 0.0) {
            std::student_t_distribution<double> t(spec.noise.tail_dof);
            for (auto& x : v) x += spec.noise.scale * t(rng);
        } else {
            std::uniform_real_distribution<double> box(-spec.noise.scale, spec.noise.scale);
            for (auto& x : v) x += box(rng);
        }
        const Label truth = geo.label(spec, comp, i);
        auto r = std::make_shared<Record>();
        r->id = record_id(i);
        r->vector = std::move(v);
        r->timestamp = i;
        r->truth = truth;
        if (pick_oracle < spec.oracle_fraction) r->oracle_label = truth;
        out.records.push_back(std::move(r));
        out.component.push_back(comp);
    }
    return out;
}

} // namespace driftmap
