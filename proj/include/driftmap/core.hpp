#pragma once

/// @file core.hpp
/// @brief Shared domain types: stream records, labels, distance metrics and centroids.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace driftmap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// A computation was asked of an empty or otherwise unusable input.
class DegenerateInput : public Error {
public:
    using Error::Error;
};

enum class Label : std::uint8_t { Negative = 0, Positive = 1 };

inline int to_int(Label l) { return l == Label::Positive ? 1 : 0; }

inline Label label_from_int(long long v) {
    if (v == 0) return Label::Negative;
    if (v == 1) return Label::Positive;
    throw Error("label must be 0 or 1, got " + std::to_string(v));
}

/// One embedded stream sample.
///
/// `truth` is the hidden ground-truth class carried by synthetic streams. The
/// pipeline reads it for evaluation (and for the initial supervised segment)
/// but never trains on it after that point.
struct Record {
    std::string id;
    std::vector<double> vector;
    std::optional<Label> oracle_label;
    std::optional<Label> predicted_label;
    std::optional<Label> truth;
    std::int64_t timestamp = 0;

    /// Oracle labels are write-once.
    void assign_oracle(Label l) {
        if (oracle_label && *oracle_label != l)
            throw Error("oracle label of record '" + id + "' is already set");
        oracle_label = l;
    }

    bool has_oracle() const { return oracle_label.has_value(); }
};

/// Records are shared between windows and memories, so they are immutable once
/// they enter the pipeline.
using RecordPtr = std::shared_ptr<const Record>;

/// An ordered run of records taken from the stream.
struct Window {
    std::vector<RecordPtr> records;
    std::int64_t start_index = 0;
    std::int64_t end_index = 0;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
};

enum class DistanceMetric : std::uint8_t { Cosine, L1, L2 };

inline std::string_view to_string(DistanceMetric m) {
    switch (m) {
    case DistanceMetric::Cosine: return "cosine";
    case DistanceMetric::L1: return "l1";
    case DistanceMetric::L2: return "l2";
    }
    return "unknown";
}

inline DistanceMetric metric_from_string(std::string_view s) {
    if (s == "cosine") return DistanceMetric::Cosine;
    if (s == "l1") return DistanceMetric::L1;
    if (s == "l2") return DistanceMetric::L2;
    throw Error("unknown distance metric '" + std::string(s) + "'");
}

/// Running upper bound used to map raw L1/L2 norms into [0,1].
///
/// The bound only grows. Consumers that need two sets of distances on the same
/// scale copy the state (a snapshot) and normalize both with the copy.
class NormalizationState {
public:
    NormalizationState() = default;
    explicit NormalizationState(double bound) : bound_(bound) {}

    void observe(double raw) {
        if (raw > bound_) bound_ = raw;
    }

    double bound() const { return bound_; }

    double normalize(double raw) const {
        if (bound_ <= 0.0) return raw > 0.0 ? 1.0 : 0.0;
        return std::min(raw / bound_, 1.0);
    }

private:
    double bound_ = 0.0;
};

namespace detail {

inline void check_dims(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DimensionMismatch("vector dimensions differ: " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace detail

/// Cosine distance (1 - cos)/2, already in [0,1].
inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
    detail::check_dims(a, b);
    const double na = std::sqrt(detail::dot(a, a));
    const double nb = std::sqrt(detail::dot(b, b));
    if (na == 0.0 || nb == 0.0) throw DegenerateInput("cosine distance of a zero vector is undefined");
    const double c = std::clamp(detail::dot(a, b) / (na * nb), -1.0, 1.0);
    return (1.0 - c) / 2.0;
}

/// Unnormalized distance. Cosine is its own normalized form; L1/L2 are raw norms.
inline double raw_distance(DistanceMetric metric, std::span<const double> a, std::span<const double> b) {
    detail::check_dims(a, b);
    switch (metric) {
    case DistanceMetric::Cosine: return cosine_distance(a, b);
    case DistanceMetric::L1: {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
        return s;
    }
    case DistanceMetric::L2: {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[i];
            s += d * d;
        }
        return std::sqrt(s);
    }
    }
    return 0.0;
}

inline double normalize_raw(DistanceMetric metric, double raw, const NormalizationState& norm) {
    return metric == DistanceMetric::Cosine ? raw : norm.normalize(raw);
}

/// Normalized distance in [0,1]; L1/L2 are divided by the running bound and clamped.
inline double distance(DistanceMetric metric, std::span<const double> a, std::span<const double> b,
                       const NormalizationState& norm) {
    return normalize_raw(metric, raw_distance(metric, a, b), norm);
}

/// Arithmetic mean of a set of vectors.
inline std::vector<double> centroid(std::span<const RecordPtr> records) {
    if (records.empty()) throw DegenerateInput("centroid of an empty window");
    const std::size_t n = records.front()->vector.size();
    std::vector<double> c(n, 0.0);
    for (const auto& r : records) {
        if (r->vector.size() != n) throw DimensionMismatch("records in a window differ in dimension");
        for (std::size_t i = 0; i < n; ++i) c[i] += r->vector[i];
    }
    const double inv = 1.0 / static_cast<double>(records.size());
    for (auto& v : c) v *= inv;
    return c;
}

inline std::vector<double> centroid(const Window& window) { return centroid(std::span<const RecordPtr>(window.records)); }

/// Raw distances of every record to `center`.
inline std::vector<double> raw_distances(DistanceMetric metric, std::span<const RecordPtr> records,
                                         std::span<const double> center) {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(raw_distance(metric, r->vector, center));
    return out;
}

/// Derives an independent seed from a base seed and a counter (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline RecordPtr make_record(std::string id, std::vector<double> v, std::int64_t ts = 0,
                             std::optional<Label> oracle = std::nullopt, std::optional<Label> truth = std::nullopt) {
    auto r = std::make_shared<Record>();
    r->id = std::move(id);
    r->vector = std::move(v);
    r->timestamp = ts;
    r->oracle_label = oracle;
    r->truth = truth;
    return r;
}

} // namespace driftmap
