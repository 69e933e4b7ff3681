#pragma once

/// @file model.hpp
/// @brief One member of the evolving classifier collection and its bounded record stores.

#include <cstdint>
#include <deque>
#include <memory>
#include <vector>

#include "driftmap/classifier.hpp"
#include "driftmap/core.hpp"
#include "driftmap/density_band.hpp"

namespace driftmap {

inline constexpr std::size_t kDefaultMemoryCapacity = 10000;

/// FIFO record store; the oldest record is evicted once capacity is reached.
class BoundedMemory {
public:
    BoundedMemory() = default;
    explicit BoundedMemory(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0) throw Error("memory capacity must be positive");
    }

    void push(RecordPtr r) {
        records_.push_back(std::move(r));
        while (records_.size() > capacity_) records_.pop_front();
    }

    /// Drops every record older than `timestamp`.
    void trim_before(std::int64_t timestamp) {
        while (!records_.empty() && records_.front()->timestamp < timestamp) records_.pop_front();
    }

    void clear() { records_.clear(); }

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    std::size_t capacity() const { return capacity_; }
    const std::deque<RecordPtr>& records() const { return records_; }
    std::vector<RecordPtr> snapshot() const { return {records_.begin(), records_.end()}; }

    std::size_t oracle_count() const {
        std::size_t n = 0;
        for (const auto& r : records_)
            if (r->has_oracle()) ++n;
        return n;
    }

private:
    std::size_t capacity_ = kDefaultMemoryCapacity;
    std::deque<RecordPtr> records_;
};

using ModelMemory = BoundedMemory;
using GeneralMemory = BoundedMemory;

/// A classifier together with the data region it covers.
///
/// `centroid` and `band` describe `window` plus `memory`. The band is expressed
/// in distances normalized by `scale`, the normalization snapshot taken when the
/// band was fitted, and membership tests must use the same snapshot.
struct ModelEntry {
    std::int64_t model_id = 0;
    std::unique_ptr<Classifier> classifier;
    BoundedMemory window;
    std::vector<double> centroid;
    RhoBand band;
    NormalizationState scale;
    ModelMemory memory;
    std::vector<double> perf_history;
    std::int64_t created_at = 0;
    std::int64_t updated_at = 0;

    double latest_perf() const { return perf_history.empty() ? 0.0 : perf_history.back(); }

    /// Normalized distance of `x` to the centroid on the band's scale.
    double distance_to(DistanceMetric metric, std::span<const double> x) const {
        return distance(metric, x, centroid, scale);
    }

    std::vector<RecordPtr> region_records() const {
        std::vector<RecordPtr> out(window.records().begin(), window.records().end());
        out.insert(out.end(), memory.records().begin(), memory.records().end());
        return out;
    }
};

} // namespace driftmap
