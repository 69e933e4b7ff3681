#pragma once

/// @file kd_tree.hpp
/// @brief Exact nearest-neighbour index over oracle-labelled records.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "driftmap/core.hpp"

namespace driftmap {

/// KD-tree answering exact 1-NN queries under Cosine, L1 or L2.
///
/// Cosine is searched as squared Euclidean distance between unit vectors, which
/// is four times the cosine distance. Ties are broken towards the lowest
/// insertion index so results match a linear scan.
class OracleIndex {
public:
    struct Neighbor {
        RecordPtr record;
        std::size_t index = 0;
        /// Normalized distance on the index's scale.
        double distance = 0.0;
    };

    OracleIndex() = default;

    OracleIndex(std::vector<RecordPtr> points, DistanceMetric metric, NormalizationState scale = {},
                std::size_t leaf_size = 8)
        : records_(std::move(points)), metric_(metric), scale_(scale), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
        if (records_.empty()) throw DegenerateInput("nearest-neighbour index needs at least one point");
        dim_ = records_.front()->vector.size();
        coords_.reserve(records_.size() * dim_);
        for (const auto& r : records_) {
            if (r->vector.size() != dim_) throw DimensionMismatch("indexed points differ in dimension");
            const auto p = transform(r->vector);
            coords_.insert(coords_.end(), p.begin(), p.end());
        }
        perm_.resize(records_.size());
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        nodes_.reserve(2 * records_.size() / leaf_size_ + 1);
        build(0, perm_.size());
    }

    std::size_t size() const { return records_.size(); }
    DistanceMetric metric() const { return metric_; }
    const std::vector<RecordPtr>& records() const { return records_; }

    Neighbor nearest(std::span<const double> query) const {
        if (query.size() != dim_) throw DimensionMismatch("query dimension does not match index");
        const std::vector<double> q = transform(query);
        Best best;
        search(0, q, best);
        Neighbor n;
        n.index = best.index;
        n.record = records_[best.index];
        n.distance = distance(metric_, query, n.record->vector, scale_);
        return n;
    }

private:
    struct Node {
        std::size_t begin = 0, end = 0;
        std::size_t split_dim = 0;
        double split = 0.0;
        std::int64_t left = -1, right = -1;
    };

    struct Best {
        double dist = std::numeric_limits<double>::infinity();
        std::size_t index = std::numeric_limits<std::size_t>::max();
    };

    std::vector<double> transform(std::span<const double> v) const {
        std::vector<double> out(v.begin(), v.end());
        if (metric_ == DistanceMetric::Cosine) {
            const double n = std::sqrt(detail::dot(out, out));
            if (n == 0.0) throw DegenerateInput("cosine distance of a zero vector is undefined");
            for (auto& x : out) x /= n;
        }
        return out;
    }

    double point_distance(std::span<const double> q, std::size_t idx) const {
        const double* p = coords_.data() + idx * dim_;
        double s = 0.0;
        if (metric_ == DistanceMetric::L1) {
            for (std::size_t k = 0; k < dim_; ++k) s += std::abs(q[k] - p[k]);
        } else {
            for (std::size_t k = 0; k < dim_; ++k) {
                const double d = q[k] - p[k];
                s += d * d;
            }
        }
        return s;
    }

    double plane_bound(double diff) const { return metric_ == DistanceMetric::L1 ? std::abs(diff) : diff * diff; }

    double coord(std::size_t idx, std::size_t k) const { return coords_[idx * dim_ + k]; }

    std::int64_t build(std::size_t begin, std::size_t end) {
        const auto id = static_cast<std::int64_t>(nodes_.size());
        nodes_.push_back(Node{begin, end});
        if (end - begin <= leaf_size_) return id;

        std::size_t best_dim = 0;
        double best_spread = -1.0;
        for (std::size_t k = 0; k < dim_; ++k) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (std::size_t i = begin; i < end; ++i) {
                const double c = coord(perm_[i], k);
                lo = std::min(lo, c);
                hi = std::max(hi, c);
            }
            if (hi - lo > best_spread) {
                best_spread = hi - lo;
                best_dim = k;
            }
        }
        if (best_spread <= 0.0) return id; // all points identical: keep as leaf

        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(perm_.begin() + static_cast<std::ptrdiff_t>(begin), perm_.begin() + static_cast<std::ptrdiff_t>(mid),
                         perm_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                             return coord(a, best_dim) < coord(b, best_dim);
                         });
        const double split = coord(perm_[mid], best_dim);
        nodes_[static_cast<std::size_t>(id)].split_dim = best_dim;
        nodes_[static_cast<std::size_t>(id)].split = split;
        const std::int64_t l = build(begin, mid);
        const std::int64_t r = build(mid, end);
        nodes_[static_cast<std::size_t>(id)].left = l;
        nodes_[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    // Left subtree holds coordinates <= split, right holds >= split.
    void search(std::int64_t node_id, std::span<const double> q, Best& best) const {
        const Node& node = nodes_[static_cast<std::size_t>(node_id)];
        if (node.left < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = perm_[i];
                const double d = point_distance(q, idx);
                if (d < best.dist || (d == best.dist && idx < best.index)) {
                    best.dist = d;
                    best.index = idx;
                }
            }
            return;
        }
        const double diff = q[node.split_dim] - node.split;
        const std::int64_t near = diff <= 0.0 ? node.left : node.right;
        const std::int64_t far = diff <= 0.0 ? node.right : node.left;
        search(near, q, best);
        if (plane_bound(diff) <= best.dist) search(far, q, best);
    }

    std::vector<RecordPtr> records_;
    DistanceMetric metric_ = DistanceMetric::L2;
    NormalizationState scale_;
    std::size_t leaf_size_ = 8;
    std::size_t dim_ = 0;
    std::vector<double> coords_;
    std::vector<std::size_t> perm_;
    std::vector<Node> nodes_;
};

} // namespace driftmap
