#pragma once

/// @file classifier.hpp
/// @brief Pluggable binary classifier interface and the reference weighted logistic model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "driftmap/core.hpp"

namespace driftmap {

struct TrainingSample {
    std::span<const double> features;
    Label label = Label::Negative;
    double weight = 1.0;
};

struct Prediction {
    Label label = Label::Negative;
    /// Probability-like score of the positive class.
    double score = 0.0;
};

/// Aggregate score -> label. A score of exactly 0.5 goes to `tie` (negative by default).
inline Label threshold_label(double score, Label tie = Label::Negative) {
    if (score > 0.5) return Label::Positive;
    if (score < 0.5) return Label::Negative;
    return tie;
}

/// Flat numeric state used to persist a classifier.
struct ClassifierState {
    std::string kind;
    std::vector<double> params;
    std::map<std::string, double> hyper;
};

/// Binary classifier with per-sample weights.
///
/// `train` continues from the current parameters, so calling it on a trained
/// model performs an incremental update. Samples with zero weight contribute
/// nothing. Prediction must be deterministic once training has finished.
class Classifier {
public:
    virtual ~Classifier() = default;

    virtual void train(std::span<const TrainingSample> samples, std::uint64_t seed) = 0;
    virtual double score(std::span<const double> x) const = 0;
    virtual std::unique_ptr<Classifier> clone() const = 0;
    virtual ClassifierState save() const = 0;
    virtual void load(const ClassifierState& state) = 0;

    Prediction predict(std::span<const double> x, Label tie = Label::Negative) const {
        const double s = score(x);
        return {threshold_label(s, tie), s};
    }
};

struct LogisticOptions {
    std::size_t epochs = 30;
    double learning_rate = 0.5;
    double l2 = 1e-4;
};

/// Weighted logistic regression trained by shuffled SGD.
///
/// The weight step for each sample is scaled by 1 / (1 + |x|^2), which keeps
/// updates stable for unnormalized embeddings of any magnitude. The bias is
/// normalized by its own unit input instead, so it moves at the same rate.
class LogisticClassifier final : public Classifier {
public:
    explicit LogisticClassifier(std::size_t dimension, LogisticOptions opts = {})
        : opts_(opts), w_(dimension, 0.0) {}

    void train(std::span<const TrainingSample> samples, std::uint64_t seed) override {
        std::vector<std::size_t> order;
        order.reserve(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].weight <= 0.0) continue;
            if (samples[i].features.size() != w_.size())
                throw DimensionMismatch("training sample dimension does not match classifier");
            order.push_back(i);
        }
        if (order.empty()) return;
        std::mt19937_64 rng(seed);
        double step_count = 0.0;
        for (std::size_t epoch = 0; epoch < opts_.epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t i : order) {
                const auto& s = samples[i];
                const double sq = detail::dot(s.features, s.features);
                const double lr = opts_.learning_rate / (1.0 + 0.01 * step_count / static_cast<double>(order.size()));
                const double step = lr * s.weight / (1.0 + sq);
                const double g = logistic(raw_score(s.features)) - static_cast<double>(to_int(s.label));
                for (std::size_t k = 0; k < w_.size(); ++k) w_[k] -= step * (g * s.features[k] + opts_.l2 * w_[k]);
                b_ -= lr * s.weight * g;
                step_count += 1.0;
            }
        }
        trained_ = true;
    }

    double score(std::span<const double> x) const override {
        if (x.size() != w_.size()) throw DimensionMismatch("input dimension does not match classifier");
        if (!trained_) return 0.5;
        return logistic(raw_score(x));
    }

    std::unique_ptr<Classifier> clone() const override { return std::make_unique<LogisticClassifier>(*this); }

    ClassifierState save() const override {
        ClassifierState st;
        st.kind = "logistic";
        st.params = w_;
        st.params.push_back(b_);
        st.hyper = {{"epochs", static_cast<double>(opts_.epochs)},
                    {"learning_rate", opts_.learning_rate},
                    {"l2", opts_.l2},
                    {"trained", trained_ ? 1.0 : 0.0}};
        return st;
    }

    void load(const ClassifierState& st) override {
        if (st.kind != "logistic") throw Error("cannot load a '" + st.kind + "' state into a logistic classifier");
        if (st.params.size() != w_.size() + 1) throw DimensionMismatch("logistic state has the wrong dimension");
        w_.assign(st.params.begin(), st.params.end() - 1);
        b_ = st.params.back();
        opts_.epochs = static_cast<std::size_t>(st.hyper.at("epochs"));
        opts_.learning_rate = st.hyper.at("learning_rate");
        opts_.l2 = st.hyper.at("l2");
        trained_ = st.hyper.at("trained") != 0.0;
    }

    const std::vector<double>& weights() const { return w_; }
    double bias() const { return b_; }
    bool trained() const { return trained_; }

private:
    static double logistic(double z) {
        if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
        const double e = std::exp(z);
        return e / (1.0 + e);
    }

    double raw_score(std::span<const double> x) const { return detail::dot(w_, x) + b_; }

    LogisticOptions opts_;
    std::vector<double> w_;
    double b_ = 0.0;
    bool trained_ = false;
};

/// Builds a fresh, untrained classifier for new models and for restoring saved ones.
using ClassifierFactory = std::function<std::unique_ptr<Classifier>(std::size_t dimension)>;

inline ClassifierFactory logistic_factory(LogisticOptions opts = {}) {
    return [opts](std::size_t dim) { return std::make_unique<LogisticClassifier>(dim, opts); };
}

} // namespace driftmap
