#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "driftmap/weak_supervision.hpp"

using namespace driftmap;

namespace {

RecordPtr oracle(std::vector<double> v, Label l) { return make_record("o", std::move(v), 0, l); }

RecordPtr weak(std::vector<double> v, Label predicted) {
    auto r = std::make_shared<Record>();
    r->id = "w";
    r->vector = std::move(v);
    r->predicted_label = predicted;
    return r;
}

std::vector<RecordPtr> random_points(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    std::vector<RecordPtr> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v(dim);
        for (auto& x : v) x = g(rng);
        out.push_back(oracle(std::move(v), coin(rng) ? Label::Positive : Label::Negative));
    }
    return out;
}

} // namespace

TEST(DecayWeight, ZeroDistanceIsOne) { EXPECT_DOUBLE_EQ(decay_weight(0.0, 0.01, 0.2), 1.0); }

TEST(DecayWeight, AnchorDistanceIsThetaW) {
    for (double theta : {0.01, 0.1, 0.5})
        for (double lambda : {0.05, 0.2, 1.0}) EXPECT_NEAR(decay_weight(lambda, theta, lambda), theta, 1e-12);
}

TEST(DecayWeight, HandValue) {
    const double expected = std::exp(std::log(0.01) / 0.2 * 0.1);
    EXPECT_NEAR(decay_weight(0.1, 0.01, 0.2), expected, 1e-12);
    EXPECT_NEAR(decay_weight(0.1, 0.01, 0.2), 0.1, 1e-12);
}

TEST(DecayWeight, MonotoneInDistance) {
    double prev = 2.0;
    for (double d = 0.0; d <= 1.0; d += 0.05) {
        const double w = decay_weight(d, 0.01, 0.3);
        EXPECT_LT(w, prev);
        EXPECT_GT(w, 0.0);
        EXPECT_LE(w, 1.0);
        prev = w;
    }
}

TEST(DecayWeight, LiteralFormulaCapsAtOne) {
    // -ln(theta/lambda) > 0 when theta < lambda, so the literal law grows with d
    EXPECT_DOUBLE_EQ(decay_weight(0.5, 0.01, 0.2, WeightFormula::Literal), 1.0);
    EXPECT_NEAR(weight_alpha(0.01, 0.2, WeightFormula::Literal), -std::log(0.01 / 0.2), 1e-15);
}

TEST(DecayWeight, RejectsBadParameters) {
    EXPECT_THROW(decay_weight(0.1, 0.0, 0.2), Error);
    EXPECT_THROW(decay_weight(0.1, 1.0, 0.2), Error);
    EXPECT_THROW(decay_weight(0.1, 0.01, 0.0), Error);
}

TEST(OracleIndex, SinglePointAnswersEveryQuery) {
    const std::vector<RecordPtr> mem{oracle({1.0, 2.0}, Label::Positive)};
    const auto idx = build_index(mem, DistanceMetric::L2, NormalizationState(10.0));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 5.0);
    for (int i = 0; i < 20; ++i) {
        const std::vector<double> q{g(rng), g(rng)};
        EXPECT_EQ(idx.nearest(q).record, mem[0]);
    }
}

TEST(OracleIndex, ExactMatchHasZeroDistance) {
    std::mt19937_64 rng(2);
    const auto mem = random_points(50, 4, rng);
    const auto idx = build_index(mem, DistanceMetric::L1, NormalizationState(20.0));
    const auto nn = idx.nearest(mem[17]->vector);
    EXPECT_EQ(nn.record, mem[17]);
    EXPECT_EQ(nn.distance, 0.0);
}

TEST(OracleIndex, MatchesLinearScan) {
    std::mt19937_64 rng(3);
    for (auto metric : {DistanceMetric::Cosine, DistanceMetric::L1, DistanceMetric::L2}) {
        const auto mem = random_points(1000, 6, rng);
        const NormalizationState scale(50.0);
        const auto idx = build_index(mem, metric, scale);
        const auto queries = random_points(100, 6, rng);
        for (const auto& q : queries) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t i = 0; i < mem.size(); ++i) {
                const double d = distance(metric, q->vector, mem[i]->vector, scale);
                if (d < best) {
                    best = d;
                    arg = i;
                }
            }
            const auto nn = idx.nearest(q->vector);
            EXPECT_EQ(nn.record, mem[arg]) << to_string(metric);
            EXPECT_NEAR(nn.distance, best, 1e-12);
        }
    }
}

TEST(OracleIndex, SkipsUnlabelledRecords) {
    const std::vector<RecordPtr> mem{weak({0.0, 0.0}, Label::Positive), oracle({5.0, 5.0}, Label::Negative)};
    const auto idx = build_index(mem, DistanceMetric::L2, NormalizationState(10.0));
    EXPECT_EQ(idx.size(), 1u);
    EXPECT_EQ(idx.nearest(std::vector<double>{0.0, 0.0}).record, mem[1]);
}

TEST(OracleIndex, NoOracleRecordsThrows) {
    const std::vector<RecordPtr> mem{weak({0.0, 0.0}, Label::Positive)};
    EXPECT_THROW(build_index(mem, DistanceMetric::L2), DegenerateInput);
}

TEST(WeighSample, AgreeingLabelDecaysWithDistance) {
    const std::vector<RecordPtr> mem{oracle({0.0, 0.0}, Label::Positive)};
    const auto idx = build_index(mem, DistanceMetric::L2, NormalizationState(10.0));
    const auto s = weigh_sample(weak({1.0, 0.0}, Label::Positive), idx, 0.01, 0.2);
    EXPECT_NEAR(s.weight, 0.1, 1e-12);
    EXPECT_EQ(s.label, Label::Positive);
    EXPECT_EQ(s.source, SampleSource::Weak);
}

TEST(WeighSample, DisagreeingLabelIsZero) {
    const std::vector<RecordPtr> mem{oracle({0.0, 0.0}, Label::Positive)};
    const auto idx = build_index(mem, DistanceMetric::L2, NormalizationState(10.0));
    for (double x : {0.0, 0.5, 3.0}) EXPECT_EQ(weigh_sample(weak({x, 0.0}, Label::Negative), idx, 0.01, 0.2).weight, 0.0);
}

TEST(WeighSample, MissingPredictionThrows) {
    const std::vector<RecordPtr> mem{oracle({0.0, 0.0}, Label::Positive)};
    const auto idx = build_index(mem, DistanceMetric::L2, NormalizationState(10.0));
    EXPECT_THROW(weigh_sample(make_record("x", {1.0, 0.0}), idx, 0.01, 0.2), Error);
}

TEST(WeighMemory, AllOracleWeighOne) {
    std::mt19937_64 rng(4);
    const auto mem = random_points(30, 3, rng);
    const auto idx = build_index(mem, DistanceMetric::L2, NormalizationState(10.0));
    for (const auto& s : weigh_memory(mem, idx, 0.01, 0.2)) {
        EXPECT_EQ(s.weight, 1.0);
        EXPECT_EQ(s.source, SampleSource::Oracle);
        EXPECT_EQ(s.label, *s.record->oracle_label);
    }
}

TEST(WeighMemory, AgreeingDuplicatesWeighOne) {
    std::mt19937_64 rng(5);
    auto mem = random_points(20, 3, rng);
    const std::size_t n = mem.size();
    for (std::size_t i = 0; i < n; ++i) mem.push_back(weak(mem[i]->vector, *mem[i]->oracle_label));
    const auto idx = build_index(mem, DistanceMetric::Cosine);
    for (const auto& s : weigh_memory(mem, idx, 0.01, 0.2)) EXPECT_NEAR(s.weight, 1.0, 1e-12);
}

TEST(WeighMemory, MixedMemoryMatchesBruteForce) {
    std::mt19937_64 rng(6);
    auto mem = random_points(200, 5, rng);
    const auto extra = random_points(300, 5, rng);
    for (const auto& r : extra) mem.push_back(weak(r->vector, *r->oracle_label));
    const NormalizationState scale(30.0);
    const auto idx = build_index(mem, DistanceMetric::L2, scale);
    const auto weighed = weigh_memory(mem, idx, 0.05, 0.15);
    ASSERT_EQ(weighed.size(), mem.size());
    for (std::size_t i = 0; i < mem.size(); ++i) {
        if (mem[i]->has_oracle()) {
            EXPECT_EQ(weighed[i].weight, 1.0);
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        Label nn_label = Label::Negative;
        for (std::size_t j = 0; j < 200; ++j) {
            const double d = distance(DistanceMetric::L2, mem[i]->vector, mem[j]->vector, scale);
            if (d < best) {
                best = d;
                nn_label = *mem[j]->oracle_label;
            }
        }
        const double expected = nn_label == *mem[i]->predicted_label ? std::exp(std::log(0.05) / 0.15 * best) : 0.0;
        EXPECT_NEAR(weighed[i].weight, expected, 1e-12);
    }
}
