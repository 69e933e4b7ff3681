#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "driftmap/core.hpp"

using namespace driftmap;

namespace {

std::vector<double> e(std::size_t n, std::size_t i, double v = 1.0) {
    std::vector<double> x(n, 0.0);
    x[i] = v;
    return x;
}

} // namespace

TEST(Distance, CosineIdenticalIsZero) {
    const std::vector<double> v{0.3, -1.2, 4.0};
    EXPECT_NEAR(distance(DistanceMetric::Cosine, v, v, {}), 0.0, 1e-15);
}

TEST(Distance, CosineOppositeIsOne) {
    EXPECT_DOUBLE_EQ(distance(DistanceMetric::Cosine, e(3, 0), e(3, 0, -1.0), {}), 1.0);
}

TEST(Distance, CosineOrthogonalIsHalf) {
    EXPECT_DOUBLE_EQ(distance(DistanceMetric::Cosine, e(3, 0), e(3, 1), {}), 0.5);
}

TEST(Distance, CosineIgnoresMagnitude) {
    EXPECT_NEAR(distance(DistanceMetric::Cosine, e(4, 2, 0.01), e(4, 2, 900.0), {}), 0.0, 1e-15);
}

TEST(Distance, L2AgainstRunningMax) {
    const std::vector<double> a{0, 0}, b{3, 4};
    EXPECT_DOUBLE_EQ(distance(DistanceMetric::L2, a, b, NormalizationState(10.0)), 0.5);
}

TEST(Distance, L1AgainstRunningMax) {
    const std::vector<double> a{1, -1}, b{-2, 3};
    EXPECT_DOUBLE_EQ(distance(DistanceMetric::L1, a, b, NormalizationState(14.0)), 0.5);
}

TEST(Distance, NormalizedValuesStayInUnitInterval) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 3.0);
    NormalizationState norm(1.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> a(6), b(6);
        for (auto& x : a) x = g(rng);
        for (auto& x : b) x = g(rng);
        for (auto m : {DistanceMetric::Cosine, DistanceMetric::L1, DistanceMetric::L2}) {
            const double d = distance(m, a, b, norm);
            EXPECT_GE(d, 0.0);
            EXPECT_LE(d, 1.0);
        }
    }
}

TEST(Distance, DimensionMismatchThrows) {
    const std::vector<double> a{1, 2}, b{1, 2, 3};
    EXPECT_THROW(distance(DistanceMetric::L2, a, b, NormalizationState(1.0)), DimensionMismatch);
}

TEST(Distance, CosineOfZeroVectorThrows) {
    const std::vector<double> z{0, 0}, b{1, 0};
    EXPECT_THROW(distance(DistanceMetric::Cosine, z, b, {}), DegenerateInput);
}

TEST(Normalization, BoundOnlyGrows) {
    NormalizationState n;
    n.observe(4.0);
    n.observe(2.0);
    EXPECT_DOUBLE_EQ(n.bound(), 4.0);
    EXPECT_DOUBLE_EQ(n.normalize(2.0), 0.5);
    EXPECT_DOUBLE_EQ(n.normalize(8.0), 1.0);
}

TEST(Normalization, EmptyBoundMapsToEdges) {
    NormalizationState n;
    EXPECT_DOUBLE_EQ(n.normalize(0.0), 0.0);
    EXPECT_DOUBLE_EQ(n.normalize(3.0), 1.0);
}

TEST(Centroid, TwoPointMean) {
    const std::vector<RecordPtr> w{make_record("a", {0, 0}), make_record("b", {2, 2})};
    EXPECT_EQ(centroid(w), (std::vector<double>{1, 1}));
}

TEST(Centroid, SinglePoint) {
    const std::vector<RecordPtr> w{make_record("a", {1.5, -2.0, 7.0})};
    EXPECT_EQ(centroid(w), (std::vector<double>{1.5, -2.0, 7.0}));
}

TEST(Centroid, EmptyWindowThrows) {
    const std::vector<RecordPtr> w;
    EXPECT_THROW(centroid(w), DegenerateInput);
}

TEST(Centroid, GaussianSampleNearMean) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> mu(10);
    for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = static_cast<double>(i) - 4.5;
    double mu_norm = 0.0;
    for (double m : mu) mu_norm += m * m;
    mu_norm = std::sqrt(mu_norm);

    std::vector<RecordPtr> w;
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> v = mu;
        for (auto& x : v) x += g(rng);
        w.push_back(make_record("r" + std::to_string(k), std::move(v)));
    }
    const auto c = centroid(w);
    for (std::size_t i = 0; i < mu.size(); ++i) EXPECT_NEAR(c[i], mu[i], 0.1 * mu_norm + 0.2);
    // the sample mean of 1000 unit normals is much tighter than that bound
    for (std::size_t i = 0; i < mu.size(); ++i) EXPECT_NEAR(c[i], mu[i], 0.15);
}

TEST(Record, OracleLabelIsWriteOnce) {
    Record r;
    r.id = "x";
    r.assign_oracle(Label::Positive);
    EXPECT_NO_THROW(r.assign_oracle(Label::Positive));
    EXPECT_THROW(r.assign_oracle(Label::Negative), Error);
}

TEST(Labels, IntegerRoundTrip) {
    EXPECT_EQ(label_from_int(0), Label::Negative);
    EXPECT_EQ(label_from_int(1), Label::Positive);
    EXPECT_THROW(label_from_int(2), Error);
    EXPECT_EQ(to_int(Label::Positive), 1);
}

TEST(Metric, StringRoundTrip) {
    for (auto m : {DistanceMetric::Cosine, DistanceMetric::L1, DistanceMetric::L2})
        EXPECT_EQ(metric_from_string(to_string(m)), m);
    EXPECT_THROW(metric_from_string("hamming"), Error);
}

TEST(MixSeed, DistinctCountersGiveDistinctSeeds) {
    EXPECT_NE(mix_seed(1, 0), mix_seed(1, 1));
    EXPECT_NE(mix_seed(1, 0), mix_seed(2, 0));
    EXPECT_EQ(mix_seed(5, 9), mix_seed(5, 9));
}
