#include <vector>

#include <gtest/gtest.h>

#include "driftmap/memory_manager.hpp"

using namespace driftmap;

namespace {

// Model centred at the origin with band (0.2, 0.4) on an L2 scale of 10.
ModelEntry origin_model(std::int64_t id) {
    ModelEntry m;
    m.model_id = id;
    m.centroid = {0.0, 0.0};
    m.scale = NormalizationState(10.0);
    m.band = RhoBand{0.5, 0.2, 0.4};
    return m;
}

RecordPtr at(double x, double y) { return make_record("p", {x, y}); }

ModelEntry symmetric_model(NormalizationState& norm) {
    ModelEntry m;
    m.model_id = 0;
    for (auto [x, y] : {std::pair{1.0, 0.0}, {-1.0, 0.0}, {0.0, 2.0}, {0.0, -2.0}, {3.0, 0.0}, {-3.0, 0.0}})
        m.window.push(at(x, y));
    recompute_band(m, DistanceMetric::L2, 0.5, norm);
    return m;
}

} // namespace

TEST(Routing, InBandGoesToModelOnly) {
    ModelEntry m = origin_model(7);
    GeneralMemory g(100);
    ModelEntry* members[] = {&m};
    const auto out = route_point(at(3.0, 0.0), members, g, DistanceMetric::L2, {});
    EXPECT_EQ(out.in_band, std::vector<std::int64_t>{7});
    EXPECT_TRUE(out.generalization.empty());
    EXPECT_FALSE(out.general);
    EXPECT_EQ(m.memory.size(), 1u);
    EXPECT_TRUE(g.empty());
}

TEST(Routing, FarPointGoesToGeneralOnly) {
    ModelEntry m = origin_model(7);
    GeneralMemory g(100);
    ModelEntry* members[] = {&m};
    const auto out = route_point(at(0.0, 8.0), members, g, DistanceMetric::L2, {});
    EXPECT_TRUE(out.in_band.empty());
    EXPECT_TRUE(out.generalization.empty());
    EXPECT_TRUE(out.general);
    EXPECT_TRUE(m.memory.empty());
    EXPECT_EQ(g.size(), 1u);
}

TEST(Routing, ShellGoesToModelAndGeneral) {
    ModelEntry m = origin_model(7);
    GeneralMemory g(100);
    ModelEntry* members[] = {&m};
    // d = 0.5 lies in [delta_h, delta_h + width) = [0.4, 0.6)
    const auto out = route_point(at(5.0, 0.0), members, g, DistanceMetric::L2, {});
    EXPECT_TRUE(out.in_band.empty());
    EXPECT_EQ(out.generalization, std::vector<std::int64_t>{7});
    EXPECT_TRUE(out.general);
    EXPECT_EQ(m.memory.size(), 1u);
    EXPECT_EQ(g.size(), 1u);
}

TEST(Routing, UpperBandEdgeBelongsToShell) {
    ModelEntry m = origin_model(1);
    GeneralMemory g(10);
    ModelEntry* members[] = {&m};
    const auto out = route_point(at(4.0, 0.0), members, g, DistanceMetric::L2, {});
    EXPECT_EQ(out.generalization.size(), 1u);
    EXPECT_TRUE(out.general);
}

TEST(Routing, InsideBandOfTwoModels) {
    ModelEntry a = origin_model(1), b = origin_model(2);
    b.centroid = {1.0, 0.0};
    GeneralMemory g(10);
    ModelEntry* members[] = {&a, &b};
    const auto out = route_point(at(3.5, 0.0), members, g, DistanceMetric::L2, {});
    EXPECT_EQ(out.in_band, (std::vector<std::int64_t>{1, 2}));
    EXPECT_FALSE(out.general);
}

TEST(Routing, EmptyEnsembleGoesToGeneral) {
    GeneralMemory g(10);
    const auto out = route_point(at(1.0, 1.0), std::span<ModelEntry* const>{}, g, DistanceMetric::L2, {});
    EXPECT_TRUE(out.general);
    EXPECT_EQ(g.size(), 1u);
}

TEST(Routing, RawLambdaSetsShellEdge) {
    ModelEntry m = origin_model(1);
    GeneralMemory g(10);
    ModelEntry* members[] = {&m};
    const LambdaConfig narrow{LambdaMode::Raw, 0.45};
    EXPECT_TRUE(route_point(at(5.0, 0.0), members, g, DistanceMetric::L2, narrow).generalization.empty());
    EXPECT_EQ(route_point(at(4.2, 0.0), members, g, DistanceMetric::L2, narrow).generalization.size(), 1u);
}

TEST(Routing, ReportsRawDistanceToRunningBound) {
    ModelEntry m = origin_model(1);
    GeneralMemory g(10);
    NormalizationState norm(10.0);
    ModelEntry* members[] = {&m};
    route_point(at(30.0, 40.0), members, g, DistanceMetric::L2, {}, &norm);
    EXPECT_DOUBLE_EQ(norm.bound(), 50.0);
}

TEST(GeneralizationBoundary, OffsetAndRaw) {
    const RhoBand b{0.5, 0.2, 0.4};
    EXPECT_DOUBLE_EQ(generalization_boundary(b, {}), 0.6);
    EXPECT_DOUBLE_EQ(generalization_boundary(RhoBand{0.5, 0.3, 0.8}, {}), 1.0);
    EXPECT_DOUBLE_EQ(generalization_boundary(b, {LambdaMode::Raw, 0.7}), 0.7);
    EXPECT_DOUBLE_EQ(generalization_boundary(b, {LambdaMode::Raw, 0.1}), 0.4);
}

TEST(BoundedMemory, EvictsOldestFirst) {
    BoundedMemory m(2);
    m.push(make_record("a", {1}, 1));
    m.push(make_record("b", {1}, 2));
    m.push(make_record("c", {1}, 3));
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m.records().front()->id, "b");
}

TEST(BoundedMemory, TrimBeforeTimestamp) {
    BoundedMemory m(10);
    for (int t = 0; t < 5; ++t) m.push(make_record("r", {1}, t));
    m.trim_before(3);
    EXPECT_EQ(m.size(), 2u);
    EXPECT_EQ(m.records().front()->timestamp, 3);
}

TEST(BoundedMemory, ZeroCapacityThrows) { EXPECT_THROW(BoundedMemory(0), Error); }

TEST(RecomputeBand, UnchangedMemoryKeepsBand) {
    NormalizationState norm(100.0);
    ModelEntry m = symmetric_model(norm);
    const RhoBand before = m.band;
    const RhoBand after = recompute_band(m, DistanceMetric::L2, 0.5, norm);
    EXPECT_DOUBLE_EQ(before.delta_l, after.delta_l);
    EXPECT_DOUBLE_EQ(before.delta_h, after.delta_h);
}

TEST(RecomputeBand, FarPointsRaiseUpperEdge) {
    NormalizationState norm(100.0);
    ModelEntry m = symmetric_model(norm);
    const double before = m.band.delta_h;
    m.memory.push(at(10.0, 0.0));
    m.memory.push(at(-10.0, 0.0));
    recompute_band(m, DistanceMetric::L2, 0.5, norm);
    EXPECT_GT(m.band.delta_h, before);
}

TEST(RecomputeBand, DuplicatesKeepMu) {
    NormalizationState norm(100.0);
    ModelEntry m = symmetric_model(norm);
    std::vector<double> d0;
    for (const auto& r : m.region_records()) d0.push_back(m.distance_to(DistanceMetric::L2, r->vector));
    const double mu0 = fit_distances(d0).mu;

    for (const auto& r : m.window.snapshot()) m.memory.push(r);
    recompute_band(m, DistanceMetric::L2, 0.5, norm);
    std::vector<double> d1;
    for (const auto& r : m.region_records()) d1.push_back(m.distance_to(DistanceMetric::L2, r->vector));
    EXPECT_NEAR(fit_distances(d1).mu, mu0, 1e-15);
    EXPECT_EQ(m.centroid, (std::vector<double>{0.0, 0.0}));
}

TEST(RecomputeBand, EmptyModelThrows) {
    ModelEntry m;
    NormalizationState norm;
    EXPECT_THROW(recompute_band(m, DistanceMetric::L2, 0.5, norm), DegenerateInput);
}
