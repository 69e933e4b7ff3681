#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "driftmap/driftmap.hpp"

using namespace driftmap;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("driftmap_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
    std::ofstream out(p);
    for (const auto& l : lines) out << l << '\n';
}

std::string record_line(int i, std::size_t dim) {
    json j{{"id", "r" + std::to_string(i)}, {"timestamp", i}, {"vector", std::vector<double>(dim, 0.5 + i)}, {"label", i % 2}};
    return j.dump();
}

StreamSpec small_spec(std::int64_t length) {
    StreamSpec s;
    s.dimension = 10;
    s.length = length;
    s.noise_fraction = 0.8;
    s.oracle_fraction = 0.1;
    s.noise.scale = 2.0;
    s.noise.offset = 20.0;
    s.seed = 5;
    ClusterSpec pos;
    pos.label = Label::Positive;
    pos.scale = 0.5;
    ClusterSpec neg;
    neg.scale = 0.5;
    s.clusters = {pos, neg};
    return s;
}

RunConfig small_run() {
    RunConfig c;
    c.dimension = 10;
    c.stream_window_size = 500;
    c.initial_segment = 2000;
    c.calibration_resamples = 100;
    c.min_spawn_records = 100;
    c.min_spawn_oracle = 10;
    c.seed = 42;
    return c;
}

} // namespace

TEST(Ingest, EmptyFileIsEmptyStream) {
    const auto dir = scratch("ingest_empty");
    write_lines(dir / "e.jsonl", {});
    const auto r = ingest((dir / "e.jsonl").string(), 4);
    EXPECT_TRUE(r.records.empty());
    EXPECT_EQ(r.malformed, 0u);
}

TEST(Ingest, OneLineOneRecord) {
    const auto dir = scratch("ingest_one");
    write_lines(dir / "o.jsonl", {record_line(3, 4)});
    const auto r = ingest((dir / "o.jsonl").string(), 4);
    ASSERT_EQ(r.records.size(), 1u);
    EXPECT_EQ(r.records[0]->id, "r3");
    EXPECT_EQ(r.records[0]->timestamp, 3);
    EXPECT_EQ(r.records[0]->vector, std::vector<double>(4, 3.5));
    EXPECT_EQ(r.records[0]->truth, Label::Positive);
    EXPECT_FALSE(r.records[0]->has_oracle());
}

TEST(Ingest, ShortVectorIsRejectedAndCounted) {
    const auto dir = scratch("ingest_short");
    std::vector<std::string> lines;
    for (int i = 0; i < 200; ++i) lines.push_back(record_line(i, 4));
    lines.push_back(record_line(200, 3));
    write_lines(dir / "s.jsonl", lines);
    const auto r = ingest((dir / "s.jsonl").string(), 4);
    EXPECT_EQ(r.records.size(), 200u);
    EXPECT_EQ(r.malformed, 1u);
    EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Ingest, TooManyMalformedLinesAbort) {
    const auto dir = scratch("ingest_bad");
    std::vector<std::string> lines;
    for (int i = 0; i < 95; ++i) lines.push_back(record_line(i, 4));
    for (int i = 0; i < 5; ++i) lines.push_back("{not json");
    write_lines(dir / "b.jsonl", lines);
    EXPECT_THROW(ingest((dir / "b.jsonl").string(), 4), IngestError);
}

TEST(Ingest, MissingFileThrows) { EXPECT_THROW(ingest("/nonexistent/records.jsonl", 4), IngestError); }

TEST(Ingest, WriteThenReadRoundTrip) {
    const auto dir = scratch("ingest_roundtrip");
    const auto g = generate(small_spec(300));
    write_records((dir / "g.jsonl").string(), g.records);
    const auto r = ingest((dir / "g.jsonl").string(), 10);
    ASSERT_EQ(r.records.size(), g.records.size());
    for (std::size_t i = 0; i < g.records.size(); ++i) {
        EXPECT_EQ(r.records[i]->vector, g.records[i]->vector);
        EXPECT_EQ(r.records[i]->truth, g.records[i]->truth);
        EXPECT_EQ(r.records[i]->oracle_label, g.records[i]->oracle_label);
    }
}

TEST(RunConfigJson, RoundTrip) {
    RunConfig c = small_run();
    c.mode = RunMode::DetectOnly;
    c.metric = DistanceMetric::L1;
    c.theta_kl = 0.25;
    c.lambda = {LambdaMode::Raw, 0.3};
    c.prediction_policy = {SelectionKind::TopPerforming, 4, 2, false};
    c.initial_truth_labels = false;
    const json j = to_json(c);
    EXPECT_EQ(to_json(run_config_from_json(j)), j);
}

TEST(RunConfigJson, UnknownKeyRejected) {
    json j = to_json(small_run());
    j["smoothing"] = 3;
    EXPECT_THROW(run_config_from_json(j), Error);
}

TEST(RunConfigJson, BadValuesRejected) {
    json j = to_json(small_run());
    j["mode"] = "adaptive";
    EXPECT_THROW(run_config_from_json(j), Error);
    j = to_json(small_run());
    j["rho"] = 1.5;
    EXPECT_THROW(run_config_from_json(j), Error);
}

TEST(RunConfigJson, PartialConfigKeepsDefaults) {
    const RunConfig c = run_config_from_json(json{{"dimension", 12}, {"metric", "l2"}});
    EXPECT_EQ(c.dimension, 12u);
    EXPECT_EQ(c.metric, DistanceMetric::L2);
    EXPECT_EQ(c.stream_window_size, RunConfig{}.stream_window_size);
}

TEST(Pipeline, NoDriftStreamNeverAdapts) {
    const auto g = generate(small_spec(12000));
    Pipeline p(small_run(), g.records);
    p.run();
    ASSERT_TRUE(p.finished());
    EXPECT_EQ(p.windows().size(), 20u);
    for (const auto& w : p.windows()) {
        EXPECT_FALSE(w.adapted) << "window " << w.window_index;
        EXPECT_FALSE(w.verdict.drift_detected) << "window " << w.window_index;
    }
    EXPECT_EQ(p.ensemble().models().size(), 3u);
}

TEST(Pipeline, BaselineSkipsDetection) {
    auto cfg = small_run();
    cfg.mode = RunMode::BaselineStatic;
    Pipeline p(cfg, generate(small_spec(4000)).records);
    p.run();
    for (const auto& w : p.windows()) {
        EXPECT_EQ(w.verdict.window_index, -1);
        EXPECT_FALSE(w.adapted);
    }
    EXPECT_EQ(p.ensemble().general().size(), 0u);
}

TEST(Pipeline, SuddenDriftIsDetectedAndAdapted) {
    auto spec = small_spec(8000);
    DriftEvent e;
    e.type = DriftType::Sudden;
    e.onset = 5000;
    e.magnitude = 60.0;
    e.cluster = -1;
    spec.events = {e};
    Pipeline p(small_run(), generate(spec).records);
    p.run();
    std::int64_t first = -1, adapted = -1;
    for (const auto& w : p.windows()) {
        if (first < 0 && w.verdict.drift_detected) first = w.window_index;
        if (adapted < 0 && w.adapted) adapted = w.window_index;
    }
    // window 6 covers records 5000..5499
    EXPECT_EQ(first, 6);
    EXPECT_EQ(adapted, first + small_run().smoothing_windows);
}

TEST(Pipeline, CheckpointResumeMatchesUninterruptedRun) {
    auto spec = small_spec(6000);
    spec.events = {DriftEvent{DriftType::Sudden, 3500, 60.0, 0, 0, -1, {}}};
    const auto records = generate(spec).records;

    Pipeline full(small_run(), records);
    full.run();

    auto cfg = small_run();
    cfg.max_windows = 3;
    Pipeline first(cfg, records);
    first.run();
    ASSERT_FALSE(first.finished());
    const json ck = json::parse(first.checkpoint().dump());
    Pipeline resumed = Pipeline::resume(ck, records, std::size_t{0});
    resumed.run();
    ASSERT_TRUE(resumed.finished());

    const auto dir = scratch("checkpoint");
    full.write_metrics(dir / "full");
    resumed.write_metrics(dir / "resumed");
    for (const char* f : {"windows.tsv", "batches.tsv", "detections.tsv"}) {
        std::ifstream a(dir / "full" / f), b(dir / "resumed" / f);
        const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
        EXPECT_EQ(sa, sb) << f;
    }
}

TEST(Pipeline, CheckpointRejectsDifferentInput) {
    auto cfg = small_run();
    cfg.max_windows = 1;
    const auto records = generate(small_spec(4000)).records;
    Pipeline p(cfg, records);
    p.run();
    const std::vector<RecordPtr> shorter(records.begin(), records.end() - 1);
    EXPECT_THROW(Pipeline::resume(p.checkpoint(), shorter), Error);
}

TEST(Report, ZeroWindowsIsHeaderOnly) {
    const auto dir = scratch("report_empty");
    Pipeline p(small_run(), {});
    p.run();
    p.write_metrics(dir);
    const RunSummary s = write_report(dir, dir / "report");
    EXPECT_EQ(s.windows, 0u);
    for (const char* f : {"series_performance.tsv", "series_kl.tsv", "series_models.tsv", "detection_markers.tsv"}) {
        const Table t = read_table(dir / "report" / f);
        EXPECT_FALSE(t.header.empty()) << f;
        EXPECT_TRUE(t.rows.empty()) << f;
    }
    EXPECT_TRUE(read_table(dir / "detections.tsv").rows.empty());
}

TEST(Report, OneDetectionOneMarker) {
    const auto dir = scratch("report_one");
    {
        std::ofstream w(dir / "windows.tsv");
        w << kWindowsHeader << '\n';
        for (int i = 0; i < 4; ++i)
            w << i << '\t' << i * 10 << '\t' << i * 10 + 9 << "\t10\t1\t1\t1\t0.01\t0.05\t" << (i == 2 ? 1 : 0)
              << '\t' << (i == 3 ? 1 : 0) << "\t0\t3\t0\n";
        std::ofstream b(dir / "batches.tsv");
        b << kBatchesHeader << '\n' << "0\t99\t0.5\t1\t0.666666667\n";
    }
    const RunSummary s = write_report(dir, dir);
    EXPECT_EQ(s.detections, 1u);
    EXPECT_EQ(s.windows, 4u);
    EXPECT_NEAR(s.mean_f, 0.666666667, 1e-12);
    const Table markers = read_table(dir / "detection_markers.tsv");
    ASSERT_EQ(markers.rows.size(), 1u);
    EXPECT_EQ(markers.rows[0][markers.column("window_index")], "2");
    EXPECT_EQ(read_table(dir / "series_kl.tsv").rows.size(), 4u);
}

TEST(Report, SeriesHaveOneRowPerWindow) {
    const auto dir = scratch("report_series");
    Pipeline p(small_run(), generate(small_spec(5000)).records);
    p.run();
    p.write_metrics(dir);
    const RunSummary s = write_report(dir, dir);
    EXPECT_EQ(s.windows, p.windows().size());
    EXPECT_EQ(s.batches, p.batches().size());
    for (const char* f : {"series_performance.tsv", "series_kl.tsv", "series_models.tsv"})
        EXPECT_EQ(read_table(dir / f).rows.size(), p.windows().size()) << f;
}
