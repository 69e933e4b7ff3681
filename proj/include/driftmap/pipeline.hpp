#pragma once

/// @file pipeline.hpp
/// @brief The per-window loop: predict, evaluate, route, detect, adapt.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftmap/config.hpp"
#include "driftmap/drift_detector.hpp"
#include "driftmap/ensemble.hpp"
#include "driftmap/io.hpp"

namespace driftmap {

struct WindowRow {
    std::int64_t window_index = 0;
    std::int64_t start = 0;
    std::int64_t end = 0;
    std::size_t records = 0;
    BinaryMetrics metrics;
    bool scored = false;
    DriftVerdict verdict;
    bool adapted = false;
    std::size_t model_count = 0;
    std::size_t general_size = 0;
};

struct BatchRow {
    std::int64_t batch_index = 0;
    std::int64_t end_timestamp = 0;
    BinaryMetrics metrics;
};

inline constexpr const char* kWindowsHeader =
    "window_index\tstart\tend\trecords\tprecision\trecall\tf_score\tkl_score\ttheta_kl\tdrift_detected\tin_smoothing\t"
    "adapted\tmodel_count\tgeneral_memory";
inline constexpr const char* kBatchesHeader = "batch_index\tend_timestamp\tprecision\trecall\tf_score";
inline constexpr const char* kDetectionsHeader = "window_index\tstart\tmetric\tkl_score\ttheta_kl";

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline char label_char(const std::optional<Label>& l) { return l ? (*l == Label::Positive ? '1' : '0') : '-'; }

inline std::optional<Label> char_label(char c) {
    if (c == '1') return Label::Positive;
    if (c == '0') return Label::Negative;
    return std::nullopt;
}

inline nlohmann::json metrics_json(const BinaryMetrics& m) { return {m.tp, m.fp, m.fn, m.tn}; }

inline BinaryMetrics metrics_from_json(const nlohmann::json& j) {
    BinaryMetrics m;
    m.tp = j.at(0).get<double>();
    m.fp = j.at(1).get<double>();
    m.fn = j.at(2).get<double>();
    m.tn = j.at(3).get<double>();
    return m.finalize();
}

} // namespace detail

/// Drives one run over an in-memory stream.
///
/// Records are copied on entry so the prediction can be attached; every
/// window, memory and reference holds these copies. The first segment trains
/// the initial models and seeds the detector; windows start after it.
class Pipeline {
public:
    Pipeline(RunConfig cfg, std::vector<RecordPtr> stream) : cfg_(std::move(cfg)), stream_(std::move(stream)) {
        cfg_.validate();
        processed_.resize(stream_.size());
        ensemble_ = Ensemble(cfg_.dimension, logistic_factory(cfg_.classifier), cfg_.general_capacity);
        if (stream_.empty()) return;

        const std::size_t n = stream_.size();
        std::size_t seg = cfg_.initial_segment ? std::min(cfg_.initial_segment, n) : std::min<std::size_t>(n / 10, 5000);
        seg = std::max(seg, std::min<std::size_t>(n, std::max<std::size_t>(cfg_.initial_models, 4)));
        for (std::size_t i = 0; i < seg; ++i) processed_[i] = copy_of(i);
        const std::vector<RecordPtr> segment(processed_.begin(), processed_.begin() + static_cast<std::ptrdiff_t>(seg));

        const std::size_t k = std::min(cfg_.initial_models, seg);
        const AdaptConfig acfg = cfg_.adapt_config();
        for (std::size_t c = 0; c < k; ++c) {
            const std::size_t lo = c * seg / k, hi = (c + 1) * seg / k;
            std::vector<RecordPtr> chunk(segment.begin() + static_cast<std::ptrdiff_t>(lo),
                                         segment.begin() + static_cast<std::ptrdiff_t>(hi));
            std::vector<WeightedSample> samples;
            for (const auto& r : chunk) {
                const auto l = cfg_.initial_truth_labels && r->truth ? r->truth : r->oracle_label;
                if (l) samples.push_back(WeightedSample{r, 1.0, *l, SampleSource::Oracle});
            }
            if (samples.empty())
                throw DegenerateInput("initial chunk " + std::to_string(c) + " has no labelled records to train on");
            ensemble_.add_model(samples, std::move(chunk), -1, acfg, norm_, mix_seed(cfg_.seed, 0xA11CE));
        }
        if (cfg_.mode != RunMode::BaselineStatic)
            detector_ = DriftDetector(cfg_.detector_config(), segment, norm_, mix_seed(cfg_.seed, 0xCA11B));
        position_ = seg;
        initial_segment_ = seg;
    }

    /// Rebuilds a run from a checkpoint. `stream` must be the same input.
    static Pipeline resume(const nlohmann::json& ck, std::vector<RecordPtr> stream,
                           std::optional<std::size_t> max_windows = std::nullopt) {
        if (ck.value("format", std::string()) != "driftmap-checkpoint") throw Error("not a driftmap checkpoint");
        Pipeline p;
        p.cfg_ = run_config_from_json(ck.at("config"));
        if (max_windows) p.cfg_.max_windows = *max_windows;
        p.stream_ = std::move(stream);
        const auto stream_size = ck.at("stream_size").get<std::size_t>();
        if (p.stream_.size() != stream_size)
            throw Error("input holds " + std::to_string(p.stream_.size()) + " records but the checkpoint expects " +
                        std::to_string(stream_size));
        p.position_ = ck.at("position").get<std::size_t>();
        p.initial_segment_ = ck.at("initial_segment").get<std::size_t>();
        if (p.position_ > 0 && p.stream_[p.position_ - 1]->id != ck.at("last_id").get<std::string>())
            throw Error("input does not match the checkpoint (record ids differ)");

        p.processed_.resize(p.stream_.size());
        const auto preds = ck.at("predictions").get<std::string>();
        for (std::size_t i = 0; i < p.position_; ++i) {
            auto r = std::make_shared<Record>(*p.stream_[i]);
            r->predicted_label = detail::char_label(preds.at(i));
            p.processed_[i] = std::move(r);
        }
        auto recs = [&](const nlohmann::json& ids) {
            std::vector<RecordPtr> out;
            out.reserve(ids.size());
            for (const auto& i : ids) out.push_back(p.processed_.at(i.get<std::size_t>()));
            return out;
        };
        auto memory = [&](const nlohmann::json& j) {
            BoundedMemory m(j.at("capacity").get<std::size_t>());
            for (auto& r : recs(j.at("records"))) m.push(std::move(r));
            return m;
        };

        p.norm_ = NormalizationState(ck.at("norm_bound").get<double>());
        const auto& ej = ck.at("ensemble");
        p.ensemble_ = Ensemble(p.cfg_.dimension, logistic_factory(p.cfg_.classifier), p.cfg_.general_capacity);
        p.ensemble_.general() = memory(ej.at("general"));
        p.ensemble_.restore_counters(ej.at("next_id").get<std::int64_t>(), ej.at("last_adaptation").get<std::int64_t>());
        for (const auto& mj : ej.at("models")) {
            ModelEntry m;
            m.model_id = mj.at("id").get<std::int64_t>();
            m.classifier = p.ensemble_.factory()(p.cfg_.dimension);
            ClassifierState st;
            st.kind = mj.at("classifier").at("kind").get<std::string>();
            st.params = mj.at("classifier").at("params").get<std::vector<double>>();
            st.hyper = mj.at("classifier").at("hyper").get<std::map<std::string, double>>();
            m.classifier->load(st);
            m.window = memory(mj.at("window"));
            m.memory = memory(mj.at("memory"));
            m.centroid = mj.at("centroid").get<std::vector<double>>();
            m.band = RhoBand{mj.at("band").at(0).get<double>(), mj.at("band").at(1).get<double>(),
                             mj.at("band").at(2).get<double>()};
            m.scale = NormalizationState(mj.at("scale").get<double>());
            m.perf_history = mj.at("perf_history").get<std::vector<double>>();
            m.created_at = mj.at("created_at").get<std::int64_t>();
            m.updated_at = mj.at("updated_at").get<std::int64_t>();
            p.ensemble_.push_restored(std::move(m));
        }
        if (const auto& dj = ck.at("detector"); !dj.is_null()) {
            const auto ref = recs(dj.at("reference"));
            p.detector_.restore(p.cfg_.detector_config(), std::deque<RecordPtr>(ref.begin(), ref.end()),
                                dj.at("theta").get<double>(), dj.at("smoothing_remaining").get<int>(),
                                dj.at("windows_seen").get<std::int64_t>(), dj.at("seed").get<std::uint64_t>(), p.norm_);
        }
        p.pending_adapt_ = ck.at("pending_adapt").get<bool>();
        const auto& eval = ck.at("eval_buffer");
        for (const char c : eval.at("truth").get<std::string>()) p.eval_truth_.push_back(*detail::char_label(c));
        for (const char c : eval.at("predicted").get<std::string>()) p.eval_pred_.push_back(*detail::char_label(c));
        for (const auto& w : ck.at("windows")) {
            WindowRow r;
            r.window_index = w.at("i").get<std::int64_t>();
            r.start = w.at("start").get<std::int64_t>();
            r.end = w.at("end").get<std::int64_t>();
            r.records = w.at("records").get<std::size_t>();
            r.scored = w.at("scored").get<bool>();
            r.metrics = detail::metrics_from_json(w.at("m"));
            if (const auto& v = w.at("verdict"); !v.is_null()) {
                r.verdict.window_index = v.at(0).get<std::int64_t>();
                r.verdict.kl_score = v.at(1).get<double>();
                r.verdict.theta_kl = v.at(2).get<double>();
                r.verdict.drift_detected = v.at(3).get<bool>();
                r.verdict.in_smoothing = v.at(4).get<bool>();
            } else {
                r.verdict.window_index = -1;
            }
            r.adapted = w.at("adapted").get<bool>();
            r.model_count = w.at("models").get<std::size_t>();
            r.general_size = w.at("general").get<std::size_t>();
            p.windows_.push_back(r);
        }
        for (const auto& b : ck.at("batches")) {
            BatchRow r;
            r.batch_index = b.at(0).get<std::int64_t>();
            r.end_timestamp = b.at(1).get<std::int64_t>();
            r.metrics = detail::metrics_from_json(b.at(2));
            p.batches_.push_back(r);
        }
        return p;
    }

    const RunConfig& config() const { return cfg_; }
    const Ensemble& ensemble() const { return ensemble_; }
    const DriftDetector& detector() const { return detector_; }
    const NormalizationState& normalization() const { return norm_; }
    const std::vector<WindowRow>& windows() const { return windows_; }
    const std::vector<BatchRow>& batches() const { return batches_; }
    std::size_t position() const { return position_; }
    std::size_t initial_segment() const { return initial_segment_; }
    bool finished() const { return position_ >= stream_.size(); }

    /// Processes the next window. Returns false when the stream is exhausted.
    bool step() {
        if (finished()) return false;
        const std::size_t start = position_;
        const std::size_t end = std::min(start + cfg_.stream_window_size, stream_.size());
        const auto widx = static_cast<std::int64_t>(windows_.size());
        const SelectionContext ctx = cfg_.selection_context(ensemble_.last_adaptation());
        const Label tie = cfg_.tie_positive ? Label::Positive : Label::Negative;

        Window window;
        window.start_index = stream_[start]->timestamp;
        window.end_index = stream_[end - 1]->timestamp;
        WindowRow row;
        row.window_index = widx;
        row.start = window.start_index;
        row.end = window.end_index;
        row.records = end - start;
        row.verdict.window_index = -1;

        const auto& models = ensemble_.models();
        std::vector<const ModelEntry*> members;
        for (std::size_t i = start; i < end; ++i) {
            auto r = copy_of(i);
            std::vector<std::size_t> chosen = select(cfg_.prediction_policy, r->vector, models, ctx);
            if (chosen.empty()) {
                chosen.resize(models.size());
                std::iota(chosen.begin(), chosen.end(), std::size_t{0});
            }
            members.clear();
            for (std::size_t c : chosen) members.push_back(&models[c]);
            r->predicted_label = predict(r->vector, members, cfg_.weighting, tie).label;
            if (r->truth) {
                row.metrics.add(*r->truth, *r->predicted_label);
                row.scored = true;
                eval_truth_.push_back(*r->truth);
                eval_pred_.push_back(*r->predicted_label);
                if (eval_truth_.size() == cfg_.eval_batch) flush_batch(r->timestamp);
            }
            processed_[i] = r;
            window.records.push_back(std::move(r));
        }
        row.metrics.finalize();

        if (cfg_.mode == RunMode::FullAdaptive) {
            track_performance(window);
            route(window, ctx);
        }

        if (cfg_.mode != RunMode::BaselineStatic && window.size() == cfg_.stream_window_size) {
            std::vector<std::vector<double>> raws;
            std::vector<ReferenceView> views;
            if (cfg_.detector_reference == ReferenceMode::PerModel) {
                raws.reserve(models.size());
                for (const auto& m : models) {
                    raws.push_back(raw_distances(cfg_.metric, m.region_records(), m.centroid));
                    views.push_back(ReferenceView{m.centroid, raws.back()});
                }
            }
            row.verdict = detector_.process_window(window, norm_, views);
            if (row.verdict.drift_detected && cfg_.mode == RunMode::FullAdaptive) {
                ensemble_.trim_memories(window.start_index);
                pending_adapt_ = true;
            }
        }

        if (pending_adapt_ && detector_.smoothing_remaining() == 0) {
            const double general_lambda = weighting_lambda(detector_.reference_band(norm_), cfg_.lambda);
            ensemble_.adapt(cfg_.adapt_config(), norm_, widx, general_lambda,
                            mix_seed(cfg_.seed, static_cast<std::uint64_t>(widx)));
            pending_adapt_ = false;
            row.adapted = true;
        }

        row.model_count = ensemble_.models().size();
        row.general_size = ensemble_.general().size();
        windows_.push_back(row);
        position_ = end;
        return true;
    }

    /// Runs until the end of the stream or until `max_windows` windows exist.
    /// Checkpoints land in the output directory when configured.
    void run(const std::string& checkpoint_path = {}) {
        while (!finished()) {
            if (cfg_.max_windows && windows_.size() >= cfg_.max_windows) break;
            step();
            if (!checkpoint_path.empty() && cfg_.checkpoint_every && windows_.size() % cfg_.checkpoint_every == 0)
                write_json_file(checkpoint_path, checkpoint(), -1);
        }
        if (!checkpoint_path.empty() && !finished()) write_json_file(checkpoint_path, checkpoint(), -1);
    }

    nlohmann::json checkpoint() const {
        std::unordered_map<const Record*, std::size_t> pos;
        for (std::size_t i = 0; i < position_; ++i) pos.emplace(processed_[i].get(), i);
        auto ids = [&](const auto& records) {
            nlohmann::json out = nlohmann::json::array();
            for (const auto& r : records) out.push_back(pos.at(r.get()));
            return out;
        };
        auto memory = [&](const BoundedMemory& m) {
            return nlohmann::json{{"capacity", m.capacity()}, {"records", ids(m.records())}};
        };

        nlohmann::json ck;
        ck["format"] = "driftmap-checkpoint";
        ck["version"] = 1;
        ck["config"] = to_json(cfg_);
        ck["stream_size"] = stream_.size();
        ck["position"] = position_;
        ck["initial_segment"] = initial_segment_;
        ck["last_id"] = position_ > 0 ? stream_[position_ - 1]->id : std::string();
        std::string preds(position_, '-');
        for (std::size_t i = 0; i < position_; ++i) preds[i] = detail::label_char(processed_[i]->predicted_label);
        ck["predictions"] = preds;
        ck["norm_bound"] = norm_.bound();

        nlohmann::json models = nlohmann::json::array();
        for (const auto& m : ensemble_.models()) {
            const ClassifierState st = m.classifier->save();
            models.push_back({{"id", m.model_id},
                              {"classifier", {{"kind", st.kind}, {"params", st.params}, {"hyper", st.hyper}}},
                              {"window", memory(m.window)},
                              {"memory", memory(m.memory)},
                              {"centroid", m.centroid},
                              {"band", {m.band.rho, m.band.delta_l, m.band.delta_h}},
                              {"scale", m.scale.bound()},
                              {"perf_history", m.perf_history},
                              {"created_at", m.created_at},
                              {"updated_at", m.updated_at}});
        }
        ck["ensemble"] = {{"next_id", ensemble_.next_id()},
                          {"last_adaptation", ensemble_.last_adaptation()},
                          {"general", memory(ensemble_.general())},
                          {"models", models}};
        if (cfg_.mode != RunMode::BaselineStatic && initial_segment_ > 0)
            ck["detector"] = {{"reference", ids(detector_.reference())},
                              {"theta", detector_.theta()},
                              {"smoothing_remaining", detector_.smoothing_remaining()},
                              {"windows_seen", detector_.windows_seen()},
                              {"seed", detector_.seed()}};
        else
            ck["detector"] = nullptr;
        ck["pending_adapt"] = pending_adapt_;
        std::string et, ep;
        for (Label l : eval_truth_) et.push_back(detail::label_char(l));
        for (Label l : eval_pred_) ep.push_back(detail::label_char(l));
        ck["eval_buffer"] = {{"truth", et}, {"predicted", ep}};

        nlohmann::json wins = nlohmann::json::array();
        for (const auto& w : windows_) {
            nlohmann::json v = nullptr;
            if (w.verdict.window_index >= 0)
                v = {w.verdict.window_index, w.verdict.kl_score, w.verdict.theta_kl, w.verdict.drift_detected,
                     w.verdict.in_smoothing};
            wins.push_back({{"i", w.window_index}, {"start", w.start}, {"end", w.end}, {"records", w.records},
                            {"scored", w.scored}, {"m", detail::metrics_json(w.metrics)}, {"verdict", v},
                            {"adapted", w.adapted}, {"models", w.model_count}, {"general", w.general_size}});
        }
        ck["windows"] = wins;
        nlohmann::json bats = nlohmann::json::array();
        for (const auto& b : batches_) bats.push_back({b.batch_index, b.end_timestamp, detail::metrics_json(b.metrics)});
        ck["batches"] = bats;
        return ck;
    }

    /// Writes windows.tsv, batches.tsv and detections.tsv (one row per detection) into `dir`.
    void write_metrics(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        std::ofstream w(dir / "windows.tsv"), b(dir / "batches.tsv"), d(dir / "detections.tsv");
        if (!w || !b || !d) throw Error("cannot write metrics into '" + dir.string() + "'");
        w << kWindowsHeader << '\n';
        b << kBatchesHeader << '\n';
        d << kDetectionsHeader << '\n';
        using detail::fmt;
        const std::string na = "NA";
        for (const auto& r : windows_) {
            const bool det = r.verdict.window_index >= 0;
            w << r.window_index << '\t' << r.start << '\t' << r.end << '\t' << r.records << '\t'
              << (r.scored ? fmt(r.metrics.precision) : na) << '\t' << (r.scored ? fmt(r.metrics.recall) : na) << '\t'
              << (r.scored ? fmt(r.metrics.f_score) : na) << '\t' << (det ? fmt(r.verdict.kl_score) : na) << '\t'
              << (det ? fmt(r.verdict.theta_kl) : na) << '\t' << (det && r.verdict.drift_detected ? 1 : 0) << '\t'
              << (det && r.verdict.in_smoothing ? 1 : 0) << '\t' << (r.adapted ? 1 : 0) << '\t' << r.model_count
              << '\t' << r.general_size << '\n';
            if (det && r.verdict.drift_detected)
                d << r.window_index << '\t' << r.start << '\t' << to_string(cfg_.metric) << '\t'
                  << fmt(r.verdict.kl_score) << '\t' << fmt(r.verdict.theta_kl) << '\n';
        }
        for (const auto& r : batches_)
            b << r.batch_index << '\t' << r.end_timestamp << '\t' << fmt(r.metrics.precision) << '\t'
              << fmt(r.metrics.recall) << '\t' << fmt(r.metrics.f_score) << '\n';
    }

private:
    Pipeline() = default;

    std::shared_ptr<Record> copy_of(std::size_t i) const {
        const auto& src = stream_[i];
        if (src->vector.size() != cfg_.dimension)
            throw DimensionMismatch("record '" + src->id + "' has " + std::to_string(src->vector.size()) +
                                    " components, expected " + std::to_string(cfg_.dimension));
        auto r = std::make_shared<Record>(*src);
        r->predicted_label.reset();
        return r;
    }

    void flush_batch(std::int64_t ts) {
        BatchRow b;
        b.batch_index = static_cast<std::int64_t>(batches_.size());
        b.end_timestamp = ts;
        b.metrics = score_predictions(eval_truth_, eval_pred_);
        batches_.push_back(b);
        eval_truth_.clear();
        eval_pred_.clear();
    }

    /// Each model's f-score on the window's oracle-labelled records.
    void track_performance(const Window& window) {
        std::vector<const Record*> oracle;
        for (const auto& r : window.records)
            if (r->has_oracle()) oracle.push_back(r.get());
        if (oracle.empty()) return;
        const Label tie = cfg_.tie_positive ? Label::Positive : Label::Negative;
        for (auto& m : ensemble_.models()) {
            BinaryMetrics bm;
            for (const Record* r : oracle) bm.add(*r->oracle_label, m.classifier->predict(r->vector, tie).label);
            m.perf_history.push_back(bm.finalize().f_score);
        }
    }

    void route(const Window& window, const SelectionContext& ctx) {
        auto& models = ensemble_.models();
        std::vector<ModelEntry*> targets;
        for (const auto& r : window.records) {
            targets.clear();
            for (std::size_t c : select(cfg_.routing_policy, r->vector, models, ctx)) targets.push_back(&models[c]);
            route_point(r, targets, ensemble_.general(), cfg_.metric, cfg_.lambda, &norm_);
        }
    }

    RunConfig cfg_;
    std::vector<RecordPtr> stream_;
    std::vector<RecordPtr> processed_;
    Ensemble ensemble_;
    DriftDetector detector_;
    NormalizationState norm_;
    std::size_t position_ = 0;
    std::size_t initial_segment_ = 0;
    bool pending_adapt_ = false;
    std::vector<Label> eval_truth_, eval_pred_;
    std::vector<WindowRow> windows_;
    std::vector<BatchRow> batches_;
};

} // namespace driftmap
