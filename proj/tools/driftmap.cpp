// driftmap command-line tool: generate synthetic streams, run the adaptive
// pipeline over a record file, and turn a run's metrics into reports.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "driftmap/driftmap.hpp"

namespace fs = std::filesystem;
using namespace driftmap;

namespace {

int cmd_generate(const std::string& spec_path, const std::string& out_path, std::optional<std::uint64_t> seed) {
    StreamSpec spec = stream_spec_from_json(read_json_file(spec_path));
    if (seed) spec.seed = *seed;
    const GeneratedStream g = generate(spec);
    write_records(out_path, g.records);
    std::cerr << "wrote " << g.records.size() << " records to " << out_path << '\n';
    return 0;
}

struct RunArgs {
    std::string config;
    std::string input;
    std::string output;
    std::string mode;
    std::string resume;
    std::size_t max_windows = 0;
    std::optional<std::uint64_t> seed;
};

int cmd_run(const RunArgs& a) {
    std::optional<json> ck;
    RunConfig cfg;
    if (!a.resume.empty()) {
        ck = read_json_file(a.resume);
        cfg = run_config_from_json(ck->at("config"));
    } else if (!a.config.empty()) {
        cfg = run_config_from_json(read_json_file(a.config));
    }
    if (!a.input.empty()) cfg.input = a.input;
    if (!a.output.empty()) cfg.output_dir = a.output;
    if (!a.mode.empty()) cfg.mode = run_mode_from_string(a.mode);
    if (a.seed) cfg.seed = *a.seed;
    if (cfg.input.empty()) throw Error("no input record file given (use --input or the config's \"input\")");

    IngestResult in = ingest(cfg.input, cfg.dimension);
    for (const auto& w : in.warnings) std::cerr << "warning: " << w << '\n';
    if (in.malformed) std::cerr << "skipped " << in.malformed << " malformed line(s)\n";

    const fs::path out = cfg.output_dir;
    fs::create_directories(out);
    const std::string ck_path = (out / "checkpoint.json").string();

    // a resumed run goes to the end unless --max-windows is given again
    if (a.max_windows) cfg.max_windows = a.max_windows;
    Pipeline p = ck ? Pipeline::resume(*ck, std::move(in.records), a.max_windows) : Pipeline(cfg, std::move(in.records));
    write_json_file((out / "config.json").string(), to_json(p.config()));
    p.run(ck_path);
    p.write_metrics(out);
    if (p.finished()) {
        std::error_code ec;
        fs::remove(ck_path, ec);
    }
    std::size_t detections = 0, adaptations = 0;
    for (const auto& w : p.windows()) {
        detections += w.verdict.drift_detected;
        adaptations += w.adapted;
    }
    std::cout << "windows " << p.windows().size() << ", detections " << detections << ", adaptations " << adaptations
              << ", models " << p.ensemble().models().size() << (p.finished() ? "" : " (stopped; checkpoint saved)")
              << '\n';
    return 0;
}

int cmd_report(const std::string& metrics, const std::string& out) {
    const RunSummary s = write_report(metrics, out.empty() ? metrics : out);
    std::cout << "windows " << s.windows << ", detections " << s.detections << ", adaptations " << s.adaptations
              << ", mean batch f " << detail::fmt(s.mean_f) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Drift detection and adaptation over embedded data streams"};
    app.require_subcommand(1);

    std::string spec_path, gen_out;
    std::optional<std::uint64_t> gen_seed;
    auto* gen = app.add_subcommand("generate", "Write a synthetic drifting stream as line-delimited JSON");
    gen->add_option("--spec", spec_path, "Stream spec (JSON)")->required()->check(CLI::ExistingFile);
    gen->add_option("-o,--out", gen_out, "Output record file")->required();
    gen->add_option("--seed", gen_seed, "Override the spec's seed");

    RunArgs ra;
    auto* run = app.add_subcommand("run", "Run the pipeline over a record file");
    run->add_option("-c,--config", ra.config, "Run config (JSON)")->check(CLI::ExistingFile);
    run->add_option("-i,--input", ra.input, "Record file (overrides the config)");
    run->add_option("-o,--output", ra.output, "Output directory (overrides the config)");
    run->add_option("--mode", ra.mode, "baseline-static, detect-only or full-adaptive");
    run->add_option("--resume", ra.resume, "Continue from a checkpoint file")->check(CLI::ExistingFile);
    run->add_option("--max-windows", ra.max_windows, "Stop after this many windows and checkpoint");
    run->add_option("--seed", ra.seed, "Override the config's seed");

    std::string metrics_dir, report_out;
    auto* rep = app.add_subcommand("report", "Summarize a run and write plot series");
    rep->add_option("metrics", metrics_dir, "Directory holding windows.tsv and batches.tsv")->required()->check(CLI::ExistingDirectory);
    rep->add_option("-o,--out", report_out, "Report directory (defaults to the metrics directory)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*gen) return cmd_generate(spec_path, gen_out, gen_seed);
        if (*run) return cmd_run(ra);
        if (*rep) return cmd_report(metrics_dir, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
