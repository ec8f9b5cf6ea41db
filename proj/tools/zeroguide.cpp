// Command-line entry point: segment / eval / overlay.

#include "zeroguide/config.hpp"
#include "zeroguide/pipeline.hpp"
#include "zeroguide/types.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

int run_segment(const std::string& config_path, const std::vector<std::string>& sets,
                const CLI::App* cmd, const std::string& dataset, const std::string& out,
                const std::string& decoder, const std::string& backend, int workers) {
    zeroguide::RunConfig cfg;
    if (!config_path.empty()) zeroguide::apply_config_file(cfg, config_path);
    for (const std::string& kv : sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            throw zeroguide::ConfigError("--set expects key=value, got '" + kv + "'");
        }
        zeroguide::apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (cmd->count("--dataset") > 0) cfg.dataset = dataset;
    if (cmd->count("--out") > 0) cfg.out_dir = out;
    if (cmd->count("--decoder") > 0) cfg.decoder = decoder;
    if (cmd->count("--backend") > 0) cfg.backend = backend;
    if (cmd->count("--workers") > 0) cfg.workers = workers;

    const zeroguide::PipelineOutcome outcome = zeroguide::run_pipeline(cfg, std::cout);
    std::cout << "processed " << outcome.processed << ", resumed " << outcome.skipped
              << ", failed " << outcome.failed << "\n";
    if (outcome.failed > 0) {
        for (const std::string& f : outcome.failures) std::cerr << "failed: " << f << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"zero-guidance segmentation: segment, label, and evaluate without prompts"};
    app.require_subcommand(1);

    std::string config_path, dataset, out, decoder, backend;
    std::vector<std::string> sets;
    int workers = 1;
    CLI::App* segment = app.add_subcommand("segment", "run the pipeline over a dataset");
    segment->add_option("--config", config_path, "key=value config file");
    segment->add_option("--dataset", dataset, "dataset root (images/, annotations/, classes.txt)");
    segment->add_option("--out", out, "run output directory");
    segment->add_option("--decoder", decoder, "label decoder: retrieval | generative");
    segment->add_option("--backend", backend, "model backend: live | replay:<file>");
    segment->add_option("--workers", workers, "worker pool size")->check(CLI::PositiveNumber);
    segment->add_option("--set", sets, "extra config overrides as key=value (repeatable)");

    std::string run_dir, method, sweep;
    CLI::App* eval = app.add_subcommand("eval", "re-evaluate a finished run");
    eval->add_option("--run", run_dir, "run directory")->required();
    eval->add_option("--method", method, "label reassignment: tt | st")->required();
    eval->add_option("--sweep", sweep, "verification-threshold sweep: clip | sbert");

    std::string overlay_run;
    CLI::App* overlay = app.add_subcommand("overlay", "re-render qualitative overlays");
    overlay->add_option("--run", overlay_run, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (segment->parsed()) {
            return run_segment(config_path, sets, segment, dataset, out, decoder, backend, workers);
        }
        if (eval->parsed()) {
            zeroguide::EvalOptions opts;
            opts.method = method;
            opts.sweep = sweep;
            std::cout << zeroguide::evaluate_run(run_dir, opts, std::cout);
            return 0;
        }
        if (overlay->parsed()) {
            zeroguide::emit_overlays(overlay_run, std::cout);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
