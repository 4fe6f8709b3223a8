// geolab CLI: run named experiment recipes from a config file, re-emit
// plot data from persisted results, and verify recorded verdicts.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "geolab/harness.hpp"

namespace {

using geolab::harness::ExperimentResult;

void print_verdicts(const ExperimentResult& result) {
    for (const auto& v : result.verdicts) {
        std::printf("[%s] %-32s %s\n", v.pass ? "PASS" : "FAIL", v.name.c_str(),
                    v.details.c_str());
    }
}

int cmd_run(const std::string& config_path, int workers, const std::string& output) {
    auto kv = geolab::harness::KeyValueConfig::parse_file(config_path);
    auto cfg = geolab::harness::config_from_kv(kv);
    if (workers > 0) cfg.workers = workers;
    if (!output.empty()) cfg.output_dir = output;

    std::printf("running %s (hash %s, %d workers)\n", cfg.experiment.c_str(),
                cfg.hash.substr(0, 8).c_str(),
                cfg.workers > 0 ? cfg.workers : geolab::harness::default_workers());
    ExperimentResult result = geolab::harness::run_experiment(cfg);
    geolab::harness::persist_result(result, cfg.output_dir);
    std::printf("result: %s (%.1f s)\n", result.output_root.c_str(), result.wall_time_s);
    for (const auto& [name, fit] : result.fits)
        std::printf("fit %-24s slope %+.4f  r2 %.4f  stderr %.4f\n", name.c_str(), fit.slope,
                    fit.r2, fit.stderr_slope);
    print_verdicts(result);
    return result.all_pass() ? 0 : 2;
}

int cmd_plot(const std::string& result_dir, const std::string& table) {
    const ExperimentResult result = geolab::harness::load_result(result_dir);
    for (const auto& path : geolab::harness::emit_plot_data(result, table))
        std::printf("wrote %s\n", path.c_str());
    return 0;
}

int cmd_verify(const std::string& result_dir) {
    const ExperimentResult result = geolab::harness::load_result(result_dir);
    print_verdicts(result);
    return result.all_pass() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geolab: data-geometry experiments for gradient descent below the edge of stability"};
    app.require_subcommand(1);

    std::string config_path, result_dir, table, output;
    int workers = 0;

    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("config", config_path, "key = value config file")->required();
    run->add_option("--workers", workers, "worker threads (default: GEOLAB_WORKERS or cores)");
    run->add_option("--output", output, "output directory (overrides config)");

    auto* plot = app.add_subcommand("plot", "emit plot data for a result table");
    plot->add_option("result", result_dir, "persisted result directory")->required();
    plot->add_option("table", table, "table name")->required();

    auto* verify = app.add_subcommand("verify", "re-check verdicts of a persisted result");
    verify->add_option("result", result_dir, "persisted result directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, workers, output);
        if (plot->parsed()) return cmd_plot(result_dir, table);
        if (verify->parsed()) return cmd_verify(result_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
