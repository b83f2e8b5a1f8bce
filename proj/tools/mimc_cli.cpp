// SPDX-License-Identifier: Apache-2.0
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mimc/experiment.hpp"

namespace {

int fail(const nlohmann::json& error) {
    std::cerr << error.dump() << '\n';
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dimension-adaptive multi-index Monte Carlo"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    bool verbose = false;
    run->add_option("-c,--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--out", out_dir, "Output directory (overrides output_dir)");
    run->add_option("-s,--seed", seed, "Run a single seed (overrides seeds)");
    run->add_option("-w,--workers", workers, "Sampling threads (overrides driver.workers)");
    run->add_flag("-v,--verbose", verbose, "Print one line per run to stderr");

    auto* defaults = app.add_subcommand("defaults", "Print the default config as JSON");
    auto* reference = app.add_subcommand("reference", "Print a Markdown table of all config keys");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (defaults->parsed()) {
        std::cout << mimc::to_json(mimc::ExperimentSpec{}).dump(2) << '\n';
        return 0;
    }
    if (reference->parsed()) {
        std::cout << mimc::config_reference();
        return 0;
    }

    try {
        mimc::ExperimentSpec spec = mimc::load_experiment(config_path);
        if (!out_dir.empty()) spec.output_dir = out_dir;
        if (seed) spec.seeds = {*seed};
        if (workers) spec.driver.workers = *workers;
        spec.validate();
        const auto model = mimc::make_model(spec);
        mimc::run_experiment(spec, *model, verbose ? &std::cerr : nullptr);
        return 0;
    } catch (const mimc::ConfigError& e) {
        return fail({{"error", "config"}, {"field", e.field()}, {"message", e.message()}});
    } catch (const mimc::DriverError& e) {
        return fail({{"error", "driver"}, {"message", e.what()}, {"iterations", e.records().size()}});
    } catch (const std::exception& e) {
        return fail({{"error", "runtime"}, {"message", e.what()}});
    }
}
