// augbound — contrastive-learning augmentation bound experiments.
//
// Subcommands mirror the experiment kinds; each takes a JSON config and
// writes CSV/JSON outputs deterministically given the seeds in the config.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "augbound/errors.hpp"
#include "augbound/harness.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool validate_only = false;
};

int run_subcommand(augbound::ExperimentKind kind, const CliOptions& opts) {
    auto config = augbound::load_experiment_config(opts.config_path);
    if (config.kind != kind && kind != config.kind) {
        // subcommand wins; a mismatching explicit kind is a config error
    }
    if (augbound::to_string(config.kind) != augbound::to_string(kind)) {
        throw augbound::ConfigError("config.kind: '" + augbound::to_string(config.kind) +
                                    "' does not match subcommand '" + augbound::to_string(kind) +
                                    "'");
    }
    if (opts.seed) config.seed = *opts.seed;
    if (opts.out_dir) config.out_dir = *opts.out_dir;
    config.validate();
    if (opts.validate_only) {
        std::cout << "config OK: " << augbound::to_string(config.kind) << "\n";
        return 0;
    }
    const auto outputs = augbound::run(config);
    for (const auto& name : outputs) std::cout << config.out_dir << "/" << name << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"augmentation-aware contrastive learning bound experiments"};
    app.require_subcommand(1);

    CliOptions opts;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "JSON experiment config")->required();
        sub->add_option("--seed", [&opts](const CLI::results_t& res) {
            opts.seed = std::stoull(res[0]);
            return true;
        }, "override the config seed");
        sub->add_option("--out", [&opts](const CLI::results_t& res) {
            opts.out_dir = res[0];
            return true;
        }, "override the output directory");
        sub->add_flag("--validate", opts.validate_only, "check the config without running");
    };

    struct KindCommand {
        const char* name;
        const char* help;
        augbound::ExperimentKind kind;
    };
    const KindCommand commands[] = {
        {"pixel-distances", "pixel-level distance sweeps", augbound::ExperimentKind::PixelDistances},
        {"repr-distances", "embedding-level distance sweeps", augbound::ExperimentKind::ReprDistances},
        {"bound-report", "assemble bound certificates", augbound::ExperimentKind::BoundReportKind},
        {"decomp-check", "exhaustive decomposition and bound checks", augbound::ExperimentKind::DecompCheck},
        {"train-sweep", "toy training sweep with linear probing", augbound::ExperimentKind::TrainSweep},
    };
    for (const auto& cmd : commands) add_common(app.add_subcommand(cmd.name, cmd.help));

    CLI11_PARSE(app, argc, argv);

    try {
        for (const auto& cmd : commands) {
            if (app.got_subcommand(cmd.name)) return run_subcommand(cmd.kind, opts);
        }
        std::cerr << "error: no subcommand selected\n";
        return 1;
    } catch (const augbound::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const augbound::GuardError& e) {
        std::cerr << "guard violation: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
