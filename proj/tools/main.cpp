#include "lipmrac/runner.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

namespace {

struct CommonArgs {
    std::string config_path;
    std::string seeds;
    std::string out_dir;
    int jobs = 0;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("config", args.config_path, "experiment config file")->required();
    cmd->add_option("--seeds", args.seeds, "comma-separated seed list (overrides config)");
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--jobs", args.jobs, "parallel trial workers (overrides config)");
    cmd->add_option("--override", args.overrides, "scenario field override key=value")
        ->take_all();
}

lipmrac::ExperimentConfig load_config(const CommonArgs& args, bool validate = true) {
    lipmrac::ExperimentConfig config = lipmrac::parse_config_file(args.config_path, validate);
    if (!args.seeds.empty()) {
        config.seeds.clear();
        std::size_t pos = 0;
        while (pos < args.seeds.size()) {
            const std::size_t comma = args.seeds.find(',', pos);
            const std::string item = args.seeds.substr(
                pos, comma == std::string::npos ? std::string::npos : comma - pos);
            config.seeds.push_back(static_cast<std::uint64_t>(std::stoull(item)));
            if (comma == std::string::npos) {
                break;
            }
            pos = comma + 1;
        }
    }
    if (!args.out_dir.empty()) {
        config.out_dir = args.out_dir;
    }
    if (args.jobs > 0) {
        config.jobs = args.jobs;
    }
    for (const std::string& item : args.overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("--override expects key=value, got '" + item + "'");
        }
        config.overrides[item.substr(0, eq)] = item.substr(eq + 1);
    }
    if (validate) {
        // Re-validate with the CLI-level changes applied.
        lipmrac::resolve_scenarios(config);
    }
    return config;
}

int run_command(const CommonArgs& args, bool force_sweep) {
    lipmrac::ExperimentConfig config = load_config(args);
    if (force_sweep) {
        config.scenario_name = "rate-sweep";
        lipmrac::resolve_scenarios(config);
    }
    const lipmrac::ExperimentOutcome outcome = lipmrac::run_experiment(config);
    std::cout << lipmrac::summarize(outcome.rows);
    std::cout << "\n" << outcome.rows.size() << " trials, artifacts under '" << config.out_dir
              << "'\n";
    if (!outcome.certified_invariants_ok) {
        std::cerr << "error: a certified trial diverged or failed the state bound\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lipschitz-network model-reference adaptive control simulator"};
    app.require_subcommand(1);

    CommonArgs run_args, sweep_args, certify_args;
    CLI::App* run_cmd = app.add_subcommand("run", "execute the configured experiment");
    add_common(run_cmd, run_args);
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "execute the learning-rate sweep over the config");
    add_common(sweep_cmd, sweep_args);
    CLI::App* certify_cmd = app.add_subcommand(
        "certify", "print the small-gain certificate report without simulating");
    add_common(certify_cmd, certify_args);
    CLI::App* list_cmd = app.add_subcommand("list-scenarios", "list known scenario names");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            return run_command(run_args, false);
        }
        if (sweep_cmd->parsed()) {
            return run_command(sweep_args, true);
        }
        if (certify_cmd->parsed()) {
            bool all_certified = false;
            std::cout << lipmrac::certify_report(load_config(certify_args, false),
                                                 &all_certified);
            return all_certified ? 0 : 1;
        }
        if (list_cmd->parsed()) {
            for (const std::string& name : lipmrac::known_scenario_names()) {
                std::cout << name << "\n";
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
