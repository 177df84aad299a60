#include <iostream>

#include <CLI11.hpp>

#include "risklab/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"risklab: finite-space risk sharing experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", risklab::cli::kVersion);

    risklab::cli::RunFlags flags;
    std::string config;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    auto* run = app.add_subcommand("run", "run the experiment described by a config file");
    run->add_option("config", config, "config file (JSON)")->required();
    auto* out_opt = run->add_option("--out-dir", out_dir, "directory for the CSV and JSON outputs");
    auto* seed_opt = run->add_option("--seed", seed, "override the config seed");
    auto* thr_opt = run->add_option("--threads", threads, "worker threads for conjugate tables")->check(CLI::PositiveNumber);

    bool as_json = false;
    auto* list = app.add_subcommand("list", "list the available experiments");
    list->add_flag("--json", as_json, "machine-readable listing");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (list->parsed()) {
        std::cout << risklab::cli::list_experiments(as_json);
        return 0;
    }
    if (*out_opt) flags.out_dir = out_dir;
    if (*seed_opt) flags.seed = seed;
    if (*thr_opt) flags.threads = threads;
    return risklab::cli::run(config, flags, std::cout, std::cerr);
}
