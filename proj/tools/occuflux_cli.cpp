#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "occuflux/config.hpp"
#include "occuflux/serialize.hpp"

namespace {

int run_config(const std::string& path, const std::string& out_override, int threads,
               const std::vector<int>& only, bool must_verify) {
    occuflux::ExperimentConfig cfg = occuflux::parse_config(occuflux::read_file(path));
    if (must_verify && cfg.kind != "verify") {
        std::cerr << "error: 'verify' needs a config with kind \"verify\", got \"" << cfg.kind
                  << "\"\n";
        return 2;
    }
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (threads >= 0) cfg.threads = threads;
    if (!only.empty()) cfg.only = only;

    const occuflux::RunResult res = occuflux::run_experiment(cfg, &std::cout);
    if (cfg.kind == "verify") {
        std::cout << (res.ok ? "verification: all criteria passed"
                             : "verification: FAILED criteria present")
                  << "\n";
    } else if (!res.summary.empty()) {
        std::cout << res.summary << "\n";
    }
    for (const auto& a : res.artifacts) std::cout << "wrote " << a << "\n";
    return res.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"occuflux: simulation and analytics for occupation-time fluctuations of a "
                 "branching particle system with immigration"};
    app.require_subcommand(1);

    std::string run_path;
    std::string verify_path;
    std::string out_override;
    int threads = -1;
    std::vector<int> only;

    CLI::App* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
    run->add_option("config", run_path, "path to the config file")->required();
    run->add_option("--out", out_override, "override the config's output directory");
    run->add_option("--threads", threads, "worker threads (0 = auto)")
        ->check(CLI::NonNegativeNumber);

    CLI::App* verify =
        app.add_subcommand("verify", "Run the statistical verification suite from a config");
    verify->add_option("config", verify_path, "path to the config file (kind \"verify\")")
        ->required();
    verify->add_option("--out", out_override, "override the config's output directory");
    verify->add_option("--threads", threads, "worker threads (0 = auto)")
        ->check(CLI::NonNegativeNumber);
    verify->add_option("--only", only, "run only these criteria (1-10)")
        ->check(CLI::Range(1, 10));

    CLI::App* schema = app.add_subcommand("schema", "Print the config file schema");

    CLI11_PARSE(app, argc, argv);

    try {
        if (schema->parsed()) {
            std::cout << occuflux::config_schema() << "\n";
            return 0;
        }
        if (run->parsed()) return run_config(run_path, out_override, threads, {}, false);
        return run_config(verify_path, out_override, threads, only, true);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
