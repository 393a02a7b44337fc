#include <CLI11.hpp>

#include <iostream>
#include <thread>

#include "hjlab/hjlab.hpp"

int main(int argc, char** argv) {
    CLI::App app{"hjlab: harmonic Hamilton-Jacobi actions, synthesized potentials and checks"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string job_filter;
    std::size_t workers = 1;
    auto* run = app.add_subcommand("run", "execute the jobs of a JSON run configuration");
    run->add_option("--config", config_path, "run configuration file")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--jobs", job_filter, "only run jobs whose name contains this text");
    run->add_option("--workers", workers, "concurrent jobs")->check(CLI::Range(1, 256));

    auto* families = app.add_subcommand("families", "list the built-in action families");
    auto* version = app.add_subcommand("version", "print the tool version");

    CLI11_PARSE(app, argc, argv);

    if (*version) {
        std::cout << "hjlab " << hjlab::kVersion << "\n";
        return 0;
    }
    if (*families) {
        std::cout << hjlab::list_families();
        return 0;
    }

    hjlab::RunConfig config;
    try {
        config = hjlab::load_run_config(config_path);
    } catch (const hjlab::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    try {
        const auto outcome = hjlab::run(config, out_dir, {job_filter, workers});
        for (const auto& r : outcome.results) {
            std::cout << (r.pass ? "PASS " : "FAIL ") << r.type << " " << r.name;
            if (!r.error.empty()) {
                std::cout << ": " << r.error;
            }
            std::cout << "\n";
        }
        std::cout << outcome.passed << " passed, " << outcome.failed << " failed\n";
        return outcome.exit_code();
    } catch (const hjlab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
