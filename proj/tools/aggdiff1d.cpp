#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "aggdiff/config.hpp"
#include "aggdiff/error.hpp"
#include "aggdiff/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"1-D two-species nonlocal aggregation with quadratic cross-diffusion"};
    app.require_subcommand(1);

    const struct {
        const char* name;
        const char* blurb;
    } modes[] = {
        {"simulate", "particle transport of the time-dependent system"},
        {"steady-kr", "segregated steady state via the positive-operator eigenproblem"},
        {"steady-asymptotic", "small-diffusion closed-form steady state"},
        {"coercivity-check", "Fourier-side coercivity test of the interaction energy"},
        {"eps-map", "eigenvalue sweep over outer support sizes"},
        {"compare", "cross-validate the three steady-state routes"},
    };
    std::string config_path, out_dir;
    for (const auto& m : modes) {
        CLI::App* sub = app.add_subcommand(m.name, m.blurb);
        sub->add_option("--config", config_path, "configuration file (key = value lines)")
            ->required();
        sub->add_option("--out", out_dir, "output directory (overrides out_dir in the config)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        aggdiff::ExperimentConfig cfg = aggdiff::parse_config_file(config_path);
        cfg.mode = app.get_subcommands().front()->get_name();
        const aggdiff::RunResult result = aggdiff::run_experiment(cfg, out_dir);
        std::printf("%s\n", result.summary.c_str());
        return 0;
    } catch (const aggdiff::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.code() == "config" ? 2 : 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
