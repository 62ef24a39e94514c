#pragma once

#include <cstddef>
#include <string>

#include "aggdiff/grid_density.hpp"
#include "aggdiff/kernels.hpp"

namespace aggdiff {

/// Description of one kernel in a config file: either an analytic Gaussian
/// (amplitude, width) or a tabulated profile loaded from a two-column file.
struct KernelSpec {
    std::string family = "gaussian"; // "gaussian" | "tabulated"
    double amplitude = 1.0;
    double width = 1.0;
    std::string table_path;
};

/// Initial density expression: shape(args) with the shapes
///   triangle(center, width)  -> (1 - |x - center| / width)_+
///   gaussian(center, sigma)
///   uniform(a, b)
///   table(path)              -> two-column x, value file
/// The profile is normalized to the species mass on the output grid.
struct InitialSpec {
    std::string kind = "triangle";
    double a = 0.0;
    double b = 1.0;
    std::string table_path;
};

struct ExperimentConfig {
    // [model]
    double eps = 1.0;
    double mass1 = 1.0;
    double mass2 = 1.0;

    // [kernels]  Default: S1 = sigma1*K, S2 = sigma2*K built from base K.
    // Explicit per-kernel specs (s1_*, s2_*, k_*) switch explicit_kernels on.
    KernelSpec base;
    double sigma1 = 1.0;
    double sigma2 = 1.0;
    bool explicit_kernels = false;
    KernelSpec s1, s2, k;

    // [initial1] / [initial2]
    InitialSpec init1;
    InitialSpec init2;

    // [particles]
    std::size_t n_particles = 50;
    double t_final = 2.0;
    double dt = 1e-3;
    double dt_min = 1e-8;
    double gap_min = 1e-10;
    double bandwidth_scale = 2.0;
    double bandwidth_override = 0.0; // > 0 fixes the mollifier bandwidth
    double stability_safety = 0.5;
    double snapshot_every = 0.1;

    // [grid]  snapshot/initial-data grid
    double grid_xmin = -4.0;
    double grid_xmax = 4.0;
    std::size_t grid_cells = 800;

    // [steady]  eigenproblem supports and resolution
    double steady_l1 = 0.5;
    double steady_l2 = 1.0;
    std::size_t steady_n1 = 64;
    std::size_t steady_n2 = 64;
    std::size_t steady_profile_cells = 1024;
    double steady_tol = 1e-10;
    std::size_t steady_max_iter = 100000;

    // [map]  eps(L2) sweep
    double map_l2_min = 0.6;
    double map_l2_max = 2.4;
    std::size_t map_steps = 10;
    double map_l1_fraction = 0.5;

    // [coercivity]
    double coercivity_xi_max = 0.0; // 0 = automatic from kernel widths
    std::size_t coercivity_n_xi = 2001;

    // [compare]
    double compare_t_long = 4.0;
    std::size_t compare_n_particles = 100;

    // [run]
    std::string mode = "simulate";
    std::string out_dir = "out";
};

/// Parse the INI-style config text.  Unknown sections or keys, malformed
/// values, and invariant violations all raise Error("config", ...) with a
/// line diagnostic.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// Validate invariants (eps > 0, masses > 0, N >= 2, T >= 0, dt > 0, grid
/// sane, ...); throws Error("config", ...) on violation.
void validate_config(const ExperimentConfig& cfg);

/// Kernels from the config (amplitude-scaled family or explicit triple).
KernelTriple build_triple(const ExperimentConfig& cfg);

/// Sample an initial shape on the grid and normalize it to `mass`.
GridDensity build_initial(const InitialSpec& spec, double mass, double x0,
                          double dx, std::size_t n_nodes);

/// Render every field (defaults included) as config text, used to make
/// reports self-describing.
std::string render_config(const ExperimentConfig& cfg);

} // namespace aggdiff
