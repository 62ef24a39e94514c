#pragma once

#include <string>

#include "aggdiff/config.hpp"

namespace aggdiff {

/// Outcome of one experiment run: a short machine-parsable summary line
/// (also the last line the CLI prints).  All file artifacts land in the
/// output directory: every mode writes report.txt (resolved configuration
/// plus mode metrics) and its own CSV products.
struct RunResult {
    std::string summary;
};

/// Dispatch on cfg.mode:
///   simulate          trajectory.csv, snapshot_*.csv, report.txt
///   steady-kr         steady_kr.csv (x,rho1,rho2), report.txt
///   steady-asymptotic steady_asymptotic.csv (x,rho1,rho2,w), report.txt
///   coercivity-check  coercivity.csv (verdict,xi_witness,lhs,rhs), report.txt
///   eps-map           eps_map.csv (l1,l2,eps), report.txt
///   compare           compare.csv (route_a,route_b,l1_distance), report.txt
/// A non-empty out_override replaces cfg.out_dir.  Throws Error on any
/// failure; "config"-coded errors signal bad configuration.
RunResult run_experiment(const ExperimentConfig& cfg,
                         const std::string& out_override = "");

} // namespace aggdiff
