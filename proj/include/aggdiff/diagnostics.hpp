#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "aggdiff/energy.hpp"
#include "aggdiff/grid_density.hpp"
#include "aggdiff/kernels.hpp"

namespace aggdiff {

/// One line of the trajectory summary.  Column order of the CSV matches the
/// field order here.
struct MetricsRow {
    double t = 0.0;
    double mass1 = 0.0, mass2 = 0.0;
    double com = 0.0;
    double variance = 0.0; // second moment of w about com, mass-normalized
    double overlap = 0.0;  // \int min(rho1, rho2)
    double support_len_w = 0.0;
    int n_components_w = 0;
    double zeta_mass_fraction = 0.0; // w-mass fraction with |zeta| > 0.9
    double energy = 0.0;
};

/// \int min(a, b) dx by the trapezoid rule on the shared grid.
double overlap_mass(const GridDensity& a, const GridDensity& b);

/// \int |a - b| dx by the trapezoid rule on the shared grid.
double l1_distance(const GridDensity& a, const GridDensity& b);

/// Maximal runs of samples above floor_rel * peak; runs separated by a single
/// below-floor sample are merged.  Interval lengths use cell extent (one dx
/// per participating node).
struct SupportComponents {
    std::vector<std::pair<double, double>> intervals;
    double total_length = 0.0;
    int count = 0;
};
SupportComponents support_components(const GridDensity& rho, double floor_rel = 1e-8);

MetricsRow metrics(const GridDensity& rho1, const GridDensity& rho2,
                   const KernelTriple& t, double eps, double time);

/// Overlap below 5% of the smaller species mass and at least 90% of the
/// w-mass carrying |zeta| > 0.9.
bool segregated_verdict(const MetricsRow& row);

std::string metrics_csv_header();
void append_metrics_csv(std::ostream& os, const MetricsRow& row);

} // namespace aggdiff
