#pragma once

#include <cstddef>
#include <vector>

#include "aggdiff/error.hpp"

namespace aggdiff {

/// Uniform-grid samples of a density (or of a signed perturbation when used
/// as a direction in the energy derivatives).  mass caches the trapezoid
/// integral of values and is refreshed by make_grid_density.
struct GridDensity {
    double x0 = 0.0;
    double dx = 1.0;
    std::vector<double> values;
    double mass = 0.0;

    std::size_t size() const { return values.size(); }
    double x(std::size_t i) const { return x0 + dx * static_cast<double>(i); }
    double x_end() const { return x(values.size() - 1); }
};

GridDensity make_grid_density(double x0, double dx, std::vector<double> values);

double trapezoid_mass(const GridDensity& rho);

/// Trapezoid weight of node i (dx at interior nodes, dx/2 at the ends).
double trapezoid_weight(const GridDensity& rho, std::size_t i);

/// True when the two functions live on the same grid (x0, dx, size all match
/// to 1e-12 absolute on the geometry).
bool same_grid(const GridDensity& a, const GridDensity& b);

/// Throws "grid-mismatch" unless same_grid(a, b).
void require_same_grid(const GridDensity& a, const GridDensity& b);

/// Throws "negative-density" if any value is below -tol; used at entry points
/// that require a genuine density rather than a signed direction.
void require_nonnegative(const GridDensity& rho, double tol = 1e-12);

double max_value(const GridDensity& rho);

/// \int x rho dx / \int rho dx (trapezoid); throws "empty-density" when the
/// mass is not positive.
double center_of_mass(const GridDensity& rho);

/// Second moment about a given center, normalized by mass.
double variance_about(const GridDensity& rho, double center);

} // namespace aggdiff
