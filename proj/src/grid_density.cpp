#include "aggdiff/grid_density.hpp"

#include <algorithm>
#include <cmath>

namespace aggdiff {

GridDensity make_grid_density(double x0, double dx, std::vector<double> values) {
    if (values.size() < 2) throw Error("invalid-grid", "need at least 2 samples");
    if (!(dx > 0.0)) throw Error("invalid-grid", "dx must be positive");
    GridDensity g;
    g.x0 = x0;
    g.dx = dx;
    g.values = std::move(values);
    g.mass = trapezoid_mass(g);
    return g;
}

double trapezoid_mass(const GridDensity& rho) {
    const std::size_t n = rho.values.size();
    double sum = 0.5 * (rho.values.front() + rho.values.back());
    for (std::size_t i = 1; i + 1 < n; ++i) sum += rho.values[i];
    return sum * rho.dx;
}

double trapezoid_weight(const GridDensity& rho, std::size_t i) {
    return (i == 0 || i + 1 == rho.values.size()) ? 0.5 * rho.dx : rho.dx;
}

bool same_grid(const GridDensity& a, const GridDensity& b) {
    return a.values.size() == b.values.size()
        && std::abs(a.x0 - b.x0) <= 1e-12
        && std::abs(a.dx - b.dx) <= 1e-12;
}

void require_same_grid(const GridDensity& a, const GridDensity& b) {
    if (!same_grid(a, b)) throw Error("grid-mismatch", "densities live on different grids");
}

void require_nonnegative(const GridDensity& rho, double tol) {
    for (double v : rho.values)
        if (v < -tol) throw Error("negative-density", "density sample below zero");
}

double max_value(const GridDensity& rho) {
    return *std::max_element(rho.values.begin(), rho.values.end());
}

double center_of_mass(const GridDensity& rho) {
    const double m = trapezoid_mass(rho);
    if (!(m > 0.0)) throw Error("empty-density", "center of mass needs positive mass");
    double s = 0.0;
    for (std::size_t i = 0; i < rho.values.size(); ++i)
        s += trapezoid_weight(rho, i) * rho.x(i) * rho.values[i];
    return s / m;
}

double variance_about(const GridDensity& rho, double center) {
    const double m = trapezoid_mass(rho);
    if (!(m > 0.0)) throw Error("empty-density", "variance needs positive mass");
    double s = 0.0;
    for (std::size_t i = 0; i < rho.values.size(); ++i) {
        const double d = rho.x(i) - center;
        s += trapezoid_weight(rho, i) * d * d * rho.values[i];
    }
    return s / m;
}

} // namespace aggdiff
