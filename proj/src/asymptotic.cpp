#include "aggdiff/asymptotic.hpp"

#include <algorithm>
#include <cmath>

#include "aggdiff/energy.hpp"
#include "aggdiff/error.hpp"

namespace aggdiff {

namespace {

// Trapezoid quadrature of (k * rho)(x) for a target point that need not lie
// on rho's grid.
double convolve_at(const Kernel& k, const GridDensity& rho, double x) {
    const std::size_t n = rho.size();
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double wj = (j == 0 || j + 1 == n) ? 0.5 * rho.dx : rho.dx;
        s += wj * eval(k, x - rho.x(j)) * rho.values[j];
    }
    return s;
}

} // namespace

std::pair<double, double> interaction_constants(const KernelTriple& t, double z1) {
    if (!(z1 > 0.0) || !(z1 < 1.0)) {
        throw Error("domain", "mass fraction must lie strictly between 0 and 1");
    }
    const double s1pp = eval_d2(t.s1, 0.0);
    const double s2pp = eval_d2(t.s2, 0.0);
    const double kpp = eval_d2(t.k, 0.0);
    if (!(s1pp < 0.0) || !(s2pp < 0.0) || !(kpp < 0.0)) {
        throw Error("flat-kernel",
                    "all kernels need strictly negative curvature at the origin");
    }
    return {-s1pp * z1 - kpp * (1.0 - z1), -s2pp * (1.0 - z1) - kpp * z1};
}

double lambda_tilde(double c1, double c2, double mu) {
    return std::cbrt(3.0 / (2.0 * c2) + (c2 - c1) / c2 * mu * mu * mu);
}

MuLambda solve_mu_lambda(double c1, double c2, double z1, double bracket_scale) {
    if (!(c1 > 0.0) || !(c2 > 0.0)) {
        throw Error("domain", "interaction constants must be positive");
    }
    if (!(z1 > 0.0) || !(z1 < 1.0)) {
        throw Error("domain", "mass fraction must lie strictly between 0 and 1");
    }
    if (!(bracket_scale > 0.0)) {
        throw Error("domain", "bracket scale must be positive");
    }

    const double target = 3.0 * (1.0 - z1) / c2;
    const auto g = [&](double mu) {
        const double lt = lambda_tilde(c1, c2, mu);
        const double d = mu - lt;
        return d * d * (2.0 * lt + mu) - target;
    };

    // g(0) = 3 z1 / c2 > 0; at the analytic bracket end lambda_tilde equals
    // mu, so g < 0 there.  Doubling only matters for perturbed brackets.
    double lo = 0.0;
    double glo = g(lo);
    double hi = bracket_scale * std::cbrt(3.0 / (2.0 * c1));
    double ghi = g(hi);
    int doublings = 0;
    while (glo * ghi > 0.0) {
        if (++doublings > 60) {
            throw Error("no-bracket",
                        "no sign change for the support-radius equation; "
                        "constants are inconsistent");
        }
        hi *= 2.0;
        ghi = g(hi);
    }

    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (gm == 0.0) {
            lo = mid;
            hi = mid;
            break;
        }
        if ((gm > 0.0) == (glo > 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }

    MuLambda out;
    out.mu = 0.5 * (lo + hi);
    out.lambda = lambda_tilde(c1, c2, out.mu);
    if (!(out.mu > 0.0) || !(out.mu < out.lambda)) {
        throw Error("no-bracket", "root violates 0 < mu < lambda");
    }
    const double mu3 = out.mu * out.mu * out.mu;
    const double lam2 = out.lambda * out.lambda;
    out.residual1 = std::abs((c1 / 3.0 - c2 / 2.0) * mu3 +
                             0.5 * c2 * out.mu * lam2 - 0.5 * z1);
    out.residual2 = std::abs(c2 / 6.0 * mu3 + c2 / 3.0 * lam2 * out.lambda -
                             0.5 * c2 * out.mu * lam2 - 0.5 * (1.0 - z1));
    return out;
}

AsymptoticSolution build_profiles(double c1, double c2, double z1,
                                  const MuLambda& ml, double eps,
                                  std::size_t cells_per_support) {
    if (!(eps > 0.0)) {
        throw Error("domain", "diffusion strength must be positive");
    }
    if (!(ml.mu > 0.0) || !(ml.mu < ml.lambda)) {
        throw Error("domain", "support radii must satisfy 0 < mu < lambda");
    }
    if (cells_per_support < 16) {
        throw Error("grid-resolution",
                    "fewer than 16 cells across the inner support");
    }

    AsymptoticSolution sol;
    sol.z1 = z1;
    sol.c1 = c1;
    sol.c2 = c2;
    sol.mu = ml.mu;
    sol.lambda = ml.lambda;
    sol.residual1 = ml.residual1;
    sol.residual2 = ml.residual2;
    sol.delta = std::cbrt(eps);

    const double mu = ml.mu;
    const double lam = ml.lambda;
    const double d = sol.delta;
    const double shelf = 0.5 * c2 * (lam * lam - mu * mu); // interface height

    // Inner parabola on its exact support, even by mirrored fill.
    const std::size_t n1 = cells_per_support + (cells_per_support % 2);
    const std::size_t half1 = n1 / 2;
    const double dxt1 = mu / static_cast<double>(half1);
    sol.rho1.x0 = -mu * d;
    sol.rho1.dx = 2.0 * mu * d / static_cast<double>(n1);
    sol.rho1.values.assign(n1 + 1, 0.0);
    for (std::size_t j = 0; j <= half1; ++j) {
        const double xt = static_cast<double>(j) * dxt1;
        const double v = (shelf + 0.5 * c1 * (mu * mu - xt * xt)) / d;
        sol.rho1.values[half1 + j] = v;
        sol.rho1.values[half1 - j] = v;
    }
    sol.mass1 = trapezoid_mass(sol.rho1);
    sol.rho1.mass = sol.mass1;

    // Outer annulus: spacing divides 2*mu an odd number of times so the jump
    // at +-delta*mu falls exactly mid-cell and 0 is a node.
    const double dx_target = (lam - mu) / static_cast<double>(cells_per_support);
    std::size_t odd_count = 1;
    if (2.0 * mu > dx_target) {
        odd_count = static_cast<std::size_t>(std::ceil(2.0 * mu / dx_target));
        if (odd_count % 2 == 0) ++odd_count;
    }
    const double dxt2 = 2.0 * mu / static_cast<double>(odd_count);
    const double j_edge = std::ceil(lam / dxt2);
    if (j_edge > 16.0e6) {
        throw Error("grid-resolution",
                    "support-aligned outer grid would exceed 16M nodes");
    }
    const std::size_t half2 = static_cast<std::size_t>(j_edge);
    sol.rho2.x0 = -static_cast<double>(half2) * dxt2 * d;
    sol.rho2.dx = dxt2 * d;
    sol.rho2.values.assign(2 * half2 + 1, 0.0);
    for (std::size_t j = 0; j <= half2; ++j) {
        const double xt = static_cast<double>(j) * dxt2;
        double v = 0.0;
        if (xt > mu) v = std::max(0.0, 0.5 * c2 * (lam * lam - xt * xt)) / d;
        sol.rho2.values[half2 + j] = v;
        sol.rho2.values[half2 - j] = v;
    }
    sol.mass2 = trapezoid_mass(sol.rho2);
    sol.rho2.mass = sol.mass2;
    return sol;
}

AsymptoticSolution solve_asymptotic(const KernelTriple& t, double z1, double eps,
                                    std::size_t cells_per_support) {
    const auto [c1, c2] = interaction_constants(t, z1);
    const MuLambda ml = solve_mu_lambda(c1, c2, z1);
    return build_profiles(c1, c2, z1, ml, eps, cells_per_support);
}

double profile_value1(const AsymptoticSolution& sol, double x) {
    const double xt = x / sol.delta;
    if (std::abs(xt) > sol.mu) return 0.0;
    const double shelf = 0.5 * sol.c2 * (sol.lambda * sol.lambda - sol.mu * sol.mu);
    return (shelf + 0.5 * sol.c1 * (sol.mu * sol.mu - xt * xt)) / sol.delta;
}

double profile_value2(const AsymptoticSolution& sol, double x) {
    const double xt = std::abs(x / sol.delta);
    if (xt <= sol.mu || xt >= sol.lambda) return 0.0;
    return 0.5 * sol.c2 * (sol.lambda * sol.lambda - xt * xt) / sol.delta;
}

double profile_w(const AsymptoticSolution& sol, double x) {
    return profile_value1(sol, x) + profile_value2(sol, x);
}

CriticalityReport criticality_check(const AsymptoticSolution& sol,
                                    const KernelTriple& t, double eps) {
    CriticalityReport rep;
    for (double v : sol.rho1.values) rep.peak = std::max(rep.peak, v);
    for (double v : sol.rho2.values) rep.peak = std::max(rep.peak, v);

    const GridDensity self1 = convolve(t.s1, sol.rho1);
    double lo1 = 0.0, hi1 = 0.0;
    for (std::size_t i = 0; i < sol.rho1.size(); ++i) {
        const double x = sol.rho1.x(i);
        const double r = eps * sol.rho1.values[i] - self1.values[i] -
                         convolve_at(t.k, sol.rho2, x);
        if (i == 0) {
            lo1 = hi1 = r;
        } else {
            lo1 = std::min(lo1, r);
            hi1 = std::max(hi1, r);
        }
    }
    rep.deviation1 = hi1 - lo1;

    const GridDensity self2 = convolve(t.s2, sol.rho2);
    const double inner_edge = sol.mu * sol.delta;
    double lo2 = 0.0, hi2 = 0.0;
    bool first = true;
    for (std::size_t i = 0; i < sol.rho2.size(); ++i) {
        const double x = sol.rho2.x(i);
        if (std::abs(x) <= inner_edge || sol.rho2.values[i] == 0.0) continue;
        const double r = eps * sol.rho2.values[i] - self2.values[i] -
                         convolve_at(t.k, sol.rho1, x);
        if (first) {
            lo2 = hi2 = r;
            first = false;
        } else {
            lo2 = std::min(lo2, r);
            hi2 = std::max(hi2, r);
        }
    }
    rep.deviation2 = hi2 - lo2;

    const double scale = eps * rep.peak;
    rep.rel1 = scale > 0.0 ? rep.deviation1 / scale : 0.0;
    rep.rel2 = scale > 0.0 ? rep.deviation2 / scale : 0.0;
    return rep;
}

} // namespace aggdiff
