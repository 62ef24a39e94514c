#pragma once

#include <cstddef>
#include <utility>

#include "aggdiff/grid_density.hpp"
#include "aggdiff/kernels.hpp"

namespace aggdiff {

// Curvature-weighted interaction constants of the segregated small-diffusion
// ansatz with species one in the inner region:
//   c1 = -s1''(0) z1 - k''(0) (1 - z1),
//   c2 = -s2''(0) (1 - z1) - k''(0) z1,
// where z1 is the mass fraction of species one (total mass normalized to 1).
// Throws "flat-kernel" unless all three kernels have strictly negative
// curvature at the origin.
std::pair<double, double> interaction_constants(const KernelTriple& t, double z1);

// Outer radius as a function of the inner radius on the curve obtained by
// summing the two cubic mass-balance equations; its slope has the sign of
// c2 - c1.
double lambda_tilde(double c1, double c2, double mu);

struct MuLambda {
    double mu = 0.0;     // inner support radius (rescaled units)
    double lambda = 0.0; // outer support radius (rescaled units)
    double residual1 = 0.0; // inner mass-balance equation residual
    double residual2 = 0.0; // outer mass-balance equation residual
};

// Unique root with 0 < mu < lambda of the coupled cubic system
//   z1/2       = (c1/3 - c2/2) mu^3 + (c2/2) mu lambda^2,
//   (1 - z1)/2 = (c2/6) mu^3 + (c2/3) lambda^3 - (c2/2) mu lambda^2,
// found by bisection of g(mu) = (mu - lambda_tilde)^2 (2 lambda_tilde + mu)
// - 3(1 - z1)/c2 on [0, bracket_scale * (3/(2 c1))^(1/3)].  The bracket
// scale exists to probe robustness; 1.0 is the analytic bracket.
MuLambda solve_mu_lambda(double c1, double c2, double z1,
                         double bracket_scale = 1.0);

// The matched pair of compactly supported profiles at diffusion strength eps:
// an inner parabolic bump for species one on [-delta mu, delta mu] and an
// outer annular bump for species two on delta([-lambda, -mu] u [mu, lambda]),
// with delta = eps^(1/3).  Each density is sampled on its own support-aligned
// uniform grid; the jump of species two at +-delta mu sits exactly mid-cell so
// trapezoid masses converge at second order.
struct AsymptoticSolution {
    double z1 = 0.0;
    double c1 = 0.0, c2 = 0.0;
    double mu = 0.0, lambda = 0.0;
    double delta = 0.0;
    double residual1 = 0.0, residual2 = 0.0;
    GridDensity rho1; // window [-delta mu, delta mu]
    GridDensity rho2; // symmetric window covering [-delta lambda, delta lambda]
    double mass1 = 0.0, mass2 = 0.0; // trapezoid masses of the two grids
};

// cells_per_support counts grid cells across one connected support piece.
// Throws "grid-resolution" below 16 cells (the inner support would be
// unresolved) or when the aligned outer grid would be absurdly large.
AsymptoticSolution build_profiles(double c1, double c2, double z1,
                                  const MuLambda& ml, double eps,
                                  std::size_t cells_per_support = 512);

// constants -> root -> profiles in one call.
AsymptoticSolution solve_asymptotic(const KernelTriple& t, double z1,
                                    double eps,
                                    std::size_t cells_per_support = 512);

// Pointwise closed forms.  profile_value2 is zero for |x| <= delta*mu (open
// inner edge) so that profile_w = value1 + value2 is continuous.
double profile_value1(const AsymptoticSolution& sol, double x);
double profile_value2(const AsymptoticSolution& sol, double x);
double profile_w(const AsymptoticSolution& sol, double x);

// First-order stationarity of the constructed pair: on each species' support
// the combination eps*(rho1+rho2) - S_self * rho_self - K * rho_other should
// be constant.  deviation = max - min over support nodes; rel = deviation
// relative to eps * peak height.  Small only deep in the small-eps regime.
struct CriticalityReport {
    double deviation1 = 0.0, deviation2 = 0.0;
    double rel1 = 0.0, rel2 = 0.0;
    double peak = 0.0;
};

CriticalityReport criticality_check(const AsymptoticSolution& sol,
                                    const KernelTriple& t, double eps);

} // namespace aggdiff
