#pragma once

#include "aggdiff/grid_density.hpp"
#include "aggdiff/kernels.hpp"
#include "aggdiff/particle_state.hpp"

namespace aggdiff {

enum class Species { first, second };

/// (K * rho)(x_i) on rho's grid by the direct trapezoid double sum.
GridDensity convolve(const Kernel& k, const GridDensity& rho);

/// Free energy of the pair:
///   (eps/2) \int (rho1+rho2)^2 - 1/2 \int rho1 S1*rho1 - 1/2 \int rho2 S2*rho2
///   - \int rho1 K*rho2.
/// Both densities must share one grid ("grid-mismatch" otherwise).
double free_energy(const GridDensity& rho1, const GridDensity& rho2,
                   const KernelTriple& t, double eps);

/// First variation of the free energy with respect to the chosen species,
/// evaluated on a mass-neutral direction (throws "not-mass-neutral" when
/// |direction mass| > 1e-10).
double gateaux_first(const GridDensity& rho1, const GridDensity& rho2,
                     const KernelTriple& t, double eps,
                     const GridDensity& direction, Species which);

/// Quadratic form of the second variation in directions (mu, nu):
///   h11 = \int eps mu^2 - mu S1*mu,  h12 = \int eps mu nu - mu K*nu,
///   h22 = \int eps nu^2 - nu S2*nu;
/// the full form is h11 + 2 h12 + h22.
struct HessianQuad {
    double h11, h12, h22;
};
HessianQuad gateaux_second(const KernelTriple& t, double eps,
                           const GridDensity& mu, const GridDensity& nu);

/// Fourier-side convexity test on a uniform xi-grid over [0, xi_max]:
///   (i)  eps > max(S1^(xi), S2^(xi))
///   (ii) (eps - S1^)(eps - S2^) > (eps - K^)^2
/// Both must hold strictly at every grid point.  Equality within 1e-12 at the
/// witness is flagged marginal (and counts as a failure).
struct CoercivityResult {
    bool coercive = false;
    bool marginal = false;
    int condition = 0;       // 1 or 2 at a violation, 0 when coercive
    double xi_witness = 0.0; // first violating xi, or the minimum-margin xi
    double lhs = 0.0, rhs = 0.0;
};
CoercivityResult coercivity_check(const KernelTriple& t, double eps,
                                  double xi_max, int n_xi);

/// Default scan window 10 / (smallest kernel decay length); tabulated kernels
/// use their moment-based standard deviation as the decay length.
double default_xi_max(const KernelTriple& t);
constexpr int kDefaultNXi = 2001;

/// Free energy of the particle system: exact piecewise-constant quadrature of
/// the diffusion term over the merged reconstruction blocks plus direct
/// pairwise kernel sums (self pairs weighted 1/2, including i == j).
double discrete_energy(const ParticleState& s, const KernelTriple& t, double eps);

} // namespace aggdiff
