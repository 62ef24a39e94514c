#pragma once

#include <cstddef>
#include <vector>

#include "aggdiff/grid_density.hpp"
#include "aggdiff/kernels.hpp"

namespace aggdiff {

/// Quadrature grid for the segregated-support integral operator: trapezoid
/// nodes and weights on [0, L1] (species-one half-support) and [L1, L2]
/// (species-two right band).
struct OperatorGrid {
    double l1 = 0.0, l2 = 0.0;
    std::vector<double> x1, w1; // nodes/weights on [0, L1]
    std::vector<double> x2, w2; // nodes/weights on [L1, L2]

    std::size_t n1() const { return x1.size(); }
    std::size_t n2() const { return x2.size(); }
    std::size_t dim() const { return x1.size() + x2.size() + 1; }
};

/// Requires 0 < L1 < L2 and at least 8 nodes per subinterval.
OperatorGrid make_operator_grid(double l1, double l2, std::size_t n1, std::size_t n2);

/// Cone element (p, q; w): p lives on [0, L1] with p(0) = 0, q on [L1, L2],
/// w is the shared boundary height; all components nonnegative.
struct ConeVector {
    std::vector<double> p, q;
    double w = 0.0;
};

/// Boundary combinations entering the operator:
///   a1(x) = S1(x-L1) - S1(x+L1) + K(x+L1) - K(x-L1)
///   a2(x) = K(x-L1) - K(x+L1) + S2(x+L1) - S2(x-L1)
double boundary_a1(const KernelTriple& t, double l1, double x);
double boundary_a2(const KernelTriple& t, double l1, double x);

/// Strong-positivity preconditions, checked on grid nodes:
///   1: a1 > 0 on (0, L1]      (species-one pull beats the cross pull)
///   2: a2 > 0 on [L1, L2]     (cross pull beats species-two's own)
///   3: S1'(L1) < K'(L1)       (strict slope ordering at the interface)
struct PreconditionReport {
    bool pass = true;
    int condition = 0;      // first failing condition, 0 if none
    double x_witness = 0.0; // first violating node
    double margin = 0.0;    // violating value (should have been > 0)
};
PreconditionReport check_preconditions(const KernelTriple& t, const OperatorGrid& g);

/// One application of the integral operator
///   f(x) = int_0^L1 S1m(x,y) p(y) dy + int_L1^L2 Km(x,y) q(y) dy + w a1(x)
///   g(x) = int_0^L1 Km(x,y) p(y) dy + int_L1^L2 S2m(x,y) q(y) dy + w a2(x)
///   w'   = int_L1^L2 g(x) dx
/// with Gm(x,y) = G(x-y) - G(x+y).  Throws "not-strongly-positive" when the
/// preconditions fail.
ConeVector apply_T(const ConeVector& v, const KernelTriple& t, const OperatorGrid& g);

/// Dense row-major matrix of the discrete operator in the layout
/// [p(0..n1-1), q(0..n2-1), w]; used by the power iteration and as the
/// object dense eigensolvers factorize in tests.
std::vector<double> assemble_operator(const KernelTriple& t, const OperatorGrid& g);

struct EigenPair {
    double eps = 0.0;
    ConeVector vec; // max-norm normalized, strictly positive inside the cone
    std::size_t iterations = 0;
};

/// Principal eigenpair by power iteration with max-norm normalization.
/// Stops when the eigenvalue estimate is tol-stationary and the residual
/// ||T v - eps v||_inf is below 10 tol.  Errors: "not-strongly-positive"
/// (preconditions), "no-convergence" (max_iter), "not-positive" (degenerate
/// or sign-flipping estimate).
EigenPair principal_eigenpair(const KernelTriple& t, const OperatorGrid& g,
                              double tol = 1e-10, std::size_t max_iter = 100000);

/// Segregated steady pair on a uniform symmetric grid over [-L2, L2]:
/// species one inside [-L1, L1], species two on the outer bands, equal
/// heights at the interface, total mass mass_total.
struct SteadyProfilePair {
    GridDensity rho1, rho2;
    double l1 = 0.0, l2 = 0.0;
    double eps = 0.0;   // eigenvalue playing the role of the diffusion constant
    double scale = 0.0; // factor applied to the raw eigenvector profiles
    double w_bar = 0.0; // shared interface height after scaling
};

/// Integrate the eigenvector back to densities: rho2(x) = int_x^L2 q,
/// rho1(x) = rho2(L1) + int_x^L1 p, even extension, mass normalization.
SteadyProfilePair reconstruct_profiles(const ConeVector& v, const OperatorGrid& g,
                                       double mass_total, double eps,
                                       std::size_t n_cells = 1024);

struct EpsMapRow {
    double l1 = 0.0, l2 = 0.0, eps = 0.0;
};

/// Sweep of the principal eigenvalue over outer supports L2 (L1 = fraction
/// * L2).  Monotonicity in L2 is reported by callers, not asserted.
std::vector<EpsMapRow> eps_map(const KernelTriple& t, const std::vector<double>& l2_values,
                               double l1_fraction, std::size_t n1, std::size_t n2,
                               double tol = 1e-10, std::size_t max_iter = 100000);

} // namespace aggdiff
