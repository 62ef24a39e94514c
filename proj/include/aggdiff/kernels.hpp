#pragma once

#include <vector>

#include "aggdiff/error.hpp"

namespace aggdiff {

enum class KernelFamily { gaussian, tabulated };

/// Even, nonnegative, integrable interaction kernel.  The gaussian family is
/// G(x) = A/(sigma*sqrt(2*pi)) * exp(-x^2/(2*sigma^2)), so the integral of G
/// over the line equals A exactly.  Tabulated kernels are uniform samples on a
/// symmetric window, evaluated through a natural cubic spline and treated as
/// zero outside the window.
struct Kernel {
    KernelFamily family = KernelFamily::gaussian;
    double amplitude = 1.0;
    double width = 1.0; // gaussian sigma

    double table_x0 = 0.0;
    double table_dx = 0.0;
    std::vector<double> table_values;
    std::vector<double> table_second; // spline second derivatives at the nodes

    double mass = 0.0; // integral over the line; cached at construction
};

Kernel make_gaussian(double amplitude, double sigma);
Kernel make_tabulated(double x0, double dx, std::vector<double> values);

/// Copy with the amplitude (and cached mass) multiplied by factor >= 0.
Kernel scaled(const Kernel& k, double factor);

double eval(const Kernel& k, double x);
double eval_d1(const Kernel& k, double x); // odd
double eval_d2(const Kernel& k, double x); // even

/// Fourier transform \int G(x) exp(-i xi x) dx (real by evenness).  Gaussian:
/// A*exp(-sigma^2 xi^2 / 2).  Tabulated: trapezoid cosine sum; throws
/// "fourier-window" if the samples do not decay at the window ends.
double fourier(const Kernel& k, double xi);

/// G(x - y) - G(x + y) and G(x - y) + G(x + y) for x, y >= 0; the minus form
/// is the kernel of the steady-state operator on odd reflections, the plus
/// form its even counterpart.  Negative arguments throw "domain".
double symmetrized_minus(const Kernel& k, double x, double y);
double symmetrized_plus(const Kernel& k, double x, double y);

/// Self-interaction kernels S_i = sigma_i * K (amplitude scaling) plus the
/// cross kernel K itself.
struct KernelTriple {
    Kernel s1, s2, k;
};

KernelTriple make_triple_from_base(const Kernel& base, double sigma1, double sigma2);

} // namespace aggdiff
