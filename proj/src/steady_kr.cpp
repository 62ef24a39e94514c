#include "aggdiff/steady_kr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "aggdiff/error.hpp"

namespace aggdiff {
namespace {

void fill_trapezoid(double a, double b, std::size_t n, std::vector<double>& x,
                    std::vector<double>& w) {
    const double h = (b - a) / static_cast<double>(n - 1);
    x.resize(n);
    w.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = a + static_cast<double>(i) * h;
        w[i] = (i == 0 || i + 1 == n) ? 0.5 * h : h;
    }
    x.back() = b;
}

/// Linear interpolation on a uniform node set (clamped at the ends).
double interp_uniform(const std::vector<double>& x, const std::vector<double>& v,
                      double xi) {
    const double h = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
    double s = (xi - x.front()) / h;
    if (s <= 0.0) return v.front();
    if (s >= static_cast<double>(x.size() - 1)) return v.back();
    const std::size_t j = static_cast<std::size_t>(s);
    const double frac = s - static_cast<double>(j);
    return (1.0 - frac) * v[j] + frac * v[j + 1];
}

} // namespace

OperatorGrid make_operator_grid(double l1, double l2, std::size_t n1, std::size_t n2) {
    if (!(l1 > 0.0) || !(l2 > l1)) {
        throw Error("domain", "operator grid needs 0 < L1 < L2");
    }
    if (n1 < 8 || n2 < 8) {
        throw Error("domain", "operator grid needs at least 8 nodes per subinterval");
    }
    OperatorGrid g;
    g.l1 = l1;
    g.l2 = l2;
    fill_trapezoid(0.0, l1, n1, g.x1, g.w1);
    fill_trapezoid(l1, l2, n2, g.x2, g.w2);
    return g;
}

double boundary_a1(const KernelTriple& t, double l1, double x) {
    return eval(t.s1, x - l1) - eval(t.s1, x + l1) + eval(t.k, x + l1) -
           eval(t.k, x - l1);
}

double boundary_a2(const KernelTriple& t, double l1, double x) {
    return eval(t.k, x - l1) - eval(t.k, x + l1) + eval(t.s2, x + l1) -
           eval(t.s2, x - l1);
}

PreconditionReport check_preconditions(const KernelTriple& t, const OperatorGrid& g) {
    PreconditionReport r;
    for (std::size_t i = 1; i < g.n1(); ++i) {
        const double a1 = boundary_a1(t, g.l1, g.x1[i]);
        if (!(a1 > 0.0)) {
            r.pass = false;
            r.condition = 1;
            r.x_witness = g.x1[i];
            r.margin = a1;
            return r;
        }
    }
    for (std::size_t i = 0; i < g.n2(); ++i) {
        const double a2 = boundary_a2(t, g.l1, g.x2[i]);
        if (!(a2 > 0.0)) {
            r.pass = false;
            r.condition = 2;
            r.x_witness = g.x2[i];
            r.margin = a2;
            return r;
        }
    }
    const double slope_gap = eval_d1(t.k, g.l1) - eval_d1(t.s1, g.l1);
    if (!(slope_gap > 0.0)) {
        r.pass = false;
        r.condition = 3;
        r.x_witness = g.l1;
        r.margin = slope_gap;
    }
    return r;
}

ConeVector apply_T(const ConeVector& v, const KernelTriple& t, const OperatorGrid& g) {
    if (v.p.size() != g.n1() || v.q.size() != g.n2()) {
        throw Error("domain", "cone vector does not match the operator grid");
    }
    const PreconditionReport pr = check_preconditions(t, g);
    if (!pr.pass) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "precondition %d fails at x=%.6g (value %.3e <= 0)", pr.condition,
                      pr.x_witness, pr.margin);
        throw Error("not-strongly-positive", buf);
    }

    ConeVector out;
    out.p.assign(g.n1(), 0.0);
    out.q.assign(g.n2(), 0.0);
    for (std::size_t i = 0; i < g.n1(); ++i) {
        const double x = g.x1[i];
        double acc = 0.0;
        for (std::size_t j = 0; j < g.n1(); ++j) {
            acc += symmetrized_minus(t.s1, x, g.x1[j]) * g.w1[j] * v.p[j];
        }
        for (std::size_t j = 0; j < g.n2(); ++j) {
            acc += symmetrized_minus(t.k, x, g.x2[j]) * g.w2[j] * v.q[j];
        }
        out.p[i] = acc + v.w * boundary_a1(t, g.l1, x);
    }
    double wprime = 0.0;
    for (std::size_t i = 0; i < g.n2(); ++i) {
        const double x = g.x2[i];
        double acc = 0.0;
        for (std::size_t j = 0; j < g.n1(); ++j) {
            acc += symmetrized_minus(t.k, x, g.x1[j]) * g.w1[j] * v.p[j];
        }
        for (std::size_t j = 0; j < g.n2(); ++j) {
            acc += symmetrized_minus(t.s2, x, g.x2[j]) * g.w2[j] * v.q[j];
        }
        out.q[i] = acc + v.w * boundary_a2(t, g.l1, x);
        wprime += g.w2[i] * out.q[i];
    }
    out.w = wprime;
    return out;
}

std::vector<double> assemble_operator(const KernelTriple& t, const OperatorGrid& g) {
    const std::size_t n1 = g.n1(), n2 = g.n2();
    const std::size_t n = g.dim();
    std::vector<double> m(n * n, 0.0);

    for (std::size_t i = 0; i < n1; ++i) {
        double* row = m.data() + i * n;
        const double x = g.x1[i];
        for (std::size_t j = 0; j < n1; ++j) {
            row[j] = symmetrized_minus(t.s1, x, g.x1[j]) * g.w1[j];
        }
        for (std::size_t j = 0; j < n2; ++j) {
            row[n1 + j] = symmetrized_minus(t.k, x, g.x2[j]) * g.w2[j];
        }
        row[n1 + n2] = boundary_a1(t, g.l1, x);
    }
    for (std::size_t i = 0; i < n2; ++i) {
        double* row = m.data() + (n1 + i) * n;
        const double x = g.x2[i];
        for (std::size_t j = 0; j < n1; ++j) {
            row[j] = symmetrized_minus(t.k, x, g.x1[j]) * g.w1[j];
        }
        for (std::size_t j = 0; j < n2; ++j) {
            row[n1 + j] = symmetrized_minus(t.s2, x, g.x2[j]) * g.w2[j];
        }
        row[n1 + n2] = boundary_a2(t, g.l1, x);
    }
    // Last row: the mass of the q-image, a weighted sum of the q rows.
    double* wrow = m.data() + (n1 + n2) * n;
    for (std::size_t i = 0; i < n2; ++i) {
        const double* row = m.data() + (n1 + i) * n;
        const double wi = g.w2[i];
        for (std::size_t c = 0; c < n; ++c) wrow[c] += wi * row[c];
    }
    return m;
}

EigenPair principal_eigenpair(const KernelTriple& t, const OperatorGrid& g, double tol,
                              std::size_t max_iter) {
    if (!(tol > 0.0) || max_iter == 0) {
        throw Error("domain", "eigen iteration needs tol > 0 and max_iter >= 1");
    }
    const PreconditionReport pr = check_preconditions(t, g);
    if (!pr.pass) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "precondition %d fails at x=%.6g (value %.3e <= 0)", pr.condition,
                      pr.x_witness, pr.margin);
        throw Error("not-strongly-positive", buf);
    }

    const std::size_t n = g.dim();
    const std::vector<double> m = assemble_operator(t, g);
    std::vector<double> z(n, 1.0), y(n, 0.0);
    z[0] = 0.0; // cone constraint p(0) = 0 (preserved exactly by the operator)

    double lambda = 0.0, lambda_prev = 0.0;
    bool converged = false;
    std::size_t iter = 0;
    while (iter < max_iter) {
        ++iter;
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = m.data() + i * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += row[j] * z[j];
            y[i] = acc;
        }
        double norm = 0.0;
        double min_val = 0.0;
        for (double v : y) {
            norm = std::max(norm, std::abs(v));
            min_val = std::min(min_val, v);
        }
        if (!(norm > 0.0) || min_val < -1e-12 * norm) {
            throw Error("not-positive",
                        "power iteration left the positive cone; preconditions or "
                        "quadrature are inconsistent");
        }
        lambda = norm; // ||z||_inf == 1 and the iterate is entrywise positive

        double residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            residual = std::max(residual, std::abs(y[i] - lambda * z[i]));
        }
        for (std::size_t i = 0; i < n; ++i) z[i] = y[i] / norm;

        if (iter > 1 && std::abs(lambda - lambda_prev) <= tol * std::abs(lambda) &&
            residual <= 5.0 * tol * std::max(1.0, lambda)) {
            converged = true;
            break;
        }
        lambda_prev = lambda;
    }
    if (!converged) {
        char buf[120];
        std::snprintf(buf, sizeof(buf),
                      "power iteration did not reach tol=%.3e in %zu sweeps", tol,
                      max_iter);
        throw Error("no-convergence", buf);
    }
    if (!(lambda > 0.0)) {
        throw Error("not-positive", "principal eigenvalue estimate is not positive");
    }

    EigenPair out;
    out.eps = lambda;
    out.iterations = iter;
    out.vec.p.assign(z.begin(), z.begin() + static_cast<long>(g.n1()));
    out.vec.q.assign(z.begin() + static_cast<long>(g.n1()),
                     z.begin() + static_cast<long>(g.n1() + g.n2()));
    out.vec.w = z.back();

    // Cone-interior check: strictly positive away from the pinned p(0) = 0.
    bool interior = out.vec.w > 0.0;
    for (std::size_t i = 1; i < out.vec.p.size(); ++i) interior = interior && out.vec.p[i] > 0.0;
    for (double v : out.vec.q) interior = interior && v > 0.0;
    if (!interior) {
        throw Error("not-positive", "converged eigenvector is not interior to the cone");
    }
    return out;
}

SteadyProfilePair reconstruct_profiles(const ConeVector& v, const OperatorGrid& g,
                                       double mass_total, double eps,
                                       std::size_t n_cells) {
    if (v.p.size() != g.n1() || v.q.size() != g.n2()) {
        throw Error("domain", "cone vector does not match the operator grid");
    }
    if (!(mass_total > 0.0)) throw Error("domain", "mass_total must be positive");
    if (n_cells < 16) throw Error("domain", "profile grid needs at least 16 cells");
    if (n_cells % 2 != 0) ++n_cells; // keep x = 0 a node for the even extension

    // Right cumulative integrals on the operator grid.
    const double h1 = g.l1 / static_cast<double>(g.n1() - 1);
    const double h2 = (g.l2 - g.l1) / static_cast<double>(g.n2() - 1);
    std::vector<double> r2(g.n2(), 0.0);
    for (std::size_t i = g.n2() - 1; i-- > 0;) {
        r2[i] = r2[i + 1] + 0.5 * (v.q[i] + v.q[i + 1]) * h2;
    }
    const double w_bar_raw = r2[0];
    std::vector<double> r1(g.n1(), 0.0);
    r1[g.n1() - 1] = w_bar_raw;
    for (std::size_t i = g.n1() - 1; i-- > 0;) {
        r1[i] = r1[i + 1] + 0.5 * (v.p[i] + v.p[i + 1]) * h1;
    }

    // Sample on the uniform symmetric grid by exact even extension: compute
    // the x >= 0 half once and mirror it.
    const std::size_t half = n_cells / 2;
    const std::size_t n_nodes = n_cells + 1;
    const double dx = g.l2 / static_cast<double>(half);
    std::vector<double> vals1(n_nodes, 0.0), vals2(n_nodes, 0.0);
    for (std::size_t i = 0; i <= half; ++i) {
        const double x = (i == half) ? g.l2 : static_cast<double>(i) * dx;
        double d1 = 0.0, d2 = 0.0;
        if (x <= g.l1) {
            d1 = interp_uniform(g.x1, r1, x);
        } else {
            d2 = interp_uniform(g.x2, r2, x);
        }
        vals1[half + i] = d1;
        vals1[half - i] = d1;
        vals2[half + i] = d2;
        vals2[half - i] = d2;
    }

    GridDensity rho1 = make_grid_density(-g.l2, dx, std::move(vals1));
    GridDensity rho2 = make_grid_density(-g.l2, dx, std::move(vals2));
    const double raw_mass = rho1.mass + rho2.mass;
    if (!(raw_mass > 0.0)) {
        throw Error("empty-density", "eigenvector reconstructs to zero densities");
    }
    const double scale = mass_total / raw_mass;
    for (double& x : rho1.values) x *= scale;
    for (double& x : rho2.values) x *= scale;
    rho1.mass = trapezoid_mass(rho1);
    rho2.mass = trapezoid_mass(rho2);

    SteadyProfilePair pair;
    pair.rho1 = std::move(rho1);
    pair.rho2 = std::move(rho2);
    pair.l1 = g.l1;
    pair.l2 = g.l2;
    pair.eps = eps;
    pair.scale = scale;
    pair.w_bar = scale * w_bar_raw;
    return pair;
}

std::vector<EpsMapRow> eps_map(const KernelTriple& t, const std::vector<double>& l2_values,
                               double l1_fraction, std::size_t n1, std::size_t n2,
                               double tol, std::size_t max_iter) {
    if (!(l1_fraction > 0.0) || !(l1_fraction < 1.0)) {
        throw Error("domain", "l1_fraction must lie in (0, 1)");
    }
    std::vector<EpsMapRow> rows;
    rows.reserve(l2_values.size());
    for (const double l2 : l2_values) {
        const double l1 = l1_fraction * l2;
        const OperatorGrid g = make_operator_grid(l1, l2, n1, n2);
        const EigenPair p = principal_eigenpair(t, g, tol, max_iter);
        rows.push_back(EpsMapRow{l1, l2, p.eps});
    }
    return rows;
}

} // namespace aggdiff
