#include "aggdiff/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aggdiff {

namespace {

// Kernel values at all grid offsets dx*(i-j); on a uniform grid the double
// sum only ever sees 2n-1 distinct arguments.
std::vector<double> offset_table(const Kernel& k, double dx, std::size_t n) {
    std::vector<double> tab(2 * n - 1);
    for (std::size_t d = 0; d < 2 * n - 1; ++d) {
        const double delta = (static_cast<double>(d) - static_cast<double>(n - 1)) * dx;
        tab[d] = eval(k, delta);
    }
    return tab;
}

double quad_inner(const GridDensity& a, const GridDensity& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += trapezoid_weight(a, i) * a.values[i] * b.values[i];
    return s;
}

double height_at(const std::vector<Block>& blocks, double x) {
    if (blocks.empty() || x < blocks.front().left || x > blocks.back().right) return 0.0;
    std::size_t lo = 0, hi = blocks.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi + 1) / 2;
        if (blocks[mid].left <= x) lo = mid; else hi = mid - 1;
    }
    return blocks[lo].height;
}

} // namespace

GridDensity convolve(const Kernel& k, const GridDensity& rho) {
    const std::size_t n = rho.size();
    const std::vector<double> tab = offset_table(k, rho.dx, n);
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        const double* row = tab.data() + (n - 1 - i);
        // row[j] = K(dx * (i - j)) by construction; evenness makes the
        // reversed indexing immaterial.
        for (std::size_t j = 0; j < n; ++j) s += row[j] * rho.values[j];
        s -= 0.5 * (row[0] * rho.values[0] + row[n - 1] * rho.values[n - 1]);
        out[i] = s * rho.dx;
    }
    GridDensity g;
    g.x0 = rho.x0;
    g.dx = rho.dx;
    g.values = std::move(out);
    g.mass = trapezoid_mass(g);
    return g;
}

double free_energy(const GridDensity& rho1, const GridDensity& rho2,
                   const KernelTriple& t, double eps) {
    require_same_grid(rho1, rho2);
    const GridDensity c1 = convolve(t.s1, rho1);
    const GridDensity c2 = convolve(t.s2, rho2);
    const GridDensity ck = convolve(t.k, rho2);
    double diff = 0.0, inter = 0.0;
    for (std::size_t i = 0; i < rho1.size(); ++i) {
        const double w = trapezoid_weight(rho1, i);
        const double sum = rho1.values[i] + rho2.values[i];
        diff += w * sum * sum;
        inter += w * (0.5 * rho1.values[i] * c1.values[i]
                    + 0.5 * rho2.values[i] * c2.values[i]
                    + rho1.values[i] * ck.values[i]);
    }
    return 0.5 * eps * diff - inter;
}

double gateaux_first(const GridDensity& rho1, const GridDensity& rho2,
                     const KernelTriple& t, double eps,
                     const GridDensity& direction, Species which) {
    require_same_grid(rho1, rho2);
    require_same_grid(rho1, direction);
    if (std::abs(trapezoid_mass(direction)) > 1e-10)
        throw Error("not-mass-neutral", "direction must have zero mass");
    const GridDensity cself = (which == Species::first) ? convolve(t.s1, rho1)
                                                        : convolve(t.s2, rho2);
    const GridDensity ccross = (which == Species::first) ? convolve(t.k, rho2)
                                                         : convolve(t.k, rho1);
    double s = 0.0;
    for (std::size_t i = 0; i < rho1.size(); ++i) {
        const double field = eps * (rho1.values[i] + rho2.values[i])
                           - cself.values[i] - ccross.values[i];
        s += trapezoid_weight(rho1, i) * direction.values[i] * field;
    }
    return s;
}

HessianQuad gateaux_second(const KernelTriple& t, double eps,
                           const GridDensity& mu, const GridDensity& nu) {
    require_same_grid(mu, nu);
    const GridDensity s1mu = convolve(t.s1, mu);
    const GridDensity s2nu = convolve(t.s2, nu);
    const GridDensity knu = convolve(t.k, nu);
    HessianQuad h{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double w = trapezoid_weight(mu, i);
        h.h11 += w * (eps * mu.values[i] * mu.values[i] - mu.values[i] * s1mu.values[i]);
        h.h12 += w * (eps * mu.values[i] * nu.values[i] - mu.values[i] * knu.values[i]);
        h.h22 += w * (eps * nu.values[i] * nu.values[i] - nu.values[i] * s2nu.values[i]);
    }
    return h;
}

CoercivityResult coercivity_check(const KernelTriple& t, double eps,
                                  double xi_max, int n_xi) {
    if (n_xi < 2 || !(xi_max > 0.0))
        throw Error("invalid-scan", "need xi_max > 0 and at least 2 scan points");
    CoercivityResult res;
    double best_margin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n_xi; ++j) {
        const double xi = xi_max * static_cast<double>(j) / static_cast<double>(n_xi - 1);
        const double f1 = fourier(t.s1, xi);
        const double f2 = fourier(t.s2, xi);
        const double fk = fourier(t.k, xi);

        const double lhs1 = eps, rhs1 = std::max(f1, f2);
        const double tol1 = 1e-12 * std::max({1.0, std::abs(lhs1), std::abs(rhs1)});
        if (lhs1 - rhs1 <= tol1) {
            res.coercive = false;
            res.marginal = std::abs(lhs1 - rhs1) <= tol1;
            res.condition = 1;
            res.xi_witness = xi;
            res.lhs = lhs1;
            res.rhs = rhs1;
            return res;
        }

        // (eps-S1^)(eps-S2^) - (eps-K^)^2 evaluated with the eps^2 terms
        // cancelled analytically; the product form saturates at eps^2 once
        // the transforms decay and would turn genuine tail margins into
        // spurious ties.
        const double margin2 = eps * (2.0 * fk - f1 - f2) + f1 * f2 - fk * fk;
        const double scale2 = eps * (2.0 * std::abs(fk) + std::abs(f1) + std::abs(f2))
                            + std::abs(f1 * f2) + fk * fk;
        const double lhs2 = (eps - f1) * (eps - f2);
        const double rhs2 = (eps - fk) * (eps - fk);
        const double tol2 = 1e-12 * scale2;
        if (margin2 <= tol2) {
            res.coercive = false;
            res.marginal = std::abs(margin2) <= tol2;
            res.condition = 2;
            res.xi_witness = xi;
            res.lhs = lhs2;
            res.rhs = rhs2;
            return res;
        }
        const double rel = margin2 / std::max(scale2, 1e-300);
        if (rel < best_margin) {
            best_margin = rel;
            res.xi_witness = xi;
            res.lhs = lhs2;
            res.rhs = rhs2;
        }
    }
    res.coercive = true;
    res.marginal = false;
    res.condition = 0;
    return res;
}

double default_xi_max(const KernelTriple& t) {
    double w = std::numeric_limits<double>::infinity();
    for (const Kernel* k : {&t.s1, &t.s2, &t.k}) {
        if (!(k->mass > 0.0)) continue;
        if (k->family == KernelFamily::gaussian) {
            w = std::min(w, k->width);
        } else {
            double m2 = 0.0;
            const std::size_t n = k->table_values.size();
            for (std::size_t i = 0; i < n; ++i) {
                const double x = k->table_x0 + k->table_dx * static_cast<double>(i);
                const double wt = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
                m2 += wt * x * x * k->table_values[i];
            }
            m2 *= k->table_dx;
            w = std::min(w, std::sqrt(std::max(m2 / k->mass, 1e-12)));
        }
    }
    if (!std::isfinite(w)) return 10.0;
    return 10.0 / w;
}

double discrete_energy(const ParticleState& s, const KernelTriple& t, double eps) {
    require_ordered(s.u);
    require_ordered(s.v);
    const std::size_t n = s.n();
    const std::vector<Block> bu = particle_blocks(s.u, s.m_u);
    const std::vector<Block> bv = particle_blocks(s.v, s.m_v);

    std::vector<double> pts;
    pts.reserve(2 * n + 2);
    for (const auto& b : bu) pts.push_back(b.left);
    pts.push_back(bu.back().right);
    for (const auto& b : bv) pts.push_back(b.left);
    pts.push_back(bv.back().right);
    std::sort(pts.begin(), pts.end());
    double diff = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double len = pts[i] - pts[i - 1];
        if (!(len > 0.0)) continue;
        const double xm = 0.5 * (pts[i - 1] + pts[i]);
        const double h = height_at(bu, xm) + height_at(bv, xm);
        diff += h * h * len;
    }
    double e = 0.5 * eps * diff;

    if (t.s1.mass > 0.0) {
        double sum = static_cast<double>(n) * eval(t.s1, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                sum += 2.0 * eval(t.s1, s.u[i] - s.u[j]);
        e -= 0.5 * s.m_u * s.m_u * sum;
    }
    if (t.s2.mass > 0.0) {
        double sum = static_cast<double>(n) * eval(t.s2, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                sum += 2.0 * eval(t.s2, s.v[i] - s.v[j]);
        e -= 0.5 * s.m_v * s.m_v * sum;
    }
    if (t.k.mass > 0.0) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                sum += eval(t.k, s.u[i] - s.v[j]);
        e -= s.m_u * s.m_v * sum;
    }
    return e;
}

} // namespace aggdiff
