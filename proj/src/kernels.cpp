#include "aggdiff/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace aggdiff {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779; // 1/sqrt(2*pi)

// Natural cubic spline second derivatives on a uniform grid (Thomas solve).
std::vector<double> spline_second_derivatives(const std::vector<double>& v, double h) {
    const std::size_t n = v.size();
    std::vector<double> m(n, 0.0);
    if (n < 3) return m;
    std::vector<double> diag(n, 0.0), rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i)
        rhs[i] = 6.0 * (v[i - 1] - 2.0 * v[i] + v[i + 1]) / (h * h);
    // Interior system: m[i-1] + 4 m[i] + m[i+1] = rhs[i], m[0] = m[n-1] = 0.
    diag[1] = 4.0;
    for (std::size_t i = 2; i + 1 < n; ++i) {
        const double w = 1.0 / diag[i - 1];
        diag[i] = 4.0 - w;
        rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
        m[i] = (rhs[i] - (i + 2 < n ? m[i + 1] : 0.0)) / diag[i];
        if (i == 1) break;
    }
    return m;
}

struct SplinePiece {
    std::size_t cell;
    double a; // distance to left node
    double b; // distance to right node
};

bool locate(const Kernel& k, double x, SplinePiece& p) {
    const std::size_t n = k.table_values.size();
    const double h = k.table_dx;
    const double xl = k.table_x0;
    const double xr = xl + h * static_cast<double>(n - 1);
    if (x < xl || x > xr) return false;
    std::size_t c = static_cast<std::size_t>((x - xl) / h);
    if (c >= n - 1) c = n - 2;
    p.cell = c;
    p.a = x - (xl + h * static_cast<double>(c));
    p.b = h - p.a;
    return true;
}

} // namespace

Kernel make_gaussian(double amplitude, double sigma) {
    if (!(sigma > 0.0)) throw Error("invalid-kernel", "gaussian width must be positive");
    if (!(amplitude >= 0.0)) throw Error("invalid-kernel", "amplitude must be nonnegative");
    Kernel k;
    k.family = KernelFamily::gaussian;
    k.amplitude = amplitude;
    k.width = sigma;
    k.mass = amplitude;
    return k;
}

Kernel make_tabulated(double x0, double dx, std::vector<double> values) {
    const std::size_t n = values.size();
    if (n < 5) throw Error("invalid-table", "need at least 5 samples");
    if (!(dx > 0.0)) throw Error("invalid-table", "sample spacing must be positive");
    const double x_end = x0 + dx * static_cast<double>(n - 1);
    if (std::abs(x0 + x_end) > 1e-9 * std::max(1.0, std::abs(x0)))
        throw Error("invalid-table", "window must be symmetric about 0");
    double peak = 0.0;
    for (double v : values) peak = std::max(peak, std::abs(v));
    for (std::size_t i = 0; i < n; ++i) {
        if (values[i] < -1e-12 * peak)
            throw Error("invalid-table", "kernel samples must be nonnegative");
        if (std::abs(values[i] - values[n - 1 - i]) > 1e-9 * std::max(1.0, peak))
            throw Error("invalid-table", "kernel samples must be even in x");
    }
    Kernel k;
    k.family = KernelFamily::tabulated;
    k.amplitude = 1.0;
    k.width = dx;
    k.table_x0 = x0;
    k.table_dx = dx;
    k.table_values = std::move(values);
    k.table_second = spline_second_derivatives(k.table_values, dx);
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        m += k.table_values[i] * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
    k.mass = m * dx;
    return k;
}

Kernel scaled(const Kernel& k, double factor) {
    if (!(factor >= 0.0)) throw Error("invalid-kernel", "scale factor must be nonnegative");
    Kernel out = k;
    out.amplitude *= factor;
    out.mass *= factor;
    if (out.family == KernelFamily::tabulated) {
        for (double& v : out.table_values) v *= factor;
        for (double& v : out.table_second) v *= factor;
    }
    return out;
}

KernelTriple make_triple_from_base(const Kernel& base, double sigma1, double sigma2) {
    return KernelTriple{scaled(base, sigma1), scaled(base, sigma2), base};
}

double eval(const Kernel& k, double x) {
    if (k.family == KernelFamily::gaussian) {
        const double s = k.width;
        return k.amplitude * kInvSqrt2Pi / s * std::exp(-x * x / (2.0 * s * s));
    }
    SplinePiece p;
    if (!locate(k, x, p)) return 0.0;
    const double h = k.table_dx;
    const double vl = k.table_values[p.cell], vr = k.table_values[p.cell + 1];
    const double ml = k.table_second[p.cell], mr = k.table_second[p.cell + 1];
    return (ml * p.b * p.b * p.b + mr * p.a * p.a * p.a) / (6.0 * h)
         + (vl / h - ml * h / 6.0) * p.b + (vr / h - mr * h / 6.0) * p.a;
}

double eval_d1(const Kernel& k, double x) {
    if (k.family == KernelFamily::gaussian) {
        const double s2 = k.width * k.width;
        return -x / s2 * eval(k, x);
    }
    SplinePiece p;
    if (!locate(k, x, p)) return 0.0;
    const double h = k.table_dx;
    const double vl = k.table_values[p.cell], vr = k.table_values[p.cell + 1];
    const double ml = k.table_second[p.cell], mr = k.table_second[p.cell + 1];
    return (-ml * p.b * p.b + mr * p.a * p.a) / (2.0 * h)
         + (vr - vl) / h - (mr - ml) * h / 6.0;
}

double eval_d2(const Kernel& k, double x) {
    if (k.family == KernelFamily::gaussian) {
        const double s2 = k.width * k.width;
        return (x * x / s2 - 1.0) / s2 * eval(k, x);
    }
    SplinePiece p;
    if (!locate(k, x, p)) return 0.0;
    const double h = k.table_dx;
    return (k.table_second[p.cell] * p.b + k.table_second[p.cell + 1] * p.a) / h;
}

double fourier(const Kernel& k, double xi) {
    if (k.family == KernelFamily::gaussian) {
        const double s = k.width;
        return k.amplitude * std::exp(-s * s * xi * xi / 2.0);
    }
    const std::size_t n = k.table_values.size();
    double peak = 0.0;
    for (double v : k.table_values) peak = std::max(peak, v);
    const double edge = std::max(k.table_values.front(), k.table_values.back());
    if (peak > 0.0 && edge > 1e-6 * peak)
        throw Error("fourier-window", "kernel does not decay inside the sample window");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = k.table_x0 + k.table_dx * static_cast<double>(i);
        const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        sum += w * k.table_values[i] * std::cos(xi * x);
    }
    return sum * k.table_dx;
}

double symmetrized_minus(const Kernel& k, double x, double y) {
    if (x < 0.0 || y < 0.0) throw Error("domain", "symmetrized kernels need x, y >= 0");
    return eval(k, x - y) - eval(k, x + y);
}

double symmetrized_plus(const Kernel& k, double x, double y) {
    if (x < 0.0 || y < 0.0) throw Error("domain", "symmetrized kernels need x, y >= 0");
    return eval(k, x - y) + eval(k, x + y);
}

} // namespace aggdiff
