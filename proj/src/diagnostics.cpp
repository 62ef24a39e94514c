#include "aggdiff/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "aggdiff/error.hpp"
#include "aggdiff/transport.hpp"

namespace aggdiff {

double overlap_mass(const GridDensity& a, const GridDensity& b) {
    require_same_grid(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += trapezoid_weight(a, i) * std::min(a.values[i], b.values[i]);
    }
    return s;
}

double l1_distance(const GridDensity& a, const GridDensity& b) {
    require_same_grid(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += trapezoid_weight(a, i) * std::abs(a.values[i] - b.values[i]);
    }
    return s;
}

SupportComponents support_components(const GridDensity& rho, double floor_rel) {
    const double peak = max_value(rho);
    const double floor = floor_rel * peak;
    SupportComponents out;
    if (!(peak > 0.0)) return out;

    // Collect maximal index runs with value > floor.
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    bool open = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (rho.values[i] > floor) {
            if (!open) {
                open = true;
                start = i;
            }
        } else if (open) {
            runs.emplace_back(start, i - 1);
            open = false;
        }
    }
    if (open) runs.emplace_back(start, rho.size() - 1);

    // Merge runs separated by exactly one below-floor sample.
    std::vector<std::pair<std::size_t, std::size_t>> merged;
    for (const auto& r : runs) {
        if (!merged.empty() && r.first <= merged.back().second + 2) {
            merged.back().second = r.second;
        } else {
            merged.push_back(r);
        }
    }

    for (const auto& r : merged) {
        const double lo = rho.x(r.first);
        const double hi = rho.x(r.second);
        out.intervals.emplace_back(lo, hi);
        out.total_length += static_cast<double>(r.second - r.first + 1) * rho.dx;
    }
    out.count = static_cast<int>(merged.size());
    return out;
}

MetricsRow metrics(const GridDensity& rho1, const GridDensity& rho2,
                   const KernelTriple& t, double eps, double time) {
    require_same_grid(rho1, rho2);

    GridDensity w = rho1;
    for (std::size_t i = 0; i < w.size(); ++i) w.values[i] += rho2.values[i];
    w.mass = trapezoid_mass(w);

    MetricsRow row;
    row.t = time;
    row.mass1 = rho1.mass;
    row.mass2 = rho2.mass;
    row.com = center_of_mass(w);
    row.variance = variance_about(w, row.com);
    row.overlap = overlap_mass(rho1, rho2);

    const SupportComponents sup = support_components(w);
    row.support_len_w = sup.total_length;
    row.n_components_w = sup.count;

    const ZetaField zf = zeta_transform(rho1, rho2);
    double seg = 0.0, tot = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double dm = trapezoid_weight(w, i) * w.values[i];
        tot += dm;
        if (std::abs(zf.zeta[i]) > 0.9) seg += dm;
    }
    row.zeta_mass_fraction = tot > 0.0 ? seg / tot : 0.0;

    row.energy = free_energy(rho1, rho2, t, eps);
    return row;
}

bool segregated_verdict(const MetricsRow& row) {
    const double min_mass = std::min(row.mass1, row.mass2);
    return row.overlap < 0.05 * min_mass && row.zeta_mass_fraction > 0.9;
}

std::string metrics_csv_header() {
    return "t,mass1,mass2,com,variance,overlap,support_len_w,n_components_w,"
           "zeta_mass_fraction,energy";
}

void append_metrics_csv(std::ostream& os, const MetricsRow& row) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g",
                  row.t, row.mass1, row.mass2, row.com, row.variance, row.overlap,
                  row.support_len_w, row.n_components_w, row.zeta_mass_fraction,
                  row.energy);
    os << buf << '\n';
}

} // namespace aggdiff
