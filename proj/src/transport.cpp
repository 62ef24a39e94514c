#include "aggdiff/transport.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <utility>

#include "aggdiff/error.hpp"

namespace aggdiff {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;
constexpr double kMollifierCutoff = 8.5; // Gaussian tail radius in bandwidths
constexpr double kRk4StabilityReach = 2.785; // real-axis stability bound of RK4

bool strictly_increasing(const std::vector<double>& x) {
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (!(x[i] > x[i - 1])) return false;
    }
    return true;
}

bool all_finite(const std::vector<double>& x) {
    for (double v : x) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void check_gaps(const std::vector<double>& x, double gap_min, const char* label) {
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (x[i] - x[i - 1] < gap_min) {
            char buf[160];
            std::snprintf(buf, sizeof(buf),
                          "%s gap %.3e below gap_min %.3e at index %zu", label,
                          x[i] - x[i - 1], gap_min, i);
            throw Error("particle-collision", buf);
        }
    }
}

/// Odd kernel-derivative evaluator with a fast path for the Gaussian family
/// (the pair loops dominate the runtime).
struct DerivEval {
    bool gaussian = false;
    double coeff = 0.0;  // amplitude / (sigma^3 sqrt(2 pi))
    double inv2s2 = 0.0; // 1 / (2 sigma^2)
    const Kernel* k = nullptr;

    explicit DerivEval(const Kernel& kernel) : k(&kernel) {
        if (kernel.family == KernelFamily::gaussian) {
            gaussian = true;
            const double s = kernel.width;
            coeff = kernel.amplitude * kInvSqrt2Pi / (s * s * s);
            inv2s2 = 0.5 / (s * s);
        }
    }
    double operator()(double d) const {
        if (gaussian) return -coeff * d * std::exp(-d * d * inv2s2);
        return eval_d1(*k, d);
    }
};

double bandwidth_for(const std::vector<double>& src, const TransportParams& p) {
    if (p.bandwidth_override > 0.0) return p.bandwidth_override;
    const double g = (src.back() - src.front()) / static_cast<double>(src.size() - 1);
    return p.bandwidth_scale * std::max(g, p.gap_min);
}

/// Adds the cross-diffusion term -eps * d/dx [ sum_j m_src phi_h(x - src_j) ]
/// at each target.  Both arrays are sorted, so the mollifier window (tails
/// beyond kMollifierCutoff bandwidths are below double noise) slides
/// monotonically.
void add_mollified_gradient(const std::vector<double>& targets,
                            const std::vector<double>& src, double m_src, double h,
                            double eps, std::span<double> out) {
    const double radius = kMollifierCutoff * h;
    const double inv2h2 = 0.5 / (h * h);
    const double scale = eps * m_src * kInvSqrt2Pi / (h * h * h);
    const std::size_t ns = src.size();
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double x = targets[i];
        while (lo < ns && src[lo] < x - radius) ++lo;
        if (hi < lo) hi = lo;
        while (hi < ns && src[hi] <= x + radius) ++hi;
        double acc = 0.0;
        for (std::size_t j = lo; j < hi; ++j) {
            const double d = x - src[j];
            acc += d * std::exp(-d * d * inv2h2);
        }
        out[i] += scale * acc;
    }
}

void add_self_diffusion(const std::vector<double>& x, double m, double eps,
                        std::span<double> out) {
    if (eps == 0.0) return;
    const std::size_t n = x.size();
    const double c = 0.5 * eps * m;
    double inv_left = 0.0; // vacuum beyond the first particle
    for (std::size_t i = 0; i < n; ++i) {
        double inv_right = 0.0;
        if (i + 1 < n) {
            const double g = x[i + 1] - x[i];
            inv_right = 1.0 / (g * g);
        }
        out[i] += c * (inv_left - inv_right);
        inv_left = inv_right;
    }
}

void add_self_attraction(const std::vector<double>& x, double m, const Kernel& kern,
                         std::span<double> out) {
    if (kern.mass == 0.0) return;
    const DerivEval d1(kern);
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double f = d1(x[i] - x[j]);
            acc += f;
            out[j] -= m * f; // Newton's-third-law mirror of the (i, j) pair
        }
        out[i] += m * acc;
    }
}

void add_cross_attraction(const ParticleState& s, const Kernel& kern,
                          std::span<double> dudt, std::span<double> dvdt) {
    if (kern.mass == 0.0) return;
    const DerivEval d1(kern);
    const std::size_t n = s.n();
    for (std::size_t i = 0; i < n; ++i) {
        const double ui = s.u[i];
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double f = d1(ui - s.v[j]);
            acc += f;
            dvdt[j] -= s.m_u * f;
        }
        dudt[i] += s.m_v * acc;
    }
}

} // namespace

std::vector<double> atomize(const GridDensity& rho0, std::size_t n) {
    if (n < 2) throw Error("domain", "atomize needs at least 2 particles");
    require_nonnegative(rho0);

    const std::size_t nn = rho0.size();
    std::vector<double> cum(nn, 0.0);
    for (std::size_t i = 1; i < nn; ++i) {
        cum[i] = cum[i - 1] + 0.5 * (rho0.values[i - 1] + rho0.values[i]) * rho0.dx;
    }
    const double total = cum.back();
    if (!(total > 0.0)) {
        throw Error("empty-density", "cannot atomize a zero-mass density");
    }

    std::vector<double> out(n);
    std::size_t cell = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double level = total * (static_cast<double>(k) / static_cast<double>(n));
        // Earliest x where the piecewise-linear CDF reaches the level.
        while (cell + 2 < nn && cum[cell + 1] < level) ++cell;
        const double c0 = cum[cell];
        const double c1 = cum[cell + 1];
        double frac = 0.0;
        if (c1 > c0) frac = std::clamp((level - c0) / (c1 - c0), 0.0, 1.0);
        out[k - 1] = rho0.x(cell) + frac * rho0.dx;
    }

    if (!strictly_increasing(out)) {
        throw Error("particle-collision",
                    "atomized positions are not strictly increasing; refine the grid "
                    "or lower the particle count");
    }
    return out;
}

void rhs(const ParticleState& s, const KernelTriple& t, double eps,
         const TransportParams& p, std::span<double> dudt, std::span<double> dvdt) {
    const std::size_t n = s.n();
    if (dudt.size() != n || dvdt.size() != n) {
        throw Error("domain", "rhs output spans must match the particle count");
    }
    check_gaps(s.u, p.gap_min, "species-one");
    check_gaps(s.v, p.gap_min, "species-two");
    std::fill(dudt.begin(), dudt.end(), 0.0);
    std::fill(dvdt.begin(), dvdt.end(), 0.0);

    add_self_diffusion(s.u, s.m_u, eps, dudt);
    add_self_diffusion(s.v, s.m_v, eps, dvdt);

    if (eps != 0.0) {
        add_mollified_gradient(s.u, s.v, s.m_v, bandwidth_for(s.v, p), eps, dudt);
        add_mollified_gradient(s.v, s.u, s.m_u, bandwidth_for(s.u, p), eps, dvdt);
    }

    add_self_attraction(s.u, s.m_u, t.s1, dudt);
    add_self_attraction(s.v, s.m_v, t.s2, dvdt);
    add_cross_attraction(s, t.k, dudt, dvdt);
}

double stable_dt(const ParticleState& s, double eps, const TransportParams& p) {
    if (eps == 0.0) return std::numeric_limits<double>::infinity();
    double rate = 0.0;
    auto fold = [&rate, eps](const std::vector<double>& x, double m) {
        double gmin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < x.size(); ++i) gmin = std::min(gmin, x[i] - x[i - 1]);
        if (std::isfinite(gmin) && gmin > 0.0) {
            // Fastest local mode of the quadratic-diffusion Jacobian ~ 4 eps m / g^3.
            rate = std::max(rate, 4.0 * eps * m / (gmin * gmin * gmin));
        }
    };
    fold(s.u, s.m_u);
    fold(s.v, s.m_v);
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    return p.stability_safety * kRk4StabilityReach / rate;
}

StepResult step(const ParticleState& s, const KernelTriple& t, double eps,
                const TransportParams& p, double dt) {
    if (!(dt > 0.0)) throw Error("domain", "step needs dt > 0");
    require_ordered(s.u);
    require_ordered(s.v);

    const std::size_t n = s.n();
    std::vector<double> k1u(n), k1v(n), k2u(n), k2v(n), k3u(n), k3v(n), k4u(n), k4v(n);

    // Collisions in the input state are genuine errors; stage collisions below
    // only mean the trial dt was too large.
    rhs(s, t, eps, p, k1u, k1v);

    ParticleState stage = s;
    auto place_stage = [&](double a, const std::vector<double>& du,
                           const std::vector<double>& dv) {
        for (std::size_t i = 0; i < n; ++i) {
            stage.u[i] = s.u[i] + a * du[i];
            stage.v[i] = s.v[i] + a * dv[i];
        }
        return strictly_increasing(stage.u) && strictly_increasing(stage.v);
    };
    auto stage_rhs = [&](std::vector<double>& ku, std::vector<double>& kv) {
        try {
            rhs(stage, t, eps, p, ku, kv);
            return true;
        } catch (const Error& e) {
            if (e.code() == "particle-collision" || e.code() == "ordering") return false;
            throw;
        }
    };

    StepResult res;
    double h = dt;
    for (;;) {
        std::optional<ParticleState> accepted;
        if (place_stage(0.5 * h, k1u, k1v) && stage_rhs(k2u, k2v) &&
            place_stage(0.5 * h, k2u, k2v) && stage_rhs(k3u, k3v) &&
            place_stage(h, k3u, k3v) && stage_rhs(k4u, k4v)) {
            ParticleState out = s;
            const double w = h / 6.0;
            for (std::size_t i = 0; i < n; ++i) {
                out.u[i] += w * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]);
                out.v[i] += w * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
            }
            out.t = s.t + h;
            if (strictly_increasing(out.u) && strictly_increasing(out.v) &&
                all_finite(out.u) && all_finite(out.v)) {
                accepted = std::move(out);
            }
        }
        if (accepted) {
            res.state = std::move(*accepted);
            res.dt_taken = h;
            return res;
        }
        ++res.rejections;
        h *= 0.5;
        if (h < p.dt_min) {
            double gu = std::numeric_limits<double>::infinity();
            double gv = gu;
            for (std::size_t i = 1; i < n; ++i) {
                gu = std::min(gu, s.u[i] - s.u[i - 1]);
                gv = std::min(gv, s.v[i] - s.v[i - 1]);
            }
            char buf[200];
            std::snprintf(buf, sizeof(buf),
                          "dt underflow at t=%.6e (dt=%.3e < dt_min=%.3e, min gaps "
                          "u=%.3e v=%.3e, N=%zu)",
                          s.t, h, p.dt_min, gu, gv, n);
            throw Error("stiff-blowup", buf);
        }
    }
}

GridDensity reconstruct(const std::vector<double>& pos, double m, double x0, double dx,
                        std::size_t n_nodes) {
    if (n_nodes < 2 || !(dx > 0.0)) throw Error("domain", "reconstruct needs a valid grid");
    if (pos.size() < 2) throw Error("domain", "reconstruct needs at least 2 particles");
    if (!strictly_increasing(pos)) {
        throw Error("ordering", "reconstruct needs strictly increasing positions");
    }

    const std::vector<Block> blocks = particle_blocks(pos, m);
    const double x_end = x0 + static_cast<double>(n_nodes - 1) * dx;
    std::vector<double> cell_mass(n_nodes, 0.0);

    // Deposit each block's mass into the node-centered cells
    // [x_i - dx/2, x_i + dx/2] (half cells at the window ends).
    const long last = static_cast<long>(n_nodes) - 1;
    for (const Block& b : blocks) {
        long i_lo = static_cast<long>(std::floor((b.left - x0) / dx + 0.5));
        long i_hi = static_cast<long>(std::floor((b.right - x0) / dx + 0.5));
        i_lo = std::clamp(i_lo, 0L, last);
        i_hi = std::clamp(i_hi, 0L, last);
        for (long i = i_lo; i <= i_hi; ++i) {
            const double cl = (i == 0) ? x0 : x0 + (static_cast<double>(i) - 0.5) * dx;
            const double cr = (i == last) ? x_end : x0 + (static_cast<double>(i) + 0.5) * dx;
            const double overlap = std::min(b.right, cr) - std::max(b.left, cl);
            if (overlap > 0.0) cell_mass[i] += b.height * overlap;
        }
    }

    std::vector<double> vals(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        const double width = (i == 0 || i + 1 == n_nodes) ? 0.5 * dx : dx;
        vals[i] = cell_mass[i] / width;
    }
    return make_grid_density(x0, dx, std::move(vals));
}

ZetaField zeta_transform(const GridDensity& rho1, const GridDensity& rho2,
                         double w_floor_rel) {
    require_same_grid(rho1, rho2);
    ZetaField zf;
    zf.w = rho1;
    for (std::size_t i = 0; i < zf.w.size(); ++i) zf.w.values[i] += rho2.values[i];
    zf.w.mass = trapezoid_mass(zf.w);

    const double floor = w_floor_rel * max_value(zf.w);
    zf.zeta.assign(zf.w.size(), 0.0);
    for (std::size_t i = 0; i < zf.w.size(); ++i) {
        if (zf.w.values[i] > floor && zf.w.values[i] > 0.0) {
            const double z = (rho1.values[i] - rho2.values[i]) / zf.w.values[i];
            zf.zeta[i] = std::clamp(z, -1.0, 1.0);
        }
    }
    return zf;
}

SimulationResult simulate(const ExperimentConfig& cfg, const std::string& out_dir) {
    const auto wall_start = std::chrono::steady_clock::now();
    validate_config(cfg);

    const KernelTriple triple = build_triple(cfg);
    TransportParams params;
    params.dt = cfg.dt;
    params.dt_min = cfg.dt_min;
    params.gap_min = cfg.gap_min;
    params.bandwidth_scale = cfg.bandwidth_scale;
    params.bandwidth_override = cfg.bandwidth_override;
    params.stability_safety = cfg.stability_safety;

    const double dx = (cfg.grid_xmax - cfg.grid_xmin) / static_cast<double>(cfg.grid_cells);
    const std::size_t n_nodes = cfg.grid_cells + 1;
    const GridDensity rho1_0 =
        build_initial(cfg.init1, cfg.mass1, cfg.grid_xmin, dx, n_nodes);
    const GridDensity rho2_0 =
        build_initial(cfg.init2, cfg.mass2, cfg.grid_xmin, dx, n_nodes);

    ParticleState state = make_particle_state(atomize(rho1_0, cfg.n_particles),
                                              atomize(rho2_0, cfg.n_particles),
                                              rho1_0.mass, rho2_0.mass);

    SimulationResult res;
    std::ofstream traj;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        traj.open(std::filesystem::path(out_dir) / "trajectory.csv");
        if (!traj) throw Error("domain", "cannot write under '" + out_dir + "'");
        traj << metrics_csv_header() << '\n';
    }

    std::size_t snap_index = 0;
    double com0 = 0.0, m1_0 = 0.0, m2_0 = 0.0;

    auto snapshot = [&](double t_label) {
        // Extend the configured window (whole cells, same lattice) so the
        // particle hull is always covered and resampling stays conservative.
        const std::vector<Block> b1 = particle_blocks(state.u, state.m_u);
        const std::vector<Block> b2 = particle_blocks(state.v, state.m_v);
        const double hull_lo = std::min(b1.front().left, b2.front().left);
        const double hull_hi = std::max(b1.back().right, b2.back().right);
        const long ext_l = std::max(
            0L, static_cast<long>(std::ceil((cfg.grid_xmin - (hull_lo - dx)) / dx)));
        const long ext_r = std::max(
            0L, static_cast<long>(std::ceil(((hull_hi + dx) - cfg.grid_xmax) / dx)));
        const double x0 = cfg.grid_xmin - static_cast<double>(ext_l) * dx;
        const std::size_t nn = n_nodes + static_cast<std::size_t>(ext_l + ext_r);

        GridDensity r1 = reconstruct(state.u, state.m_u, x0, dx, nn);
        GridDensity r2 = reconstruct(state.v, state.m_v, x0, dx, nn);
        const MetricsRow row = metrics(r1, r2, triple, cfg.eps, t_label);
        res.rows.push_back(row);
        if (traj.is_open()) append_metrics_csv(traj, row);

        if (!out_dir.empty()) {
            char name[48];
            std::snprintf(name, sizeof(name), "snapshot_%04zu.csv", snap_index);
            std::ofstream snap(std::filesystem::path(out_dir) / name);
            snap << "x,rho1,rho2,w,zeta\n";
            const ZetaField zf = zeta_transform(r1, r2);
            char line[256];
            for (std::size_t i = 0; i < r1.size(); ++i) {
                std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g",
                              r1.x(i), r1.values[i], r2.values[i], zf.w.values[i],
                              zf.zeta[i]);
                snap << line << '\n';
            }
        }
        ++snap_index;

        if (res.rows.size() == 1) {
            com0 = row.com;
            m1_0 = row.mass1;
            m2_0 = row.mass2;
        } else {
            res.com_drift = std::max(res.com_drift, std::abs(row.com - com0));
            res.mass_drift = std::max({res.mass_drift, std::abs(row.mass1 - m1_0),
                                       std::abs(row.mass2 - m2_0)});
        }
        res.rho1 = std::move(r1);
        res.rho2 = std::move(r2);
    };

    snapshot(0.0);
    double e_prev = discrete_energy(state, triple, cfg.eps);

    const double T = cfg.t_final;
    const double t_eps = 1e-12 * std::max(1.0, T);
    double cur_dt = cfg.dt;
    int accept_streak = 0;
    double next_snap = std::min(cfg.snapshot_every, T);

    while (state.t < T - t_eps) {
        const double t_target = std::min(next_snap, T);
        double dt_req = std::min(cur_dt, stable_dt(state, cfg.eps, params));
        dt_req = std::min(dt_req, t_target - state.t);

        StepResult sr = step(state, triple, cfg.eps, params, dt_req);
        state = std::move(sr.state);
        ++res.steps_accepted;
        res.steps_rejected += static_cast<std::size_t>(sr.rejections);
        if (sr.rejections > 0) {
            cur_dt = sr.dt_taken;
            accept_streak = 0;
        } else if (++accept_streak >= 16 && cur_dt < cfg.dt) {
            cur_dt = std::min(cur_dt * 2.0, cfg.dt);
            accept_streak = 0;
        }

        res.ordering_ok = res.ordering_ok && strictly_increasing(state.u) &&
                          strictly_increasing(state.v);

        const double e_now = discrete_energy(state, triple, cfg.eps);
        const double de = e_now - e_prev;
        if (de > 0.0) {
            res.energy_step_violation = std::max(res.energy_step_violation, de);
            res.energy_cum_violation += de;
        }
        e_prev = e_now;

        if (state.t >= next_snap - t_eps && next_snap <= T + t_eps) {
            snapshot(next_snap);
            next_snap += cfg.snapshot_every;
        }
    }

    if (std::abs(res.rows.back().t - T) > t_eps) snapshot(T);

    res.state = std::move(state);
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
            .count();
    return res;
}

} // namespace aggdiff
