#include "aggdiff/run.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "aggdiff/asymptotic.hpp"
#include "aggdiff/diagnostics.hpp"
#include "aggdiff/energy.hpp"
#include "aggdiff/error.hpp"
#include "aggdiff/steady_kr.hpp"
#include "aggdiff/transport.hpp"

namespace aggdiff {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("config", "cannot open output file " + path.string());
    os << text;
}

/// Sample the total density rho1 + rho2 of a reconstructed steady pair at an
/// arbitrary point by linear interpolation, zero outside the stored window.
double interp_w(const SteadyProfilePair& sp, double x) {
    const GridDensity& r1 = sp.rho1;
    const double s = (x - r1.x0) / r1.dx;
    if (s <= 0.0 || s >= static_cast<double>(r1.size() - 1)) return 0.0;
    const std::size_t i = static_cast<std::size_t>(s);
    const double frac = s - static_cast<double>(i);
    const double lo = r1.values[i] + sp.rho2.values[i];
    const double hi = r1.values[i + 1] + sp.rho2.values[i + 1];
    return lo + frac * (hi - lo);
}

void run_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out,
                  std::ostream& report, std::string& summary) {
    SimulationResult sim = simulate(cfg, out.string());
    const MetricsRow& last = sim.rows.back();
    const bool seg = segregated_verdict(last);
    const char* verdict = seg ? "segregated" : "mixed";
    report << "verdict: " << verdict << '\n'
           << "t_final: " << fmt(last.t) << '\n'
           << "overlap: " << fmt(last.overlap) << '\n'
           << "zeta_mass_fraction: " << fmt(last.zeta_mass_fraction) << '\n'
           << "w_components: " << last.n_components_w << '\n'
           << "support_len_w: " << fmt(last.support_len_w) << '\n'
           << "variance: " << fmt(last.variance) << '\n'
           << "energy: " << fmt(last.energy) << '\n'
           << "energy_step_violation: " << fmt(sim.energy_step_violation) << '\n'
           << "energy_cum_violation: " << fmt(sim.energy_cum_violation) << '\n'
           << "mass_drift: " << fmt(sim.mass_drift) << '\n'
           << "com_drift: " << fmt(sim.com_drift) << '\n'
           << "steps_accepted: " << sim.steps_accepted << '\n'
           << "steps_rejected: " << sim.steps_rejected << '\n'
           << "ordering_ok: " << (sim.ordering_ok ? "yes" : "no") << '\n';
    summary = std::string("verdict=") + verdict + " overlap=" + fmt(last.overlap) +
              " zeta=" + fmt(last.zeta_mass_fraction) + " energy=" + fmt(last.energy);
}

void run_steady_kr(const ExperimentConfig& cfg, const std::filesystem::path& out,
                   std::ostream& report, std::string& summary) {
    const KernelTriple t = build_triple(cfg);
    const OperatorGrid g =
        make_operator_grid(cfg.steady_l1, cfg.steady_l2,
                           static_cast<std::size_t>(cfg.steady_n1),
                           static_cast<std::size_t>(cfg.steady_n2));
    const EigenPair ep = principal_eigenpair(t, g, cfg.steady_tol,
                                             static_cast<std::size_t>(cfg.steady_max_iter));
    const SteadyProfilePair sp =
        reconstruct_profiles(ep.vec, g, cfg.mass1 + cfg.mass2, ep.eps,
                             static_cast<std::size_t>(cfg.steady_profile_cells));

    std::ostringstream csv;
    csv << "x,rho1,rho2\n";
    for (std::size_t i = 0; i < sp.rho1.size(); ++i)
        csv << fmt(sp.rho1.x(i)) << ',' << fmt(sp.rho1.values[i]) << ','
            << fmt(sp.rho2.values[i]) << '\n';
    write_text(out / "steady_kr.csv", csv.str());

    report << "eigenvalue_eps: " << fmt(ep.eps) << '\n'
           << "inner_support_l1: " << fmt(sp.l1) << '\n'
           << "outer_support_l2: " << fmt(sp.l2) << '\n'
           << "interface_height: " << fmt(sp.w_bar) << '\n'
           << "mass1: " << fmt(trapezoid_mass(sp.rho1)) << '\n'
           << "mass2: " << fmt(trapezoid_mass(sp.rho2)) << '\n'
           << "iterations: " << ep.iterations << '\n';
    summary = "eps=" + fmt(ep.eps) + " l1=" + fmt(sp.l1) + " l2=" + fmt(sp.l2) +
              " iterations=" + std::to_string(ep.iterations);
}

void run_steady_asymptotic(const ExperimentConfig& cfg, const std::filesystem::path& out,
                           std::ostream& report, std::string& summary) {
    const KernelTriple t = build_triple(cfg);
    const double total = cfg.mass1 + cfg.mass2;
    const double z1 = cfg.mass1 / total;
    const AsymptoticSolution sol =
        solve_asymptotic(t, z1, cfg.eps, static_cast<std::size_t>(cfg.steady_profile_cells));

    // One symmetric lattice spanning the outer support; the stationary pair
    // is linear in total mass at fixed eps, so the unit-mass profile scales.
    std::size_t n = static_cast<std::size_t>(cfg.steady_profile_cells);
    if (n % 2 != 0) ++n;
    const double radius = sol.delta * sol.lambda;
    const double dx = 2.0 * radius / static_cast<double>(n);
    std::ostringstream csv;
    csv << "x,rho1,rho2,w\n";
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = -radius + dx * static_cast<double>(i);
        const double r1 = total * profile_value1(sol, x);
        const double r2 = total * profile_value2(sol, x);
        csv << fmt(x) << ',' << fmt(r1) << ',' << fmt(r2) << ',' << fmt(r1 + r2) << '\n';
    }
    write_text(out / "steady_asymptotic.csv", csv.str());

    report << "z1: " << fmt(z1) << '\n'
           << "c1: " << fmt(sol.c1) << '\n'
           << "c2: " << fmt(sol.c2) << '\n'
           << "mu: " << fmt(sol.mu) << '\n'
           << "lambda: " << fmt(sol.lambda) << '\n'
           << "delta: " << fmt(sol.delta) << '\n'
           << "inner_radius: " << fmt(sol.delta * sol.mu) << '\n'
           << "outer_radius: " << fmt(sol.delta * sol.lambda) << '\n'
           << "residual1: " << fmt(sol.residual1) << '\n'
           << "residual2: " << fmt(sol.residual2) << '\n'
           << "mass1: " << fmt(total * sol.mass1) << '\n'
           << "mass2: " << fmt(total * sol.mass2) << '\n';
    summary = "mu=" + fmt(sol.mu) + " lambda=" + fmt(sol.lambda) +
              " delta=" + fmt(sol.delta);
}

void run_coercivity(const ExperimentConfig& cfg, const std::filesystem::path& out,
                    std::ostream& report, std::string& summary) {
    const KernelTriple t = build_triple(cfg);
    const double xi_max =
        cfg.coercivity_xi_max > 0.0 ? cfg.coercivity_xi_max : default_xi_max(t);
    const CoercivityResult res =
        coercivity_check(t, cfg.eps, xi_max, static_cast<int>(cfg.coercivity_n_xi));
    const char* verdict =
        res.coercive ? "coercive" : (res.marginal ? "marginal" : "not-coercive");

    std::ostringstream csv;
    csv << "verdict,xi_witness,lhs,rhs\n"
        << verdict << ',' << fmt(res.xi_witness) << ',' << fmt(res.lhs) << ','
        << fmt(res.rhs) << '\n';
    write_text(out / "coercivity.csv", csv.str());

    report << "verdict: " << verdict << '\n'
           << "condition: " << res.condition << '\n'
           << "xi_witness: " << fmt(res.xi_witness) << '\n'
           << "lhs: " << fmt(res.lhs) << '\n'
           << "rhs: " << fmt(res.rhs) << '\n'
           << "xi_max: " << fmt(xi_max) << '\n';
    summary = std::string("verdict=") + verdict + " xi_witness=" + fmt(res.xi_witness) +
              " lhs=" + fmt(res.lhs) + " rhs=" + fmt(res.rhs);
}

void run_eps_map(const ExperimentConfig& cfg, const std::filesystem::path& out,
                 std::ostream& report, std::string& summary) {
    const KernelTriple t = build_triple(cfg);
    const int steps = static_cast<int>(cfg.map_steps);
    std::vector<double> l2s;
    for (int i = 0; i < steps; ++i) {
        const double frac = steps == 1 ? 0.0
                                       : static_cast<double>(i) / static_cast<double>(steps - 1);
        l2s.push_back(cfg.map_l2_min + frac * (cfg.map_l2_max - cfg.map_l2_min));
    }
    const std::vector<EpsMapRow> rows =
        eps_map(t, l2s, cfg.map_l1_fraction, static_cast<std::size_t>(cfg.steady_n1),
                static_cast<std::size_t>(cfg.steady_n2), cfg.steady_tol,
                static_cast<std::size_t>(cfg.steady_max_iter));

    std::ostringstream csv;
    csv << "l1,l2,eps\n";
    for (const EpsMapRow& r : rows)
        csv << fmt(r.l1) << ',' << fmt(r.l2) << ',' << fmt(r.eps) << '\n';
    write_text(out / "eps_map.csv", csv.str());

    bool nondecreasing = true, nonincreasing = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].eps < rows[i - 1].eps) nondecreasing = false;
        if (rows[i].eps > rows[i - 1].eps) nonincreasing = false;
    }
    const char* trend = rows.size() < 2 ? "single-point"
                        : nondecreasing ? "nondecreasing"
                        : nonincreasing ? "nonincreasing"
                                        : "non-monotone";
    report << "rows: " << rows.size() << '\n'
           << "eps_first: " << fmt(rows.front().eps) << '\n'
           << "eps_last: " << fmt(rows.back().eps) << '\n'
           << "eps_trend: " << trend << '\n';
    summary = "rows=" + std::to_string(rows.size()) + " eps_first=" + fmt(rows.front().eps) +
              " eps_last=" + fmt(rows.back().eps) + " trend=" + trend;
}

void run_compare(const ExperimentConfig& cfg, const std::filesystem::path& out,
                 std::ostream& report, std::string& summary) {
    const KernelTriple t = build_triple(cfg);
    const double total = cfg.mass1 + cfg.mass2;
    const double z1 = cfg.mass1 / total;

    // Route one: long-time particle transport, kept in memory only.
    ExperimentConfig sim_cfg = cfg;
    sim_cfg.t_final = cfg.compare_t_long;
    sim_cfg.n_particles = cfg.compare_n_particles;
    const SimulationResult sim = simulate(sim_cfg, "");
    const double com = sim.rows.back().com;

    // Route two: small-diffusion closed form, evaluated about the simulated
    // center of mass (the stationary problem is translation invariant).
    const AsymptoticSolution sol =
        solve_asymptotic(t, z1, cfg.eps, static_cast<std::size_t>(cfg.steady_profile_cells));

    // Route three: spectral steady state on the supports route two predicts.
    const OperatorGrid g =
        make_operator_grid(sol.delta * sol.mu, sol.delta * sol.lambda,
                           static_cast<std::size_t>(cfg.steady_n1),
                           static_cast<std::size_t>(cfg.steady_n2));
    const EigenPair ep = principal_eigenpair(t, g, cfg.steady_tol,
                                             static_cast<std::size_t>(cfg.steady_max_iter));
    const SteadyProfilePair sp =
        reconstruct_profiles(ep.vec, g, total, ep.eps,
                             static_cast<std::size_t>(cfg.steady_profile_cells));

    // All three total densities sampled on the transport lattice.
    GridDensity wt = sim.rho1, wa = sim.rho1, wk = sim.rho1;
    for (std::size_t i = 0; i < wt.size(); ++i) {
        const double x = wt.x(i);
        wt.values[i] = sim.rho1.values[i] + sim.rho2.values[i];
        wa.values[i] = total * profile_w(sol, x - com);
        wk.values[i] = interp_w(sp, x - com);
    }
    wt.mass = trapezoid_mass(wt);
    wa.mass = trapezoid_mass(wa);
    wk.mass = trapezoid_mass(wk);

    const double d_ta = l1_distance(wt, wa);
    const double d_tk = l1_distance(wt, wk);
    const double d_ka = l1_distance(wk, wa);

    std::ostringstream csv;
    csv << "route_a,route_b,l1_distance\n"
        << "transport,asymptotic," << fmt(d_ta) << '\n'
        << "transport,steady-kr," << fmt(d_tk) << '\n'
        << "steady-kr,asymptotic," << fmt(d_ka) << '\n';
    write_text(out / "compare.csv", csv.str());

    report << "l1_transport_asymptotic: " << fmt(d_ta) << '\n'
           << "l1_transport_kr: " << fmt(d_tk) << '\n'
           << "l1_kr_asymptotic: " << fmt(d_ka) << '\n'
           << "configured_eps: " << fmt(cfg.eps) << '\n'
           << "kr_eigenvalue_eps: " << fmt(ep.eps) << '\n'
           << "asymptotic_mu: " << fmt(sol.mu) << '\n'
           << "asymptotic_lambda: " << fmt(sol.lambda) << '\n'
           << "asymptotic_delta: " << fmt(sol.delta) << '\n'
           << "transport_overlap: " << fmt(sim.rows.back().overlap) << '\n'
           << "transport_com: " << fmt(com) << '\n';
    summary = "l1_ta=" + fmt(d_ta) + " l1_tk=" + fmt(d_tk) + " l1_ka=" + fmt(d_ka);
}

} // namespace

RunResult run_experiment(const ExperimentConfig& cfg_in, const std::string& out_override) {
    ExperimentConfig cfg = cfg_in;
    if (!out_override.empty()) cfg.out_dir = out_override;
    validate_config(cfg);

    const std::filesystem::path out(cfg.out_dir);
    std::filesystem::create_directories(out);

    std::ostringstream report;
    report << "# experiment report\n" << "mode: " << cfg.mode << '\n';
    std::string summary;

    if (cfg.mode == "simulate") {
        run_simulate(cfg, out, report, summary);
    } else if (cfg.mode == "steady-kr") {
        run_steady_kr(cfg, out, report, summary);
    } else if (cfg.mode == "steady-asymptotic") {
        run_steady_asymptotic(cfg, out, report, summary);
    } else if (cfg.mode == "coercivity-check") {
        run_coercivity(cfg, out, report, summary);
    } else if (cfg.mode == "eps-map") {
        run_eps_map(cfg, out, report, summary);
    } else if (cfg.mode == "compare") {
        run_compare(cfg, out, report, summary);
    } else {
        throw Error("config", "unknown mode '" + cfg.mode + "'");
    }

    report << "\n# resolved configuration\n" << render_config(cfg);
    write_text(out / "report.txt", report.str());
    return RunResult{summary};
}

} // namespace aggdiff
