#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "aggdiff/config.hpp"
#include "aggdiff/diagnostics.hpp"
#include "aggdiff/energy.hpp"
#include "aggdiff/grid_density.hpp"
#include "aggdiff/kernels.hpp"
#include "aggdiff/particle_state.hpp"

namespace aggdiff {

/// Controls for the particle scheme that are not part of the model itself.
struct TransportParams {
    double dt = 1e-3;        // nominal step, also the recovery ceiling
    double dt_min = 1e-8;    // below this a rejected step is fatal ("stiff-blowup")
    double gap_min = 1e-10;  // adjacent-gap floor ("particle-collision")
    double bandwidth_scale = 2.0; // mollifier width = scale * mean gap of the other species
    double bandwidth_override = 0.0; // > 0 fixes the mollifier width explicitly
    double stability_safety = 0.5;   // fraction of the explicit diffusion stability limit
};

/// Quantile atomization of a density: particle i sits where the running
/// integral first reaches (i+1)/N of the total mass, using exact inversion of
/// the piecewise-linear CDF built from per-cell trapezoid masses.  Throws
/// "empty-density" when the density has no mass.
std::vector<double> atomize(const GridDensity& rho0, std::size_t n);

/// Velocity field of the particle system.  For species one:
///   eps * (m_u/2) * [ (u_i - u_{i-1})^-2 - (u_{i+1} - u_i)^-2 ]   (self diffusion,
///       missing-neighbor terms dropped at the free boundary)
///   - eps * eta_h'(u_i)     (cross diffusion through the mollified density
///       gradient of the other species)
///   + sum_j m_u S1'(u_i - u_j) + sum_j m_v K'(u_i - v_j).
/// Species two mirrors the roles.  Throws "particle-collision" when an
/// adjacent gap falls below gap_min.
void rhs(const ParticleState& s, const KernelTriple& t, double eps,
         const TransportParams& p, std::span<double> dudt, std::span<double> dvdt);

/// One classical Runge-Kutta step of the given dt.  A candidate state that
/// breaks strict ordering (or is not finite) is rejected and retried with dt
/// halved, down to dt_min ("stiff-blowup" below that).  Returns the state
/// advanced by exactly dt_taken.
struct StepResult {
    ParticleState state;
    double dt_taken = 0.0;
    int rejections = 0;
};
StepResult step(const ParticleState& s, const KernelTriple& t, double eps,
                const TransportParams& p, double dt);

/// Explicit stability ceiling for the step size derived from the smallest
/// adjacent gap (the quadratic diffusion term stiffens as gaps close).
double stable_dt(const ParticleState& s, double eps, const TransportParams& p);

/// Piecewise-constant reconstruction resampled conservatively (cell averages
/// of the block profile) onto the given uniform grid.
GridDensity reconstruct(const std::vector<double>& pos, double m,
                        double x0, double dx, std::size_t n_cells);

/// w = rho1 + rho2 and zeta = (rho1 - rho2)/w where w exceeds the floor
/// (relative to peak w), zeta = 0 elsewhere.
struct ZetaField {
    GridDensity w;
    std::vector<double> zeta;
};
ZetaField zeta_transform(const GridDensity& rho1, const GridDensity& rho2,
                         double w_floor_rel = 1e-8);

/// Outcome of a full simulation run.
struct SimulationResult {
    ParticleState state;                 // final particle state
    GridDensity rho1, rho2;              // final reconstructions
    std::vector<MetricsRow> rows;        // one row per snapshot
    std::size_t steps_accepted = 0;
    std::size_t steps_rejected = 0;
    double energy_step_violation = 0.0;  // largest single-step energy increase
    double energy_cum_violation = 0.0;   // sum of positive per-step increases
    double com_drift = 0.0;              // max |com(t) - com(0)| over snapshots
    double mass_drift = 0.0;             // max per-species mass deviation
    bool ordering_ok = true;             // strict ordering at every accepted step
    double wall_seconds = 0.0;
};

/// Run the particle scheme from the configured initial data to t_final.
/// Snapshots land exactly on multiples of snapshot_every (the step is
/// clipped); the step size adapts by halving on rejection, a diffusion
/// stability ceiling, and gradual recovery toward the configured dt.
/// When out_dir is nonempty, writes snapshot_NNNN.csv (columns x, rho1,
/// rho2, w, zeta) and trajectory.csv (MetricsRow columns) under it.
SimulationResult simulate(const ExperimentConfig& cfg, const std::string& out_dir = "");

} // namespace aggdiff
