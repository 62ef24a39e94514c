#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "aggdiff/error.hpp"

namespace aggdiff {

/// Lagrangian particle positions for the two species.  Positions are strictly
/// increasing within each species; every particle of species i carries mass
/// m_u (resp. m_v) = total species mass / N.
struct ParticleState {
    std::vector<double> u, v;
    double m_u = 0.0, m_v = 0.0;
    double t = 0.0;

    std::size_t n() const { return u.size(); }
};

inline void require_ordered(const std::vector<double>& pos) {
    for (std::size_t i = 1; i < pos.size(); ++i)
        if (!(pos[i] > pos[i - 1])) throw Error("ordering", "particle positions out of order");
}

inline ParticleState make_particle_state(std::vector<double> u, std::vector<double> v,
                                         double mass1, double mass2, double t = 0.0) {
    if (u.size() < 2 || u.size() != v.size())
        throw Error("invalid-state", "need matching particle counts, at least 2 per species");
    if (!(mass1 > 0.0) || !(mass2 > 0.0))
        throw Error("invalid-state", "species masses must be positive");
    require_ordered(u);
    require_ordered(v);
    ParticleState s;
    s.m_u = mass1 / static_cast<double>(u.size());
    s.m_v = mass2 / static_cast<double>(v.size());
    s.u = std::move(u);
    s.v = std::move(v);
    s.t = t;
    return s;
}

/// One piecewise-constant cell of the particle reconstruction.
struct Block {
    double left, right, height;
};

/// Reconstruction blocks: particle i occupies the cell between the midpoints
/// towards its neighbors with height 2m/(u_{i+1} - u_{i-1}); at the ends the
/// missing neighbor is mirrored, so every block carries mass m exactly.
inline std::vector<Block> particle_blocks(const std::vector<double>& pos, double m) {
    const std::size_t n = pos.size();
    std::vector<Block> blocks(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = (i == 0) ? 2.0 * pos[0] - pos[1] : pos[i - 1];
        const double hi = (i + 1 == n) ? 2.0 * pos[n - 1] - pos[n - 2] : pos[i + 1];
        blocks[i].left = 0.5 * (lo + pos[i]);
        blocks[i].right = 0.5 * (pos[i] + hi);
        blocks[i].height = 2.0 * m / (hi - lo);
    }
    return blocks;
}

} // namespace aggdiff
