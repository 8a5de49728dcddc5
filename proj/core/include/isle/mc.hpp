#pragma once

#include "isle/geometry.hpp"
#include "isle/ising.hpp"
#include "isle/rng.hpp"

#include <cstdint>
#include <vector>

namespace isle {

// Markov chain state of the face model with conditioned boundary arcs.  The
// boundary enters only through field terms (no frozen ghost faces; the free
// arc simply carries no couplings).
struct ChainState {
    SpinConfig config;
    Rng rng;
    long sweep_count = 0;

    ChainState(const GridDomain& d, std::uint64_t seed)
        : rng(seed) {
        config.values.assign(static_cast<std::size_t>(d.num_faces()), 1);
    }
};

// One heat-bath sweep in fixed (sorted-face) scan order.
void glauber_sweep(ChainState& state, const GridDomain& d, const FaceSystem& sys);

// Single Wolff cluster update.  Bonds to conditioned boundary labels act as
// ghost bonds: a cluster touching one is frozen and the flip is rejected.
void wolff_step(ChainState& state, const GridDomain& d, const FaceSystem& sys);

// Monotone coupled sweep of two chains on nested domains d1 (subset) and d2
// sharing the free and minus arcs; the same uniforms drive shared faces.
// Throws on a pointwise-order violation (sigma1 >= sigma2 on d1).
void coupled_glauber_sweep(ChainState& s1, const GridDomain& d1, const FaceSystem& sys1,
                           ChainState& s2, const GridDomain& d2, const FaceSystem& sys2);

// n left-most interfaces from an equilibrated chain.  Deterministic in `seed`.
std::vector<LatticeCurve> sample_interfaces(const GridDomain& d, const BoundarySpec& spec,
                                            int n, int burn_in_wolff, int thinning,
                                            std::uint64_t seed);

// Generic sampler for a vertex model (spins on sites, fixed sites held).
// Used by the scaling experiments where enumeration is out of reach.
struct VertexChain {
    std::vector<std::int8_t> spins;
    Rng rng;
    VertexChain(const VertexModel& m, std::uint64_t seed);
};
void vertex_glauber_sweep(VertexChain& st, const VertexModel& m);
void vertex_wolff_step(VertexChain& st, const VertexModel& m);

} // namespace isle
