#include "isle/mc.hpp"

#include <cmath>
#include <stdexcept>

namespace isle {

namespace {
const double kBondProb = 1.0 - std::exp(-2.0 * kBetaC);

double heat_bath_prob_plus(double local_field) {
    const double e = std::exp(kBetaC * local_field);
    return e / (e + 1.0 / e);
}
} // namespace

void glauber_sweep(ChainState& state, const GridDomain& d, const FaceSystem& sys) {
    auto& s = state.config.values;
    for (int f = 0; f < d.num_faces(); ++f) {
        double h = sys.field_sum[f];
        for (int g : sys.bond_nbrs[f]) h += s[g];
        s[f] = state.rng.uniform() < heat_bath_prob_plus(h) ? 1 : -1;
    }
    ++state.sweep_count;
}

void wolff_step(ChainState& state, const GridDomain& d, const FaceSystem& sys) {
    auto& s = state.config.values;
    const int n = d.num_faces();
    if (n == 0) return;

    const int seed_face = static_cast<int>(state.rng.below(static_cast<std::uint64_t>(n)));
    const std::int8_t sign = s[seed_face];

    std::vector<char> in_cluster(n, 0);
    std::vector<int> stack{seed_face}, cluster{seed_face};
    in_cluster[seed_face] = 1;
    bool frozen = false;

    while (!stack.empty()) {
        const int f = stack.back();
        stack.pop_back();
        for (int g : sys.bond_nbrs[f]) {
            if (in_cluster[g] || s[g] != sign) continue;
            if (state.rng.uniform() < kBondProb) {
                in_cluster[g] = 1;
                cluster.push_back(g);
                stack.push_back(g);
            }
        }
    }
    // ghost bonds: one per conditioned boundary element; a same-sign bond that
    // activates anchors the cluster to the boundary and the flip is rejected
    // (testing them after growth is equivalent, ghosts never propagate)
    for (int f : cluster) {
        if (frozen) break;
        for (std::int8_t fs : sys.field_terms[f]) {
            if (fs == sign && state.rng.uniform() < kBondProb) {
                frozen = true;
                break;
            }
        }
    }
    if (!frozen)
        for (int f : cluster) s[f] = static_cast<std::int8_t>(-sign);
}

void coupled_glauber_sweep(ChainState& s1, const GridDomain& d1, const FaceSystem& sys1,
                           ChainState& s2, const GridDomain& d2, const FaceSystem& sys2) {
    auto& v1 = s1.config.values;
    auto& v2 = s2.config.values;
    // shared scan order: sorted faces of the superset domain d2
    for (int f2 = 0; f2 < d2.num_faces(); ++f2) {
        const double u = s2.rng.uniform();
        const int f1 = d1.face_index(d2.faces[f2]);
        double h2 = sys2.field_sum[f2];
        for (int g : sys2.bond_nbrs[f2]) h2 += v2[g];
        v2[f2] = u < heat_bath_prob_plus(h2) ? 1 : -1;
        if (f1 >= 0) {
            double h1 = sys1.field_sum[f1];
            for (int g : sys1.bond_nbrs[f1]) h1 += v1[g];
            v1[f1] = u < heat_bath_prob_plus(h1) ? 1 : -1;
        }
    }
    ++s1.sweep_count;
    ++s2.sweep_count;
    for (int f1 = 0; f1 < d1.num_faces(); ++f1) {
        const int f2 = d2.face_index(d1.faces[f1]);
        if (v1[f1] < v2[f2])
            throw std::logic_error("monotone coupling violated: sigma1 < sigma2");
    }
}

std::vector<LatticeCurve> sample_interfaces(const GridDomain& d, const BoundarySpec& spec,
                                            int n, int burn_in_wolff, int thinning,
                                            std::uint64_t seed) {
    const FaceSystem sys = FaceSystem::compile(d, spec);
    ChainState state(d, seed);
    for (int k = 0; k < burn_in_wolff; ++k) wolff_step(state, d, sys);
    std::vector<LatticeCurve> out;
    out.reserve(static_cast<std::size_t>(std::max(n, 0)));
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < thinning; ++k) {
            wolff_step(state, d, sys);
            glauber_sweep(state, d, sys);
        }
        out.push_back(trace_leftmost(d, spec, state.config));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Vertex-model samplers

VertexChain::VertexChain(const VertexModel& m, std::uint64_t seed) : rng(seed) {
    spins.assign(static_cast<std::size_t>(m.graph.num_sites()), 1);
    for (int s = 0; s < m.graph.num_sites(); ++s)
        if (m.fixed[s] != 0) spins[s] = m.fixed[s];
}

void vertex_glauber_sweep(VertexChain& st, const VertexModel& m) {
    for (int s = 0; s < m.graph.num_sites(); ++s) {
        if (m.fixed[s] != 0) continue;
        double h = 0;
        for (int dd = 0; dd < 4; ++dd) {
            const int t = m.graph.neighbor(s, dd);
            if (t >= 0) h += st.spins[t];
        }
        st.spins[s] = st.rng.uniform() < heat_bath_prob_plus(h) ? 1 : -1;
    }
}

void vertex_wolff_step(VertexChain& st, const VertexModel& m) {
    const int n = m.graph.num_sites();
    const int seed_site = static_cast<int>(st.rng.below(static_cast<std::uint64_t>(n)));
    if (m.fixed[seed_site] != 0) return; // counts as a null move
    const std::int8_t sign = st.spins[seed_site];

    std::vector<char> in_cluster(n, 0);
    std::vector<int> stack{seed_site}, cluster{seed_site};
    in_cluster[seed_site] = 1;
    bool frozen = false;
    while (!stack.empty()) {
        const int s = stack.back();
        stack.pop_back();
        for (int dd = 0; dd < 4; ++dd) {
            const int t = m.graph.neighbor(s, dd);
            if (t < 0 || in_cluster[t] || st.spins[t] != sign) continue;
            if (st.rng.uniform() < kBondProb) {
                if (m.fixed[t] != 0) {
                    frozen = true;
                    continue;
                }
                in_cluster[t] = 1;
                cluster.push_back(t);
                stack.push_back(t);
            }
        }
    }
    if (!frozen)
        for (int s : cluster) st.spins[s] = static_cast<std::int8_t>(-sign);
}

} // namespace isle
