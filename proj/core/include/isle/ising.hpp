#pragma once

#include "isle/geometry.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace isle {

// Critical coupling of the square-lattice Ising model and the low-temperature
// contour weight alpha = exp(-2 beta_c) = tanh(beta_c).
inline const double kBetaC = 0.5 * std::log(std::sqrt(2.0) + 1.0);
inline const double kAlpha = std::sqrt(2.0) - 1.0;

inline constexpr std::uint64_t kDefaultEnumCap = 1ull << 24;

enum class ArcLabel : std::int8_t { Free = 0, Plus = 1, Minus = -1 };

// Boundary condition of the face model: a label per boundary-cycle edge.
struct BoundarySpec {
    std::vector<ArcLabel> edge_labels; // size = domain.boundary_len()

    // free on [r,l], - on [l,b], + on [b,r]  (counterclockwise arcs)
    static BoundarySpec dipolar(const GridDomain& d, const std::string& r = "r",
                                const std::string& l = "l", const std::string& b = "b");
    // free on [r,l], - on [l,x], + on [x,z], - on [z,r]
    static BoundarySpec modified(const GridDomain& d, int r, int l, int x, int z);
    static BoundarySpec dipolar_at(const GridDomain& d, int r, int l, int b);
    static BoundarySpec uniform(const GridDomain& d, ArcLabel lab);
};

struct SpinConfig {
    std::vector<std::int8_t> values; // per face index, +-1
};

// Pairwise interaction terms of H = -(sum_bonds s s' + sum_fields sign * s).
// One field term per +- boundary-cycle edge (a face adjacent to k conditioned
// edges contributes k terms).
struct FaceSystem {
    int n_faces = 0;
    std::vector<std::pair<int, int>> bonds;   // interior adjacent face pairs
    std::vector<std::pair<int, int>> fields;  // (face, +-1)
    std::vector<std::vector<int>> bond_nbrs;  // per face: adjacent faces
    std::vector<int> field_sum;               // per face: sum of field signs
    std::vector<std::vector<std::int8_t>> field_terms; // per face: one sign per element
    int pair_term_count() const {
        return static_cast<int>(bonds.size() + fields.size());
    }
    static FaceSystem compile(const GridDomain& d, const BoundarySpec& spec);
};

double hamiltonian_dipolar(const GridDomain& d, const BoundarySpec& spec, const SpinConfig& c);

double partition_function(const GridDomain& d, const BoundarySpec& spec,
                          std::uint64_t cap = kDefaultEnumCap);

// Phi_delta(Omega, r, l, x, z) = Ztilde / Z.  Marked points are boundary-walk
// indices; z must lie on the counterclockwise arc [x, r] (z == x gives 1).
double phi_delta(const GridDomain& d, int r, int l, int x, int z,
                 std::uint64_t cap = kDefaultEnumCap);
double phi_delta(const GridDomain& d, std::uint64_t cap = kDefaultEnumCap); // named r,l,x,z

// ---------------------------------------------------------------------------
// Low-temperature contours.

// Sum of alpha^{|w|} over subsets w of the domain edges not on the free arc,
// with even degree at every lattice vertex except odd degree at `odd`;
// vertices on the free arc (inclusive of its endpoints) are unconstrained.
double contour_sum(const GridDomain& d, const BoundarySpec& spec, const std::vector<IPt>& odd);

// ---------------------------------------------------------------------------
// Interface (left-most admissible) machinery.

// Deterministic left-most interface of a configuration: starts at marked b,
// has minus labels on its left and plus labels on its right, turns left first.
LatticeCurve trace_leftmost(const GridDomain& d, const BoundarySpec& spec, const SpinConfig& c,
                            const std::string& b = "b");
// Right-most variant (secondary tracer used in parity tests only).
LatticeCurve trace_rightmost(const GridDomain& d, const BoundarySpec& spec, const SpinConfig& c,
                             const std::string& b = "b");

// Exact law of the interface by enumeration: curve serialization -> probability.
std::map<std::string, double> interface_law(const GridDomain& d, const BoundarySpec& spec,
                                            const std::string& b = "b",
                                            std::uint64_t cap = kDefaultEnumCap);

struct StepDistribution {
    double p_left = 0.0, p_straight = 0.0, p_right = 0.0;
    bool terminated = false; // tip on the free arc, no continuation
};

// Conditional law of the next interface step given an admissible prefix.
StepDistribution interface_step_distribution(const GridDomain& d, const LatticeCurve& prefix,
                                             std::uint64_t cap = kDefaultEnumCap);

struct MartingaleReport {
    double max_deviation = 0.0;
    long states_checked = 0;
};

// Max one-step deviation |sum_dir P_dir Phi(next) - Phi(cur)| of Phi_delta over
// every reachable interface state, stopped at tau(z), for every z on [b,r].
// Runs in double or in __float128 ("f128") precision.
MartingaleReport check_discrete_martingale(const GridDomain& d, int r, int l, int b, int z,
                                           const std::string& precision = "f64");
MartingaleReport check_discrete_martingale_all_z(const GridDomain& d, int r, int l, int b,
                                                 const std::string& precision = "f64");

// ---------------------------------------------------------------------------
// Dual (vertex) Ising model: spins on lattice vertices, + condition on a set.

struct VertexModel {
    SiteGraph graph;
    std::vector<std::int8_t> fixed; // per site: 0 free, +-1 conditioned

    static VertexModel plus_free(const SiteGraph& g, const std::vector<int>& plus_sites);
};

// E[sigma_a] and E[sigma_a sigma_b] under the vertex Gibbs measure at beta_c.
// A conditioned site contributes its fixed value.
double vertex_magnetization(const VertexModel& m, int site, std::uint64_t cap = kDefaultEnumCap);
double vertex_correlation(const VertexModel& m, int s1, int s2,
                          std::uint64_t cap = kDefaultEnumCap);

// Vertex model on the lattice vertices of a face domain with + on [r,l] and
// free elsewhere (the Kramers-Wannier dual of the dipolar face model).
VertexModel dual_vertex_model(const GridDomain& d, int r, int l);

} // namespace isle
