#include "isle/ising.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#if defined(__GNUC__) && defined(__x86_64__)
#include <quadmath.h>
#define ISLE_HAVE_FLOAT128 1
#endif

namespace isle {

namespace {

int mod(int a, int n) { return ((a % n) + n) % n; }

// edge index e lies on the ccw arc of edges [a, b) (possibly empty when a==b)
bool edge_in_arc(int e, int a, int b, int n) {
    if (a == b) return false;
    return mod(e - a, n) < mod(b - a, n);
}

// vertex index v lies on the closed ccw vertex arc [a, b]
bool vertex_in_arc(int v, int a, int b, int n) { return mod(v - a, n) <= mod(b - a, n); }

template <class Real> Real beta_c();
template <> double beta_c<double>() { return kBetaC; }
#ifdef ISLE_HAVE_FLOAT128
template <> __float128 beta_c<__float128>() { return 0.5q * logq(sqrtq(2.0q) + 1.0q); }
#endif

template <class Real> Real exp_of(Real x);
template <> double exp_of<double>(double x) { return std::exp(x); }
#ifdef ISLE_HAVE_FLOAT128
template <> __float128 exp_of<__float128>(__float128 x) { return expq(x); }
#endif

} // namespace

// ---------------------------------------------------------------------------
// Boundary specs

namespace {
void paint_arc(std::vector<ArcLabel>& lab, int from, int to, ArcLabel value) {
    const int n = static_cast<int>(lab.size());
    for (int e = from; e != to; e = mod(e + 1, n)) lab[e] = value;
}
} // namespace

BoundarySpec BoundarySpec::dipolar(const GridDomain& d, const std::string& r,
                                   const std::string& l, const std::string& b) {
    return dipolar_at(d, d.marked_index(r), d.marked_index(l), d.marked_index(b));
}

BoundarySpec BoundarySpec::dipolar_at(const GridDomain& d, int r, int l, int b) {
    BoundarySpec s;
    s.edge_labels.assign(d.boundary_len(), ArcLabel::Free);
    paint_arc(s.edge_labels, r, l, ArcLabel::Free);
    paint_arc(s.edge_labels, l, b, ArcLabel::Minus);
    paint_arc(s.edge_labels, b, r, ArcLabel::Plus);
    return s;
}

BoundarySpec BoundarySpec::modified(const GridDomain& d, int r, int l, int x, int z) {
    const int n = d.boundary_len();
    if (!vertex_in_arc(z, x, r, n))
        throw std::invalid_argument("modified spec: z must lie on the ccw arc [x,r]");
    BoundarySpec s;
    s.edge_labels.assign(n, ArcLabel::Free);
    paint_arc(s.edge_labels, r, l, ArcLabel::Free);
    paint_arc(s.edge_labels, l, x, ArcLabel::Minus);
    paint_arc(s.edge_labels, x, z, ArcLabel::Plus);
    paint_arc(s.edge_labels, z, r, ArcLabel::Minus);
    return s;
}

BoundarySpec BoundarySpec::uniform(const GridDomain& d, ArcLabel lab) {
    BoundarySpec s;
    s.edge_labels.assign(d.boundary_len(), lab);
    return s;
}

FaceSystem FaceSystem::compile(const GridDomain& d, const BoundarySpec& spec) {
    if (static_cast<int>(spec.edge_labels.size()) != d.boundary_len())
        throw std::invalid_argument("boundary spec does not match the domain");
    FaceSystem sys;
    sys.n_faces = d.num_faces();
    sys.bonds = d.face_sites.edges;
    for (int e = 0; e < d.boundary_len(); ++e) {
        const ArcLabel lab = spec.edge_labels[e];
        if (lab == ArcLabel::Free) continue;
        const int face = d.face_boundary.prime_ends[e].site;
        sys.fields.emplace_back(face, lab == ArcLabel::Plus ? 1 : -1);
    }
    sys.bond_nbrs.assign(sys.n_faces, {});
    sys.field_sum.assign(sys.n_faces, 0);
    sys.field_terms.assign(sys.n_faces, {});
    for (auto [a, b] : sys.bonds) {
        sys.bond_nbrs[a].push_back(b);
        sys.bond_nbrs[b].push_back(a);
    }
    for (auto [f, s] : sys.fields) {
        sys.field_sum[f] += s;
        sys.field_terms[f].push_back(static_cast<std::int8_t>(s));
    }
    return sys;
}

double hamiltonian_dipolar(const GridDomain& d, const BoundarySpec& spec, const SpinConfig& c) {
    if (static_cast<int>(c.values.size()) != d.num_faces())
        throw std::invalid_argument("spin configuration does not cover the face set");
    const FaceSystem sys = FaceSystem::compile(d, spec);
    long h = 0;
    for (auto [a, b] : sys.bonds) h -= c.values[a] * c.values[b];
    for (auto [f, s] : sys.fields) h -= s * c.values[f];
    return static_cast<double>(h);
}

// ---------------------------------------------------------------------------
// Gray-code enumeration over face configurations.
//
// Visits all 2^n configurations; `visit(spins, h)` receives the current spins
// and the integer energy.  Deterministic order (Gray code), spins start all +1.

namespace {

template <class Visit>
void enumerate_faces(const FaceSystem& sys, std::uint64_t cap, Visit&& visit) {
    const int n = sys.n_faces;
    if (n > 62 || (n > 0 && (1ull << n) > cap))
        throw std::runtime_error(
            "enumeration cap exceeded; use the Monte Carlo module for this size");
    std::vector<std::int8_t> spins(n, 1);
    long h = 0;
    for (auto [a, b] : sys.bonds) h -= spins[a] * spins[b];
    for (auto [f, s] : sys.fields) h -= s * spins[f];
    visit(spins, h);
    const std::uint64_t total = n == 0 ? 1 : (1ull << n);
    for (std::uint64_t i = 1; i < total; ++i) {
        const int f = std::countr_zero(i);
        long local = sys.field_sum[f];
        for (int g : sys.bond_nbrs[f]) local += spins[g];
        h += 2 * spins[f] * local;
        spins[f] = static_cast<std::int8_t>(-spins[f]);
        visit(spins, h);
    }
}

// exp(-beta (h)) for integer h in [-P, P], via table lookup
template <class Real> struct BoltzmannTable {
    std::vector<Real> t;
    int P;
    explicit BoltzmannTable(int pair_terms) : P(pair_terms) {
        const Real b = beta_c<Real>();
        t.resize(2 * P + 1);
        for (int h = -P; h <= P; ++h) t[h + P] = exp_of<Real>(-b * Real(h));
    }
    Real operator()(long h) const { return t[static_cast<int>(h) + P]; }
};

} // namespace

double partition_function(const GridDomain& d, const BoundarySpec& spec, std::uint64_t cap) {
    const FaceSystem sys = FaceSystem::compile(d, spec);
    const BoltzmannTable<double> w(sys.pair_term_count());
    double z = 0.0;
    enumerate_faces(sys, cap, [&](const std::vector<std::int8_t>&, long h) { z += w(h); });
    return z;
}

double phi_delta(const GridDomain& d, int r, int l, int x, int z, std::uint64_t cap) {
    const int n = d.boundary_len();
    if (!vertex_in_arc(z, x, r, n))
        throw std::invalid_argument("phi_delta: z outside the martingale window [x,r]");
    if (z == x) return 1.0; // empty modification arc
    const double zt = partition_function(d, BoundarySpec::modified(d, r, l, x, z), cap);
    const double zz = partition_function(d, BoundarySpec::dipolar_at(d, r, l, x), cap);
    return zt / zz;
}

double phi_delta(const GridDomain& d, std::uint64_t cap) {
    return phi_delta(d, d.marked_index("r"), d.marked_index("l"), d.marked_index("x"),
                     d.marked_index("z"), cap);
}

// ---------------------------------------------------------------------------
// Low-temperature contours: GF(2) affine enumeration.

double contour_sum(const GridDomain& d, const BoundarySpec& spec, const std::vector<IPt>& odd) {
    // edge set E: lattice edges of the closure that are not free-arc boundary edges
    const SiteGraph vg = d.vertex_graph();
    std::vector<char> edge_ok(vg.num_edges(), 1);
    const int nb = d.boundary_len();
    for (int e = 0; e < nb; ++e) {
        if (spec.edge_labels[e] != ArcLabel::Free) continue;
        const IPt a = d.boundary_vertices[e];
        const IPt b = d.boundary_vertices[(e + 1) % nb];
        const int ei = vg.edge_index(vg.site_index(a), vg.site_index(b));
        if (ei >= 0) edge_ok[ei] = 0;
    }
    std::vector<int> eids;
    for (int e = 0; e < vg.num_edges(); ++e)
        if (edge_ok[e]) eids.push_back(e);
    const int ne = static_cast<int>(eids.size());
    if (ne > 62) throw std::runtime_error("contour_sum: edge set too large");

    // unconstrained vertices: those on the closed free arc(s)
    std::set<int> unconstrained;
    for (int e = 0; e < nb; ++e) {
        if (spec.edge_labels[e] != ArcLabel::Free) continue;
        unconstrained.insert(vg.site_index(d.boundary_vertices[e]));
        unconstrained.insert(vg.site_index(d.boundary_vertices[(e + 1) % nb]));
    }
    std::set<IPt> odd_set(odd.begin(), odd.end());

    // GF(2) system: rows = constrained vertices, columns = edges
    std::vector<std::uint64_t> rows;
    std::vector<int> rhs;
    for (int s = 0; s < vg.num_sites(); ++s) {
        if (unconstrained.count(s)) continue;
        std::uint64_t row = 0;
        for (int k = 0; k < ne; ++k) {
            const auto [a, b] = vg.edges[eids[k]];
            if (a == s || b == s) row |= 1ull << k;
        }
        if (row == 0 && !odd_set.count(vg.sites[s])) continue;
        rows.push_back(row);
        rhs.push_back(odd_set.count(vg.sites[s]) ? 1 : 0);
    }

    // Gaussian elimination
    std::vector<std::uint64_t> basis; // reduced rows with leading bits
    std::vector<int> lead;
    std::uint64_t particular = 0;
    {
        std::vector<std::uint64_t> mat = rows;
        std::vector<int> b = rhs;
        std::vector<int> pivot_col;
        std::vector<std::uint64_t> red;
        std::vector<int> redb;
        for (std::size_t i = 0; i < mat.size(); ++i) {
            std::uint64_t r = mat[i];
            int v = b[i];
            for (std::size_t j = 0; j < red.size(); ++j)
                if (r >> pivot_col[j] & 1) {
                    r ^= red[j];
                    v ^= redb[j];
                }
            if (r == 0) {
                if (v != 0) return 0.0; // inconsistent: empty contour class
                continue;
            }
            pivot_col.push_back(std::countr_zero(r));
            red.push_back(r);
            redb.push_back(v);
        }
        // back substitution for a particular solution
        for (std::size_t j = red.size(); j-- > 0;) {
            int v = redb[j];
            std::uint64_t r = red[j];
            const int pc = pivot_col[j];
            for (int k = 0; k < ne; ++k)
                if (k != pc && (r >> k & 1) && (particular >> k & 1)) v ^= 1;
            if (v) particular |= 1ull << pc;
        }
        // nullspace basis: free columns
        std::vector<char> is_pivot(ne, 0);
        for (int pc : pivot_col) is_pivot[pc] = 1;
        for (int k = 0; k < ne; ++k) {
            if (is_pivot[k]) continue;
            std::uint64_t vec = 1ull << k;
            // solve for pivot coordinates
            for (std::size_t j = red.size(); j-- > 0;) {
                const int pc = pivot_col[j];
                int par = 0;
                for (int c = 0; c < ne; ++c)
                    if (c != pc && (red[j] >> c & 1) && (vec >> c & 1)) par ^= 1;
                if (par) vec |= 1ull << pc;
            }
            basis.push_back(vec);
            lead.push_back(k);
        }
    }

    const int dim = static_cast<int>(basis.size());
    if (dim > 40) throw std::runtime_error("contour_sum: nullspace too large to enumerate");
    std::vector<double> alpha_pow(ne + 1, 1.0);
    for (int k = 1; k <= ne; ++k) alpha_pow[k] = alpha_pow[k - 1] * kAlpha;

    double sum = 0.0;
    std::uint64_t cur = particular;
    sum += alpha_pow[std::popcount(cur)];
    for (std::uint64_t i = 1; i < (1ull << dim); ++i) {
        cur ^= basis[std::countr_zero(i)];
        sum += alpha_pow[std::popcount(cur)];
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Interface tracing.

namespace {

Cell cell_left_of(IPt u, IPt dstep) {
    const IPt l{-dstep.y, dstep.x};
    const IPt v = u + dstep;
    return {std::min({u.x, v.x, u.x + l.x, v.x + l.x}), std::min({u.y, v.y, u.y + l.y, v.y + l.y})};
}
Cell cell_right_of(IPt u, IPt dstep) {
    const IPt r{dstep.y, -dstep.x};
    const IPt v = u + dstep;
    return {std::min({u.x, v.x, u.x + r.x, v.x + r.x}), std::min({u.y, v.y, u.y + r.y, v.y + r.y})};
}

// Side value of a directed lattice edge: spin of the adjacent face, or the
// boundary label of the corresponding boundary element, or nullopt for the
// free arc / outside.
struct SideEval {
    const GridDomain& d;
    const BoundarySpec& spec;
    const SpinConfig* spins; // may be null (labels only)
    std::map<std::pair<IPt, IPt>, int> element; // directed boundary edge -> index

    SideEval(const GridDomain& dom, const BoundarySpec& sp, const SpinConfig* c)
        : d(dom), spec(sp), spins(c) {
        const int n = d.boundary_len();
        for (int i = 0; i < n; ++i)
            element[{d.boundary_vertices[i], d.boundary_vertices[(i + 1) % n]}] = i;
    }

    // label on the left of u -> u+dstep; +1/-1, or 0 for free/undefined
    int left_label(IPt u, IPt dstep) const {
        const Cell c = cell_left_of(u, dstep);
        const int fi = d.face_index(c);
        if (fi >= 0) return spins ? (*spins).values[fi] : 2; // 2 = live spin marker
        // outside on the left: boundary element traverses v -> u
        auto it = element.find({u + dstep, u});
        if (it == element.end()) return 0;
        const ArcLabel lab = spec.edge_labels[it->second];
        return lab == ArcLabel::Free ? 0 : static_cast<int>(lab);
    }
    int right_label(IPt u, IPt dstep) const {
        const Cell c = cell_right_of(u, dstep);
        const int fi = d.face_index(c);
        if (fi >= 0) return spins ? (*spins).values[fi] : 2;
        auto it = element.find({u, u + dstep});
        if (it == element.end()) return 0;
        const ArcLabel lab = spec.edge_labels[it->second];
        return lab == ArcLabel::Free ? 0 : static_cast<int>(lab);
    }
};

std::pair<int, int> dipolar_free_arc(const GridDomain& d) {
    return {d.marked_index("r"), d.marked_index("l")};
}

LatticeCurve trace_interface(const GridDomain& d, const BoundarySpec& spec, const SpinConfig& c,
                             const std::string& b, bool leftmost) {
    const SideEval side(d, spec, &c);
    const auto [r_idx, l_idx] = dipolar_free_arc(d);
    const int n = d.boundary_len();

    std::set<IPt> free_verts;
    for (int i = r_idx; i != (l_idx + 1) % n; i = (i + 1) % n)
        free_verts.insert(d.boundary_vertices[i]);

    const int b_idx = d.marked_index(b);
    IPt cur = d.boundary_vertices[b_idx];
    // virtual arrival along the inward normal: the left-turn candidate then
    // hugs the minus arc, matching the left-most convention at the root
    IPt in_dir = kDirs[dir_left(dir_index(cur - d.boundary_vertices[mod(b_idx - 1, n)]))];

    LatticeCurve curve;
    curve.points.push_back(cur);
    const int max_steps = 8 * (d.num_faces() + d.boundary_len());
    for (int step = 0; step < max_steps; ++step) {
        if (free_verts.count(cur)) return curve; // reached the free arc
        const int din = dir_index(in_dir);
        const int order[3] = {dir_left(din), din, dir_right(din)};
        bool moved = false;
        for (int k = 0; k < 3; ++k) {
            const int dd = leftmost ? order[k] : order[2 - k];
            const IPt dv = kDirs[dd];
            if (side.left_label(cur, dv) == -1 && side.right_label(cur, dv) == 1) {
                cur = cur + dv;
                in_dir = dv;
                curve.points.push_back(cur);
                moved = true;
                break;
            }
        }
        if (!moved) throw std::logic_error("trace_interface: no admissible continuation");
    }
    throw std::logic_error("trace_interface: did not terminate");
}

} // namespace

LatticeCurve trace_leftmost(const GridDomain& d, const BoundarySpec& spec, const SpinConfig& c,
                            const std::string& b) {
    return trace_interface(d, spec, c, b, true);
}

LatticeCurve trace_rightmost(const GridDomain& d, const BoundarySpec& spec, const SpinConfig& c,
                             const std::string& b) {
    return trace_interface(d, spec, c, b, false);
}

std::map<std::string, double> interface_law(const GridDomain& d, const BoundarySpec& spec,
                                            const std::string& b, std::uint64_t cap) {
    const FaceSystem sys = FaceSystem::compile(d, spec);
    const BoltzmannTable<double> w(sys.pair_term_count());
    std::map<std::string, double> law;
    double z = 0.0;
    enumerate_faces(sys, cap, [&](const std::vector<std::int8_t>& spins, long h) {
        SpinConfig c;
        c.values.assign(spins.begin(), spins.end());
        const LatticeCurve curve = trace_leftmost(d, spec, c, b);
        const double weight = w(h);
        law[serialize_curve(curve)] += weight;
        z += weight;
    });
    for (auto& [k, v] : law) v /= z;
    return law;
}

// ---------------------------------------------------------------------------
// Interface states and the discrete martingale check.

namespace {

struct InterfaceState {
    GridDomain dom;   // slit domain with marked r, l and tip x
    IPt tip;
    int in_dir = -1;  // direction of the arriving step
    bool terminated = false;
};

// Boundary-hugging steps can swallow the cell carrying the tip, detaching it
// from the kept component; parity then forces the next step with probability
// one.  Extends the prefix until the tip is attached again (or terminates).
LatticeCurve settle_forced(const GridDomain& d0, LatticeCurve prefix) {
    if (prefix.empty()) return prefix;
    const int n0 = d0.boundary_len();
    const auto [r0, l0] = dipolar_free_arc(d0);
    std::set<IPt> free_verts;
    for (int i = r0; i != (l0 + 1) % n0; i = (i + 1) % n0)
        free_verts.insert(d0.boundary_vertices[i]);
    const BoundarySpec base = BoundarySpec::dipolar(d0);
    const SideEval side0(d0, base, nullptr);

    const int guard_max = 8 * (d0.num_faces() + n0);
    for (int guard = 0; guard < guard_max; ++guard) {
        const IPt tip = prefix.points.back();
        if (free_verts.count(tip)) return prefix;
        const SlitSides sides = slit_side_faces(d0, prefix);
        const std::set<Cell> remL(sides.left.begin(), sides.left.end());
        const std::set<Cell> remR(sides.right.begin(), sides.right.end());
        auto kept = [&](Cell c) {
            return d0.face_index(c) >= 0 && !remL.count(c) && !remR.count(c);
        };
        const Cell corner_cells[4] = {{tip.x, tip.y},
                                      {tip.x - 1, tip.y},
                                      {tip.x - 1, tip.y - 1},
                                      {tip.x, tip.y - 1}};
        bool attached = false;
        for (const Cell& c : corner_cells) attached |= kept(c);
        if (attached) return prefix;

        // every neighboring cell is conditioned: exactly one continuation
        // separates a minus side (left) from a plus side (right)
        auto label_of = [&](Cell c, int fallback_lab) {
            if (d0.face_index(c) >= 0) return remR.count(c) ? 1 : -1; // right wins ties
            return fallback_lab;
        };
        const int din = dir_index(tip - prefix.points[prefix.points.size() - 2]);
        const int order[3] = {dir_left(din), din, dir_right(din)};
        bool moved = false;
        for (int dd : order) {
            const IPt dv = kDirs[dd];
            const int ll = label_of(cell_left_of(tip, dv), side0.left_label(tip, dv));
            const int rr = label_of(cell_right_of(tip, dv), side0.right_label(tip, dv));
            if (ll == -1 && rr == 1) {
                prefix.points.push_back(tip + dv);
                moved = true;
                break;
            }
        }
        if (!moved) throw std::logic_error("settle_forced: detached tip with no forced step");
    }
    throw std::logic_error("settle_forced: did not settle");
}

InterfaceState make_state(const GridDomain& d0, const LatticeCurve& prefix_in) {
    const LatticeCurve prefix = settle_forced(d0, prefix_in);
    InterfaceState st;
    const int n0 = d0.boundary_len();
    const auto [r0, l0] = dipolar_free_arc(d0);
    std::set<IPt> free_verts;
    for (int i = r0; i != (l0 + 1) % n0; i = (i + 1) % n0)
        free_verts.insert(d0.boundary_vertices[i]);

    if (prefix.empty()) {
        st.dom = d0;
        st.dom.marked["x"] = d0.marked_index("b");
        const int b_idx = d0.marked_index("b");
        st.tip = d0.boundary_vertices[b_idx];
        st.in_dir =
            dir_left(dir_index(st.tip - d0.boundary_vertices[mod(b_idx - 1, n0)]));
        st.terminated = false;
        return st;
    }
    st.tip = prefix.points.back();
    st.in_dir = dir_index(prefix.points.back() - prefix.points[prefix.points.size() - 2]);
    st.terminated = free_verts.count(st.tip) > 0;
    if (!st.terminated) {
        st.dom = slit_domain(d0, prefix, {"r", "l"}, "x");
    } else {
        // the landing splits the domain along the free arc; the stopped value
        // lives on the component containing r, whose minus arc is empty
        st.dom = slit_domain(d0, prefix, {"r"}, "x");
        st.dom.marked["l"] = st.dom.marked.at("x");
    }
    return st;
}

// One Gray pass over the state's configurations.  Returns Z, the tip split
// Z_L/Z_S/Z_R, and Ztilde plus its split for every gap position along (x, r].
template <class Real> struct StateSums {
    Real z = 0;
    Real zdir[3] = {0, 0, 0};            // L, S, R
    std::vector<int> gap_index;          // boundary-walk index per gap
    std::vector<Real> ztilde;            // per gap
    std::vector<std::array<Real, 3>> ztilde_dir;
};

template <class Real>
StateSums<Real> state_enumerate(const InterfaceState& st, std::uint64_t cap) {
    const GridDomain& d = st.dom;
    const int n = d.boundary_len();
    const int r_idx = d.marked_index("r");
    const int x_idx = d.marked_index("x");
    const BoundarySpec spec = BoundarySpec::dipolar_at(d, r_idx, d.marked_index("l"), x_idx);
    const FaceSystem sys = FaceSystem::compile(d, spec);
    const BoltzmannTable<Real> w(sys.pair_term_count());

    // faces of the + arc [x,r] in ccw edge order (for the suffix sums of Ztilde)
    std::vector<int> arc_faces;
    for (int e = x_idx; e != r_idx; e = mod(e + 1, n))
        arc_faces.push_back(d.face_boundary.prime_ends[e].site);
    const int arc_len = static_cast<int>(arc_faces.size());

    StateSums<Real> out;
    for (int j = 1; j <= arc_len; ++j) out.gap_index.push_back(mod(x_idx + j, n));
    out.ztilde.assign(arc_len, Real(0));
    out.ztilde_dir.assign(arc_len, {Real(0), Real(0), Real(0)});

    // Ztilde(z at gap j) re-labels arc edges j..arc_len-1 from + to -:
    // H~ = H + 2 * suffix_j with suffix_j the spin sum of arc faces j..end.
    std::vector<Real> flip_pow(2 * arc_len + 1);
    for (int s = -arc_len; s <= arc_len; ++s)
        flip_pow[s + arc_len] = exp_of<Real>(Real(-2) * beta_c<Real>() * Real(s));

    // tip continuation edges (contour membership conditions)
    const int din = st.in_dir;
    const IPt tip = st.tip;
    const SideEval side(d, spec, nullptr);
    struct Cand {
        IPt dv;
        int lf = -1, rf = -1;   // adjacent face indices, -1 if outside
        int llab = 0, rlab = 0; // boundary labels when outside (0 = free/undefined)
        bool possible = false;
    };
    Cand cand[3];
    const int dirs[3] = {dir_left(din), din, dir_right(din)};
    for (int k = 0; k < 3; ++k) {
        Cand& c = cand[k];
        c.dv = kDirs[dirs[k]];
        c.lf = d.face_index(cell_left_of(tip, c.dv));
        c.rf = d.face_index(cell_right_of(tip, c.dv));
        if (c.lf < 0) c.llab = side.left_label(tip, c.dv);
        if (c.rf < 0) c.rlab = side.right_label(tip, c.dv);
        const bool l_def = c.lf >= 0 || c.llab != 0;
        const bool r_def = c.rf >= 0 || c.rlab != 0;
        c.possible = l_def && r_def && (c.lf >= 0 || c.rf >= 0);
    }
    auto in_contour = [&](const Cand& c, const std::vector<std::int8_t>& spins) {
        if (!c.possible) return false;
        const int lv = c.lf >= 0 ? spins[c.lf] : c.llab;
        const int rv = c.rf >= 0 ? spins[c.rf] : c.rlab;
        return lv != rv;
    };

    std::vector<Real> suffix_w(arc_len);
    enumerate_faces(sys, cap, [&](const std::vector<std::int8_t>& spins, long h) {
        const Real weight = w(h);
        out.z += weight;
        int which = -1;
        if (in_contour(cand[0], spins))
            which = 0;
        else if (in_contour(cand[1], spins))
            which = 1;
        else if (in_contour(cand[2], spins))
            which = 2;
        if (which >= 0) out.zdir[which] += weight;
        int suffix = 0;
        for (int j = arc_len; j-- > 0;) {
            suffix += spins[arc_faces[j]];
            const Real tw = weight * flip_pow[suffix + arc_len];
            out.ztilde[j] += tw;
            if (which >= 0) out.ztilde_dir[j][which] += tw;
        }
    });
    return out;
}

// The contour classes at the tip partition both Z and Ztilde, so a state's
// conditional ratios equal the child values via the slit bijection.  Live
// children are re-enumerated independently (which is what the check tests);
// stopped children keep the parent's conditional ratio (the process is frozen
// at tau(z), nothing is asserted beyond it).
template <class Real>
void martingale_dfs(const GridDomain& d0, const InterfaceState& st, const LatticeCurve& prefix,
                    const std::vector<IPt>& zs, const std::vector<char>& live,
                    std::map<std::string, StateSums<Real>>* memo, MartingaleReport& rep,
                    std::vector<Real>& phi_out, std::vector<char>& phi_defined) {
    const std::string key = serialize_domain(st.dom) + "|" + std::to_string(st.tip.x) + "," +
                            std::to_string(st.tip.y) + "," + std::to_string(st.in_dir);
    auto it = memo->find(key);
    if (it == memo->end())
        it = memo->emplace(key, state_enumerate<Real>(st, kDefaultEnumCap)).first;
    const StateSums<Real>& sums = it->second;

    auto gap_of = [&](IPt z) -> int {
        for (std::size_t j = 0; j < sums.gap_index.size(); ++j)
            if (st.dom.boundary_vertices[sums.gap_index[j]] == z) return static_cast<int>(j);
        return -1;
    };

    phi_out.assign(zs.size(), Real(0));
    phi_defined.assign(zs.size(), 0);
    for (std::size_t zi = 0; zi < zs.size(); ++zi) {
        const int j = gap_of(zs[zi]);
        if (j >= 0) {
            phi_out[zi] = sums.ztilde[j] / sums.z;
            phi_defined[zi] = 1;
        }
    }
    if (st.terminated) return;

    const int n0 = d0.boundary_len();
    const int l0 = d0.marked_index("l");
    const Real probs[3] = {sums.zdir[0] / sums.z, sums.zdir[1] / sums.z, sums.zdir[2] / sums.z};

    // children and their liveness
    std::vector<std::vector<Real>> child_phi(3);
    std::vector<std::vector<char>> child_def(3);
    std::vector<std::vector<char>> child_live(3);
    for (int k = 0; k < 3; ++k) {
        if (!(probs[k] > Real(0))) continue;
        const int dd = k == 0 ? dir_left(st.in_dir) : (k == 1 ? st.in_dir : dir_right(st.in_dir));

        LatticeCurve next = prefix;
        if (next.points.empty()) next.points.push_back(st.tip);
        const std::size_t old_len = next.points.size();
        next.points.push_back(st.tip + kDirs[dd]);
        next = settle_forced(d0, next); // probability-one extensions

        child_live[k].assign(zs.size(), 0);
        bool any_live = false;
        for (std::size_t zi = 0; zi < zs.size(); ++zi) {
            if (!live[zi]) continue;
            bool stopped = false;
            const int z_idx = *d0.boundary_index_of(zs[zi]);
            for (std::size_t j = old_len; j < next.points.size() && !stopped; ++j) {
                if (auto ci = d0.boundary_index_of(next.points[j]))
                    stopped = vertex_in_arc(*ci, z_idx, l0, n0);
            }
            child_live[k][zi] = stopped ? 0 : 1;
            any_live |= !stopped;
        }
        if (!any_live) continue;

        const InterfaceState child = make_state(d0, next);
        martingale_dfs(d0, child, next, zs, child_live[k], memo, rep, child_phi[k],
                       child_def[k]);
    }

    for (std::size_t zi = 0; zi < zs.size(); ++zi) {
        if (!live[zi] || !phi_defined[zi]) continue;
        const int j = gap_of(zs[zi]);
        Real acc = 0;
        bool complete = true;
        for (int k = 0; k < 3; ++k) {
            if (!(probs[k] > Real(0))) continue;
            if (!child_live[k].empty() && child_live[k][zi] && !child_phi[k].empty() &&
                child_def[k][zi]) {
                acc += probs[k] * child_phi[k][zi];
            } else {
                // stopped branch: value at tau from the parent's conditional split
                if (sums.zdir[k] > Real(0))
                    acc += probs[k] * (sums.ztilde_dir[j][k] / sums.zdir[k]);
                else
                    complete = false;
            }
        }
        if (!complete) continue;
        const double devd = std::abs(static_cast<double>(acc - phi_out[zi]));
        if (devd > rep.max_deviation) rep.max_deviation = devd;
        ++rep.states_checked;
    }
}

template <class Real>
MartingaleReport run_martingale(const GridDomain& d, int r, int l, int b,
                                const std::vector<IPt>& zs) {
    GridDomain d0 = d;
    d0.marked.clear();
    d0.marked["r"] = r;
    d0.marked["l"] = l;
    d0.marked["b"] = b;
    MartingaleReport rep;
    std::map<std::string, StateSums<Real>> memo;
    const InterfaceState root = make_state(d0, LatticeCurve{});
    std::vector<char> live(zs.size(), 1);
    std::vector<Real> phi0;
    std::vector<char> def0;
    martingale_dfs<Real>(d0, root, LatticeCurve{}, zs, live, &memo, rep, phi0, def0);
    return rep;
}

std::vector<IPt> z_candidates(const GridDomain& d, int r, int b) {
    // z strictly inside the ccw arc (b, r): the martingale window
    std::vector<IPt> zs;
    const int n = d.boundary_len();
    for (int i = mod(b + 1, n); i != r; i = mod(i + 1, n)) zs.push_back(d.boundary_vertices[i]);
    return zs;
}

} // namespace

StepDistribution interface_step_distribution(const GridDomain& d, const LatticeCurve& prefix,
                                             std::uint64_t cap) {
    StepDistribution out;
    if (!prefix.empty()) {
        // a detached tip has a unique parity-forced continuation
        const LatticeCurve settled = settle_forced(d, prefix);
        if (settled.points.size() > prefix.points.size()) {
            const IPt tip = prefix.points.back();
            const IPt forced = settled.points[prefix.points.size()] - tip;
            const int din =
                dir_index(tip - prefix.points[prefix.points.size() - 2]);
            if (kDirs[dir_left(din)] == forced)
                out.p_left = 1.0;
            else if (kDirs[din] == forced)
                out.p_straight = 1.0;
            else
                out.p_right = 1.0;
            return out;
        }
    }
    const InterfaceState st = make_state(d, prefix);
    if (st.terminated) {
        out.terminated = true;
        return out;
    }
    const auto sums = state_enumerate<double>(st, cap);
    out.p_left = sums.zdir[0] / sums.z;
    out.p_straight = sums.zdir[1] / sums.z;
    out.p_right = sums.zdir[2] / sums.z;
    return out;
}

MartingaleReport check_discrete_martingale(const GridDomain& d, int r, int l, int b, int z,
                                           const std::string& precision) {
    const std::vector<IPt> zs{d.boundary_vertices[z]};
#ifdef ISLE_HAVE_FLOAT128
    if (precision == "f128") return run_martingale<__float128>(d, r, l, b, zs);
#endif
    return run_martingale<double>(d, r, l, b, zs);
}

MartingaleReport check_discrete_martingale_all_z(const GridDomain& d, int r, int l, int b,
                                                 const std::string& precision) {
    const std::vector<IPt> zs = z_candidates(d, r, b);
    if (zs.empty()) return {};
#ifdef ISLE_HAVE_FLOAT128
    if (precision == "f128") return run_martingale<__float128>(d, r, l, b, zs);
#endif
    return run_martingale<double>(d, r, l, b, zs);
}

// ---------------------------------------------------------------------------
// Dual (vertex) Ising model.

VertexModel VertexModel::plus_free(const SiteGraph& g, const std::vector<int>& plus_sites) {
    VertexModel m;
    m.graph = g;
    m.fixed.assign(g.num_sites(), 0);
    for (int s : plus_sites) m.fixed.at(s) = 1;
    return m;
}

namespace {

template <class Acc>
void enumerate_vertex(const VertexModel& m, std::uint64_t cap, Acc&& acc) {
    const SiteGraph& g = m.graph;
    std::vector<int> free_sites;
    for (int s = 0; s < g.num_sites(); ++s)
        if (m.fixed[s] == 0) free_sites.push_back(s);
    const int n = static_cast<int>(free_sites.size());
    if (n > 62 || (1ull << n) > cap)
        throw std::runtime_error("vertex enumeration cap exceeded");

    std::vector<std::int8_t> spins(g.num_sites(), 1);
    for (int s = 0; s < g.num_sites(); ++s)
        if (m.fixed[s] != 0) spins[s] = m.fixed[s];

    long h = 0;
    for (auto [a, b] : g.edges) h -= spins[a] * spins[b];
    const int P = g.num_edges();
    std::vector<double> table(2 * P + 1);
    for (int k = -P; k <= P; ++k) table[k + P] = std::exp(-kBetaC * k);

    acc(spins, table[h + P]);
    const std::uint64_t total = n == 0 ? 1 : (1ull << n);
    for (std::uint64_t i = 1; i < total; ++i) {
        const int f = free_sites[std::countr_zero(i)];
        long local = 0;
        for (int dd = 0; dd < 4; ++dd) {
            const int t = g.neighbor(f, dd);
            if (t >= 0) local += spins[t];
        }
        h += 2 * spins[f] * local;
        spins[f] = static_cast<std::int8_t>(-spins[f]);
        acc(spins, table[h + P]);
    }
}

} // namespace

double vertex_magnetization(const VertexModel& m, int site, std::uint64_t cap) {
    double num = 0.0, den = 0.0;
    enumerate_vertex(m, cap, [&](const std::vector<std::int8_t>& s, double w) {
        num += w * s[site];
        den += w;
    });
    return num / den;
}

double vertex_correlation(const VertexModel& m, int s1, int s2, std::uint64_t cap) {
    double num = 0.0, den = 0.0;
    enumerate_vertex(m, cap, [&](const std::vector<std::int8_t>& s, double w) {
        num += w * s[s1] * s[s2];
        den += w;
    });
    return num / den;
}

VertexModel dual_vertex_model(const GridDomain& d, int r, int l) {
    const SiteGraph vg = d.vertex_graph();
    const int n = d.boundary_len();
    std::vector<int> plus;
    for (int i = r; i != (l + 1) % n; i = (i + 1) % n)
        plus.push_back(vg.site_index(d.boundary_vertices[i]));
    return VertexModel::plus_free(vg, plus);
}

} // namespace isle
