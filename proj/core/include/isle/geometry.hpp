#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace isle {

using cplx = std::complex<double>;

struct IPt {
    int x = 0, y = 0;
    friend bool operator==(IPt a, IPt b) { return a.x == b.x && a.y == b.y; }
    friend bool operator!=(IPt a, IPt b) { return !(a == b); }
    friend bool operator<(IPt a, IPt b) { return a.y != b.y ? a.y < b.y : a.x < b.x; }
    IPt operator+(IPt o) const { return {x + o.x, y + o.y}; }
    IPt operator-(IPt o) const { return {x - o.x, y - o.y}; }
};

// Axis directions in counterclockwise order: E, N, W, S.
inline constexpr std::array<IPt, 4> kDirs{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
inline int dir_left(int d) { return (d + 1) & 3; }
inline int dir_right(int d) { return (d + 3) & 3; }
inline int dir_reverse(int d) { return (d + 2) & 3; }
inline int dir_index(IPt d) {
    for (int i = 0; i < 4; ++i)
        if (kDirs[i] == d) return i;
    throw std::invalid_argument("dir_index: not a unit axis step");
}

// A finite subgraph of the square lattice.  Used both for the graph of face
// centers of a face domain and for discrete vertex domains; `half_offset`
// records the embedding (a site s sits at physical half-coordinates
// 2*s + half_offset, one half-unit = mesh/2).
struct SiteGraph {
    std::vector<IPt> sites;                  // sorted, unique
    std::vector<std::pair<int, int>> edges;  // index pairs a<b, sorted
    IPt half_offset{0, 0};

    int site_index(IPt p) const;             // -1 if absent
    int edge_index(int a, int b) const;      // -1 if absent
    int neighbor(int s, int d) const { return nbr_[s][d]; }       // site or -1
    int edge_at(int s, int d) const { return edge_at_[s][d]; }    // edge or -1
    bool has_site(IPt p) const { return site_index(p) >= 0; }
    int num_sites() const { return static_cast<int>(sites.size()); }
    int num_edges() const { return static_cast<int>(edges.size()); }

    void finalize();                          // builds adjacency tables

    static SiteGraph rectangle(int nx, int ny, IPt origin = {0, 0}, IPt half_offset = {0, 0});
    // Subgraph spanned by a subset of this graph's edges (sites = endpoints).
    SiteGraph edge_subgraph(const std::vector<int>& edge_ids) const;

private:
    std::vector<std::array<int, 4>> nbr_;
    std::vector<std::array<int, 4>> edge_at_;
};

// A prime end: the side of an external edge (site, site+dir not an edge of
// the graph) seen from `site`.  An external lattice edge incident to two
// sites yields two distinct prime ends, which realizes the multiplicity
// convention for boundary medial vertices.
struct PrimeEnd {
    int site = -1;
    int dir = -1;
    friend bool operator==(PrimeEnd a, PrimeEnd b) { return a.site == b.site && a.dir == b.dir; }
};

// Counterclockwise outer boundary data of a connected SiteGraph.
struct BoundaryWalk {
    std::vector<PrimeEnd> prime_ends;   // ccw cyclic order
    std::vector<int> walk_sites;        // ccw closed site walk (repeats at pinches); may be empty for a single site
    // first position of each prime end's site in prime-end order
    int find_prime_end(int site, int dir) const;
    std::vector<int> prime_ends_at(int site) const;     // ccw positions
    int size() const { return static_cast<int>(prime_ends.size()); }
};

BoundaryWalk outer_boundary(const SiteGraph& g);

// ---------------------------------------------------------------------------
// Face domains (the Ising model of the main theorem lives on faces).

using Cell = IPt; // face identified by its lower-left lattice corner

struct LatticeCurve {
    std::vector<IPt> points; // lattice vertices, consecutive ones adjacent
    int steps() const { return points.empty() ? 0 : static_cast<int>(points.size()) - 1; }
    bool empty() const { return points.size() < 2; }
};

struct GridDomain {
    double mesh = 1.0;
    std::vector<Cell> faces;                 // sorted
    SiteGraph face_sites;                    // graph of face centers (offset {1,1})
    BoundaryWalk face_boundary;              // ccw prime ends of face_sites
    std::vector<IPt> boundary_vertices;      // ccw lattice-vertex walk; edge i = (v[i], v[i+1 mod n])
    std::map<std::string, int> marked;       // name -> index into boundary_vertices

    int num_faces() const { return static_cast<int>(faces.size()); }
    int boundary_len() const { return static_cast<int>(boundary_vertices.size()); }
    int face_index(Cell c) const { return face_sites.site_index(c); }
    IPt marked_vertex(const std::string& name) const;
    int marked_index(const std::string& name) const;

    // All lattice vertices/edges of the closure of the face set.
    SiteGraph vertex_graph() const;

    // Index of the boundary-cycle position of `v`, scanning ccw from `from`.
    std::optional<int> boundary_index_of(IPt v, int from = 0) const;
};

GridDomain build_rect_domain(int width_faces, int height_faces, double mesh,
                             const std::map<std::string, IPt>& marked);
GridDomain domain_from_faces(std::vector<Cell> faces, double mesh,
                             const std::map<std::string, IPt>& marked);

// Connected component of `domain` minus the faces swallowed by an interface
// prefix, per the asymmetric rule: faces sharing an edge or a vertex with the
// left side of curve[0..n-1] and faces sharing an edge with the right side of
// curve[0..n] are removed.  The component must contain the marked vertices
// named in `keep`; the curve tip is added as marked point `tip_name`.
GridDomain slit_domain(const GridDomain& domain, const LatticeCurve& curve,
                       const std::vector<std::string>& keep = {"r", "l", "z"},
                       const std::string& tip_name = "x");

// The set of faces removed by the rule above (exposed for tests), and the
// same set split by which bank of the curve swallowed each face.
std::vector<Cell> slit_removed_faces(const GridDomain& domain, const LatticeCurve& curve);

struct SlitSides {
    std::vector<Cell> left;  // absorbed by the minus side
    std::vector<Cell> right; // absorbed by the plus side
};
SlitSides slit_side_faces(const GridDomain& domain, const LatticeCurve& curve);

// ---------------------------------------------------------------------------
// Medial graph, edge lines and boundary normals.

struct MedialGraph {
    // vertex ids: [0, n_interior) midpoints of graph edges (edge order),
    // [n_interior, n_interior + n_boundary) prime ends (ccw order)
    int n_interior = 0;
    std::vector<IPt> pos_half;               // physical half-unit coordinates
    struct MEdge {
        int a = -1, b = -1;   // medial vertex ids
        int corner_site = -1; // the site whose quadrant the edge crosses
    };
    std::vector<MEdge> edges;
    std::vector<std::vector<int>> vert_edges; // incident medial edges per medial vertex

    std::vector<cplx> line_dir;   // per medial edge: unit direction of l(e)
    std::vector<cplx> nu_out;     // per boundary medial vertex (index - n_interior)

    double mesh = 1.0;

    int num_vertices() const { return static_cast<int>(pos_half.size()); }
    bool is_boundary(int v) const { return v >= n_interior; }
    int prime_end_index(int v) const { return v - n_interior; }
    cplx position(int v) const {
        return 0.5 * mesh * cplx(pos_half[v].x, pos_half[v].y);
    }
    cplx outward_normal(int v) const { return nu_out.at(v - n_interior); }
};

// Medial graph of a site graph (boundary medial vertices = prime ends).
MedialGraph medial_graph(const SiteGraph& g, const BoundaryWalk& bw, double mesh);

// Convenience for a face domain (sites are the face centers).
MedialGraph medial_geometry(const GridDomain& domain);

// Orthogonal projection of z onto the line through 0 with unit direction u.
inline cplx project_line(cplx u, cplx z) { return 0.5 * (z + u * u * std::conj(z)); }

// Principal square root branch used across the project:
// sqrt(r e^{i t}) = sqrt(r) e^{i t/2} with t in (-pi, pi].
cplx principal_sqrt(cplx z);

// ---------------------------------------------------------------------------
// Serialization (structured text, bit-exact round trip).

std::string serialize_domain(const GridDomain& d);
GridDomain parse_domain(const std::string& text);

std::string serialize_curve(const LatticeCurve& c);
LatticeCurve parse_curve(const std::string& text);

} // namespace isle
