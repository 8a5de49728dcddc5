#include "isle/geometry.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace isle {

// ---------------------------------------------------------------------------
// SiteGraph

int SiteGraph::site_index(IPt p) const {
    auto it = std::lower_bound(sites.begin(), sites.end(), p);
    if (it == sites.end() || !(*it == p)) return -1;
    return static_cast<int>(it - sites.begin());
}

int SiteGraph::edge_index(int a, int b) const {
    if (a > b) std::swap(a, b);
    auto it = std::lower_bound(edges.begin(), edges.end(), std::make_pair(a, b));
    if (it == edges.end() || *it != std::make_pair(a, b)) return -1;
    return static_cast<int>(it - edges.begin());
}

void SiteGraph::finalize() {
    std::sort(sites.begin(), sites.end());
    sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
    for (auto& [a, b] : edges)
        if (a > b) std::swap(a, b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    nbr_.assign(sites.size(), {-1, -1, -1, -1});
    edge_at_.assign(sites.size(), {-1, -1, -1, -1});
    for (int e = 0; e < num_edges(); ++e) {
        const auto [a, b] = edges[e];
        const IPt d = sites[b] - sites[a];
        const int da = dir_index(d);
        nbr_[a][da] = b;
        edge_at_[a][da] = e;
        nbr_[b][dir_reverse(da)] = a;
        edge_at_[b][dir_reverse(da)] = e;
    }
}

SiteGraph SiteGraph::rectangle(int nx, int ny, IPt origin, IPt half_offset) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("rectangle: need at least 1x1 sites");
    SiteGraph g;
    g.half_offset = half_offset;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) g.sites.push_back(origin + IPt{i, j});
    std::sort(g.sites.begin(), g.sites.end());
    for (int s = 0; s < static_cast<int>(g.sites.size()); ++s) {
        for (int d : {0, 1}) { // E, N only; the mirror pair comes from the other endpoint
            const int t = [&] {
                IPt q = g.sites[s] + kDirs[d];
                auto it = std::lower_bound(g.sites.begin(), g.sites.end(), q);
                return (it != g.sites.end() && *it == q) ? static_cast<int>(it - g.sites.begin())
                                                         : -1;
            }();
            if (t >= 0) g.edges.push_back({std::min(s, t), std::max(s, t)});
        }
    }
    g.finalize();
    return g;
}

SiteGraph SiteGraph::edge_subgraph(const std::vector<int>& edge_ids) const {
    SiteGraph g;
    g.half_offset = half_offset;
    std::set<IPt> vs;
    std::vector<std::pair<IPt, IPt>> es;
    for (int e : edge_ids) {
        const auto [a, b] = edges.at(e);
        vs.insert(sites[a]);
        vs.insert(sites[b]);
        es.emplace_back(sites[a], sites[b]);
    }
    g.sites.assign(vs.begin(), vs.end());
    for (auto& [pa, pb] : es) {
        int a = g.site_index(pa), b = g.site_index(pb);
        g.edges.push_back({std::min(a, b), std::max(a, b)});
    }
    g.finalize();
    return g;
}

// ---------------------------------------------------------------------------
// Outer boundary walk.  Counterclockwise traversal with the domain on the
// left; prime ends are collected while scanning between consecutive walk
// edges, which yields them in prime-end (ccw) order.

int BoundaryWalk::find_prime_end(int site, int dir) const {
    for (int i = 0; i < size(); ++i)
        if (prime_ends[i].site == site && prime_ends[i].dir == dir) return i;
    return -1;
}

std::vector<int> BoundaryWalk::prime_ends_at(int site) const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
        if (prime_ends[i].site == site) out.push_back(i);
    return out;
}

BoundaryWalk outer_boundary(const SiteGraph& g) {
    BoundaryWalk bw;
    if (g.num_sites() == 0) return bw;
    if (g.num_edges() == 0) {
        if (g.num_sites() != 1)
            throw std::invalid_argument("outer_boundary: disconnected site graph");
        for (int d = 0; d < 4; ++d) bw.prime_ends.push_back({0, d});
        bw.walk_sites = {0};
        return bw;
    }

    const int v0 = 0; // sites are sorted by (y,x): bottom-most then left-most
    int d0 = g.edge_at(v0, 0) >= 0 ? 0 : 1;
    if (g.edge_at(v0, d0) < 0) throw std::invalid_argument("outer_boundary: dangling start");

    // walk of directed edges (site, out-dir)
    std::vector<std::pair<int, int>> walk;
    int s = v0, d = d0;
    do {
        walk.emplace_back(s, d);
        const int t = g.neighbor(s, d);
        // rightmost-first scan at t, relative to arrival direction d
        int nd = -1;
        for (int k = 0; k < 4; ++k) {
            const int cand = (dir_right(d) + k) & 3; // right, straight, left, reverse
            if (g.edge_at(t, cand) >= 0) {
                nd = cand;
                break;
            }
        }
        s = t;
        d = nd;
    } while (!(s == v0 && d == d0));

    const int n = static_cast<int>(walk.size());
    for (int i = 0; i < n; ++i) {
        const auto [site, out] = walk[i];
        const int in = walk[(i + n - 1) % n].second; // direction of the arriving edge
        bw.walk_sites.push_back(site);
        // external directions strictly between reverse(in) and out, rotating ccw
        for (int k = dir_left(dir_reverse(in)); k != out; k = dir_left(k)) {
            if (g.edge_at(site, k) < 0) bw.prime_ends.push_back({site, k});
        }
    }
    return bw;
}

// ---------------------------------------------------------------------------
// GridDomain

namespace {

// Directed lattice edge of the boundary cycle for a prime end of the
// face-center graph (domain on the left).
std::pair<IPt, IPt> boundary_lattice_edge(Cell f, int d) {
    switch (d) {
    case 0: return {{f.x + 1, f.y}, {f.x + 1, f.y + 1}};     // east side, heading north
    case 1: return {{f.x + 1, f.y + 1}, {f.x, f.y + 1}};     // north side, heading west
    case 2: return {{f.x, f.y + 1}, {f.x, f.y}};             // west side, heading south
    default: return {{f.x, f.y}, {f.x + 1, f.y}};            // south side, heading east
    }
}

} // namespace

IPt GridDomain::marked_vertex(const std::string& name) const {
    return boundary_vertices.at(static_cast<std::size_t>(marked_index(name)));
}

int GridDomain::marked_index(const std::string& name) const {
    auto it = marked.find(name);
    if (it == marked.end()) throw std::invalid_argument("unknown marked point: " + name);
    return it->second;
}

std::optional<int> GridDomain::boundary_index_of(IPt v, int from) const {
    const int n = boundary_len();
    for (int k = 0; k < n; ++k) {
        const int i = (from + k) % n;
        if (boundary_vertices[i] == v) return i;
    }
    return std::nullopt;
}

SiteGraph GridDomain::vertex_graph() const {
    SiteGraph g;
    std::set<IPt> vs;
    std::set<std::pair<IPt, IPt>> es;
    for (const Cell& f : faces) {
        const IPt c[4] = {{f.x, f.y}, {f.x + 1, f.y}, {f.x + 1, f.y + 1}, {f.x, f.y + 1}};
        for (int k = 0; k < 4; ++k) {
            vs.insert(c[k]);
            IPt a = c[k], b = c[(k + 1) % 4];
            if (b < a) std::swap(a, b);
            es.insert({a, b});
        }
    }
    g.sites.assign(vs.begin(), vs.end());
    for (auto& [a, b] : es) g.edges.push_back({g.site_index(a), g.site_index(b)});
    g.half_offset = {0, 0};
    g.finalize();
    return g;
}

GridDomain domain_from_faces(std::vector<Cell> faces, double mesh,
                             const std::map<std::string, IPt>& marked) {
    if (faces.empty()) throw std::invalid_argument("domain: empty face set");
    GridDomain d;
    d.mesh = mesh;
    std::sort(faces.begin(), faces.end());
    faces.erase(std::unique(faces.begin(), faces.end()), faces.end());
    d.faces = std::move(faces);

    SiteGraph g;
    g.half_offset = {1, 1};
    g.sites = d.faces;
    for (int s = 0; s < g.num_sites(); ++s)
        for (int dd : {0, 1}) {
            auto it = std::lower_bound(g.sites.begin(), g.sites.end(), g.sites[s] + kDirs[dd]);
            if (it != g.sites.end() && *it == g.sites[s] + kDirs[dd])
                g.edges.push_back({s, static_cast<int>(it - g.sites.begin())});
        }
    g.finalize();
    d.face_sites = std::move(g);
    d.face_boundary = outer_boundary(d.face_sites);

    // connectivity check: the outer walk visits every boundary face; interior
    // connectivity is implied when every face is reachable
    {
        std::vector<char> seen(d.face_sites.num_sites(), 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int cnt = 1;
        while (!stack.empty()) {
            int s = stack.back();
            stack.pop_back();
            for (int dd = 0; dd < 4; ++dd) {
                int t = d.face_sites.neighbor(s, dd);
                if (t >= 0 && !seen[t]) {
                    seen[t] = 1;
                    ++cnt;
                    stack.push_back(t);
                }
            }
        }
        if (cnt != d.face_sites.num_sites())
            throw std::invalid_argument("domain: face set is not edge-connected");
    }

    // boundary cycle as a lattice-vertex walk, one edge per prime end
    const auto& pe = d.face_boundary.prime_ends;
    for (std::size_t i = 0; i < pe.size(); ++i) {
        const Cell f = d.face_sites.sites[pe[i].site];
        const auto [a, b] = boundary_lattice_edge(f, pe[i].dir);
        d.boundary_vertices.push_back(a);
        const auto [a2, b2] =
            boundary_lattice_edge(d.face_sites.sites[pe[(i + 1) % pe.size()].site],
                                  pe[(i + 1) % pe.size()].dir);
        if (!(b == a2))
            throw std::logic_error("domain: boundary cycle is not a simple closed walk");
    }

    for (const auto& [name, v] : marked) {
        auto idx = d.boundary_index_of(v);
        if (!idx)
            throw std::invalid_argument("marked point '" + name + "' not on the domain boundary");
        d.marked[name] = *idx;
    }
    return d;
}

GridDomain build_rect_domain(int width_faces, int height_faces, double mesh,
                             const std::map<std::string, IPt>& marked) {
    if (width_faces < 1 || height_faces < 1)
        throw std::invalid_argument("build_rect_domain: need at least one face");
    std::vector<Cell> faces;
    for (int j = 0; j < height_faces; ++j)
        for (int i = 0; i < width_faces; ++i) faces.push_back({i, j});
    return domain_from_faces(std::move(faces), mesh, marked);
}

// ---------------------------------------------------------------------------
// Slit rule

namespace {

Cell face_left_of(IPt u, IPt dstep) {
    const IPt l = {-dstep.y, dstep.x}; // rotate left
    const IPt v = u + dstep;
    return {std::min(std::min(u.x, v.x), std::min(u.x + l.x, v.x + l.x)),
            std::min(std::min(u.y, v.y), std::min(u.y + l.y, v.y + l.y))};
}

Cell face_right_of(IPt u, IPt dstep) {
    const IPt r = {dstep.y, -dstep.x};
    const IPt v = u + dstep;
    return {std::min(std::min(u.x, v.x), std::min(u.x + r.x, v.x + r.x)),
            std::min(std::min(u.y, v.y), std::min(u.y + r.y, v.y + r.y))};
}

// Diagonal cells around vertex v indexed by ccw diagonal order:
// 0 = NE (45 deg), 1 = NW, 2 = SW, 3 = SE.
Cell diag_cell(IPt v, int q) {
    switch (q) {
    case 0: return {v.x, v.y};
    case 1: return {v.x - 1, v.y};
    case 2: return {v.x - 1, v.y - 1};
    default: return {v.x, v.y - 1};
    }
}

} // namespace

SlitSides slit_side_faces(const GridDomain& domain, const LatticeCurve& curve) {
    SlitSides sides;
    const int n = curve.steps();
    if (n == 0) return sides;
    const auto& p = curve.points;
    std::set<Cell> left, right;

    // right side of curve[0..n]: edge-adjacent faces of every step
    for (int k = 0; k < n; ++k) right.insert(face_right_of(p[k], p[k + 1] - p[k]));

    // left side of curve[0..n-1]: edge-adjacent faces of steps 0..n-2 plus the
    // diagonal sectors at the start, at interior vertices and at the tip
    for (int k = 0; k + 1 <= n - 1; ++k) left.insert(face_left_of(p[k], p[k + 1] - p[k]));
    for (int k = 1; k <= n - 1; ++k) {
        const int din = dir_index(p[k] - p[k - 1]);
        const int stop = dir_reverse(din);
        const int start = (k <= n - 2) ? dir_index(p[k + 1] - p[k]) : din;
        // diagonal cells strictly inside the ccw sector (start, stop)
        for (int q = start; q != stop; q = dir_left(q)) left.insert(diag_cell(p[k], q));
    }
    // start vertex: the curve virtually enters along the inward normal, so the
    // cells in the left-rear sector at b are absorbed by the minus side
    {
        const auto b_idx = domain.boundary_index_of(p[0]);
        if (b_idx) {
            const int nb = domain.boundary_len();
            const IPt prev = domain.boundary_vertices[((*b_idx - 1) % nb + nb) % nb];
            const int din = dir_left(dir_index(p[0] - prev)); // nu_in at b
            const int stop = dir_reverse(din);
            const int start = (n >= 2) ? dir_index(p[1] - p[0]) : din;
            for (int q = start; q != stop; q = dir_left(q)) left.insert(diag_cell(p[0], q));
        }
    }

    for (const Cell& c : left)
        if (domain.face_index(c) >= 0) sides.left.push_back(c);
    for (const Cell& c : right)
        if (domain.face_index(c) >= 0) sides.right.push_back(c);
    return sides;
}

std::vector<Cell> slit_removed_faces(const GridDomain& domain, const LatticeCurve& curve) {
    const SlitSides sides = slit_side_faces(domain, curve);
    std::set<Cell> removed(sides.left.begin(), sides.left.end());
    removed.insert(sides.right.begin(), sides.right.end());
    return {removed.begin(), removed.end()};
}

GridDomain slit_domain(const GridDomain& domain, const LatticeCurve& curve,
                       const std::vector<std::string>& keep, const std::string& tip_name) {
    if (curve.empty()) return domain;
    const auto removed_v = slit_removed_faces(domain, curve);
    const std::set<Cell> removed(removed_v.begin(), removed_v.end());

    std::vector<Cell> kept;
    for (const Cell& f : domain.faces)
        if (!removed.count(f)) kept.push_back(f);
    if (kept.empty()) throw std::runtime_error("degenerate slit: no faces remain");

    // components by edge adjacency
    std::map<Cell, int> comp;
    int ncomp = 0;
    for (const Cell& f : kept)
        if (!comp.count(f)) {
            std::vector<Cell> stack{f};
            comp[f] = ncomp;
            while (!stack.empty()) {
                Cell c = stack.back();
                stack.pop_back();
                for (const IPt& d : kDirs) {
                    Cell t = c + d;
                    if (comp.count(t) || removed.count(t) || domain.face_index(t) < 0) continue;
                    comp[t] = ncomp;
                    stack.push_back(t);
                }
            }
            ++ncomp;
        }

    auto touches = [&](int ci, IPt v) {
        for (int q = 0; q < 4; ++q) {
            auto it = comp.find(diag_cell(v, q));
            if (it != comp.end() && it->second == ci) return true;
        }
        return false;
    };

    std::vector<IPt> anchors;
    for (const auto& name : keep)
        if (domain.marked.count(name)) anchors.push_back(domain.marked_vertex(name));
    int chosen = -1;
    for (int ci = 0; ci < ncomp; ++ci) {
        bool ok = true;
        for (const IPt& a : anchors)
            if (!touches(ci, a)) ok = false;
        if (ok) {
            chosen = ci;
            break;
        }
    }
    if (chosen < 0)
        throw std::runtime_error("degenerate slit: marked points separated from the remainder");

    std::vector<Cell> comp_faces;
    for (const Cell& f : kept)
        if (comp[f] == chosen) comp_faces.push_back(f);

    std::map<std::string, IPt> marked;
    for (const auto& name : keep)
        if (domain.marked.count(name)) marked[name] = domain.marked_vertex(name);
    GridDomain out = domain_from_faces(std::move(comp_faces), domain.mesh, marked);

    // tip: first boundary occurrence of the curve endpoint, scanning ccw from l
    const IPt tip = curve.points.back();
    int from = 0;
    if (out.marked.count("l")) from = out.marked.at("l");
    auto idx = out.boundary_index_of(tip, from);
    if (!idx) throw std::runtime_error("degenerate slit: curve tip not on component boundary");
    out.marked[tip_name] = *idx;
    return out;
}

// ---------------------------------------------------------------------------
// Medial graph

cplx principal_sqrt(cplx z) {
    if (z.imag() == 0.0 && z.real() < 0.0) return {0.0, std::sqrt(-z.real())};
    return std::sqrt(z);
}

MedialGraph medial_graph(const SiteGraph& g, const BoundaryWalk& bw, double mesh) {
    MedialGraph m;
    m.mesh = mesh;
    m.n_interior = g.num_edges();

    auto half_pos = [&](int s) {
        return IPt{2 * g.sites[s].x + g.half_offset.x, 2 * g.sites[s].y + g.half_offset.y};
    };
    for (int e = 0; e < g.num_edges(); ++e) {
        const auto [a, b] = g.edges[e];
        const IPt pa = half_pos(a), pb = half_pos(b);
        m.pos_half.push_back({(pa.x + pb.x) / 2, (pa.y + pb.y) / 2});
    }
    // prime ends, ccw order
    std::map<std::pair<int, int>, int> pe_id;
    for (int i = 0; i < bw.size(); ++i) {
        const auto pe = bw.prime_ends[i];
        pe_id[{pe.site, pe.dir}] = m.n_interior + i;
        const IPt ps = half_pos(pe.site);
        m.pos_half.push_back({ps.x + kDirs[pe.dir].x, ps.y + kDirs[pe.dir].y});
        m.nu_out.push_back(cplx(kDirs[pe.dir].x, kDirs[pe.dir].y));
    }

    auto slot = [&](int s, int d) -> int {
        const int e = g.edge_at(s, d);
        if (e >= 0) return e;
        auto it = pe_id.find({s, d});
        if (it == pe_id.end()) throw std::logic_error("medial_graph: missing prime end");
        return it->second;
    };

    for (int s = 0; s < g.num_sites(); ++s) {
        const IPt ps = half_pos(s);
        for (int d = 0; d < 4; ++d) {
            const int a = slot(s, d), b = slot(s, dir_left(d));
            m.edges.push_back({a, b, s});
            // line l(e) = (mid - corner)^{-1/2} R; mid - corner in quarter units
            const IPt qa = m.pos_half[a], qb = m.pos_half[b];
            const cplx v(qa.x + qb.x - 2 * ps.x, qa.y + qb.y - 2 * ps.y);
            m.line_dir.push_back(principal_sqrt(1.0 / (v / std::abs(v))));
        }
    }
    m.vert_edges.assign(m.pos_half.size(), {});
    for (int e = 0; e < static_cast<int>(m.edges.size()); ++e) {
        m.vert_edges[m.edges[e].a].push_back(e);
        m.vert_edges[m.edges[e].b].push_back(e);
    }
    return m;
}

MedialGraph medial_geometry(const GridDomain& domain) {
    return medial_graph(domain.face_sites, domain.face_boundary, domain.mesh);
}

// ---------------------------------------------------------------------------
// Serialization

std::string serialize_domain(const GridDomain& d) {
    std::ostringstream os;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", d.mesh);
    os << "isle-domain v1\n";
    os << "mesh " << buf << "\n";
    os << "faces " << d.faces.size() << "\n";
    for (const Cell& f : d.faces) os << f.x << " " << f.y << "\n";
    os << "marked " << d.marked.size() << "\n";
    for (const auto& [name, idx] : d.marked) {
        const IPt v = d.boundary_vertices[idx];
        os << name << " " << v.x << " " << v.y << "\n";
    }
    return os.str();
}

GridDomain parse_domain(const std::string& text) {
    std::istringstream is(text);
    std::string tag, ver;
    is >> tag >> ver;
    if (tag != "isle-domain") throw std::invalid_argument("parse_domain: bad header");
    std::string key, mesh_tok;
    is >> key >> mesh_tok;
    const double mesh = std::strtod(mesh_tok.c_str(), nullptr); // hexfloat round trip
    std::size_t nf = 0;
    is >> key >> nf;
    std::vector<Cell> faces(nf);
    for (auto& f : faces) is >> f.x >> f.y;
    std::size_t nm = 0;
    is >> key >> nm;
    std::map<std::string, IPt> marked;
    for (std::size_t i = 0; i < nm; ++i) {
        std::string name;
        IPt v;
        is >> name >> v.x >> v.y;
        marked[name] = v;
    }
    if (!is) throw std::invalid_argument("parse_domain: truncated input");
    return domain_from_faces(std::move(faces), mesh, marked);
}

std::string serialize_curve(const LatticeCurve& c) {
    std::ostringstream os;
    os << "isle-curve v1\npoints " << c.points.size() << "\n";
    for (const IPt& p : c.points) os << p.x << " " << p.y << "\n";
    return os.str();
}

LatticeCurve parse_curve(const std::string& text) {
    std::istringstream is(text);
    std::string tag, ver, key;
    std::size_t n = 0;
    is >> tag >> ver >> key >> n;
    if (tag != "isle-curve") throw std::invalid_argument("parse_curve: bad header");
    LatticeCurve c;
    c.points.resize(n);
    for (auto& p : c.points) is >> p.x >> p.y;
    if (!is) throw std::invalid_argument("parse_curve: truncated input");
    return c;
}

} // namespace isle
