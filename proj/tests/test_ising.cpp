#include <doctest.h>

#include "isle/geometry.hpp"
#include "isle/ising.hpp"

#include <cmath>
#include <map>

using namespace isle;

namespace {

// Independent brute-force oracle: recompute H from scratch for every
// configuration indexed by a plain bitmask (no Gray code, no tables).
double oracle_partition(const GridDomain& d, const BoundarySpec& spec) {
    const int n = d.num_faces();
    const FaceSystem sys = FaceSystem::compile(d, spec);
    double z = 0.0;
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
        SpinConfig c;
        c.values.resize(n);
        for (int f = 0; f < n; ++f) c.values[f] = (mask >> f & 1) ? -1 : 1;
        double h = 0.0;
        for (auto [a, b] : sys.bonds) h -= c.values[a] * c.values[b];
        for (auto [f, s] : sys.fields) h -= s * c.values[f];
        z += std::exp(-kBetaC * h);
    }
    return z;
}

GridDomain marked_rect(int w, int h, IPt r, IPt l, IPt b) {
    return build_rect_domain(w, h, 1.0, {{"r", r}, {"l", l}, {"b", b}});
}

} // namespace

TEST_CASE("hamiltonian on a single face") {
    const auto d = build_rect_domain(1, 1, 1.0, {{"p", {0, 0}}});
    const auto all_plus = BoundarySpec::uniform(d, ArcLabel::Plus);
    SpinConfig c;
    c.values = {1};
    CHECK(hamiltonian_dipolar(d, all_plus, c) == -4.0);
    c.values = {-1};
    CHECK(hamiltonian_dipolar(d, all_plus, c) == 4.0);
}

TEST_CASE("partition function, smallest cases") {
    const auto d = build_rect_domain(1, 1, 1.0, {});
    CHECK(partition_function(d, BoundarySpec::uniform(d, ArcLabel::Free)) == doctest::Approx(2.0));
    const double z = partition_function(d, BoundarySpec::uniform(d, ArcLabel::Plus));
    CHECK(z == doctest::Approx(std::exp(4 * kBetaC) + std::exp(-4 * kBetaC)));
}

TEST_CASE("hamiltonian with dipolar arcs on a 2x1 domain (hand evaluation)") {
    // faces f0=(0,0), f1=(1,0); r top-right, l top-left, b bottom-middle:
    // free on [r,l] (top), minus on [l,b] (left+bottom-left), plus on [b,r]
    const auto d = marked_rect(2, 1, {2, 1}, {0, 1}, {1, 0});
    const auto spec = BoundarySpec::dipolar(d);
    SpinConfig c;
    c.values = {1, 1};
    // bond term: -1; minus arc: left edge + bottom-left edge touch f0 -> +2;
    // plus arc: bottom-right + right edge touch f1 -> -2
    CHECK(hamiltonian_dipolar(d, spec, c) == -1.0);
    const double z = partition_function(d, spec);
    CHECK(z == doctest::Approx(oracle_partition(d, spec)));
}

TEST_CASE("partition function against the brute-force oracle (2x2 dipolar)") {
    const auto d = marked_rect(2, 2, {2, 2}, {0, 2}, {1, 0});
    const auto spec = BoundarySpec::dipolar(d);
    CHECK(partition_function(d, spec) == doctest::Approx(oracle_partition(d, spec)));
}

TEST_CASE("low-temperature expansion identity") {
    // Z = e^{beta_c |E|} sum_{w in C} alpha^{|w|} with |E| the pair-term count
    for (auto [w, h] : {std::pair{2, 2}, {3, 2}}) {
        const auto d = marked_rect(w, h, {w, h}, {0, h}, {1, 0});
        const auto spec = BoundarySpec::dipolar(d);
        const auto sys = FaceSystem::compile(d, spec);
        const double z = partition_function(d, spec);
        const double cs = contour_sum(d, spec, {d.marked_vertex("b")});
        CHECK(z == doctest::Approx(std::exp(kBetaC * sys.pair_term_count()) * cs).epsilon(1e-12));
    }
}

TEST_CASE("phi_delta equals the contour-sum ratio") {
    const auto d = build_rect_domain(3, 2, 1.0, {});
    const int n = d.boundary_len();
    const int r = *d.boundary_index_of({3, 2});
    const int l = *d.boundary_index_of({0, 2});
    const int x = *d.boundary_index_of({1, 0});
    const int z = *d.boundary_index_of({3, 0});
    const double phi = phi_delta(d, r, l, x, z);

    const auto spec = BoundarySpec::dipolar_at(d, r, l, x);
    const double num =
        contour_sum(d, spec, {d.boundary_vertices[x], d.boundary_vertices[z]});
    const double den = contour_sum(d, spec, {d.boundary_vertices[x]});
    CHECK(phi == doctest::Approx(num / den).epsilon(1e-12));
    CHECK(phi > 0.0);
    (void)n;
}

TEST_CASE("phi_delta rejects z outside the window and honors z == x") {
    const auto d = build_rect_domain(3, 2, 1.0, {});
    const int r = *d.boundary_index_of({3, 2});
    const int l = *d.boundary_index_of({0, 2});
    const int x = *d.boundary_index_of({1, 0});
    CHECK(phi_delta(d, r, l, x, x) == 1.0);
    const int bad = *d.boundary_index_of({0, 1}); // on the minus arc
    CHECK_THROWS(phi_delta(d, r, l, x, bad));
}

TEST_CASE("interface step distribution: normalization and enumeration oracle") {
    const auto d = marked_rect(3, 2, {3, 2}, {0, 2}, {1, 0});
    const auto spec = BoundarySpec::dipolar(d);

    // oracle: conditional frequencies over all spin configurations
    const FaceSystem sys = FaceSystem::compile(d, spec);
    std::map<std::string, double> prefix_weight;
    std::map<std::string, double> next_weight;
    const int n = d.num_faces();
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
        SpinConfig c;
        c.values.resize(n);
        for (int f = 0; f < n; ++f) c.values[f] = (mask >> f & 1) ? -1 : 1;
        double h = 0.0;
        for (auto [a, b] : sys.bonds) h -= c.values[a] * c.values[b];
        for (auto [f, s] : sys.fields) h -= s * c.values[f];
        const double w = std::exp(-kBetaC * h);
        const LatticeCurve curve = trace_leftmost(d, spec, c);
        for (int k = 1; k < static_cast<int>(curve.points.size()); ++k) {
            LatticeCurve pre;
            pre.points.assign(curve.points.begin(), curve.points.begin() + k);
            prefix_weight[serialize_curve(pre)] += w;
            LatticeCurve nxt;
            nxt.points.assign(curve.points.begin(), curve.points.begin() + k + 1);
            next_weight[serialize_curve(nxt)] += w;
        }
    }

    // compare along one-step prefixes
    LatticeCurve start;
    start.points = {{1, 0}};
    const auto p0 = interface_step_distribution(d, LatticeCurve{});
    CHECK(p0.p_left + p0.p_straight + p0.p_right == doctest::Approx(1.0).epsilon(1e-14));

    for (const IPt step : {IPt{0, 1}, IPt{1, 0}, IPt{-1, 0}}) {
        LatticeCurve pre;
        pre.points = {{1, 0}, IPt{1, 0} + step};
        const auto it = prefix_weight.find(serialize_curve(pre));
        if (it == prefix_weight.end()) continue;
        const auto p = interface_step_distribution(d, pre);
        if (p.terminated) continue;
        CHECK(p.p_left + p.p_straight + p.p_right == doctest::Approx(1.0).epsilon(1e-14));
        // oracle conditional probability of each continuation
        const IPt tip = pre.points.back();
        const IPt din = tip - pre.points.front();
        const int di = dir_index(din);
        const IPt cl = tip + kDirs[dir_left(di)], cs = tip + kDirs[di],
                  cr = tip + kDirs[dir_right(di)];
        auto cond = [&](IPt nxt) {
            LatticeCurve full = pre;
            full.points.push_back(nxt);
            auto jt = next_weight.find(serialize_curve(full));
            return jt == next_weight.end() ? 0.0 : jt->second / it->second;
        };
        CHECK(p.p_left == doctest::Approx(cond(cl)).epsilon(1e-12));
        CHECK(p.p_straight == doctest::Approx(cond(cs)).epsilon(1e-12));
        CHECK(p.p_right == doctest::Approx(cond(cr)).epsilon(1e-12));
    }
}

TEST_CASE("discrete martingale: small domains") {
    const auto d = marked_rect(3, 2, {3, 2}, {0, 2}, {1, 0});
    const int r = d.marked_index("r"), l = d.marked_index("l"), b = d.marked_index("b");
    const auto rep = check_discrete_martingale_all_z(d, r, l, b);
    CHECK(rep.states_checked > 0);
    CHECK(rep.max_deviation < 1e-10);
}

TEST_CASE("discrete martingale in extended precision") {
    const auto d = marked_rect(2, 2, {2, 2}, {0, 2}, {1, 0});
    const int r = d.marked_index("r"), l = d.marked_index("l"), b = d.marked_index("b");
    const auto rep = check_discrete_martingale_all_z(d, r, l, b, "f128");
    CHECK(rep.states_checked > 0);
    CHECK(rep.max_deviation < 1e-28);
}

TEST_CASE("Kramers-Wannier duality on enumerable instances") {
    for (auto [w, h] : {std::pair{2, 2}, {3, 2}}) {
        const auto d = build_rect_domain(w, h, 1.0, {});
        const int r = *d.boundary_index_of({w, h});
        const int l = *d.boundary_index_of({0, h});
        const int x = *d.boundary_index_of({1, 0});
        const int z = *d.boundary_index_of({w, 0});
        const double phi = phi_delta(d, r, l, x, z);

        const VertexModel vm = dual_vertex_model(d, r, l);
        const int xs = vm.graph.site_index(d.boundary_vertices[x]);
        const int zs = vm.graph.site_index(d.boundary_vertices[z]);
        const double corr = vertex_correlation(vm, xs, zs);
        const double mag = vertex_magnetization(vm, xs);
        CHECK(phi == doctest::Approx(corr / mag).epsilon(1e-10));
    }
}

TEST_CASE("vertex model conventions") {
    const auto d = build_rect_domain(2, 2, 1.0, {});
    const int r = *d.boundary_index_of({2, 2});
    const int l = *d.boundary_index_of({0, 2});
    const VertexModel vm = dual_vertex_model(d, r, l);
    // site on the plus arc has magnetization 1
    const int plus_site = vm.graph.site_index({2, 2});
    CHECK(vertex_magnetization(vm, plus_site) == doctest::Approx(1.0));
    // same-site correlation is 1
    const int s = vm.graph.site_index({1, 0});
    CHECK(vertex_correlation(vm, s, s) == doctest::Approx(1.0));
    // free two-point on a small free-free model by brute force over 2^9 states
    const auto d3 = build_rect_domain(2, 2, 1.0, {});
    const VertexModel freem = VertexModel::plus_free(d3.vertex_graph(), {});
    const int a = freem.graph.site_index({0, 0});
    const int bb = freem.graph.site_index({2, 2});
    double num = 0, den = 0;
    const int ns = freem.graph.num_sites();
    for (std::uint64_t m = 0; m < (1ull << ns); ++m) {
        double hh = 0;
        auto sp = [&](int i) { return (m >> i & 1) ? -1.0 : 1.0; };
        for (auto [u, v] : freem.graph.edges) hh -= sp(u) * sp(v);
        const double wgt = std::exp(-kBetaC * hh);
        num += wgt * sp(a) * sp(bb);
        den += wgt;
    }
    CHECK(vertex_correlation(freem, a, bb) == doctest::Approx(num / den).epsilon(1e-12));
}

TEST_CASE("leftmost trace is deterministic and admissible") {
    const auto d = marked_rect(3, 3, {3, 3}, {0, 3}, {1, 0});
    const auto spec = BoundarySpec::dipolar(d);
    const int n = d.num_faces();
    int count = 0;
    for (std::uint64_t mask = 0; mask < (1ull << n); mask += 7) {
        SpinConfig c;
        c.values.resize(n);
        for (int f = 0; f < n; ++f) c.values[f] = (mask >> f & 1) ? -1 : 1;
        const auto c1 = trace_leftmost(d, spec, c);
        const auto c2 = trace_leftmost(d, spec, c);
        CHECK(c1.points == c2.points);
        CHECK(c1.points.front() == d.marked_vertex("b"));
        // ends on the free arc
        const auto idx = d.boundary_index_of(c1.points.back());
        REQUIRE(idx.has_value());
        // rightmost is admissible too and both normalize over configs
        const auto cr = trace_rightmost(d, spec, c);
        CHECK(cr.points.front() == d.marked_vertex("b"));
        ++count;
    }
    CHECK(count > 0);
}

TEST_CASE("interface law sums to one") {
    const auto d = marked_rect(2, 2, {2, 2}, {0, 2}, {1, 0});
    const auto law = interface_law(d, BoundarySpec::dipolar(d));
    double total = 0;
    for (auto& [k, v] : law) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}
