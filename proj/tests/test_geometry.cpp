#include <doctest.h>

#include "isle/geometry.hpp"

#include <set>

using namespace isle;

TEST_CASE("rectangle domains: counts") {
    const auto d1 = build_rect_domain(1, 1, 1.0, {});
    CHECK(d1.num_faces() == 1);
    CHECK(d1.vertex_graph().num_sites() == 4);
    CHECK(d1.boundary_len() == 4);

    const auto d2 = build_rect_domain(2, 2, 1.0, {});
    CHECK(d2.num_faces() == 4);
    CHECK(d2.vertex_graph().num_sites() == 9);
    CHECK(d2.boundary_len() == 8);
}

TEST_CASE("rectangle domain: marked points appear counterclockwise") {
    // 3x2 board at mesh 0.5, b at the lower-left corner, r right mid, l left mid
    const auto d = build_rect_domain(3, 2, 0.5,
                                     {{"b", {0, 0}}, {"r", {3, 1}}, {"l", {0, 1}}});
    const int n = d.boundary_len();
    const int r = d.marked_index("r"), l = d.marked_index("l"), b = d.marked_index("b");
    // ccw order r -> l -> b -> r
    auto ahead = [&](int from, int to) { return ((to - from) % n + n) % n; };
    CHECK(ahead(r, l) < ahead(r, b));
    CHECK(ahead(l, b) < ahead(l, r));
}

TEST_CASE("marked point off the boundary is rejected") {
    CHECK_THROWS(build_rect_domain(3, 3, 1.0, {{"b", {1, 1}}}));
}

TEST_CASE("Euler consistency |V| - |E| + |F| = 1") {
    for (auto [w, h] : {std::pair{1, 1}, {3, 2}, {4, 3}}) {
        const auto d = build_rect_domain(w, h, 1.0, {});
        const auto vg = d.vertex_graph();
        CHECK(vg.num_sites() - vg.num_edges() + d.num_faces() == 1);
    }
    // L-shaped domain
    const auto d = domain_from_faces({{0, 0}, {1, 0}, {0, 1}}, 1.0, {});
    const auto vg = d.vertex_graph();
    CHECK(vg.num_sites() - vg.num_edges() + d.num_faces() == 1);
}

TEST_CASE("slit: empty curve is the identity") {
    const auto d = build_rect_domain(3, 3, 1.0, {{"r", {3, 2}}, {"l", {0, 2}}, {"b", {1, 0}}});
    const auto s = slit_domain(d, LatticeCurve{});
    CHECK(s.faces == d.faces);
}

TEST_CASE("slit: asymmetric one- and two-step removal on a 3x3 board") {
    const auto d = build_rect_domain(3, 3, 1.0, {{"r", {3, 2}}, {"l", {0, 2}}, {"b", {1, 0}}});

    // one step north from b: only the right face of the step goes
    LatticeCurve c1;
    c1.points = {{1, 0}, {1, 1}};
    const auto rem1 = slit_removed_faces(d, c1);
    CHECK(rem1 == std::vector<Cell>{{1, 0}});
    const auto s1 = slit_domain(d, c1);
    CHECK(s1.num_faces() == 8);
    CHECK(s1.marked_vertex("x") == IPt{1, 1});

    // two steps north: right faces of both steps, left face of step 0, and the
    // vertex-adjacent faces in the left sector at the old tip
    LatticeCurve c2;
    c2.points = {{1, 0}, {1, 1}, {1, 2}};
    const auto rem2 = slit_removed_faces(d, c2);
    const std::set<Cell> want{{1, 0}, {1, 1}, {0, 0}, {0, 1}};
    CHECK(std::set<Cell>(rem2.begin(), rem2.end()) == want);
    const auto s2 = slit_domain(d, c2);
    CHECK(s2.num_faces() == 5);
}

TEST_CASE("slit: curve reaching the free arc keeps the [r,l] component") {
    const auto d = build_rect_domain(3, 3, 1.0, {{"r", {3, 3}}, {"l", {0, 3}}, {"b", {1, 0}}});
    LatticeCurve c;
    c.points = {{1, 0}, {1, 1}, {2, 1}, {2, 2}};
    const auto s = slit_domain(d, c, {"r", "l"});
    // the component still touches both r and l
    CHECK(s.boundary_index_of({3, 3}).has_value());
    CHECK(s.boundary_index_of({0, 3}).has_value());
}

TEST_CASE("medial geometry of small face domains") {
    const auto d1 = build_rect_domain(1, 1, 1.0, {});
    const auto m1 = medial_graph(d1.face_sites, d1.face_boundary, d1.mesh);
    CHECK(m1.n_interior == 0);
    CHECK(m1.num_vertices() - m1.n_interior == 4);
    std::set<std::pair<int, int>> normals;
    for (const cplx& nu : m1.nu_out) normals.insert({int(nu.real()), int(nu.imag())});
    CHECK(normals == std::set<std::pair<int, int>>{{1, 0}, {0, 1}, {-1, 0}, {0, -1}});
    // nu_out . nu_in = -1 as an inner product of unit normals
    for (const cplx& nu : m1.nu_out) CHECK(std::abs(nu * std::conj(-nu) + 1.0) < 1e-15);

    const auto d2 = build_rect_domain(2, 1, 1.0, {});
    const auto m2 = medial_graph(d2.face_sites, d2.face_boundary, d2.mesh);
    CHECK(m2.n_interior == 1);
}

TEST_CASE("edge line squares against the defining quotient") {
    const auto d = build_rect_domain(2, 2, 1.0, {});
    const auto m = medial_geometry(d);
    for (std::size_t e = 0; e < m.edges.size(); ++e) {
        // l(e)^2 parallel to 1/(mid - corner)
        const auto& me = m.edges[e];
        const cplx a = m.position(me.a), b = m.position(me.b);
        const IPt cs = d.face_sites.sites[me.corner_site];
        const cplx corner =
            0.5 * d.mesh * cplx(2 * cs.x + d.face_sites.half_offset.x,
                                2 * cs.y + d.face_sites.half_offset.y);
        const cplx v = 0.5 * (a + b) - corner;
        const cplx sq = m.line_dir[e] * m.line_dir[e];
        // parallel: imaginary part of sq * v vanishes (sq ~ conj(v)/|v|)
        CHECK(std::abs(std::imag(sq * v)) < 1e-12);
    }
}

TEST_CASE("medial graph of a slit domain equals the directly built one") {
    const auto d = build_rect_domain(3, 3, 1.0, {{"r", {3, 3}}, {"l", {0, 3}}, {"b", {1, 0}}});
    LatticeCurve c;
    c.points = {{1, 0}, {1, 1}, {2, 1}};
    const auto s = slit_domain(d, c, {"r", "l"});
    const auto rebuilt = domain_from_faces(s.faces, s.mesh, {});
    const auto m1 = medial_geometry(s);
    const auto m2 = medial_geometry(rebuilt);
    REQUIRE(m1.num_vertices() == m2.num_vertices());
    REQUIRE(m1.edges.size() == m2.edges.size());
    for (int v = 0; v < m1.num_vertices(); ++v) CHECK(m1.pos_half[v] == m2.pos_half[v]);
}

TEST_CASE("domain serialization round-trips bit-exactly") {
    const auto d = build_rect_domain(3, 2, 0.1,
                                     {{"r", {3, 1}}, {"l", {0, 1}}, {"b", {1, 0}}});
    const std::string text = serialize_domain(d);
    const auto back = parse_domain(text);
    CHECK(back.faces == d.faces);
    CHECK(back.mesh == d.mesh); // bit-exact via hexfloat
    CHECK(serialize_domain(back) == text);

    LatticeCurve c;
    c.points = {{1, 0}, {1, 1}, {2, 1}};
    CHECK(parse_curve(serialize_curve(c)).points == c.points);
}

TEST_CASE("principal square root branch") {
    CHECK(std::abs(principal_sqrt(cplx(-1.0, 0.0)) - cplx(0.0, 1.0)) < 1e-15);
    CHECK(std::abs(principal_sqrt(cplx(0.0, 1.0)) - std::polar(1.0, M_PI / 4)) < 1e-15);
    CHECK(std::abs(principal_sqrt(cplx(4.0, 0.0)) - 2.0) < 1e-15);
}
