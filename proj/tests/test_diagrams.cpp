#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "jdcalc/diagram.hpp"

using namespace jdcalc;

namespace {

Diagram strut(Label a, Label b, Kind k) {
    Diagram d;
    d.legs = {a, b};
    d.edges = {Edge{End{0, 0}, End{1, 0}, k}};
    return d;
}

// wheel with n legs, cycle edges of kind `ck`, leg edges of kind `lk`
Diagram wheel(int n, const std::vector<Label>& labels, Kind ck, Kind lk) {
    Diagram d;
    d.n3 = n;
    d.legs = labels;
    for (int i = 0; i < n; ++i)
        d.edges.push_back(Edge{End{i, 1}, End{(i + 1) % n, 0}, ck});
    for (int i = 0; i < n; ++i)
        d.edges.push_back(Edge{End{i, 2}, End{n + i, 0}, lk});
    return d;
}

Diagram theta(Kind k1, Kind k2, Kind k3) {
    Diagram d;
    d.n3 = 2;
    d.edges = {Edge{End{0, 0}, End{1, 0}, k1}, Edge{End{0, 1}, End{1, 1}, k2},
               Edge{End{0, 2}, End{1, 2}, k3}};
    return d;
}

} // namespace

TEST_CASE("strut canonicalization: label order does not matter") {
    Canon c1 = canonicalize(strut(lbl('x', 1), lbl('x', 2), Kind::Root));
    Canon c2 = canonicalize(strut(lbl('x', 2), lbl('x', 1), Kind::Root));
    REQUIRE(!c1.zero);
    REQUIRE(!c2.zero);
    CHECK(c1.data->key == c2.data->key);
    CHECK(c1.sign == 1);
    CHECK(c2.sign == 1);
    // distinct labels: trivial symmetry group
    CHECK(c1.data->aut_count == 1);
    // equal labels: the flip
    Canon c3 = canonicalize(strut(lbl('x', 1), lbl('x', 1), Kind::Root));
    CHECK(c3.data->aut_count == 2);
}

TEST_CASE("two same-label legs at one vertex give zero") {
    Diagram d;
    d.n3 = 1;
    d.legs = {lbl('x', 1), lbl('x', 1), lbl('y', 1)};
    d.edges = {Edge{End{0, 0}, End{1, 0}, Kind::Root}, Edge{End{0, 1}, End{2, 0}, Kind::Root},
               Edge{End{0, 2}, End{3, 0}, Kind::Root}};
    CHECK(canonicalize(d).zero);
    // distinct labels: nonzero
    d.legs[1] = lbl('x', 2);
    CHECK(!canonicalize(d).zero);
}

TEST_CASE("self-loop at a 3-vertex is zero by AS") {
    Diagram d;
    d.n3 = 1;
    d.legs = {lbl('x', 1)};
    d.edges = {Edge{End{0, 0}, End{0, 1}, Kind::Root}, Edge{End{0, 2}, End{1, 0}, Kind::Root}};
    CHECK(canonicalize(d).zero);
}

TEST_CASE("two-leg wheel: nonzero with automorphism count 4") {
    Diagram d = wheel(2, {lbl('x', 1), lbl('x', 1)}, Kind::Root, Kind::Root);
    Canon c = canonicalize(d);
    REQUIRE(!c.zero);
    CHECK(c.data->aut_count == 4);
}

TEST_CASE("canonicalize is idempotent") {
    for (Diagram d : {wheel(2, {lbl('x', 1), lbl('x', 1)}, Kind::Root, Kind::Root),
                      wheel(4, {lbl('x', 1), lbl('x', 2), lbl('x', 1), lbl('x', 2)}, Kind::Root,
                            Kind::Root),
                      theta(Kind::Root, Kind::Root, Kind::Root)}) {
        Canon c = canonicalize(d);
        REQUIRE(!c.zero);
        Canon c2 = canonicalize(c.data->g);
        CHECK(c2.data->key == c.data->key);
        CHECK(c2.sign == 1);
        for (size_t i = 0; i < c2.edge_map.size(); ++i) CHECK(c2.edge_map[i] == (int)i);
    }
}

TEST_CASE("random vertex renumbering and cyclic flips") {
    std::mt19937 rng(3);
    Diagram base = wheel(3, {lbl('x', 1), lbl('x', 2), lbl('x', 3)}, Kind::Root, Kind::Root);
    Canon cb = canonicalize(base);
    REQUIRE(!cb.zero);
    for (int it = 0; it < 60; ++it) {
        Diagram d = base;
        // random permutation of internal vertices
        std::vector<int> perm = {0, 1, 2};
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<int> vmap(d.n_vertices());
        for (int v = 0; v < 3; ++v) vmap[v] = perm[v];
        for (int v = 3; v < d.n_vertices(); ++v) vmap[v] = v;
        int flips = 0;
        std::vector<std::array<int, 3>> slotmap(3);
        for (int v = 0; v < 3; ++v) {
            std::uniform_int_distribution<int> pick(0, 5);
            int p = pick(rng);
            static const int perms[6][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1},
                                            {0, 2, 1}, {2, 1, 0}, {1, 0, 2}};
            for (int s = 0; s < 3; ++s) slotmap[v][s] = perms[p][s];
            if (p >= 3) ++flips;
        }
        for (auto& e : d.edges)
            for (End* en : {&e.a, &e.b}) {
                if (en->v < 3) en->slot = slotmap[en->v][en->slot];
                en->v = vmap[en->v];
            }
        Canon c = canonicalize(d);
        REQUIRE(!c.zero);
        CHECK(c.data->key == cb.data->key);
        CHECK(c.sign * cb.sign == (flips % 2 ? -1 : 1));
    }
}

TEST_CASE("gradings") {
    Diagram s = strut(lbl('x', 1), lbl('x', 2), Kind::Root);
    CHECK(s.deg() == 1);
    CHECK(s.chi() == -1);
    Diagram w2 = wheel(2, {lbl('x', 1), lbl('x', 1)}, Kind::Root, Kind::Root);
    CHECK(w2.deg() == 2);
    CHECK(w2.chi() == 0);
    Diagram th = theta(Kind::Root, Kind::Root, Kind::Root);
    CHECK(th.deg() == 1);
    CHECK(th.chi() == 1);
}

TEST_CASE("CC detection") {
    // 3 Cartan edges at a vertex
    Diagram d;
    d.n3 = 1;
    d.legs = {lbl('a', 1), lbl('a', 2), lbl('a', 3)};
    d.edges = {Edge{End{0, 0}, End{1, 0}, Kind::Cartan}, Edge{End{0, 1}, End{2, 0}, Kind::Cartan},
               Edge{End{0, 2}, End{3, 0}, Kind::Cartan}};
    CHECK(detect_cc(d) == CCKind::CC1);
    // 2 Cartan, one root
    d.legs[2] = lbl('x', 1);
    d.edges[2].kind = Kind::Root;
    CHECK(detect_cc(d) == CCKind::CC1);
    // all-root theta: none
    CHECK(detect_cc(theta(Kind::Root, Kind::Root, Kind::Root)) == CCKind::None);
    // root bridge into a closed theta: the bridge class vanishes, CC2
    Diagram t;
    t.n3 = 3;
    t.legs = {lbl('x', 1)};
    t.edges = {Edge{End{0, 0}, End{1, 0}, Kind::Root}, Edge{End{0, 1}, End{1, 1}, Kind::Root},
               Edge{End{0, 2}, End{2, 0}, Kind::Root}, Edge{End{1, 2}, End{2, 1}, Kind::Root},
               Edge{End{2, 2}, End{3, 0}, Kind::Root}};
    CHECK(detect_cc(t) == CCKind::CC2);
}

TEST_CASE("CC detection is isomorphism invariant") {
    std::mt19937 rng(5);
    Diagram t;
    t.n3 = 3;
    t.legs = {lbl('x', 1)};
    t.edges = {Edge{End{0, 0}, End{1, 0}, Kind::Root}, Edge{End{0, 1}, End{1, 1}, Kind::Root},
               Edge{End{0, 2}, End{2, 0}, Kind::Root}, Edge{End{1, 2}, End{2, 1}, Kind::Root},
               Edge{End{2, 2}, End{3, 0}, Kind::Root}};
    for (int it = 0; it < 20; ++it) {
        Diagram d = t;
        std::vector<int> perm = {0, 1, 2};
        std::shuffle(perm.begin(), perm.end(), rng);
        for (auto& e : d.edges)
            for (End* en : {&e.a, &e.b})
                if (en->v < 3) en->v = perm[en->v];
        CHECK(detect_cc(d) == CCKind::CC2);
    }
}

TEST_CASE("cohomology ranks and edge classes") {
    // root strut: rank 1, edge class (1)
    CohBasis cb = cohomology(strut(lbl('x', 1), lbl('x', 2), Kind::Root));
    CHECK(cb.rank == 1);
    REQUIRE(cb.edge_class.size() == 1);
    CHECK(cb.edge_class[0] == std::vector<Rational>{Rational(1)});
    // Cartan circle special: no graph edges at all
    Diagram cc;
    cc.sp.cc = 1;
    CHECK(cohomology(cc).rank == 0);
    // all-root two-leg wheel: rank 2
    CHECK(cohomology(wheel(2, {lbl('x', 1), lbl('x', 1)}, Kind::Root, Kind::Root)).rank == 2);
    // legless theta: 3 edges, one dependent relation, rank 2
    CHECK(cohomology(theta(Kind::Root, Kind::Root, Kind::Root)).rank == 2);
    // rank = #edges - #internal vertices for leg-bearing graphs
    std::mt19937 rng(9);
    for (int n = 2; n <= 5; ++n) {
        Diagram w = wheel(n,
                          [&] {
                              std::vector<Label> ls;
                              for (int i = 0; i < n; ++i) ls.push_back(lbl('x', 1 + (i % 2)));
                              return ls;
                          }(),
                          Kind::Root, Kind::Root);
        CohBasis c = cohomology(w);
        CHECK(c.rank == (int)w.edges.size() - w.n3);
    }
}

TEST_CASE("vertex relations annihilate edge classes") {
    Diagram w = wheel(3, {lbl('x', 1), lbl('x', 2), lbl('x', 3)}, Kind::Root, Kind::Root);
    Canon c = canonicalize(w);
    const CohBasis& cb = c.data->coh;
    const Diagram& g = c.data->g;
    for (int v = 0; v < g.n3; ++v) {
        std::vector<Rational> sum(cb.rank, Rational(0));
        for (size_t i = 0; i < cb.root_edges.size(); ++i) {
            const Edge& e = g.edges[cb.root_edges[i]];
            int iota = 0;
            if (e.b.v == v) iota += 1;
            if (e.a.v == v) iota -= 1;
            for (int k = 0; k < cb.rank; ++k) sum[k] += Rational(iota) * cb.edge_class[i][k];
        }
        for (int k = 0; k < cb.rank; ++k) CHECK(sum[k] == 0);
    }
}

TEST_CASE("diagram text format round trip") {
    Diagram w = wheel(2, {lbl('x', 1), lbl('a', 2)}, Kind::Root, Kind::Root);
    w.edges[3].kind = Kind::Cartan; // leg edge for the Cartan label
    w.sp.rc = 1;
    w.sp.ldot[lbl('b', 1)] = 2;
    std::string text = diagram_str(w);
    std::istringstream in(text);
    Diagram back = diagram_parse(in);
    Canon c1 = canonicalize(w);
    Canon c2 = canonicalize(back);
    REQUIRE(!c1.zero);
    CHECK(c1.data->key == c2.data->key);
    CHECK(diagram_str(c1.data->g) == diagram_str(c2.data->g));
}
