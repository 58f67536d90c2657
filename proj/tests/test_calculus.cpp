#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "jdcalc/bch.hpp"
#include "jdcalc/ihx.hpp"

using namespace jdcalc;

namespace {

VarTable vt0(int degcap = 5) {
    VarTable v;
    v.L = 1;
    v.acap = 4;
    v.slack = 6;
    v.degcap = degcap;
    v.chicap = 2;
    v.aux = {"t"};
    return v;
}

Diagram strutd(Label a, Label b, Kind k) {
    Diagram d;
    d.legs = {a, b};
    d.edges = {Edge{End{0, 0}, End{1, 0}, k}};
    return d;
}

// random small map: Id + rational multiples of caterpillar trees
GraphMap random_map(const VarTable& v, std::mt19937& rng, const std::vector<Label>& out,
                    const std::vector<Label>& in, bool linear_random = true) {
    GraphMap f = identity_map(v, out, in);
    std::uniform_int_distribution<int> coef(-2, 2);
    std::uniform_int_distribution<size_t> pick(0, in.size() - 1);
    if (linear_random)
        for (auto& o : out)
            for (auto& i : in)
                if (coef(rng) % 2) f.body.insert_plain(strutd(o, i, i.kind()), Rational(coef(rng)));
    for (int t = 0; t < 3; ++t) {
        int c = coef(rng);
        if (c == 0) continue;
        std::vector<Label> leaves = {in[pick(rng)], in[pick(rng)]};
        f.body.insert_plain(caterpillar(leaves, out[pick(rng) % out.size()]), Rational(c, 2));
    }
    return f;
}

bool map_ihx_equal(const GraphMap& a, const GraphMap& b) { return ihx_equal(a.body, b.body); }

} // namespace

TEST_CASE("identity map is a two-sided unit for composition") {
    VarTable v = vt0();
    std::mt19937 rng(21);
    std::vector<Label> xs = {lbl('x', 1), lbl('x', 2)};
    std::vector<Label> ys = {lbl('y', 1), lbl('y', 2)};
    std::vector<Label> zs = {lbl('z', 1), lbl('z', 2)};
    GraphMap f = random_map(v, rng, ys, xs);
    GraphMap idx = identity_map(v, xs, zs);
    CHECK(compose(f, idx).body == f.body.relabeled({{xs[0], zs[0]}, {xs[1], zs[1]}}));
    GraphMap idy = identity_map(v, zs, ys);
    CHECK(compose(idy, f).body == f.body.relabeled({{ys[0], zs[0]}, {ys[1], zs[1]}}));
}

TEST_CASE("linear maps compose as strut matrix products") {
    VarTable v = vt0();
    std::vector<Label> xs = {lbl('x', 1), lbl('x', 2)};
    std::vector<Label> ys = {lbl('y', 1), lbl('y', 2)};
    std::vector<Label> zs = {lbl('z', 1), lbl('z', 2)};
    GraphMap f;
    f.in = xs;
    f.out = ys;
    f.body = DSum(v);
    GraphMap g;
    g.in = ys;
    g.out = zs;
    g.body = DSum(v);
    Rational A[2][2] = {{2, 1}, {0, 3}};
    Rational B[2][2] = {{1, -1}, {2, 5}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            f.body.insert_plain(strutd(ys[i], xs[j], Kind::Root), A[i][j]);
            g.body.insert_plain(strutd(zs[i], ys[j], Kind::Root), B[i][j]);
        }
    GraphMap gf = compose(g, f);
    GraphMap expect;
    expect.in = xs;
    expect.out = zs;
    expect.body = DSum(v);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            Rational c(0);
            for (int k = 0; k < 2; ++k) c += B[i][k] * A[k][j];
            expect.body.insert_plain(strutd(zs[i], xs[j], Kind::Root), c);
        }
    CHECK(gf.body == expect.body);
}

TEST_CASE("map inversion") {
    VarTable v = vt0(4);
    std::vector<Label> xs = {lbl('x', 1)};
    std::vector<Label> ys = {lbl('y', 1)};
    GraphMap id = identity_map(v, ys, xs);
    GraphMap idinv = invert_map(id);
    CHECK(idinv.body == identity_map(v, xs, ys).body);
    // strut map with coefficient 2 inverts to 1/2
    GraphMap two;
    two.in = xs;
    two.out = ys;
    two.body = DSum(v);
    two.body.insert_plain(strutd(ys[0], xs[0], Kind::Root), Rational(2));
    GraphMap half = invert_map(two);
    DSum expect(v);
    expect.insert_plain(strutd(xs[0], ys[0], Kind::Root), Rational(1, 2));
    CHECK(half.body == expect);
    // perturbative inverse: quadratic correction
    std::mt19937 rng(5);
    for (int it = 0; it < 5; ++it) {
        GraphMap f = random_map(v, rng, ys, xs, false);
        GraphMap finv = invert_map(f);
        GraphMap check = compose(finv, f);
        CHECK(map_ihx_equal(check, identity_map(v, xs, xs)));
    }
}

TEST_CASE("derivative of the identity and of linear maps") {
    VarTable v = vt0();
    std::vector<Label> xs = {lbl('x', 1), lbl('x', 2)};
    std::vector<Label> ys = {lbl('y', 1), lbl('y', 2)};
    GraphMap id = identity_map(v, ys, xs);
    MatrixField d = derivative(id);
    // identity matrix field carries del y_i -- d x_i struts
    MatrixField expect;
    expect.x = xs;
    expect.y = ys;
    expect.body = DSum(v);
    for (int i = 0; i < 2; ++i)
        expect.body.insert_plain(strutd(ys[i].with_deco(Label::kDeriv),
                                        xs[i].with_deco(Label::kDiff), Kind::Root),
                                 Rational(1));
    CHECK(d.body == expect.body);
}

TEST_CASE("chain rule") {
    VarTable v = vt0(4);
    std::mt19937 rng(31);
    std::vector<Label> xs = {lbl('x', 1)};
    std::vector<Label> ys = {lbl('y', 1)};
    std::vector<Label> zs = {lbl('z', 1)};
    for (int it = 0; it < 6; ++it) {
        GraphMap f = random_map(v, rng, ys, xs, false);
        GraphMap h = random_map(v, rng, zs, ys, false);
        MatrixField lhs = derivative(compose(h, f));
        // rhs: H'(F(x)) x F'(x)
        MatrixField hp = derivative(h);
        GraphMap hp_at_f;
        hp_at_f.in = xs;
        hp_at_f.out = {};
        DSum hp_body = substituted_body(hp.body, {f});
        MatrixField hpf;
        hpf.x = ys;
        hpf.y = zs;
        hpf.body = hp_body;
        MatrixField rhs = mat_mul(hpf, derivative(f));
        CHECK(ihx_equal(lhs.body, rhs.body));
    }
}

TEST_CASE("trace and transpose identities") {
    VarTable v = vt0();
    std::vector<Label> xs = {lbl('x', 1), lbl('x', 2)};
    MatrixField I = mat_identity(v, xs);
    DSum tr = mat_trace(I);
    Diagram circ;
    circ.sp.rc = 1;
    DSum expect(v);
    expect.insert_plain(circ, Rational(2));
    CHECK(tr == expect);
    std::mt19937 rng(7);
    std::vector<Label> ys = {lbl('y', 1), lbl('y', 2)};
    for (int it = 0; it < 4; ++it) {
        MatrixField A = derivative(random_map(v, rng, ys, xs, true));
        A.x = xs;
        A.y = ys;
        MatrixField B = derivative(random_map(v, rng, xs, ys, true));
        B.x = ys;
        B.y = xs;
        // Tr(AB) = Tr(BA)
        CHECK(mat_trace(mat_mul(A, B)) == mat_trace(mat_mul(B, A)));
        // (AB)^T = B^T A^T
        CHECK(mat_mul(A, B).body == mat_transpose(mat_mul(mat_transpose(B), mat_transpose(A))).body);
    }
}

TEST_CASE("matrix inverse of a strut field") {
    VarTable v = vt0();
    std::vector<Label> xs = {lbl('x', 1)};
    MatrixField M;
    M.x = xs;
    M.y = xs;
    M.body = DSum(v);
    M.body.insert_plain(strutd(xs[0].with_deco(Label::kDeriv), xs[0].with_deco(Label::kDiff),
                               Kind::Root),
                        Rational(2));
    MatrixField Minv = mat_inverse(M);
    DSum expect(v);
    expect.insert_plain(strutd(xs[0].with_deco(Label::kDeriv), xs[0].with_deco(Label::kDiff),
                               Kind::Root),
                        Rational(1, 2));
    CHECK(Minv.body == expect);
    CHECK(mat_mul(Minv, M).body == mat_identity(v, xs).body);
}

TEST_CASE("determinants of strut fields and multiplicativity") {
    VarTable v = vt0(4);
    std::vector<Label> xs = {lbl('x', 1)};
    // det(I) = 1
    DSum detI = det_field(mat_identity(v, xs));
    CHECK(detI == DSum::unit(v));
    // root strut field [[c]]: exp((1/2)(log c + log c) rc) = exp(log(c) rc)
    MatrixField M;
    M.x = xs;
    M.y = xs;
    M.body = DSum(v);
    M.body.insert_plain(strutd(xs[0].with_deco(Label::kDeriv), xs[0].with_deco(Label::kDiff),
                               Kind::Root),
                        Rational(6));
    DSum d6 = det_field(M);
    LogCoef expect_rc = v.zero_coef(1);
    auto unit1 = MultiSeries::constant(Rational(1), v.nvars(1), v.ngraded(1), v.cap(), v.floor_v());
    expect_rc.add_part({{log_prime(2), 1}}, unit1);
    expect_rc.add_part({{log_prime(3), 1}}, unit1);
    CHECK(d6.rc_exp == expect_rc);
    // multiplicativity on random nondegenerate fields
    std::mt19937 rng(13);
    std::vector<Label> ys = {lbl('y', 1)};
    for (int it = 0; it < 4; ++it) {
        MatrixField A = derivative(random_map(v, rng, ys, xs, false));
        A.x = xs;
        A.y = xs;
        // relabel A's del y to del x to make it square over x
        A.body = A.body.relabeled({{ys[0].with_deco(Label::kDeriv), xs[0].with_deco(Label::kDeriv)}});
        MatrixField B = derivative(random_map(v, rng, ys, xs, false));
        B.x = xs;
        B.y = xs;
        B.body = B.body.relabeled({{ys[0].with_deco(Label::kDeriv), xs[0].with_deco(Label::kDeriv)}});
        DSum lhs = det_field(mat_mul(A, B));
        DSum rhs = det_field(A) * det_field(B);
        CHECK(lhs.rc_exp == rhs.rc_exp);
        CHECK(lhs.cc_exp == rhs.cc_exp);
        CHECK(ihx_equal(lhs, rhs));
    }
}

TEST_CASE("determinant conjugation invariance and t-derivative law") {
    VarTable v = vt0(4);
    std::mt19937 rng(17);
    std::vector<Label> xs = {lbl('x', 1)};
    std::vector<Label> ys = {lbl('y', 1)};
    for (int it = 0; it < 3; ++it) {
        // PI field M1 = derivative of Id + nonlinear
        GraphMap f = random_map(v, rng, ys, xs, false);
        MatrixField M1 = derivative(f);
        M1.x = xs;
        M1.y = xs;
        M1.body =
            M1.body.relabeled({{ys[0].with_deco(Label::kDeriv), xs[0].with_deco(Label::kDeriv)}});
        MatrixField M2;
        M2.x = xs;
        M2.y = xs;
        M2.body = DSum(v);
        M2.body.insert_plain(strutd(xs[0].with_deco(Label::kDeriv),
                                    xs[0].with_deco(Label::kDiff), Kind::Root),
                             Rational(3, 2));
        DSum lhs = det_field(mat_mul(M2, mat_mul(M1, mat_inverse(M2))));
        DSum rhs = det_field(M1);
        CHECK(lhs.rc_exp == rhs.rc_exp);
        CHECK(ihx_equal(lhs, rhs));
    }
    // d/dt det M = det M Tr(M^-1 dM/dt) for M(t) = I + t P
    for (int it = 0; it < 3; ++it) {
        GraphMap f = random_map(v, rng, ys, xs, false);
        MatrixField P = derivative(f);
        P.x = xs;
        P.y = xs;
        P.body =
            P.body.relabeled({{ys[0].with_deco(Label::kDeriv), xs[0].with_deco(Label::kDeriv)}});
        P.body = P.body - mat_identity(v, xs).body;
        // multiply P by t
        LogCoef tvar = v.zero_coef(0);
        tvar.add_part({}, MultiSeries::variable(v.avar(0, 0), v.nvars(0), v.ngraded(0), v.cap(),
                                                v.floor_v()));
        MatrixField Mt;
        Mt.x = xs;
        Mt.y = xs;
        Mt.body = mat_identity(v, xs).body + P.body.scaled_aux(tvar);
        DSum detM = det_field(Mt);
        // the strut part is the identity, so no circle exponent appears
        REQUIRE(detM.rc_exp.is_zero());
        DSum lhs = detM.diff_aux(0);
        MatrixField dMt = Mt;
        dMt.body = Mt.body.diff_aux(0);
        DSum rhs = detM * mat_trace(mat_mul(mat_inverse(Mt), dMt));
        CHECK(ihx_equal(lhs, rhs));
    }
}
