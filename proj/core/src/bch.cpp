#include "jdcalc/bch.hpp"

namespace jdcalc {

std::map<std::string, Rational> bch_coefficients(int depth) {
    using Poly = std::map<std::string, Rational>;
    auto mul = [&](const Poly& a, const Poly& b) {
        Poly r;
        for (auto& [wa, ca] : a)
            for (auto& [wb, cb] : b) {
                if ((int)(wa.size() + wb.size()) > depth) continue;
                r[wa + wb] += ca * cb;
            }
        for (auto it = r.begin(); it != r.end();)
            it = (it->second == 0) ? r.erase(it) : std::next(it);
        return r;
    };
    // S = e^A e^B - 1
    Poly S;
    Rational pf(1);
    for (int p = 0; p <= depth; ++p) {
        if (p > 0) pf *= p;
        Rational qf(1);
        for (int q = 0; q + p <= depth; ++q) {
            if (q > 0) qf *= q;
            if (p + q == 0) continue;
            S[std::string(p, 'A') + std::string(q, 'B')] += Rational(1) / (pf * qf);
        }
    }
    // log(1 + S)
    Poly z;
    Poly power = {{"", Rational(1)}};
    for (int k = 1; k <= depth; ++k) {
        power = mul(power, S);
        Rational c = Rational((k % 2) ? 1 : -1) / k;
        for (auto& [w, cw] : power) z[w] += c * cw;
    }
    // Dynkin projection: z_n = (1/n) sum_w z(w) [w_1,[...,w_n]]
    std::map<std::string, Rational> out;
    for (auto& [w, c] : z) {
        if (w.empty() || c == 0) continue;
        out[w] += c / Rational((long)w.size());
    }
    for (auto it = out.begin(); it != out.end();)
        it = (it->second == 0) ? out.erase(it) : std::next(it);
    return out;
}

Diagram caterpillar(const std::vector<Label>& leaves, Label out) {
    int n = (int)leaves.size();
    Diagram d;
    if (n == 0) throw PreconditionError("empty caterpillar");
    if (n == 1) {
        d.legs = {out, leaves[0]};
        d.edges = {Edge{End{0, 0}, End{1, 0}, Kind::Total}};
        return d;
    }
    int nv = n - 1;
    d.n3 = nv;
    d.legs.push_back(out); // leg id nv
    for (auto& l : leaves) d.legs.push_back(l);
    auto legid = [&](int i) { return nv + 1 + i; };
    d.edges.push_back(Edge{End{0, 0}, End{nv, 0}, Kind::Total}); // root edge to out
    for (int k = 0; k < nv; ++k) {
        d.edges.push_back(Edge{End{k, 1}, End{legid(k), 0}, Kind::Total});
        if (k + 1 < nv)
            d.edges.push_back(Edge{End{k, 2}, End{k + 1, 0}, Kind::Total});
        else
            d.edges.push_back(Edge{End{k, 2}, End{legid(n - 1), 0}, Kind::Total});
    }
    return d;
}

GraphMap bch_map(const VarTable& vt, Label first, Label second, Label out, int depth) {
    GraphMap e;
    e.in = {first, second};
    e.out = {out};
    e.body = DSum(vt);
    for (auto& [w, c] : bch_coefficients(depth)) {
        std::vector<Label> leaves;
        for (char ch : w) leaves.push_back(ch == 'A' ? first : second);
        e.body.insert_plain(caterpillar(leaves, out), c);
    }
    return e;
}

GraphMap bch_split(const VarTable& vt, Label xr, Label xc, Label y, Label b, int depth) {
    // Etil(y, b) = (E_r, E_c) with outputs (xr, xc)
    Label tmp = lbl('W', 27001);
    GraphMap E = bch_map(vt, y, b, tmp, depth);
    GraphMap Etil;
    Etil.in = {y, b};
    Etil.out = {xr, xc};
    Etil.body = E.body.relabeled({{tmp, xr}}) + E.body.relabeled({{tmp, xc}});
    return invert_map(Etil);
}

FPair f_maps(const VarTable& vt, Label y, Label x, Label z, Label h, int depth) {
    Label xr = lbl('w', 27011);
    Label xc = lbl('b', 27011);
    GraphMap S = bch_split(vt, xr, xc, z, h, depth);
    // G: (y, x) -> (xr, xc) via E(y, x)
    Label tmp = lbl('W', 27012);
    GraphMap E = bch_map(vt, y, x, tmp, depth);
    GraphMap G;
    G.in = {x};
    G.out = {xr, xc};
    G.body = E.body.relabeled({{tmp, xr}}) + E.body.relabeled({{tmp, xc}});
    GraphMap C = compose(S, G);
    FPair out;
    out.F.in = {x};
    out.F.out = {z};
    out.F.body = DSum(vt);
    out.Ftilde.in = {x};
    out.Ftilde.out = {h};
    out.Ftilde.body = DSum(vt);
    for (auto& [k, t] : C.body.terms) {
        int nz = 0, nh = 0;
        for (auto& l : t.cn.data->g.legs) {
            if (l == z) ++nz;
            if (l == h) ++nh;
        }
        if (nz == 1 && nh == 0)
            out.F.body.add_term_canonical(t.cn, t.deco, t.den);
        else if (nh == 1 && nz == 0)
            out.Ftilde.body.add_term_canonical(t.cn, t.deco, t.den);
        else
            throw PreconditionError("split map term without a unique output");
    }
    return out;
}

GraphMap ad_exp_map(const VarTable& vt, Label y, Label x, Label out, int depth) {
    GraphMap m;
    m.in = {x};
    m.out = {out};
    m.body = DSum(vt);
    Rational fact(1);
    for (int n = 0; n <= depth; ++n) {
        if (n > 0) fact *= n;
        std::vector<Label> leaves(n, y);
        leaves.push_back(x);
        m.body.insert_plain(caterpillar(leaves, out), Rational(1) / fact);
    }
    return m;
}

GraphMap orbit_map(const VarTable& vt, Label a, Label x, Label out, int depth) {
    GraphMap m;
    m.in = {x};
    m.out = {out};
    m.body = DSum(vt);
    Rational fact(1);
    for (int n = 0; n <= depth; ++n) {
        if (n > 0) fact *= n;
        std::vector<Label> leaves(n, x);
        leaves.push_back(a);
        m.body.insert_plain(caterpillar(leaves, out), Rational(1) / fact);
    }
    return m;
}

DSum measure_mu(const VarTable& vt, Label x) {
    if (x.kind() != Kind::Root) throw PreconditionError("measure wants a root coordinate");
    MatrixField ad = ad_matrix(vt, x);
    MatrixField M = ad;
    M.body = DSum(vt);
    MatrixField power = mat_identity(vt, {x});
    Rational fact(1); // (n+1)!
    for (int n = 1; 2 * n <= vt.degcap + 2; ++n) {
        // build (-ad)^n / (n+1)!
        power = mat_mul(power, ad);
        if (power.body.is_zero()) break;
        fact = Rational(1);
        for (int k = 2; k <= n + 1; ++k) fact *= k;
        M.body += power.body.scaled(rat_pow(Rational(-1), n) / fact);
    }
    MatrixField IM = mat_add(mat_identity(vt, {x}), M);
    return det_field(IM);
}

} // namespace jdcalc
