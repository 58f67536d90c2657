#include "jdcalc/graphmap.hpp"

#include <algorithm>

namespace jdcalc {

namespace {

// strut(u, w) of the kind demanded by the labels (total when either is total)
Diagram strut_for(Label u, Label w) {
    Kind k;
    if (u.kind() == Kind::Total || w.kind() == Kind::Total)
        k = Kind::Total;
    else if (u.kind() != w.kind())
        k = u.kind(); // canonicalization will drop the mismatch
    else
        k = u.kind();
    Diagram d;
    d.legs = {u, w};
    d.edges = {Edge{End{0, 0}, End{1, 0}, k}};
    return d;
}

bool is_strut_term(const Diagram& g) {
    return g.n3 == 0 && g.legs.size() == 2 && g.edges.size() == 1 && g.sp.empty();
}

Label fresh(Label base, int salt) { return Label{base.base, base.deco, (int16_t)(29000 + salt)}; }

} // namespace

GraphMap identity_map(const VarTable& vt, const std::vector<Label>& out,
                      const std::vector<Label>& in) {
    if (out.size() != in.size()) throw PreconditionError("identity needs matching coordinates");
    GraphMap f;
    f.body = DSum(vt);
    f.in = in;
    f.out = out;
    for (size_t j = 0; j < in.size(); ++j)
        f.body.insert_plain(strut_for(out[j], in[j]), Rational(1));
    return f;
}

DSum substituted_body(const DSum& body, const std::vector<GraphMap>& maps) {
    // exp of the sum of all map bodies with retagged outputs, then LR gluing
    DSum expo(body.vt);
    std::vector<std::pair<Label, Label>> tags;
    int salt = 0;
    for (auto& f : maps)
        for (auto& y : f.out) {
            Label tmp = fresh(y, salt++);
            tags.emplace_back(y, tmp);
            std::map<Label, Label> ren = {{y, tmp}};
            // the part of f with output y
            DSum fy(body.vt);
            for (auto& [k, t] : f.body.terms) {
                int n = 0;
                for (auto& l : t.cn.data->g.legs)
                    if (l == y) ++n;
                if (n > 1)
                    throw PreconditionError("map output label collides with an input: " + y.str());
                if (n == 1) fy.add_term_canonical(t.cn, t.deco, t.den);
            }
            expo += fy.relabeled(ren);
        }
    DSum r = body * expo.exp_sum();
    for (auto& [y, tmp] : tags) r = r.glue(y, tmp, DSum::GlueMode::LR);
    return r;
}

GraphMap compose(const GraphMap& g, const GraphMap& f) {
    for (auto& y : g.in) {
        bool found = false;
        for (auto& o : f.out) found = found || o == y;
        if (!found) throw PreconditionError("composition coordinate mismatch: " + y.str());
    }
    GraphMap r;
    r.body = substituted_body(g.body, {f});
    r.in = f.in;
    r.out = g.out;
    return r;
}

GraphMap strut_part(const GraphMap& f) {
    GraphMap r;
    r.body = DSum(f.body.vt);
    r.in = f.in;
    r.out = f.out;
    for (auto& [k, t] : f.body.terms)
        if (is_strut_term(t.cn.data->g)) r.body.add_term_canonical(t.cn, t.deco, t.den);
    return r;
}

GraphMap linear_part(const GraphMap& f) {
    GraphMap r;
    r.body = DSum(f.body.vt);
    r.in = f.in;
    r.out = f.out;
    for (auto& [k, t] : f.body.terms) {
        const Diagram& g = t.cn.data->g;
        if (!is_strut_term(g)) continue;
        int coords = 0;
        for (auto& l : g.legs)
            for (auto& x : f.in)
                if (l == x) ++coords;
        if (coords == 1) r.body.add_term_canonical(t.cn, t.deco, t.den);
    }
    return r;
}

namespace {

// one-slot-layout series of a decorated strut coefficient, oriented from the
// `from` leg towards the `to` leg
MultiSeries strut_entry(const VarTable& vt, const DTerm& t, Label from, Label to) {
    const Diagram& g = t.cn.data->g;
    if (!t.deco.is_series()) throw PreconditionError("strut entry with log coefficients");
    MultiSeries s = t.deco.series_part();
    if (t.cn.data->coh.rank == 1) {
        // flip the class when the canonical edge runs to -> from
        const Edge& e = g.edges[t.cn.data->coh.root_edges[0]];
        Label la = g.legs[e.a.v - g.n3];
        Label lb = g.legs[e.b.v - g.n3];
        bool forward = la == from && lb == to;
        bool backward = la == to && lb == from;
        if (!forward && !backward) throw PreconditionError("strut entry label mismatch");
        if (backward) {
            std::vector<int> flips;
            for (int j = 0; j < vt.L; ++j) flips.push_back(vt.dvar(0, j));
            s = s.parity_flip_set(flips);
        }
    }
    return s;
}

} // namespace

std::vector<std::vector<MultiSeries>> strut_matrix(const MatrixField& m) {
    const VarTable& vt = m.body.vt;
    size_t n = m.y.size();
    if (m.x.size() != n) throw PreconditionError("rectangular matrix field");
    std::vector<std::vector<MultiSeries>> out(n, std::vector<MultiSeries>(n, vt.zero_series(1)));
    for (auto& [k, t] : m.body.terms) {
        const Diagram& g = t.cn.data->g;
        if (!is_strut_term(g)) continue;
        int ri = -1, ci = -1;
        for (auto& l : g.legs) {
            for (size_t i = 0; i < n; ++i) {
                if (l == m.y[i].with_deco(Label::kDeriv)) ri = (int)i;
                if (l == m.x[i].with_deco(Label::kDiff)) ci = (int)i;
            }
        }
        if (ri < 0 || ci < 0) continue;
        out[ri][ci] += strut_entry(vt, t, m.x[ci].with_deco(Label::kDiff),
                                   m.y[ri].with_deco(Label::kDeriv));
    }
    return out;
}

MultiSeries det_series(const std::vector<std::vector<MultiSeries>>& m) {
    size_t n = m.size();
    if (n == 0) throw PreconditionError("empty determinant");
    if (n == 1) return m[0][0];
    MultiSeries acc = m[0][0];
    acc = MultiSeries(acc.nvars, acc.ngraded, acc.cap, acc.floor_);
    for (size_t j = 0; j < n; ++j) {
        if (m[0][j].is_zero()) continue;
        std::vector<std::vector<MultiSeries>> minor;
        for (size_t r = 1; r < n; ++r) {
            std::vector<MultiSeries> row;
            for (size_t c = 0; c < n; ++c)
                if (c != j) row.push_back(m[r][c]);
            minor.push_back(row);
        }
        MultiSeries piece = m[0][j] * det_series(minor);
        acc += (j % 2) ? -piece : piece;
    }
    return acc;
}

std::vector<std::vector<MultiSeries>> invert_series_matrix(
    const std::vector<std::vector<MultiSeries>>& m) {
    size_t n = m.size();
    MultiSeries det = det_series(m);
    MultiSeries dinv = det.inverted(); // throws when not Laurent-invertible
    std::vector<std::vector<MultiSeries>> out(n, std::vector<MultiSeries>(n, dinv));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) {
            // cofactor C_ji
            std::vector<std::vector<MultiSeries>> minor;
            for (size_t r = 0; r < n; ++r) {
                if (r == j) continue;
                std::vector<MultiSeries> row;
                for (size_t c = 0; c < n; ++c)
                    if (c != i) row.push_back(m[r][c]);
                minor.push_back(row);
            }
            MultiSeries cof =
                n == 1 ? MultiSeries::constant(Rational(1), m[0][0].nvars, m[0][0].ngraded,
                                               m[0][0].cap, m[0][0].floor_)
                       : det_series(minor);
            if ((i + j) % 2) cof = -cof;
            out[i][j] = cof * dinv;
        }
    return out;
}

namespace {

// linear strut map from a series matrix: out_i <- sum_j m[i][j] in_j.
// The one-slot series decorates the strut edge oriented in -> out.
DSum struts_from_matrix(const VarTable& vt, const std::vector<Label>& outs,
                        const std::vector<Label>& ins,
                        const std::vector<std::vector<MultiSeries>>& m) {
    DSum r(vt);
    for (size_t i = 0; i < outs.size(); ++i)
        for (size_t j = 0; j < ins.size(); ++j) {
            if (m[i][j].is_zero()) continue;
            Diagram d = strut_for(outs[i], ins[j]);
            // raw edge 0 oriented legs[0]=out -> legs[1]=in; the decoration is
            // oriented in -> out, so flip
            std::vector<int> flips;
            for (int jj = 0; jj < vt.L; ++jj) flips.push_back(vt.dvar(0, jj));
            MultiSeries deco = m[i][j].parity_flip_set(flips);
            SlotDesc sd;
            sd.type = SlotDesc::Graph;
            sd.edges = {{0, Rational(1)}};
            r.insert_decorated(d, {sd}, LogCoef::from_series(deco), {});
        }
    return r;
}

} // namespace

GraphMap invert_map(const GraphMap& f) {
    const VarTable& vt = f.body.vt;
    size_t n = f.in.size();
    if (f.out.size() != n) throw PreconditionError("inverting a non-square map");
    // linear strut matrix: out_i = sum l[i][j] in_j
    std::vector<std::vector<MultiSeries>> L(n, std::vector<MultiSeries>(n, vt.zero_series(1)));
    GraphMap fs = strut_part(f);
    DSum consts(vt); // constant struts (and any other strut onto parameters)
    consts.den_base = f.body.den_base;
    consts.den_name = f.body.den_name;
    for (auto& [k, t] : fs.body.terms) {
        const Diagram& g = t.cn.data->g;
        int oi = -1, ij = -1;
        for (auto& l : g.legs) {
            for (size_t c = 0; c < n; ++c) {
                if (l == f.out[c]) oi = (int)c;
                if (l == f.in[c]) ij = (int)c;
            }
        }
        if (oi < 0) throw PreconditionError("strut term without an output leg");
        if (ij >= 0)
            L[oi][ij] += strut_entry(vt, t, f.in[ij], f.out[oi]);
        else
            consts.add_term_canonical(t.cn, t.deco, t.den);
    }
    std::vector<std::vector<MultiSeries>> Linv = invert_series_matrix(L);
    // strut-part inverse: in = Linv (out - consts)
    GraphMap sinv;
    sinv.in = f.out;
    sinv.out = f.in;
    sinv.body = struts_from_matrix(vt, f.in, f.out, Linv);
    if (!consts.is_zero()) {
        // sinv = Linv o (Id - consts)
        GraphMap shift;
        shift.in = f.out;
        shift.out = f.out;
        shift.body = identity_map(vt, f.out, f.out).body - consts;
        GraphMap lin;
        lin.in = f.out;
        lin.out = f.in;
        lin.body = struts_from_matrix(vt, f.in, f.out, Linv);
        sinv = compose(lin, shift);
    }
    // perturbative correction: G = sinv o f = Id + G'; H_{n+1} = H_n - (H_n o G - Id)
    GraphMap G = compose(sinv, f);
    GraphMap H = identity_map(vt, f.in, f.in);
    GraphMap Idm = identity_map(vt, f.in, f.in);
    for (int it = 0; it <= vt.degcap + 2; ++it) {
        GraphMap HG = compose(H, G);
        DSum err = HG.body - Idm.body;
        if (err.is_zero()) break;
        H.body = H.body - err;
        if (it == vt.degcap + 2)
            throw PreconditionError("perturbative inverse did not stabilize");
    }
    return compose(H, sinv);
}

namespace {

// relabel exactly one leg `from` to `to` in all ways
DSum relabel_one_leg(const DSum& u, Label from, Label to) {
    DSum r(u.vt);
    r.rc_exp = u.rc_exp;
    r.cc_exp = u.cc_exp;
    r.den_base = u.den_base;
    r.den_name = u.den_name;
    for (auto& [k, t] : u.terms) {
        const Diagram& g = t.cn.data->g;
        for (int lg = 0; lg < (int)g.legs.size(); ++lg) {
            if (!(g.legs[lg] == from)) continue;
            Diagram d = g;
            d.legs[lg] = to;
            std::vector<SlotDesc> slots;
            const CanonData& cd = *t.cn.data;
            for (int b = 0; b < cd.layout.rank; ++b) {
                SlotDesc sd;
                sd.type = SlotDesc::Graph;
                sd.edges = {{cd.coh.basis_edge[b], Rational(1)}};
                slots.push_back(sd);
            }
            for (int i = 0; i < cd.layout.n_rc; ++i)
                slots.push_back(SlotDesc{SlotDesc::Rc, {}, i, {}});
            for (int i = 0; i < cd.layout.n_dot; ++i)
                slots.push_back(SlotDesc{SlotDesc::Dot, {}, i, {}});
            for (auto& [l, cnt] : cd.g.sp.ldot)
                for (int c = 0; c < cnt; ++c) {
                    SlotDesc sd;
                    sd.type = SlotDesc::Ldot;
                    sd.ldot_label = l;
                    sd.ordinal = c;
                    slots.push_back(sd);
                }
            std::vector<int> den_by_edge(d.edges.size(), 0);
            for (size_t p = 0; p < t.den.size(); ++p)
                den_by_edge[cd.coh.root_edges[p]] = t.den[p];
            r.insert_decorated(d, slots, t.deco, den_by_edge);
        }
    }
    return r;
}

} // namespace

MatrixField derivative(const GraphMap& f) {
    MatrixField m;
    m.x = f.in;
    m.y = f.out;
    m.body = DSum(f.body.vt);
    for (auto& y : f.out) {
        std::map<Label, Label> ren = {{y, y.with_deco(Label::kDeriv)}};
        DSum with_dy = f.body.relabeled(ren);
        // keep only terms that had the y leg (the relabel is per-term total;
        // terms without y keep no derivative leg and are filtered below)
        for (auto& x : f.in) m.body += relabel_one_leg(with_dy, x, x.with_deco(Label::kDiff));
    }
    // filter: exactly one del leg and one d leg
    DSum filtered(m.body.vt);
    for (auto& [k, t] : m.body.terms) {
        int nd = 0, np = 0;
        for (auto& l : t.cn.data->g.legs) {
            if (l.deco == Label::kDiff) ++nd;
            if (l.deco == Label::kDeriv) ++np;
        }
        if (nd == 1 && np == 1) filtered.add_term_canonical(t.cn, t.deco, t.den);
    }
    m.body = filtered;
    return m;
}

MatrixField mat_identity(const VarTable& vt, const std::vector<Label>& coords) {
    MatrixField m;
    m.x = coords;
    m.y = coords;
    m.body = DSum(vt);
    for (auto& c : coords)
        m.body.insert_plain(strut_for(c.with_deco(Label::kDeriv), c.with_deco(Label::kDiff)),
                            Rational(1));
    return m;
}

MatrixField mat_mul(const MatrixField& m1, const MatrixField& m2) {
    if (m1.x.size() != m2.y.size()) throw PreconditionError("matrix shape mismatch");
    MatrixField r;
    r.x = m2.x;
    r.y = m1.y;
    r.body = DSum(m1.body.vt);
    for (size_t j = 0; j < m1.x.size(); ++j) {
        Label dy = m1.x[j].with_deco(Label::kDiff);
        Label py = m2.y[j].with_deco(Label::kDeriv);
        r.body += glue_pair(m1.body, m2.body, dy, py, DSum::GlueMode::Once);
    }
    return r;
}

DSum mat_trace(const MatrixField& m) {
    DSum r(m.body.vt);
    for (size_t j = 0; j < m.x.size(); ++j)
        r += m.body.glue(m.y[j].with_deco(Label::kDeriv), m.x[j].with_deco(Label::kDiff),
                         DSum::GlueMode::Once);
    return r;
}

MatrixField mat_transpose(const MatrixField& m) {
    MatrixField r;
    r.x = m.y;
    r.y = m.x;
    r.body = DSum(m.body.vt);
    std::map<Label, Label> ren;
    for (auto& c : m.x) {
        Label d = c.with_deco(Label::kDiff);
        ren[d] = Label{d.base, Label::kDeriv, d.index};
    }
    for (auto& c : m.y) {
        Label p = c.with_deco(Label::kDeriv);
        ren[p] = Label{p.base, Label::kDiff, p.index};
    }
    r.body = m.body.relabeled(ren);
    return r;
}

MatrixField mat_add(const MatrixField& a, const MatrixField& b) {
    MatrixField r = a;
    r.body = a.body + b.body;
    return r;
}

MatrixField mat_scale(const MatrixField& a, const Rational& c) {
    MatrixField r = a;
    r.body = a.body.scaled(c);
    return r;
}

namespace {

MatrixField mat_strut_part(const MatrixField& m) {
    MatrixField r = m;
    r.body = DSum(m.body.vt);
    for (auto& [k, t] : m.body.terms)
        if (is_strut_term(t.cn.data->g)) r.body.add_term_canonical(t.cn, t.deco, t.den);
    return r;
}

} // namespace

MatrixField mat_inverse(const MatrixField& m) {
    const VarTable& vt = m.body.vt;
    MatrixField ms = mat_strut_part(m);
    std::vector<std::vector<MultiSeries>> L = strut_matrix(ms);
    std::vector<std::vector<MultiSeries>> Linv = invert_series_matrix(L);
    MatrixField msi;
    msi.x = m.y;
    msi.y = m.x;
    msi.body = DSum(vt);
    // inverse strut field: entries Linv[i][j] from d(y_j) to del(x_i)
    {
        std::vector<Label> douts, dins;
        for (auto& c : m.x) douts.push_back(c.with_deco(Label::kDeriv));
        for (auto& c : m.y) dins.push_back(c.with_deco(Label::kDiff));
        msi.body = struts_from_matrix(vt, douts, dins, Linv);
    }
    // N = msi x m = I + P
    MatrixField N = mat_mul(msi, m);
    MatrixField P = N;
    P.body = N.body - mat_identity(vt, m.x).body;
    MatrixField acc = mat_identity(vt, m.x);
    MatrixField power = acc;
    for (int n = 1;; ++n) {
        power = mat_mul(power, P);
        if (power.body.is_zero()) break;
        acc.body += (n % 2) ? -power.body : power.body;
        if (n > vt.degcap + 4) throw PreconditionError("matrix inverse did not stabilize");
    }
    return mat_mul(acc, msi);
}

DSum det_field(const MatrixField& m) {
    const VarTable& vt = m.body.vt;
    MatrixField ms = mat_strut_part(m);
    // split coordinates into root and Cartan blocks
    std::vector<size_t> rootc, cartc;
    for (size_t i = 0; i < m.x.size(); ++i)
        (m.x[i].kind() == Kind::Cartan ? cartc : rootc).push_back(i);
    std::vector<std::vector<MultiSeries>> L = strut_matrix(ms);
    auto block = [&](const std::vector<size_t>& ix) {
        std::vector<std::vector<MultiSeries>> b(ix.size(),
                                                std::vector<MultiSeries>(ix.size()));
        for (size_t i = 0; i < ix.size(); ++i)
            for (size_t j = 0; j < ix.size(); ++j) b[i][j] = L[ix[i]][ix[j]];
        return b;
    };
    // degenerate when the strut determinant vanishes identically
    for (auto& ix : {rootc, cartc}) {
        if (ix.empty()) continue;
        // off-diagonal root/cartan entries vanish (struts do not mix kinds)
    }
    DSum out = DSum::unit(vt);
    out.den_base = m.body.den_base;
    out.den_name = m.body.den_name;
    if (!rootc.empty()) {
        MultiSeries dr = det_series(block(rootc));
        if (dr.is_zero()) return DSum(vt);
        std::vector<int> flips;
        for (int j = 0; j < vt.L; ++j) flips.push_back(vt.dvar(0, j));
        LogCoef lg = LogCoef::log_of(dr) + LogCoef::log_of(dr.parity_flip_set(flips));
        out.rc_exp += lg.scaled(Rational(1, 2));
    }
    if (!cartc.empty()) {
        MultiSeries dc = det_series(block(cartc));
        if (dc.is_zero()) return DSum(vt);
        // Cartan strut coefficients carry no decoration variables
        std::vector<int> down(vt.nvars(1), -1);
        for (int k = 0; k < vt.naux(); ++k) down[vt.avar(1, k)] = vt.avar(0, k);
        out.cc_exp += LogCoef::log_of(dc).reindexed(vt.nvars(0), vt.ngraded(0), down);
    }
    // PI part
    MatrixField msi;
    {
        std::vector<std::vector<MultiSeries>> Linv = invert_series_matrix(L);
        std::vector<Label> douts, dins;
        for (auto& c : m.x) douts.push_back(c.with_deco(Label::kDeriv));
        for (auto& c : m.y) dins.push_back(c.with_deco(Label::kDiff));
        msi.x = m.y;
        msi.y = m.x;
        msi.body = struts_from_matrix(vt, douts, dins, Linv);
    }
    MatrixField N = mat_mul(msi, m);
    MatrixField P = N;
    P.body = N.body - mat_identity(vt, m.x).body;
    DSum trlog(vt);
    trlog.den_base = m.body.den_base;
    trlog.den_name = m.body.den_name;
    MatrixField power = P;
    for (int n = 1;; ++n) {
        if (power.body.is_zero()) break;
        trlog += mat_trace(power).scaled(Rational((n % 2) ? 1 : -1) / n);
        power = mat_mul(power, P);
        if (n > vt.degcap + 4) throw PreconditionError("Tr log did not stabilize");
    }
    DSum pi = trlog.exp_sum();
    DSum r = out * pi;
    return r;
}

// ---- Lie operations ----

DSum nabla(const DSum& t, const std::vector<Label>& coords) {
    DSum r(t.vt);
    for (auto& x : coords) r += relabel_one_leg(t, x, x.with_deco(Label::kDiff));
    return r;
}

DSum nabla_along(const DSum& xi, const DSum& t, const std::vector<Label>& coords) {
    DSum r(t.vt);
    for (auto& x : coords)
        r += glue_pair(xi, t, x.with_deco(Label::kDeriv), x, DSum::GlueMode::Once);
    return r;
}

DSum divergence(const DSum& xi, const std::vector<Label>& coords) {
    DSum r(xi.vt);
    for (auto& x : coords)
        r += xi.glue(x.with_deco(Label::kDeriv), x, DSum::GlueMode::Once);
    return r;
}

DSum lie_deriv_measure(const DSum& xi, const DSum& g, const std::vector<Label>& coords) {
    return nabla_along(xi, g, coords) + g * divergence(xi, coords);
}

MatrixField ad_matrix(const VarTable& vt, Label x) {
    // [x, w]: one 3-vertex with cyclic order (out=del, x, in=d); all edges
    // total, the leg label kinds prune the resolutions
    MatrixField m;
    m.x = {x};
    m.y = {x};
    m.body = DSum(vt);
    Diagram d;
    d.n3 = 1;
    d.legs = {x.with_deco(Label::kDeriv), x, x.with_deco(Label::kDiff)};
    d.edges = {Edge{End{0, 0}, End{1, 0}, Kind::Total}, Edge{End{0, 1}, End{2, 0}, Kind::Total},
               Edge{End{0, 2}, End{3, 0}, Kind::Total}};
    m.body.insert_plain(d, Rational(1));
    return m;
}

DSum ad_vector_field(const VarTable& vt, Label param, Label coord) {
    // the vector field [param, coord] with a del(coord) leg
    DSum xi(vt);
    Diagram d;
    d.n3 = 1;
    d.legs = {coord.with_deco(Label::kDeriv), param, coord};
    d.edges = {Edge{End{0, 0}, End{1, 0}, Kind::Total}, Edge{End{0, 1}, End{2, 0}, Kind::Total},
               Edge{End{0, 2}, End{3, 0}, Kind::Total}};
    xi.insert_plain(d, Rational(1));
    return xi;
}

DSum div_ad(const VarTable& vt, const DSum& xi, Label x) {
    MatrixField ad = ad_matrix(vt, x);
    // ad_X x Xi: glue the d leg of ad onto the del leg of Xi
    DSum v = glue_pair(ad.body, xi, x.with_deco(Label::kDiff), x.with_deco(Label::kDeriv),
                       DSum::GlueMode::Once);
    return divergence(v, {x});
}

} // namespace jdcalc
