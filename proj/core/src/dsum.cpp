#include "jdcalc/dsum.hpp"

#include <algorithm>
#include <functional>
#include <istream>
#include <numeric>
#include <set>
#include <sstream>

namespace jdcalc {

std::vector<std::string> VarTable::names(int nslots) const {
    std::vector<std::string> n;
    for (int s = 0; s < nslots; ++s)
        for (int j = 0; j < L; ++j)
            n.push_back("u" + std::to_string(s) + "_" + std::to_string(j + 1));
    for (auto& a : aux) n.push_back(a);
    return n;
}

std::vector<int> VarTable::embed(int nslots, int into_nslots, int slot_offset) const {
    std::vector<int> m(nvars(nslots));
    for (int s = 0; s < nslots; ++s)
        for (int j = 0; j < L; ++j) m[dvar(s, j)] = dvar(s + slot_offset, j);
    for (int k = 0; k < naux(); ++k) m[avar(nslots, k)] = avar(into_nslots, k);
    return m;
}

DSum::DSum(const VarTable& v) : vt(v), rc_exp(v.zero_coef(1)), cc_exp(v.zero_coef(0)) {}

DSum DSum::unit(const VarTable& v) {
    DSum s(v);
    s.insert_plain(Diagram{}, Rational(1));
    return s;
}

namespace {

std::string den_suffix(const std::vector<int>& den) {
    if (std::all_of(den.begin(), den.end(), [](int k) { return k == 0; })) return "";
    std::string s = "|den:";
    for (int k : den) s += std::to_string(k) + ",";
    return s;
}

void resolve_totals(const Diagram& d, std::vector<Diagram>& out) {
    for (size_t i = 0; i < d.edges.size(); ++i) {
        if (d.edges[i].kind != Kind::Total) continue;
        Diagram r = d;
        r.edges[i].kind = Kind::Root;
        resolve_totals(r, out);
        r.edges[i].kind = Kind::Cartan;
        resolve_totals(r, out);
        return;
    }
    out.push_back(d);
}

int ldot_global_ordinal(const Specials& sp, const Label& l, int copy) {
    int ord = 0;
    for (auto& [ll, cc] : sp.ldot) {
        if (ll == l) {
            if (copy >= cc) throw PreconditionError("ldot copy out of range");
            return ord + copy;
        }
        ord += cc;
    }
    throw PreconditionError("ldot label not found in specials");
}

} // namespace

int DSum::term_min_deg(const DTerm& t) const {
    const Diagram& g = t.cn.data->g;
    int base = g.leg_count() + g.chi();
    int mind = 0;
    bool first = true;
    for (auto& [m, s] : t.deco.parts) {
        auto d = s.min_graded_degree();
        if (d && (first || *d < mind)) mind = *d, first = false;
    }
    return base + (first ? 0 : mind);
}

void DSum::add_term_canonical(const Canon& cn, const LogCoef& deco, const std::vector<int>& den) {
    if (deco.is_zero()) return;
    const Diagram& g = cn.data->g;
    if (g.chi() > vt.chicap) return;
    int base = g.leg_count() + g.chi();
    LogCoef kept = vt.zero_coef(slots_of(*cn.data));
    for (auto& [m, s] : deco.parts) {
        MultiSeries filt(s.nvars, s.ngraded, s.cap, s.floor_);
        for (auto& [e, c] : s.terms)
            if (base + s.graded_degree(e) <= vt.degcap) filt.terms.emplace(e, c);
        kept.add_part(m, filt);
    }
    if (kept.is_zero()) return;
    std::string key = cn.data->key + den_suffix(den);
    auto it = terms.find(key);
    if (it == terms.end()) {
        DTerm t;
        t.cn = cn;
        t.deco = kept;
        t.den = den;
        terms.emplace(key, std::move(t));
    } else {
        it->second.deco += kept;
        if (it->second.deco.is_zero()) terms.erase(it);
    }
}

namespace {

std::map<int, std::vector<Rational>> aut_substitution(const VarTable& vt, const CanonData& cd,
                                                      const EdgeAut& a) {
    std::map<int, std::vector<Rational>> lin;
    const CohBasis& coh = cd.coh;
    std::map<int, int> pos_of;
    for (size_t p = 0; p < coh.root_edges.size(); ++p) pos_of[coh.root_edges[p]] = (int)p;
    int nslots = cd.layout.slots();
    for (int b = 0; b < coh.rank; ++b) {
        int e = coh.basis_edge[b];
        int img = a.edge_perm[e];
        int flip = a.edge_flip[e];
        auto it = pos_of.find(img);
        if (it == pos_of.end()) throw PreconditionError("automorphism leaves root edges");
        const auto& cls = coh.edge_class[it->second];
        bool identity = true;
        for (int c = 0; c < coh.rank; ++c) {
            Rational expect = (c == b && flip > 0) ? Rational(1) : Rational(0);
            if (cls[c] * Rational(flip) != expect) identity = false;
        }
        if (identity) continue;
        for (int j = 0; j < vt.L; ++j) {
            std::vector<Rational> row(vt.nvars(nslots), Rational(0));
            for (int c = 0; c < coh.rank; ++c)
                if (cls[c] != 0) row[vt.dvar(c, j)] = cls[c] * Rational(flip);
            lin[vt.dvar(b, j)] = row;
        }
    }
    return lin;
}

std::vector<int> aut_den(const CohBasis& coh, const EdgeAut& a, const std::vector<int>& den) {
    if (den.empty() || std::all_of(den.begin(), den.end(), [](int k) { return k == 0; }))
        return den;
    std::map<int, int> pos_of;
    for (size_t p = 0; p < coh.root_edges.size(); ++p) pos_of[coh.root_edges[p]] = (int)p;
    std::vector<int> out(den.size(), 0);
    for (size_t p = 0; p < coh.root_edges.size(); ++p) {
        int img = a.edge_perm[coh.root_edges[p]];
        out[pos_of.at(img)] = den[p];
    }
    return out;
}

// slot -> (image slot, sign) elements of the special-slot symmetry group
using SlotPerm = std::vector<std::pair<int, int>>;

std::vector<SlotPerm> special_slot_group(const CanonData& cd) {
    const DecorLayout& lay = cd.layout;
    auto all_perms = [](int n) {
        std::vector<std::vector<int>> out;
        std::vector<int> p(n);
        std::iota(p.begin(), p.end(), 0);
        do
            out.push_back(p);
        while (std::next_permutation(p.begin(), p.end()));
        return out;
    };
    std::vector<std::vector<int>> rc_perms = all_perms(lay.n_rc);
    std::vector<std::vector<int>> dot_perms = all_perms(lay.n_dot);
    std::vector<std::vector<int>> ldot_group_sizes;
    std::vector<std::vector<std::vector<int>>> ldot_perms;
    std::vector<std::vector<int>> ldot_groups;
    {
        int ord = 0;
        for (auto& [l, cnt] : cd.g.sp.ldot) {
            std::vector<int> grp;
            for (int i = 0; i < cnt; ++i) grp.push_back(ord++);
            ldot_groups.push_back(grp);
            ldot_perms.push_back(all_perms(cnt));
        }
    }
    std::vector<SlotPerm> out;
    for (auto& rp : rc_perms)
        for (int mask = 0; mask < (1 << lay.n_rc); ++mask)
            for (auto& dp : dot_perms) {
                std::vector<size_t> idx(ldot_perms.size(), 0);
                for (;;) {
                    SlotPerm sp(lay.slots());
                    for (int s = 0; s < lay.rank; ++s) sp[s] = {s, 1};
                    for (int i = 0; i < lay.n_rc; ++i)
                        sp[lay.rc_slot(i)] = {lay.rc_slot(rp[i]), (mask >> i) & 1 ? -1 : 1};
                    for (int i = 0; i < lay.n_dot; ++i) sp[lay.dot_slot(i)] = {lay.dot_slot(dp[i]), 1};
                    for (size_t gi = 0; gi < ldot_groups.size(); ++gi) {
                        const auto& grp = ldot_groups[gi];
                        const auto& pp = ldot_perms[gi][idx[gi]];
                        for (size_t i = 0; i < grp.size(); ++i)
                            sp[lay.ldot_slot(grp[i])] = {lay.ldot_slot(grp[pp[i]]), 1};
                    }
                    out.push_back(sp);
                    size_t g = 0;
                    for (; g < idx.size(); ++g) {
                        if (++idx[g] < ldot_perms[g].size()) break;
                        idx[g] = 0;
                    }
                    if (g == idx.size()) break;
                }
            }
    if (out.empty()) {
        SlotPerm sp(lay.slots());
        for (int s = 0; s < lay.slots(); ++s) sp[s] = {s, 1};
        out.push_back(sp);
    }
    return out;
}

} // namespace

void DSum::insert_decorated(const Diagram& raw, const std::vector<SlotDesc>& slots,
                            const LogCoef& deco, const std::vector<int>& raw_den) {
    if (deco.is_zero()) return;
    Canon cn = canonicalize(raw);
    if (cn.zero) return;
    if (cn.data->cc != CCKind::None) return;
    const CohBasis& coh = cn.data->coh;
    const DecorLayout& lay = cn.data->layout;
    int nsrc = (int)slots.size();
    int ntgt = slots_of(*cn.data);

    std::map<int, int> pos_of;
    for (size_t p = 0; p < coh.root_edges.size(); ++p) pos_of[coh.root_edges[p]] = (int)p;

    int big = nsrc + ntgt;
    LogCoef work = deco.reindexed(vt.nvars(big), vt.ngraded(big), vt.embed(nsrc, big, 0));

    std::map<int, std::vector<Rational>> lin;
    for (int s = 0; s < nsrc; ++s) {
        const SlotDesc& sd = slots[s];
        std::vector<Rational> cls(coh.rank, Rational(0));
        int special_slot = -1;
        switch (sd.type) {
            case SlotDesc::Graph: {
                for (auto& [re, coef] : sd.edges) {
                    int ce = cn.edge_map.at(re);
                    auto it = pos_of.find(ce);
                    if (it == pos_of.end())
                        throw PreconditionError("decoration attached to a non-root edge");
                    Rational f = coef * Rational(cn.edge_flip[re]);
                    for (int c = 0; c < coh.rank; ++c) cls[c] += f * coh.edge_class[it->second][c];
                }
                break;
            }
            case SlotDesc::Rc: special_slot = lay.rc_slot(sd.ordinal); break;
            case SlotDesc::Dot: special_slot = lay.dot_slot(sd.ordinal); break;
            case SlotDesc::Ldot:
                special_slot =
                    lay.ldot_slot(ldot_global_ordinal(cn.data->g.sp, sd.ldot_label, sd.ordinal));
                break;
        }
        for (int j = 0; j < vt.L; ++j) {
            std::vector<Rational> row(vt.nvars(big), Rational(0));
            if (special_slot >= 0) {
                row[vt.dvar(nsrc + special_slot, j)] = sd.coef;
            } else {
                for (int c = 0; c < coh.rank; ++c)
                    if (cls[c] != 0) row[vt.dvar(nsrc + c, j)] = cls[c];
            }
            lin[vt.dvar(s, j)] = row;
        }
    }
    if (!lin.empty()) work = work.substituted_linear(lin);
    std::vector<int> down(vt.nvars(big), -1);
    for (int s = 0; s < ntgt; ++s)
        for (int j = 0; j < vt.L; ++j) down[vt.dvar(nsrc + s, j)] = vt.dvar(s, j);
    for (int k = 0; k < vt.naux(); ++k) down[vt.avar(big, k)] = vt.avar(ntgt, k);
    work = work.reindexed(vt.nvars(ntgt), vt.ngraded(ntgt), down);
    if (cn.sign < 0) work = -work;

    std::vector<int> den(coh.root_edges.size(), 0);
    bool any_den = false;
    for (size_t re = 0; re < raw_den.size(); ++re) {
        if (raw_den[re] == 0) continue;
        int ce = cn.edge_map.at((int)re);
        auto it = pos_of.find(ce);
        if (it == pos_of.end()) throw PreconditionError("denominator on a non-root edge");
        den[it->second] += raw_den[re];
        any_den = true;
    }
    if (!any_den) den.clear();

    // fast path: everything invariant and no special slots to project
    bool shortcut = lay.n_rc == 0;
    if (shortcut)
        for (auto& a : cn.data->autos) {
            if (a.sign < 0 || !aut_substitution(vt, *cn.data, a).empty() ||
                aut_den(coh, a, den) != den) {
                shortcut = false;
                break;
            }
        }
    if (shortcut && lay.n_dot <= 1 && lay.n_ldot <= 1) {
        add_term_canonical(cn, work, den);
        return;
    }

    std::vector<SlotPerm> sperms = special_slot_group(*cn.data);
    std::map<std::string, std::pair<LogCoef, std::vector<int>>> acc;
    Rational total(0);
    for (auto& a : cn.data->autos) {
        LogCoef base = work;
        auto lin2 = aut_substitution(vt, *cn.data, a);
        if (!lin2.empty()) base = base.substituted_linear(lin2);
        if (a.sign < 0) base = -base;
        std::vector<int> dn = aut_den(coh, a, den);
        for (auto& sp : sperms) {
            std::vector<int> target(vt.nvars(ntgt));
            std::vector<int> sgn(vt.nvars(ntgt), 1);
            std::iota(target.begin(), target.end(), 0);
            bool nontrivial = false;
            for (int s = 0; s < lay.slots(); ++s)
                for (int j = 0; j < vt.L; ++j) {
                    target[vt.dvar(s, j)] = vt.dvar(sp[s].first, j);
                    sgn[vt.dvar(s, j)] = sp[s].second;
                    if (sp[s].first != s || sp[s].second != 1) nontrivial = true;
                }
            LogCoef piece = nontrivial ? base.substituted_signed_perm(target, sgn) : base;
            std::string k = den_suffix(dn);
            auto it = acc.find(k);
            if (it == acc.end())
                acc.emplace(k, std::pair<LogCoef, std::vector<int>>(piece, dn));
            else
                it->second.first += piece;
            total += 1;
        }
    }
    for (auto& [k, pc] : acc)
        add_term_canonical(cn, pc.first.scaled(Rational(1) / total), pc.second);
}

void DSum::insert_plain(const Diagram& raw, const LogCoef& aux_coef) {
    if (aux_coef.is_zero()) return;
    std::vector<Diagram> resolved;
    resolve_totals(raw, resolved);
    for (auto& d : resolved) {
        Canon cn = canonicalize(d);
        if (cn.zero || cn.data->cc != CCKind::None) continue;
        int ntgt = slots_of(*cn.data);
        std::vector<int> up(vt.nvars(0), -1);
        for (int k = 0; k < vt.naux(); ++k) up[vt.avar(0, k)] = vt.avar(ntgt, k);
        LogCoef deco = aux_coef.reindexed(vt.nvars(ntgt), vt.ngraded(ntgt), up);
        if (cn.sign < 0) deco = -deco;
        add_term_canonical(cn, deco, {});
    }
}

void DSum::insert_plain(const Diagram& raw, const Rational& c) {
    insert_plain(raw, LogCoef::constant(c, vt.nvars(0), vt.ngraded(0), vt.cap(), vt.floor_v()));
}

DSum& DSum::operator+=(const DSum& o) {
    if (!(vt == o.vt)) throw PreconditionError("diagram sum cap mismatch");
    if (o.terms.empty()) return *this;
    if (terms.empty()) {
        *this = o;
        return *this;
    }
    if (!(rc_exp == o.rc_exp) || !(cc_exp == o.cc_exp))
        throw PreconditionError("adding sums with different circle exponents");
    if (den_base && o.den_base && !(*den_base == *o.den_base))
        throw PreconditionError("adding sums with different denominator bases");
    if (!den_base) den_base = o.den_base, den_name = o.den_name;
    for (auto& [k, t] : o.terms) add_term_canonical(t.cn, t.deco, t.den);
    return *this;
}

DSum& DSum::operator-=(const DSum& o) { return *this += o.scaled(Rational(-1)); }

DSum DSum::operator-() const { return scaled(Rational(-1)); }

DSum DSum::scaled(const Rational& c) const {
    DSum r(vt);
    if (c == 0) return r;
    r.rc_exp = rc_exp;
    r.cc_exp = cc_exp;
    r.den_base = den_base;
    r.den_name = den_name;
    for (auto& [k, t] : terms) {
        DTerm nt = t;
        nt.deco = t.deco.scaled(c);
        r.terms.emplace(k, std::move(nt));
    }
    return r;
}

DSum DSum::scaled_aux(const LogCoef& aux_coef) const {
    DSum r(vt);
    r.rc_exp = rc_exp;
    r.cc_exp = cc_exp;
    r.den_base = den_base;
    r.den_name = den_name;
    for (auto& [k, t] : terms) {
        int ns = slots_of(*t.cn.data);
        std::vector<int> up(vt.nvars(0), -1);
        for (int a = 0; a < vt.naux(); ++a) up[vt.avar(0, a)] = vt.avar(ns, a);
        LogCoef c = aux_coef.reindexed(vt.nvars(ns), vt.ngraded(ns), up);
        r.add_term_canonical(t.cn, t.deco * c, t.den);
    }
    return r;
}

namespace {

struct RawBuild {
    Diagram raw;
    std::vector<SlotDesc> slots;
    std::vector<int> raw_den;
    LogCoef deco;
};

// identity-style slot descriptors for a canonical term placed at edge offset 0
void push_source_slots(const CanonData& cd, int edge_off, int rc_off, int dot_off,
                       const std::map<Label, int>& ldot_copy_off, std::vector<SlotDesc>& out) {
    for (int b = 0; b < cd.layout.rank; ++b) {
        SlotDesc sd;
        sd.type = SlotDesc::Graph;
        sd.edges = {{edge_off + cd.coh.basis_edge[b], Rational(1)}};
        out.push_back(sd);
    }
    for (int i = 0; i < cd.layout.n_rc; ++i) out.push_back(SlotDesc{SlotDesc::Rc, {}, rc_off + i, {}});
    for (int i = 0; i < cd.layout.n_dot; ++i)
        out.push_back(SlotDesc{SlotDesc::Dot, {}, dot_off + i, {}});
    for (auto& [l, cnt] : cd.g.sp.ldot) {
        int off = ldot_copy_off.count(l) ? ldot_copy_off.at(l) : 0;
        for (int c = 0; c < cnt; ++c) {
            SlotDesc sd;
            sd.type = SlotDesc::Ldot;
            sd.ordinal = off + c;
            sd.ldot_label = l;
            out.push_back(sd);
        }
    }
}

RawBuild union_build(const VarTable& vt, const DTerm& A, const DTerm& B) {
    const Diagram& ga = A.cn.data->g;
    const Diagram& gb = B.cn.data->g;
    RawBuild rb;
    Diagram& d = rb.raw;
    d.n3 = ga.n3 + gb.n3;
    int alegbase = d.n3;
    int blegbase = d.n3 + (int)ga.legs.size();
    auto mapva = [&](const End& e) {
        if (e.v < ga.n3) return End{e.v, e.slot};
        return End{alegbase + (e.v - ga.n3), 0};
    };
    auto mapvb = [&](const End& e) {
        if (e.v < gb.n3) return End{ga.n3 + e.v, e.slot};
        return End{blegbase + (e.v - gb.n3), 0};
    };
    d.legs = ga.legs;
    for (auto& l : gb.legs) d.legs.push_back(l);
    for (auto& e : ga.edges) d.edges.push_back(Edge{mapva(e.a), mapva(e.b), e.kind});
    int eoff = (int)ga.edges.size();
    for (auto& e : gb.edges) d.edges.push_back(Edge{mapvb(e.a), mapvb(e.b), e.kind});
    d.sp.rc = ga.sp.rc + gb.sp.rc;
    d.sp.cc = ga.sp.cc + gb.sp.cc;
    d.sp.dot = ga.sp.dot + gb.sp.dot;
    d.sp.ldot = ga.sp.ldot;
    for (auto& [l, c] : gb.sp.ldot) d.sp.ldot[l] += c;

    std::map<Label, int> b_ldot_off;
    for (auto& [l, c] : ga.sp.ldot) b_ldot_off[l] = c;
    push_source_slots(*A.cn.data, 0, 0, 0, {}, rb.slots);
    push_source_slots(*B.cn.data, eoff, ga.sp.rc, ga.sp.dot, b_ldot_off, rb.slots);

    rb.raw_den.assign(d.edges.size(), 0);
    auto fill_den = [&](const DTerm& T, int edge_off) {
        const CohBasis& coh = T.cn.data->coh;
        for (size_t p = 0; p < T.den.size(); ++p)
            rb.raw_den[edge_off + coh.root_edges[p]] = T.den[p];
    };
    fill_den(A, 0);
    fill_den(B, eoff);

    int nsa = DSum::slots_of(*A.cn.data);
    int nsb = DSum::slots_of(*B.cn.data);
    int big = nsa + nsb;
    LogCoef da = A.deco.reindexed(vt.nvars(big), vt.ngraded(big), vt.embed(nsa, big, 0));
    LogCoef db = B.deco.reindexed(vt.nvars(big), vt.ngraded(big), vt.embed(nsb, big, nsa));
    rb.deco = da * db;
    return rb;
}

} // namespace

DSum DSum::operator*(const DSum& o) const {
    if (!(vt == o.vt)) throw PreconditionError("diagram sum cap mismatch");
    if (den_base && o.den_base && !(*den_base == *o.den_base))
        throw PreconditionError("products must share the denominator base");
    DSum r(vt);
    r.rc_exp = rc_exp + o.rc_exp;
    r.cc_exp = cc_exp + o.cc_exp;
    r.den_base = den_base ? den_base : o.den_base;
    r.den_name = den_base ? den_name : o.den_name;
    for (auto& [ka, ta] : terms)
        for (auto& [kb, tb] : o.terms) {
            RawBuild rb = union_build(vt, ta, tb);
            r.insert_decorated(rb.raw, rb.slots, rb.deco, rb.raw_den);
        }
    return r;
}

// ---- surgery used by glue and shave ----

namespace {

struct Surgeon {
    struct WEdge {
        Kind kind;
        End a, b;
        bool alive = true;
        int den = 0;
    };
    struct Where {
        bool circle = false;
        int id = 0;
        int orient = 1;
    };
    const Diagram& src;
    std::vector<WEdge> edges;
    std::vector<bool> leg_removed;
    std::vector<bool> vertex_dissolved;
    std::vector<Where> where; // entry per source edge, plus one per created edge
    std::vector<int> circle_kind;
    int made_dots = 0;
    std::map<Label, int> made_ldots;
    bool dead = false;

    Surgeon(const Diagram& g, const std::vector<int>& den_by_edge) : src(g) {
        edges.resize(g.edges.size());
        where.resize(g.edges.size());
        for (size_t i = 0; i < g.edges.size(); ++i) {
            edges[i] = {g.edges[i].kind, g.edges[i].a, g.edges[i].b, true,
                        den_by_edge.empty() ? 0 : den_by_edge[i]};
            where[i] = {false, (int)i, 1};
        }
        leg_removed.assign(g.legs.size(), false);
        vertex_dissolved.assign(g.n3, false);
    }

    int edge_at(const End& en) const {
        for (int i = 0; i < (int)edges.size(); ++i) {
            if (!edges[i].alive) continue;
            if (edges[i].a == en || edges[i].b == en) return i;
        }
        throw PreconditionError("no live edge at end");
    }
    int edge_at_leg(int leg) const { return edge_at(End{src.n3 + leg, 0}); }

    void reroot(int old_id, int new_id, int orient) {
        for (auto& w : where)
            if (!w.circle && w.id == old_id) {
                w.id = new_id;
                w.orient *= orient;
            }
    }
    void reroot_circle(int old_id, int circle_ordinal, int orient) {
        for (auto& w : where)
            if (!w.circle && w.id == old_id) {
                w.circle = true;
                w.id = circle_ordinal;
                w.orient *= orient;
            }
    }
    int new_edge(Kind k, End a, End b, int den) {
        int nid = (int)edges.size();
        edges.push_back(WEdge{k, a, b, true, den});
        where.push_back({false, nid, 1});
        return nid;
    }

    bool fuse_legs(int leg1, int leg2) {
        End l1{src.n3 + leg1, 0}, l2{src.n3 + leg2, 0};
        int e1 = edge_at(l1), e2 = edge_at(l2);
        leg_removed[leg1] = true;
        leg_removed[leg2] = true;
        if (e1 == e2) {
            if (edges[e1].den > 0)
                throw PreconditionError("denominator power on a closed circle");
            int ord = (int)circle_kind.size();
            circle_kind.push_back(edges[e1].kind == Kind::Cartan ? 1 : 0);
            reroot_circle(e1, ord, 1);
            edges[e1].alive = false;
            return true;
        }
        if (edges[e1].kind != edges[e2].kind) {
            dead = true;
            return false;
        }
        End far1 = (edges[e1].a == l1) ? edges[e1].b : edges[e1].a;
        End far2 = (edges[e2].a == l2) ? edges[e2].b : edges[e2].a;
        int o1 = (edges[e1].b == l1) ? 1 : -1;
        int o2 = (edges[e2].a == l2) ? 1 : -1;
        int nid = new_edge(edges[e1].kind, far1, far2, edges[e1].den + edges[e2].den);
        reroot(e1, nid, o1);
        reroot(e2, nid, o2);
        edges[e1].alive = false;
        edges[e2].alive = false;
        return true;
    }

    // removes an a-leg on a Cartan edge into a 3-vertex; returns the where
    // index of the merged edge factor, or the circle ordinal (circle=true)
    Where shave_leg(int leg) {
        End l{src.n3 + leg, 0};
        int ec = edge_at(l);
        if (edges[ec].kind != Kind::Cartan)
            throw PreconditionError("shaved Cartan label on a non-Cartan edge");
        End other = (edges[ec].a == l) ? edges[ec].b : edges[ec].a;
        if (src.is_leg(other.v)) throw PreconditionError("strut shaving handled separately");
        leg_removed[leg] = true;
        int v = other.v;
        int sl = other.slot;
        int s_in = (sl + 2) % 3, s_out = (sl + 1) % 3;
        End in_end{v, s_in}, out_end{v, s_out};
        int fin = edge_at(in_end), fout = edge_at(out_end);
        if (edges[fin].kind != Kind::Root || edges[fout].kind != Kind::Root)
            throw PreconditionError("internal consistency: shaved leg beside a Cartan edge");
        edges[ec].alive = false;
        vertex_dissolved[v] = true;
        if (fin == fout) {
            if (edges[fin].den > 0)
                throw PreconditionError("denominator power on a closed circle");
            int ord = (int)circle_kind.size();
            circle_kind.push_back(0);
            int o = (edges[fin].b == in_end) ? 1 : -1;
            reroot_circle(fin, ord, o);
            edges[fin].alive = false;
            return Where{true, ord, 1};
        }
        End farin = (edges[fin].a == in_end) ? edges[fin].b : edges[fin].a;
        End farout = (edges[fout].a == out_end) ? edges[fout].b : edges[fout].a;
        int o_in = (edges[fin].b == in_end) ? 1 : -1;
        int o_out = (edges[fout].a == out_end) ? 1 : -1;
        int nid = new_edge(Kind::Root, farin, farout, edges[fin].den + edges[fout].den);
        reroot(fin, nid, o_in);
        reroot(fout, nid, o_out);
        edges[fin].alive = false;
        edges[fout].alive = false;
        return Where{false, (int)where.size() - 1, 1}; // tracking entry of nid
    }

    // factor slots appended by the caller reference `where` entries
    struct ExtraSlot {
        bool circle = false;
        int where_index = 0;   // for edges: index into where
        int circle_ordinal = 0;
        bool is_dot = false, is_ldot = false;
        int dot_ordinal = 0;
        Label ldot_label;
        int ldot_copy = 0;
    };

    RawBuild finish(const VarTable& vt, const DTerm& T, const std::vector<ExtraSlot>& extra,
                    const LogCoef& deco_big) {
        RawBuild rb;
        Diagram& d = rb.raw;
        std::vector<int> vmap(src.n_vertices(), -1);
        int nv = 0;
        for (int v = 0; v < src.n3; ++v)
            if (!vertex_dissolved[v]) vmap[v] = nv++;
        d.n3 = nv;
        for (int lg = 0; lg < (int)src.legs.size(); ++lg)
            if (!leg_removed[lg]) {
                vmap[src.n3 + lg] = d.n3 + (int)d.legs.size();
                d.legs.push_back(src.legs[lg]);
            }
        std::vector<int> emap(edges.size(), -1);
        for (int i = 0; i < (int)edges.size(); ++i) {
            if (!edges[i].alive) continue;
            emap[i] = (int)d.edges.size();
            End a = edges[i].a, b = edges[i].b;
            a.v = vmap[a.v];
            b.v = vmap[b.v];
            if (a.v < 0 || b.v < 0) throw PreconditionError("dangling fused edge");
            d.edges.push_back(Edge{a, b, edges[i].kind});
            rb.raw_den.push_back(edges[i].den);
        }
        d.sp = src.sp;
        d.sp.dot += made_dots;
        for (auto& [l, c] : made_ldots) d.sp.ldot[l] += c;
        int n_rc_new = 0, n_cc_new = 0;
        for (int ck : circle_kind) (ck == 0 ? n_rc_new : n_cc_new)++;
        d.sp.rc += n_rc_new;
        d.sp.cc += n_cc_new;
        std::vector<int> circle_ord(circle_kind.size(), -1);
        {
            int rr = src.sp.rc;
            for (size_t i = 0; i < circle_kind.size(); ++i)
                if (circle_kind[i] == 0) circle_ord[i] = rr++;
        }

        const CanonData& cd = *T.cn.data;
        auto desc_for_where = [&](const Where& w, const Rational& coef) {
            SlotDesc sd;
            if (w.circle) {
                sd.type = SlotDesc::Rc;
                sd.ordinal = circle_ord[w.id];
                sd.coef = coef * Rational(w.orient);
            } else {
                sd.type = SlotDesc::Graph;
                if (emap[w.id] < 0) throw PreconditionError("reference to a dead edge");
                sd.edges = {{emap[w.id], coef * Rational(w.orient)}};
            }
            return sd;
        };
        for (int b = 0; b < cd.layout.rank; ++b)
            rb.slots.push_back(desc_for_where(where[cd.coh.basis_edge[b]], Rational(1)));
        for (int i = 0; i < cd.layout.n_rc; ++i)
            rb.slots.push_back(SlotDesc{SlotDesc::Rc, {}, i, {}});
        for (int i = 0; i < cd.layout.n_dot; ++i)
            rb.slots.push_back(SlotDesc{SlotDesc::Dot, {}, i, {}});
        for (auto& [l, cnt] : cd.g.sp.ldot)
            for (int c = 0; c < cnt; ++c) {
                SlotDesc sd;
                sd.type = SlotDesc::Ldot;
                sd.ldot_label = l;
                sd.ordinal = c;
                rb.slots.push_back(sd);
            }
        for (auto& ex : extra) {
            if (ex.is_dot) {
                rb.slots.push_back(SlotDesc{SlotDesc::Dot, {}, src.sp.dot + ex.dot_ordinal, {}});
            } else if (ex.is_ldot) {
                SlotDesc sd;
                sd.type = SlotDesc::Ldot;
                sd.ldot_label = ex.ldot_label;
                int prior = src.sp.ldot.count(ex.ldot_label) ? src.sp.ldot.at(ex.ldot_label) : 0;
                sd.ordinal = prior + ex.ldot_copy;
                rb.slots.push_back(sd);
            } else if (ex.circle) {
                rb.slots.push_back(SlotDesc{SlotDesc::Rc, {}, circle_ord[ex.circle_ordinal], {}});
            } else {
                rb.slots.push_back(desc_for_where(where[ex.where_index], Rational(1)));
            }
        }
        (void)vt;
        rb.deco = deco_big;
        return rb;
    }
};

Label fresh_label(Kind k) {
    switch (k) {
        case Kind::Root: return lbl('z', 29999);
        case Kind::Cartan: return lbl('c', 29999);
        default: return lbl('Z', 29999);
    }
}

} // namespace

DSum DSum::glue(Label x, Label y, GlueMode mode, int m) const {
    if (x == y) throw PreconditionError("unary gluing needs distinct labels");
    DSum r(vt);
    r.rc_exp = rc_exp;
    r.cc_exp = cc_exp;
    r.den_base = den_base;
    r.den_name = den_name;
    for (auto& [key, t] : terms) {
        const Diagram& g = t.cn.data->g;
        std::vector<int> xlegs, ylegs;
        for (int lg = 0; lg < (int)g.legs.size(); ++lg) {
            if (g.legs[lg] == x) xlegs.push_back(lg);
            if (g.legs[lg] == y) ylegs.push_back(lg);
        }
        int mm = m;
        if (mode == GlueMode::LR) {
            if (xlegs.size() != ylegs.size()) continue;
            mm = (int)xlegs.size();
        } else if (mode == GlueMode::Flat) {
            if (xlegs.size() > ylegs.size()) continue;
            mm = (int)xlegs.size();
        } else if (mode == GlueMode::Once) {
            mm = 1;
        }
        if ((int)xlegs.size() < mm || (int)ylegs.size() < mm) continue;
        if (mm == 0) {
            r.add_term_canonical(t.cn, t.deco, t.den);
            continue;
        }
        std::vector<int> den_by_edge(g.edges.size(), 0);
        for (size_t p = 0; p < t.den.size(); ++p)
            den_by_edge[t.cn.data->coh.root_edges[p]] = t.den[p];
        std::vector<int> chosen;
        std::function<void(int, int)> pick_x = [&](int start, int need) {
            if (need == 0) {
                std::vector<int> cur;
                std::function<void()> pick_y = [&]() {
                    if ((int)cur.size() == mm) {
                        Surgeon s(g, den_by_edge);
                        bool ok = true;
                        for (int i = 0; i < mm && ok; ++i)
                            ok = s.fuse_legs(xlegs[chosen[i]], ylegs[cur[i]]);
                        if (ok && !s.dead) {
                            RawBuild rb = s.finish(vt, t, {}, t.deco);
                            r.insert_decorated(rb.raw, rb.slots, rb.deco, rb.raw_den);
                        }
                        return;
                    }
                    for (int yi = 0; yi < (int)ylegs.size(); ++yi) {
                        if (std::find(cur.begin(), cur.end(), yi) != cur.end()) continue;
                        cur.push_back(yi);
                        pick_y();
                        cur.pop_back();
                    }
                };
                pick_y();
                return;
            }
            for (int i = start; i < (int)xlegs.size(); ++i) {
                chosen.push_back(i);
                pick_x(i + 1, need - 1);
                chosen.pop_back();
            }
        };
        pick_x(0, mm);
    }
    return r;
}

DSum glue_pair(const DSum& A, const DSum& B, Label x, Label y, DSum::GlueMode mode, int m) {
    Label tmp = fresh_label(y.kind());
    std::map<Label, Label> ren = {{y, tmp}};
    DSum Bp = B.relabeled(ren);
    return (A * Bp).glue(x, tmp, mode, m);
}

DSum DSum::shave_cartan() const {
    DSum r(vt);
    r.rc_exp = rc_exp;
    r.cc_exp = cc_exp;
    r.den_base = den_base;
    r.den_name = den_name;
    auto shaved = [&](const Label& l) {
        return l.base == 'a' && l.deco == Label::kPlain && l.index >= 1 && l.index <= vt.L;
    };
    for (auto& [key, t] : terms) {
        const Diagram& g = t.cn.data->g;
        for (auto& l : g.legs)
            if (l.base == 'a' && l.deco != Label::kPlain && l.index <= vt.L)
                throw PreconditionError("shaving with differential or derivative Cartan legs");
        std::vector<int> den_by_edge(g.edges.size(), 0);
        for (size_t p = 0; p < t.den.size(); ++p)
            den_by_edge[t.cn.data->coh.root_edges[p]] = t.den[p];
        Surgeon s(g, den_by_edge);
        struct Factor {
            Surgeon::ExtraSlot slot;
            int j1 = 0, j2 = -1;
        };
        std::vector<Factor> factors;
        // Cartan struts with at least one shaved end
        for (int lg = 0; lg < (int)g.legs.size(); ++lg) {
            if (!shaved(g.legs[lg]) || s.leg_removed[lg]) continue;
            int e = s.edge_at_leg(lg);
            End self{g.n3 + lg, 0};
            End other = (s.edges[e].a == self) ? s.edges[e].b : s.edges[e].a;
            if (!g.is_leg(other.v)) continue;
            int olg = other.v - g.n3;
            Label ol = g.legs[olg];
            if (s.edges[e].kind != Kind::Cartan)
                throw PreconditionError("internal consistency: shaved label on a root strut");
            s.leg_removed[lg] = true;
            s.leg_removed[olg] = true;
            s.edges[e].alive = false;
            Factor f;
            f.j1 = g.legs[lg].index - 1;
            if (shaved(ol)) {
                f.slot.is_dot = true;
                f.slot.dot_ordinal = s.made_dots++;
                f.j2 = ol.index - 1;
            } else {
                f.slot.is_ldot = true;
                f.slot.ldot_label = ol;
                f.slot.ldot_copy = s.made_ldots[ol]++;
            }
            factors.push_back(f);
        }
        // remaining shaved legs dissolve their spine vertices
        for (int lg = 0; lg < (int)g.legs.size(); ++lg) {
            if (!shaved(g.legs[lg]) || s.leg_removed[lg]) continue;
            Surgeon::Where w = s.shave_leg(lg);
            Factor f;
            f.j1 = g.legs[lg].index - 1;
            if (w.circle) {
                f.slot.circle = true;
                f.slot.circle_ordinal = w.id;
            } else {
                f.slot.where_index = w.id;
            }
            factors.push_back(f);
        }
        int ns = slots_of(*t.cn.data);
        int big = ns + (int)factors.size();
        LogCoef deco = t.deco.reindexed(vt.nvars(big), vt.ngraded(big), vt.embed(ns, big, 0));
        std::vector<Surgeon::ExtraSlot> extra;
        for (size_t fi = 0; fi < factors.size(); ++fi) {
            const Factor& f = factors[fi];
            int slot = ns + (int)fi;
            MultiSeries v1 = MultiSeries::variable(vt.dvar(slot, f.j1), vt.nvars(big),
                                                   vt.ngraded(big), vt.cap(), vt.floor_v());
            if (f.j2 >= 0)
                v1 = v1 * MultiSeries::variable(vt.dvar(slot, f.j2), vt.nvars(big),
                                                vt.ngraded(big), vt.cap(), vt.floor_v());
            deco = deco.mul_series(v1);
            extra.push_back(f.slot);
        }
        RawBuild rb = s.finish(vt, t, extra, deco);
        r.insert_decorated(rb.raw, rb.slots, rb.deco, rb.raw_den);
    }
    return r;
}

std::vector<Rational> modified_bernoulli(int maxdeg) {
    MultiSeries sh(1, 1, maxdeg, 0);
    for (int n = 0; 2 * n <= maxdeg; ++n) {
        ExpVec e = {(int16_t)(2 * n)};
        Rational f2n1(1);
        for (int k = 2; k <= 2 * n + 1; ++k) f2n1 *= k;
        sh.add_term(e, Rational(1) / (rat_pow(Rational(4), n) * f2n1));
    }
    auto ls = sh.lead_split();
    MultiSeries hl = MultiSeries::log1p(ls.tail).scaled(Rational(1, 2));
    std::vector<Rational> b(maxdeg + 1, Rational(0));
    for (auto& [e, c] : hl.terms) b[e[0]] = c;
    return b;
}

DSum DSum::wheeling(Label x) const {
    Label px = x.with_deco(Label::kDeriv);
    std::vector<Rational> b = modified_bernoulli(vt.degcap + 2);
    DSum wheels(vt);
    for (int n = 1; 2 * n <= vt.degcap; ++n) {
        if (b[2 * n] == 0) continue;
        Diagram w;
        w.n3 = 2 * n;
        for (int i = 0; i < 2 * n; ++i) w.legs.push_back(px);
        for (int i = 0; i < 2 * n; ++i)
            w.edges.push_back(Edge{End{i, 1}, End{(i + 1) % (2 * n), 0}, Kind::Total});
        for (int i = 0; i < 2 * n; ++i)
            w.edges.push_back(Edge{End{i, 2}, End{2 * n + i, 0}, Kind::Total});
        wheels.insert_plain(w, -b[2 * n]);
    }
    DSum omega = wheels.exp_sum();
    return (omega * *this).glue(px, x, GlueMode::Flat);
}

DSum DSum::relabeled(const std::map<Label, Label>& m) const {
    DSum r(vt);
    r.rc_exp = rc_exp;
    r.cc_exp = cc_exp;
    r.den_base = den_base;
    r.den_name = den_name;
    for (auto& [k, t] : terms) {
        Diagram g = t.cn.data->g;
        bool changed = false;
        for (auto& l : g.legs) {
            auto it = m.find(l);
            if (it != m.end()) l = it->second, changed = true;
        }
        if (!changed) {
            r.add_term_canonical(t.cn, t.deco, t.den);
            continue;
        }
        std::vector<SlotDesc> slots;
        push_source_slots(*t.cn.data, 0, 0, 0, {}, slots);
        std::vector<int> den_by_edge(g.edges.size(), 0);
        for (size_t p = 0; p < t.den.size(); ++p)
            den_by_edge[t.cn.data->coh.root_edges[p]] = t.den[p];
        r.insert_decorated(g, slots, t.deco, den_by_edge);
    }
    return r;
}

int DSum::count_legs(const Diagram& g, Label x) const {
    int n = 0;
    for (auto& l : g.legs)
        if (l == x) ++n;
    return n;
}

DSum DSum::set_label_zero(Label x) const {
    DSum r(vt);
    r.rc_exp = rc_exp;
    r.cc_exp = cc_exp;
    r.den_base = den_base;
    r.den_name = den_name;
    for (auto& [k, t] : terms)
        if (count_legs(t.cn.data->g, x) == 0) r.terms.emplace(k, t);
    return r;
}

DSum DSum::flip_label_sign(Label x) const {
    DSum r(vt);
    r.rc_exp = rc_exp;
    r.cc_exp = cc_exp;
    r.den_base = den_base;
    r.den_name = den_name;
    for (auto& [k, t] : terms) {
        DTerm nt = t;
        if (count_legs(t.cn.data->g, x) % 2) nt.deco = -nt.deco;
        r.terms.emplace(k, std::move(nt));
    }
    return r;
}

DSum DSum::parity_symbol(int j) const {
    DSum r(vt);
    r.den_base = den_base;
    r.den_name = den_name;
    r.rc_exp = rc_exp.parity_flip_set({vt.dvar(0, j)});
    r.cc_exp = cc_exp;
    for (auto& [k, t] : terms) {
        DTerm nt = t;
        int ns = slots_of(*t.cn.data);
        std::vector<int> flips;
        for (int s = 0; s < ns; ++s) flips.push_back(vt.dvar(s, j));
        nt.deco = t.deco.parity_flip_set(flips);
        r.terms.emplace(k, std::move(nt));
    }
    return r;
}

std::vector<Label> DSum::labels_present() const {
    std::vector<Label> out;
    for (auto& [k, t] : terms)
        for (auto& l : t.cn.data->g.legs)
            if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
    std::sort(out.begin(), out.end());
    return out;
}

DSum DSum::diff_aux(int k) const {
    DSum r(vt);
    r.den_base = den_base;
    r.den_name = den_name;
    if (!rc_exp.is_zero() || !cc_exp.is_zero())
        throw PreconditionError("aux derivative of a sum with circle exponents");
    for (auto& [key, t] : terms) {
        int ns = slots_of(*t.cn.data);
        LogCoef d = t.deco.derivative(vt.avar(ns, k));
        r.add_term_canonical(t.cn, d, t.den);
    }
    return r;
}

DSum DSum::exp_sum() const {
    if (!rc_exp.is_zero() || !cc_exp.is_zero())
        throw PreconditionError("exp of a sum with circle exponents");
    for (auto& [k, t] : terms)
        if (term_min_deg(t) < 1)
            throw PreconditionError("exp requires all terms of positive degree");
    DSum acc = unit(vt);
    acc.den_base = den_base;
    acc.den_name = den_name;
    DSum power = acc;
    Rational fact(1);
    for (unsigned n = 1;; ++n) {
        power = power * *this;
        if (power.is_zero()) break;
        fact *= n;
        acc += power.scaled(Rational(1) / fact);
    }
    return acc;
}

DSum DSum::log_sum() const {
    if (!rc_exp.is_zero() || !cc_exp.is_zero())
        throw PreconditionError("log of a sum with circle exponents");
    Canon empty = canonicalize(Diagram{});
    auto it = terms.find(empty.data->key);
    if (it == terms.end() || !it->second.deco.is_series() ||
        !it->second.deco.series_part().is_constant() ||
        !(it->second.deco.series_part().constant_term() == Rational(1)))
        throw PreconditionError("log requires unit coefficient at the empty diagram");
    DSum n = *this;
    n.terms.erase(empty.data->key);
    for (auto& [k, t] : n.terms)
        if (term_min_deg(t) < 1)
            throw PreconditionError("log requires a positive-degree remainder");
    DSum acc(vt);
    acc.den_base = den_base;
    acc.den_name = den_name;
    DSum power = unit(vt);
    power.den_base = den_base;
    power.den_name = den_name;
    for (unsigned k = 1;; ++k) {
        power = power * n;
        if (power.is_zero()) break;
        acc += power.scaled(Rational((k % 2) ? 1 : -1) / k);
    }
    return acc;
}

bool DSum::operator==(const DSum& o) const {
    if (!(vt == o.vt)) return false;
    if (terms.empty() && o.terms.empty()) return true;
    if (!(rc_exp == o.rc_exp) || !(cc_exp == o.cc_exp)) return false;
    if (terms.size() != o.terms.size()) return false;
    for (auto& [k, t] : terms) {
        auto it = o.terms.find(k);
        if (it == o.terms.end()) return false;
        if (!(t.deco == it->second.deco) || t.den != it->second.den) return false;
    }
    return true;
}

const DTerm* DSum::find(const std::string& key) const {
    auto it = terms.find(key);
    return it == terms.end() ? nullptr : &it->second;
}

LogCoef DSum::coeff_of(const Diagram& raw) const {
    Canon cn = canonicalize(raw);
    if (cn.zero) throw PreconditionError("coefficient of a vanishing diagram");
    auto it = terms.find(cn.data->key);
    if (it == terms.end()) return vt.zero_coef(slots_of(*cn.data));
    return cn.sign < 0 ? -it->second.deco : it->second.deco;
}

int component_count(const Diagram& d) {
    int n = d.n_vertices();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int v) {
        return parent[v] == v ? v : parent[v] = find(parent[v]);
    };
    for (auto& e : d.edges) parent[find(e.a.v)] = find(e.b.v);
    std::set<int> roots;
    for (int v = 0; v < n; ++v) roots.insert(find(v));
    return (int)roots.size() + d.sp.rc + d.sp.cc + d.sp.dot + d.ldot_count();
}

bool is_narrow(const DSum& s) {
    for (auto& [k, t] : s.terms) {
        const Diagram& g = t.cn.data->g;
        if (g.n_vertices() == 0 && g.sp.empty()) continue;
        if (component_count(g) != 1) return false;
    }
    return true;
}

std::string DSum::str() const {
    std::ostringstream os;
    if (!rc_exp.is_zero()) os << "exp[ rc * " << rc_exp.str(vt.names(1)) << " ]\n";
    if (!cc_exp.is_zero()) os << "exp[ cc * " << cc_exp.str(vt.names(0)) << " ]\n";
    for (auto& [k, t] : terms) {
        int ns = slots_of(*t.cn.data);
        os << "term coef = " << t.deco.str(vt.names(ns));
        if (!t.den.empty()) {
            os << "  den =";
            for (int d : t.den) os << " " << d;
        }
        os << "\n" << diagram_str(t.cn.data->g);
    }
    if (terms.empty()) os << "0\n";
    return os.str();
}

namespace {

std::string logcoef_serialize(const LogCoef& c, const std::vector<std::string>& names) {
    std::ostringstream os;
    for (auto& [m, s] : c.parts) {
        os << "coef ";
        if (m.empty())
            os << "1";
        else {
            bool first = true;
            for (auto& [sym, pw] : m) {
                if (!first) os << "*";
                first = false;
                if (sym == kLogMinusOne)
                    os << "ln(-1)";
                else if (sym < -1)
                    os << "ln(" << (-sym - 2) << ")";
                else
                    os << "ln(" << names[(size_t)sym] << ")";
                if (pw != 1) os << "^" << pw;
            }
        }
        os << " ; " << s.str(names) << "\n";
    }
    return os.str();
}

LogMono parse_logmono(const std::string& spec, const std::vector<std::string>& names) {
    LogMono m;
    if (spec == "1") return m;
    std::istringstream is(spec);
    std::string piece;
    while (std::getline(is, piece, '*')) {
        auto caret = piece.rfind('^');
        int pw = 1;
        std::string head = piece;
        if (caret != std::string::npos && caret > 0 && piece[caret - 1] == ')') {
            pw = std::stoi(piece.substr(caret + 1));
            head = piece.substr(0, caret);
        }
        if (head.substr(0, 3) != "ln(" || head.back() != ')')
            throw FormatError("bad log monomial: " + spec);
        std::string argn = head.substr(3, head.size() - 4);
        LogSym sym;
        if (argn == "-1")
            sym = kLogMinusOne;
        else if (std::isdigit((unsigned char)argn[0]))
            sym = log_prime(std::stoll(argn));
        else {
            auto it = std::find(names.begin(), names.end(), argn);
            if (it == names.end()) throw FormatError("unknown log variable: " + argn);
            sym = (LogSym)(it - names.begin());
        }
        m.emplace_back(sym, pw);
    }
    std::sort(m.begin(), m.end());
    return m;
}

} // namespace

std::string DSum::serialize() const {
    std::ostringstream os;
    os << "dsum L=" << vt.L << " acap=" << vt.acap << " slack=" << vt.slack
       << " degcap=" << vt.degcap << " chicap=" << vt.chicap << " aux=";
    for (size_t i = 0; i < vt.aux.size(); ++i) os << (i ? "," : "") << vt.aux[i];
    os << "\n";
    if (den_base) os << "denbase " << den_name << " ; " << den_base->str(vt.names(1)) << "\n";
    if (!rc_exp.is_zero()) os << "rcexp\n" << logcoef_serialize(rc_exp, vt.names(1)) << "endexp\n";
    if (!cc_exp.is_zero()) os << "ccexp\n" << logcoef_serialize(cc_exp, vt.names(0)) << "endexp\n";
    for (auto& [k, t] : terms) {
        os << "term\n";
        os << diagram_str(t.cn.data->g);
        if (!t.den.empty()) {
            os << "den";
            for (int d : t.den) os << " " << d;
            os << "\n";
        }
        os << logcoef_serialize(t.deco, vt.names(slots_of(*t.cn.data)));
        os << "endterm\n";
    }
    os << "enddsum\n";
    return os.str();
}

DSum DSum::deserialize(std::istream& in, const VarTable& vt0) {
    std::string line;
    VarTable vt = vt0;
    DSum out(vt);
    bool have_header = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (tok == "#") continue;
        if (tok == "dsum") {
            std::string kv;
            while (ls >> kv) {
                auto eq = kv.find('=');
                if (eq == std::string::npos) continue;
                std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
                if (key == "L") vt.L = std::stoi(val);
                if (key == "acap") vt.acap = std::stoi(val);
                if (key == "slack") vt.slack = std::stoi(val);
                if (key == "degcap") vt.degcap = std::stoi(val);
                if (key == "chicap") vt.chicap = std::stoi(val);
                if (key == "aux") {
                    vt.aux.clear();
                    std::istringstream as(val);
                    std::string a;
                    while (std::getline(as, a, ','))
                        if (!a.empty()) vt.aux.push_back(a);
                }
            }
            out = DSum(vt);
            have_header = true;
        } else if (tok == "denbase") {
            std::string name, semi;
            ls >> name >> semi;
            std::string rest;
            std::getline(ls, rest);
            out.den_name = name;
            out.den_base = std::make_shared<MultiSeries>(
                series_parse(rest, vt.names(1), vt.ngraded(1), vt.cap(), vt.floor_v()));
        } else if (tok == "rcexp" || tok == "ccexp") {
            int ns = tok == "rcexp" ? 1 : 0;
            LogCoef c = vt.zero_coef(ns);
            std::string l2;
            while (std::getline(in, l2)) {
                std::istringstream l2s(l2);
                std::string t2;
                l2s >> t2;
                if (t2 == "endexp") break;
                if (t2 != "coef") throw FormatError("expected a coef line");
                std::string mono, semi;
                l2s >> mono >> semi;
                std::string rest;
                std::getline(l2s, rest);
                c.add_part(parse_logmono(mono, vt.names(ns)),
                           series_parse(rest, vt.names(ns), vt.ngraded(ns), vt.cap(), vt.floor_v()));
            }
            (ns == 1 ? out.rc_exp : out.cc_exp) = c;
        } else if (tok == "term") {
            Diagram g = diagram_parse(in);
            Canon cn = canonicalize(g);
            int ns = cn.zero ? 0 : slots_of(*cn.data);
            LogCoef deco = vt.zero_coef(ns);
            std::vector<int> den;
            bool have_deco = false;
            std::string l2;
            while (std::getline(in, l2)) {
                std::istringstream l2s(l2);
                std::string t2;
                l2s >> t2;
                if (t2 == "endterm") break;
                if (t2 == "den") {
                    int v;
                    while (l2s >> v) den.push_back(v);
                } else if (t2 == "coef") {
                    std::string mono, semi;
                    l2s >> mono >> semi;
                    std::string rest;
                    std::getline(l2s, rest);
                    deco.add_part(
                        parse_logmono(mono, vt.names(ns)),
                        series_parse(rest, vt.names(ns), vt.ngraded(ns), vt.cap(), vt.floor_v()));
                    have_deco = true;
                }
            }
            if (cn.zero || !have_deco) continue;
            // decorations are written against the canonical layout of g
            std::vector<SlotDesc> slots;
            const CanonData& cd = *cn.data;
            std::vector<int> inv(cd.g.edges.size(), -1);
            for (size_t re = 0; re < cn.edge_map.size(); ++re) inv[cn.edge_map[re]] = (int)re;
            for (int b = 0; b < cd.layout.rank; ++b) {
                SlotDesc sd;
                sd.type = SlotDesc::Graph;
                int raw_edge = inv[cd.coh.basis_edge[b]];
                sd.edges = {{raw_edge, Rational(cn.edge_flip[raw_edge])}};
                slots.push_back(sd);
            }
            for (int i = 0; i < cd.layout.n_rc; ++i) slots.push_back(SlotDesc{SlotDesc::Rc, {}, i, {}});
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
            std::vector<int> den_by_edge(g.edges.size(), 0);
            for (size_t p = 0; p < den.size(); ++p) den_by_edge[inv[cd.coh.root_edges[p]]] = den[p];
            if (cn.sign < 0) deco = -deco;
            out.insert_decorated(g, slots, deco, den_by_edge);
        } else if (tok == "enddsum") {
            break;
        }
    }
    if (!have_header) throw FormatError("missing dsum header");
    return out;
}

} // namespace jdcalc
