#include "jdcalc/ihx.hpp"

#include <algorithm>
#include <mutex>
#include <set>
#include <sstream>
#include <unordered_map>

namespace jdcalc {

namespace {

// graded piece: leg multiset, chi, #3-vertices, specials signature
std::string piece_key(const DTerm& t) {
    const Diagram& g = t.cn.data->g;
    std::vector<std::string> legs;
    for (auto& l : g.legs) legs.push_back(l.str());
    std::sort(legs.begin(), legs.end());
    std::ostringstream os;
    for (auto& l : legs) os << l << ",";
    os << "|chi" << g.chi() << "|v" << g.n3 << "|s" << g.sp.rc << "." << g.sp.cc << "."
       << g.sp.dot;
    for (auto& [l, c] : g.sp.ldot) os << "." << l.str() << ":" << c;
    return os.str();
}

struct BasisLabel {
    std::string term_key; // canonical key + denominator suffix
    ExpVec mono;          // decoration-variable exponents only
    bool operator<(const BasisLabel& o) const {
        return term_key != o.term_key ? term_key < o.term_key : mono < o.mono;
    }
};

ExpVec deco_part(const VarTable& vt, int nslots, const ExpVec& e) {
    ExpVec m(vt.ngraded(nslots));
    for (int i = 0; i < vt.ngraded(nslots); ++i) m[i] = e[i];
    return m;
}

using Row = std::map<BasisLabel, Rational>;

std::string row_fingerprint(const Row& r) {
    std::ostringstream os;
    for (auto& [l, c] : r) {
        os << l.term_key << "/";
        for (auto v : l.mono) os << v << ".";
        os << "=" << rat_str(c) << ";";
    }
    return os.str();
}

struct Resolutions {
    struct Variant {
        Diagram raw;
        std::vector<SlotDesc> slots;
        std::vector<int> raw_den;
    };
    std::vector<Variant> variants;
    int n_common = 0;
};

std::optional<Resolutions> contract_edge(const VarTable& vt, const DTerm& t, int ei) {
    const Diagram& g = t.cn.data->g;
    const Edge& e = g.edges[ei];
    if (g.is_leg(e.a.v) || g.is_leg(e.b.v)) return std::nullopt;
    if (e.a.v == e.b.v) return std::nullopt;
    std::vector<int> den_by_edge(g.edges.size(), 0);
    for (size_t p = 0; p < t.den.size(); ++p)
        den_by_edge[t.cn.data->coh.root_edges[p]] = t.den[p];
    if (den_by_edge[ei] != 0) return std::nullopt;

    std::vector<int> common;
    for (int re = 0; re < (int)g.edges.size(); ++re)
        if (re != ei && g.edges[re].kind == Kind::Root) common.push_back(re);

    int u = e.a.v, w = e.b.v;
    int su = e.a.slot, sw = e.b.slot;
    End p{u, (su + 1) % 3}, q{u, (su + 2) % 3};
    End r{w, (sw + 1) % 3}, s{w, (sw + 2) % 3};
    auto attached = [&](const End& en) {
        for (int k = 0; k < (int)g.edges.size(); ++k) {
            if (k == ei) continue;
            if (g.edges[k].a == en) return std::pair<int, int>(k, 0);
            if (g.edges[k].b == en) return std::pair<int, int>(k, 1);
        }
        throw PreconditionError("detached end during contraction");
    };
    auto ap = attached(p), aq = attached(q), ar = attached(r), as = attached(s);

    Resolutions out;
    out.n_common = (int)common.size();
    // Jacobi arrangement: D(p,q|r,s) + D(q,r|p,s) + D(r,p|q,s) = 0
    std::array<std::array<std::pair<int, int>, 4>, 3> arrange = {{{ap, aq, ar, as},
                                                                  {aq, ar, ap, as},
                                                                  {ar, ap, aq, as}}};
    (void)vt;
    for (auto& arr : arrange) {
        for (Kind kappa : {Kind::Root, Kind::Cartan}) {
            Resolutions::Variant v;
            v.raw = g;
            auto set_end = [&](std::pair<int, int> att, End to) {
                Edge& ed = v.raw.edges[att.first];
                (att.second == 0 ? ed.a : ed.b) = to;
            };
            set_end(arr[0], End{u, 0});
            set_end(arr[1], End{u, 1});
            set_end(arr[2], End{w, 1});
            set_end(arr[3], End{w, 2});
            v.raw.edges[ei] = Edge{End{u, 2}, End{w, 0}, kappa};
            v.raw_den.assign(v.raw.edges.size(), 0);
            for (int re : common) v.raw_den[re] = den_by_edge[re];
            for (int re : common) {
                SlotDesc sd;
                sd.type = SlotDesc::Graph;
                sd.edges = {{re, Rational(1)}};
                v.slots.push_back(sd);
            }
            out.variants.push_back(std::move(v));
        }
    }
    return out;
}

void monomials_of_degree(int n, int d, ExpVec& cur, int from, std::vector<ExpVec>& out) {
    if (d == 0) {
        out.push_back(cur);
        return;
    }
    if (from >= n) return;
    for (int k = d; k >= 0; --k) {
        cur[from] = (int16_t)k;
        monomials_of_degree(n, d - k, cur, from + 1, out);
        cur[from] = 0;
    }
}

struct PieceReducer {
    std::map<BasisLabel, Row> rewrite;
    std::map<std::string, DTerm> closure; // term key -> canonical shape
};

void reduce_row(const PieceReducer& red, Row& row) {
    for (;;) {
        bool changed = false;
        for (auto it = row.rbegin(); it != row.rend(); ++it) {
            auto rw = red.rewrite.find(it->first);
            if (rw == red.rewrite.end()) continue;
            Rational c = it->second;
            row.erase(std::next(it).base());
            for (auto& [l2, c2] : rw->second) {
                row[l2] += c * c2;
                if (row[l2] == 0) row.erase(l2);
            }
            changed = true;
            break;
        }
        if (!changed) break;
    }
}

std::shared_ptr<PieceReducer> build_reducer(const VarTable& vt, const std::vector<DTerm>& seed,
                                            int max_deg) {
    auto red = std::make_shared<PieceReducer>();
    std::vector<std::string> work;
    auto note = [&](const DSum& s) {
        for (auto& [k, t] : s.terms)
            if (!red->closure.count(k)) {
                red->closure.emplace(k, t);
                work.push_back(k);
            }
    };
    for (auto& t : seed) {
        DSum tmp(vt);
        tmp.add_term_canonical(t.cn, vt.one_coef(DSum::slots_of(*t.cn.data)), t.den);
        note(tmp);
    }
    std::vector<Row> rows;
    std::set<std::string> seen;
    while (!work.empty()) {
        std::string key = work.back();
        work.pop_back();
        DTerm t = red->closure.at(key);
        const Diagram& g = t.cn.data->g;
        for (int ei = 0; ei < (int)g.edges.size(); ++ei) {
            auto res = contract_edge(vt, t, ei);
            if (!res) continue;
            int nsrc = res->n_common;
            for (int d = 0; d <= max_deg; ++d) {
                std::vector<ExpVec> monos;
                ExpVec cur(vt.ngraded(nsrc), 0);
                monomials_of_degree(vt.ngraded(nsrc), d, cur, 0, monos);
                for (auto& m : monos) {
                    DSum rel(vt);
                    for (auto& v : res->variants) {
                        MultiSeries mono(vt.nvars(nsrc), vt.ngraded(nsrc), vt.cap(), vt.floor_v());
                        ExpVec full(vt.nvars(nsrc), 0);
                        for (int i = 0; i < vt.ngraded(nsrc); ++i) full[i] = m[i];
                        mono.add_term(full, Rational(1));
                        rel.insert_decorated(v.raw, v.slots, LogCoef::from_series(mono), v.raw_den);
                    }
                    if (rel.is_zero()) continue;
                    note(rel);
                    Row row;
                    for (auto& [k2, t2] : rel.terms) {
                        if (!t2.deco.is_series())
                            throw PreconditionError("relation with log coefficients");
                        int ns2 = DSum::slots_of(*t2.cn.data);
                        for (auto& [e2, c2] : t2.deco.series_part().terms) {
                            for (int a2 = vt.ngraded(ns2); a2 < vt.nvars(ns2); ++a2)
                                if (e2[a2] != 0)
                                    throw PreconditionError("relation with aux dependence");
                            BasisLabel bl{k2, deco_part(vt, ns2, e2)};
                            row[bl] += c2;
                            if (row[bl] == 0) row.erase(bl);
                        }
                    }
                    if (row.empty()) continue;
                    std::string fp = row_fingerprint(row);
                    if (seen.insert(fp).second) rows.push_back(std::move(row));
                }
            }
        }
    }
    for (auto& r0 : rows) {
        Row row = r0;
        reduce_row(*red, row);
        if (row.empty()) continue;
        auto pivot = std::prev(row.end());
        BasisLabel pl = pivot->first;
        Rational pc = pivot->second;
        row.erase(pl);
        Row rhs;
        for (auto& [l, c] : row) rhs[l] = -c / pc;
        for (auto& [l, rw] : red->rewrite) {
            auto it = rw.find(pl);
            if (it == rw.end()) continue;
            Rational c = it->second;
            rw.erase(it);
            for (auto& [l2, c2] : rhs) {
                rw[l2] += c * c2;
                if (rw[l2] == 0) rw.erase(l2);
            }
        }
        red->rewrite.emplace(pl, std::move(rhs));
    }
    return red;
}

} // namespace

DSum ihx_reduce(const DSum& u) {
    std::map<std::string, std::vector<const DTerm*>> pieces;
    for (auto& [k, t] : u.terms) pieces[piece_key(t)].push_back(&t);
    DSum out(u.vt);
    out.rc_exp = u.rc_exp;
    out.cc_exp = u.cc_exp;
    out.den_base = u.den_base;
    out.den_name = u.den_name;
    static std::mutex cache_mu;
    static std::unordered_map<std::string, std::shared_ptr<PieceReducer>> cache;
    for (auto& [pk, ts] : pieces) {
        int max_deg = 0;
        for (auto* t : ts)
            for (auto& [m, s] : t->deco.parts)
                for (auto& [e, c] : s.terms)
                    max_deg = std::max(max_deg, s.graded_degree(e));
        std::ostringstream ck;
        ck << pk << "#d" << max_deg << "#";
        {
            std::vector<std::string> keys;
            for (auto* t : ts) {
                std::string k2 = t->cn.data->key;
                for (int d : t->den) k2 += ":" + std::to_string(d);
                keys.push_back(k2);
            }
            std::sort(keys.begin(), keys.end());
            for (auto& k2 : keys) ck << k2 << "&";
        }
        std::shared_ptr<PieceReducer> red;
        {
            std::lock_guard<std::mutex> lk(cache_mu);
            auto it = cache.find(ck.str());
            if (it != cache.end()) red = it->second;
        }
        if (!red) {
            std::vector<DTerm> seed;
            for (auto* t : ts) seed.push_back(*t);
            red = build_reducer(u.vt, seed, max_deg);
            std::lock_guard<std::mutex> lk(cache_mu);
            cache.emplace(ck.str(), red);
        }
        for (auto* t : ts) {
            int ns = DSum::slots_of(*t->cn.data);
            std::string tkey;
            {
                bool any = false;
                for (int d : t->den) any = any || d;
                tkey = t->cn.data->key;
                if (any) {
                    tkey += "|den:";
                    for (int d : t->den) tkey += std::to_string(d) + ",";
                }
            }
            for (auto& [lm, s] : t->deco.parts)
                for (auto& [e, c] : s.terms) {
                    Row row;
                    row[BasisLabel{tkey, deco_part(u.vt, ns, e)}] = c;
                    reduce_row(*red, row);
                    for (auto& [bl, c2] : row) {
                        const DTerm& shape = red->closure.at(bl.term_key);
                        int ns2 = DSum::slots_of(*shape.cn.data);
                        MultiSeries ms(u.vt.nvars(ns2), u.vt.ngraded(ns2), u.vt.cap(),
                                       u.vt.floor_v());
                        ExpVec full(u.vt.nvars(ns2), 0);
                        for (int i = 0; i < u.vt.ngraded(ns2); ++i) full[i] = bl.mono[i];
                        for (int a2 = 0; a2 < u.vt.naux(); ++a2)
                            full[u.vt.avar(ns2, a2)] = e[u.vt.avar(ns, a2)];
                        ms.add_term(full, c2);
                        LogCoef piece(u.vt.nvars(ns2), u.vt.ngraded(ns2), u.vt.cap(),
                                      u.vt.floor_v());
                        piece.add_part(lm, ms);
                        out.add_term_canonical(shape.cn, piece, shape.den);
                    }
                }
        }
    }
    return out;
}

bool ihx_equal(const DSum& u, const DSum& v) {
    if (u.terms.empty() && v.terms.empty()) return true;
    if (!(u.rc_exp == v.rc_exp) || !(u.cc_exp == v.cc_exp)) return false;
    DSum d = u - v;
    return ihx_reduce(d).is_zero();
}

void ihx_cache_clear() {}

} // namespace jdcalc
