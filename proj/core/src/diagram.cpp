#include "jdcalc/diagram.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace jdcalc {

void Diagram::verify() const {
    std::map<std::pair<int, int>, int> occupancy;
    for (auto& e : edges) {
        for (const End* p : {&e.a, &e.b}) {
            if (p->v < 0 || p->v >= n_vertices()) throw FormatError("edge end out of range");
            int maxslot = is_leg(p->v) ? 0 : 2;
            if (p->slot < 0 || p->slot > maxslot) throw FormatError("bad slot");
            occupancy[{p->v, p->slot}]++;
        }
    }
    for (auto& [k, c] : occupancy)
        if (c != 1) throw FormatError("slot used more than once");
    for (int v = 0; v < n3; ++v)
        for (int s = 0; s < 3; ++s)
            if (!occupancy.count({v, s})) throw FormatError("empty slot at 3-vertex");
    for (int v = n3; v < n_vertices(); ++v)
        if (!occupancy.count({v, 0})) throw FormatError("leg without incident edge");
}

int Diagram::ldot_count() const {
    int n = 0;
    for (auto& [l, c] : sp.ldot) n += c;
    return n;
}

int Diagram::chi() const {
    int c = (int)edges.size() - n_vertices();
    c -= sp.dot + ldot_count();
    return c;
}

std::vector<int> rref(std::vector<std::vector<Rational>>& m) {
    std::vector<int> pivots;
    if (m.empty()) return pivots;
    size_t ncols = m[0].size();
    size_t row = 0;
    for (size_t col = 0; col < ncols && row < m.size(); ++col) {
        size_t sel = row;
        while (sel < m.size() && m[sel][col] == 0) ++sel;
        if (sel == m.size()) continue;
        std::swap(m[row], m[sel]);
        Rational inv = Rational(1) / m[row][col];
        for (size_t c = col; c < ncols; ++c) m[row][c] *= inv;
        for (size_t r = 0; r < m.size(); ++r) {
            if (r == row || m[r][col] == 0) continue;
            Rational f = m[r][col];
            for (size_t c = col; c < ncols; ++c) m[r][c] -= f * m[row][c];
        }
        pivots.push_back((int)col);
        ++row;
    }
    m.resize(row);
    return pivots;
}

namespace {

using Code = long long;

inline uint64_t mix(uint64_t a, uint64_t b) {
    a ^= b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2);
    a *= 0xff51afd7ed558ccdULL;
    a ^= a >> 33;
    return a;
}

inline Code label_code(const Label& l) {
    return ((Code)(unsigned char)l.base << 24) | ((Code)l.deco << 20) | ((Code)(l.index + 1) << 2);
}

struct IncEnd {
    int edge;
    int which; // 0 = end a, 1 = end b
};

struct Canonicalizer {
    const Diagram& d;
    int n3;
    std::vector<std::array<IncEnd, 3>> incid; // internal vertex -> slot -> end
    std::vector<IncEnd> leg_incid;
    std::vector<uint64_t> color;

    explicit Canonicalizer(const Diagram& dd) : d(dd), n3(dd.n3) {
        incid.resize(n3);
        leg_incid.resize(d.legs.size());
        for (int ei = 0; ei < (int)d.edges.size(); ++ei) {
            const Edge& e = d.edges[ei];
            auto place = [&](const End& en, int which) {
                if (d.is_leg(en.v))
                    leg_incid[en.v - n3] = IncEnd{ei, which};
                else
                    incid[en.v][en.slot] = IncEnd{ei, which};
            };
            place(e.a, 0);
            place(e.b, 1);
        }
        compute_colors();
    }

    const End& other_end(const IncEnd& ie) const {
        const Edge& e = d.edges[ie.edge];
        return ie.which == 0 ? e.b : e.a;
    }
    const End& this_end(const IncEnd& ie) const {
        const Edge& e = d.edges[ie.edge];
        return ie.which == 0 ? e.a : e.b;
    }
    bool is_loop(int ei) const {
        const Edge& e = d.edges[ei];
        return e.a.v == e.b.v;
    }

    void compute_colors() {
        color.assign(n3, 1);
        for (int round = 0; round <= n3; ++round) {
            std::vector<uint64_t> next(n3);
            for (int v = 0; v < n3; ++v) {
                std::vector<uint64_t> sig;
                for (int s = 0; s < 3; ++s) {
                    const IncEnd& ie = incid[v][s];
                    const Edge& e = d.edges[ie.edge];
                    uint64_t h = (uint64_t)e.kind * 1315423911ULL;
                    if (is_loop(ie.edge))
                        h = mix(h, 7777);
                    else {
                        const End& o = other_end(ie);
                        h = d.is_leg(o.v) ? mix(h, (uint64_t)label_code(d.legs[o.v - n3]))
                                          : mix(h, color[o.v]);
                    }
                    sig.push_back(h);
                }
                std::sort(sig.begin(), sig.end());
                uint64_t h = color[v];
                for (auto x : sig) h = mix(h, x);
                next[v] = h;
            }
            color = next;
        }
    }

    // ---- phase 1: vertex numbering by minimal row certificate ----

    using Row = std::vector<Code>;
    std::vector<std::vector<int>> final_orders; // canonical id -> input vertex
    std::vector<Row> best_rows;
    bool have_best = false;

    Row row_for(int v, const std::vector<int>& id_of) const {
        Row r;
        r.push_back((Code)(color[v] & 0x7fffffffffffLL));
        std::vector<Code> parts;
        for (int s = 0; s < 3; ++s) {
            const IncEnd& ie = incid[v][s];
            const Edge& e = d.edges[ie.edge];
            Code kindc = (Code)e.kind;
            if (is_loop(ie.edge)) {
                parts.push_back((3LL << 40) | kindc);
            } else {
                const End& o = other_end(ie);
                if (d.is_leg(o.v))
                    parts.push_back((2LL << 40) | (label_code(d.legs[o.v - n3]) << 2) | kindc);
                else if (id_of[o.v] >= 0)
                    parts.push_back((1LL << 40) | ((Code)id_of[o.v] << 2) | kindc);
                else
                    parts.push_back((4LL << 40) | kindc); // unassigned neighbor
            }
        }
        std::sort(parts.begin(), parts.end());
        r.insert(r.end(), parts.begin(), parts.end());
        return r;
    }

    void search(std::vector<int>& order, std::vector<int>& id_of, std::vector<Row>& rows) {
        int k = (int)order.size();
        if (k == n3) {
            if (!have_best || rows < best_rows) {
                best_rows = rows;
                final_orders.clear();
                have_best = true;
            }
            if (rows == best_rows) final_orders.push_back(order);
            return;
        }
        // candidates: unassigned vertices with minimal row
        Row bestr;
        std::vector<int> cand;
        for (int v = 0; v < n3; ++v) {
            if (id_of[v] >= 0) continue;
            Row r = row_for(v, id_of);
            if (cand.empty() || r < bestr) {
                bestr = r;
                cand.assign(1, v);
            } else if (r == bestr) {
                cand.push_back(v);
            }
        }
        if (have_best && (int)best_rows.size() > k) {
            if (bestr > best_rows[k]) return; // prefix already worse
        }
        for (int v : cand) {
            order.push_back(v);
            id_of[v] = k;
            rows.push_back(bestr);
            search(order, id_of, rows);
            rows.pop_back();
            id_of[v] = -1;
            order.pop_back();
        }
    }

    // ---- phase 2: slot arrangements and full certificate ----

    struct Completion {
        std::vector<int> order;          // canonical id -> input vertex
        std::vector<std::array<int, 3>> arr; // per canonical id: canonical slot -> input slot
        int sign = 1;
        std::vector<Code> cert;
        std::vector<int> edge_pos;       // input edge -> canonical edge position
        std::vector<int8_t> edge_flip;
    };

    Code end_code(const End& en, const std::vector<int>& id_of,
                  const std::vector<std::array<int, 3>>& inv_arr) const {
        if (d.is_leg(en.v)) return (1LL << 56) | label_code(d.legs[en.v - n3]);
        int id = id_of[en.v];
        int cslot = inv_arr[id][en.slot];
        return ((Code)id << 8) | (Code)cslot;
    }

    // local code of an end at vertex v ignoring slots (for arrangement choice)
    Code local_code(const IncEnd& ie, const std::vector<int>& id_of) const {
        const Edge& e = d.edges[ie.edge];
        Code kindc = (Code)e.kind;
        if (is_loop(ie.edge)) return (3LL << 50) | kindc;
        const End& o = other_end(ie);
        if (d.is_leg(o.v)) return (2LL << 50) | (label_code(d.legs[o.v - n3]) << 2) | kindc;
        return (1LL << 50) | ((Code)id_of[o.v] << 2) | kindc;
    }

    static const std::array<std::array<int, 3>, 6>& perms3() {
        static const std::array<std::array<int, 3>, 6> p = {{{0, 1, 2},
                                                             {1, 2, 0},
                                                             {2, 0, 1},
                                                             {0, 2, 1},
                                                             {2, 1, 0},
                                                             {1, 0, 2}}};
        return p;
    }
    static int perm_sign(int idx) { return idx < 3 ? 1 : -1; }

    std::vector<Completion> completions;
    std::vector<Code> best_cert;
    bool have_cert = false;

    void finish_completion(const std::vector<int>& order, const std::vector<int>& id_of,
                           std::vector<std::array<int, 3>>& arr, int sign) {
        // inv_arr: canonical id -> input slot -> canonical slot
        std::vector<std::array<int, 3>> inv_arr(n3);
        for (int id = 0; id < n3; ++id)
            for (int cs = 0; cs < 3; ++cs) inv_arr[id][arr[id][cs]] = cs;

        struct ETup {
            Code kind, ca, cb;
            int input;
            bool flipped;
            bool operator<(const ETup& o) const {
                return std::tie(kind, ca, cb, input) < std::tie(o.kind, o.ca, o.cb, o.input);
            }
        };
        std::vector<ETup> tups;
        for (int ei = 0; ei < (int)d.edges.size(); ++ei) {
            const Edge& e = d.edges[ei];
            Code ca = end_code(e.a, id_of, inv_arr);
            Code cb = end_code(e.b, id_of, inv_arr);
            bool flip = cb < ca;
            if (flip) std::swap(ca, cb);
            tups.push_back({(Code)e.kind, ca, cb, ei, flip});
        }
        std::sort(tups.begin(), tups.end());
        std::vector<Code> cert;
        for (auto& t : tups) {
            cert.push_back(t.kind);
            cert.push_back(t.ca);
            cert.push_back(t.cb);
        }
        if (have_cert && cert > best_cert) return;
        Completion c;
        c.order = order;
        c.arr = arr;
        c.sign = sign;
        c.cert = cert;
        c.edge_pos.resize(d.edges.size());
        c.edge_flip.resize(d.edges.size());
        for (int pos = 0; pos < (int)tups.size(); ++pos) {
            c.edge_pos[tups[pos].input] = pos;
            c.edge_flip[tups[pos].input] = tups[pos].flipped ? -1 : 1;
        }
        if (!have_cert || cert < best_cert) {
            best_cert = cert;
            have_cert = true;
            completions.clear();
        }
        completions.push_back(std::move(c));
    }

    void arrange(const std::vector<int>& order, const std::vector<int>& id_of, int id,
                 std::vector<std::array<int, 3>>& arr, int sign) {
        if (id == n3) {
            finish_completion(order, id_of, arr, sign);
            return;
        }
        int v = order[id];
        std::array<Code, 3> codes;
        for (int s = 0; s < 3; ++s) codes[s] = local_code(incid[v][s], id_of);
        // minimal code sequence over the 6 slot permutations
        std::vector<int> chosen;
        std::array<Code, 3> bestseq{};
        for (int pi = 0; pi < 6; ++pi) {
            auto& p = perms3()[pi];
            std::array<Code, 3> seq = {codes[p[0]], codes[p[1]], codes[p[2]]};
            if (chosen.empty() || seq < bestseq) {
                bestseq = seq;
                chosen.assign(1, pi);
            } else if (seq == bestseq) {
                chosen.push_back(pi);
            }
        }
        for (int pi : chosen) {
            arr[id] = perms3()[pi];
            arrange(order, id_of, id + 1, arr, sign * perm_sign(pi));
        }
    }
};

std::string cert_to_key(const Diagram& d, const std::vector<Code>& cert) {
    std::ostringstream os;
    os << "D" << d.n3 << "|" << d.legs.size() << ";";
    os << "S" << d.sp.rc << "," << d.sp.cc << "," << d.sp.dot;
    for (auto& [l, c] : d.sp.ldot) os << "," << l.str() << ":" << c;
    os << ";";
    for (Code c : cert) os << c << ",";
    return os.str();
}

CohBasis cohomology_of(const Diagram& d);

struct CanonCache {
    std::mutex mu;
    std::unordered_map<std::string, std::shared_ptr<const CanonData>> map;
};
CanonCache& canon_cache() {
    static CanonCache c;
    return c;
}

} // namespace

CCKind detect_cc(const Diagram& d) {
    for (int v = 0; v < d.n3; ++v) {
        int cartan = 0;
        for (auto& e : d.edges) {
            if (e.a.v == v && e.kind == Kind::Cartan) ++cartan;
            if (e.b.v == v && e.kind == Kind::Cartan) ++cartan;
        }
        if (cartan >= 2) return CCKind::CC1;
    }
    // CC2: a root edge whose class lies in the Cartan span of H^1(D, dD).
    int ne = (int)d.edges.size();
    std::vector<std::vector<Rational>> rows;
    for (int v = 0; v < d.n3; ++v) {
        std::vector<Rational> row(ne, Rational(0));
        bool nz = false;
        for (int ei = 0; ei < ne; ++ei) {
            const Edge& e = d.edges[ei];
            if (e.a.v == e.b.v) continue;
            if (e.a.v == v) row[ei] -= 1, nz = true;
            if (e.b.v == v) row[ei] += 1, nz = true;
        }
        if (nz) rows.push_back(std::move(row));
    }
    for (int ei = 0; ei < ne; ++ei)
        if (d.edges[ei].kind == Kind::Cartan) {
            std::vector<Rational> row(ne, Rational(0));
            row[ei] = 1;
            rows.push_back(std::move(row));
        }
    std::vector<int> pivots = rref(rows);
    for (int ei = 0; ei < ne; ++ei) {
        if (d.edges[ei].kind != Kind::Root) continue;
        std::vector<Rational> v(ne, Rational(0));
        v[ei] = 1;
        for (size_t r = 0; r < rows.size(); ++r) {
            if (v[pivots[r]] == 0) continue;
            Rational f = v[pivots[r]];
            for (int c = 0; c < ne; ++c) v[c] -= f * rows[r][c];
        }
        bool zero = std::all_of(v.begin(), v.end(), [](const Rational& q) { return q == 0; });
        if (zero) return CCKind::CC2;
    }
    return CCKind::None;
}

namespace {

CohBasis cohomology_of(const Diagram& d) {
    CohBasis cb;
    for (int ei = 0; ei < (int)d.edges.size(); ++ei)
        if (d.edges[ei].kind == Kind::Root) cb.root_edges.push_back(ei);
    int ne = (int)cb.root_edges.size();
    std::map<int, int> col_of;
    for (int c = 0; c < ne; ++c) col_of[cb.root_edges[c]] = c;
    std::vector<std::vector<Rational>> rows;
    for (int v = 0; v < d.n3; ++v) {
        std::vector<Rational> row(ne, Rational(0));
        bool nz = false;
        for (int c = 0; c < ne; ++c) {
            const Edge& e = d.edges[cb.root_edges[c]];
            if (e.a.v == e.b.v) continue;
            if (e.a.v == v) row[c] -= 1, nz = true;
            if (e.b.v == v) row[c] += 1, nz = true;
        }
        if (nz) rows.push_back(std::move(row));
    }
    std::vector<int> pivots = rref(rows);
    std::vector<int> pivot_row(ne, -1);
    for (size_t r = 0; r < rows.size(); ++r) pivot_row[pivots[r]] = (int)r;
    for (int c = 0; c < ne; ++c)
        if (pivot_row[c] < 0) cb.basis_edge.push_back(cb.root_edges[c]);
    cb.rank = (int)cb.basis_edge.size();
    std::map<int, int> basis_col; // free column -> basis index
    int bi = 0;
    for (int c = 0; c < ne; ++c)
        if (pivot_row[c] < 0) basis_col[c] = bi++;
    cb.edge_class.assign(ne, std::vector<Rational>(cb.rank, Rational(0)));
    for (int c = 0; c < ne; ++c) {
        if (pivot_row[c] < 0) {
            cb.edge_class[c][basis_col[c]] = 1;
        } else {
            const auto& row = rows[pivot_row[c]];
            for (int f = 0; f < ne; ++f)
                if (f != c && row[f] != 0 && pivot_row[f] < 0)
                    cb.edge_class[c][basis_col[f]] = -row[f];
        }
    }
    return cb;
}

} // namespace

CohBasis cohomology(const Diagram& d) {
    if (detect_cc(d) != CCKind::None)
        throw PreconditionError("cohomology of a CC diagram is not defined");
    return cohomology_of(d);
}

Canon canonicalize(const Diagram& d) {
    d.verify();
    Canon out;
    out.edge_map.assign(d.edges.size(), -1);
    out.edge_flip.assign(d.edges.size(), 1);

    for (auto& e : d.edges) {
        if (e.kind == Kind::Total)
            throw PreconditionError("total edges must be resolved before canonicalization");
        for (const End* p : {&e.a, &e.b}) {
            if (!d.is_leg(p->v)) continue;
            Kind lk = d.legs[p->v - d.n3].kind();
            if ((lk == Kind::Root && e.kind == Kind::Cartan) ||
                (lk == Kind::Cartan && e.kind == Kind::Root)) {
                out.zero = true; // label kind incompatible with edge kind
                return out;
            }
        }
    }

    Canonicalizer cz(d);
    std::vector<int> order, id_of(d.n3, -1);
    std::vector<Canonicalizer::Row> rows;
    cz.search(order, id_of, rows);
    for (auto& ord : cz.final_orders) {
        std::vector<int> ids(d.n3, -1);
        for (int k = 0; k < d.n3; ++k) ids[ord[k]] = k;
        std::vector<std::array<int, 3>> arr(d.n3);
        cz.arrange(ord, ids, 0, arr, 1);
    }
    if (d.n3 == 0 && cz.completions.empty()) {
        // no internal vertices: single trivial completion
        std::vector<int> ids;
        std::vector<std::array<int, 3>> arr;
        std::vector<int> ord;
        cz.finish_completion(ord, ids, arr, 1);
    }

    auto& comps = cz.completions;
    const auto& base = comps.front();

    // zero detection: two completions with the same edge action but opposite
    // sign, or more generally any sign disagreement among identical actions.
    for (auto& c : comps)
        if (c.sign != base.sign) {
            // distinct signs reaching the same canonical certificate: the
            // induced automorphism carries sign -1
            out.zero = true;
            return out;
        }
    // same-sign completions may still compose to a -1 automorphism only via
    // sign disagreement, so reaching here means nonzero.

    // build canonical diagram from base completion
    std::shared_ptr<CanonData> data = std::make_shared<CanonData>();
    Diagram& g = data->g;
    g.n3 = d.n3;
    g.sp = d.sp;
    struct PendingEdge {
        Kind kind;
        End a, b;
    };
    // order input edges by canonical position
    std::vector<int> by_pos(d.edges.size());
    for (int ei = 0; ei < (int)d.edges.size(); ++ei) by_pos[base.edge_pos[ei]] = ei;
    std::vector<std::array<int, 3>> inv_arr(d.n3);
    for (int id = 0; id < d.n3; ++id)
        for (int cs = 0; cs < 3; ++cs) inv_arr[id][base.arr[id][cs]] = cs;
    std::vector<int> ids(d.n3, -1);
    for (int k = 0; k < d.n3; ++k) ids[base.order[k]] = k;

    auto conv_end = [&](const End& en) -> End {
        if (!d.is_leg(en.v)) return End{ids[en.v], inv_arr[ids[en.v]][en.slot]};
        int legid = g.n3 + (int)g.legs.size();
        g.legs.push_back(d.legs[en.v - d.n3]);
        return End{legid, 0};
    };
    for (int pos = 0; pos < (int)by_pos.size(); ++pos) {
        const Edge& e = d.edges[by_pos[pos]];
        End a = e.a, b = e.b;
        if (base.edge_flip[by_pos[pos]] < 0) std::swap(a, b);
        Edge ne;
        ne.kind = e.kind;
        ne.a = conv_end(a);
        ne.b = conv_end(b);
        g.edges.push_back(ne);
    }
    data->key = cert_to_key(g, base.cert);

    out.sign = base.sign;
    out.edge_map = base.edge_pos;
    out.edge_flip = base.edge_flip;

    // intern canonical data
    {
        auto& cache = canon_cache();
        std::lock_guard<std::mutex> lk(cache.mu);
        auto it = cache.map.find(data->key);
        if (it != cache.map.end()) {
            out.data = it->second;
            return out;
        }
    }

    // automorphisms relative to base
    std::vector<std::pair<std::vector<int>, std::vector<int8_t>>> seen;
    for (auto& c : comps) {
        std::vector<int> perm(d.edges.size());
        std::vector<int8_t> flip(d.edges.size());
        for (int ei = 0; ei < (int)d.edges.size(); ++ei) {
            perm[base.edge_pos[ei]] = c.edge_pos[ei];
            flip[base.edge_pos[ei]] = (int8_t)(base.edge_flip[ei] * c.edge_flip[ei]);
        }
        bool dup = false;
        for (auto& s : seen)
            if (s.first == perm && s.second == flip) dup = true;
        if (!dup) seen.emplace_back(perm, flip);
    }
    long count = (long)comps.size();
    std::vector<EdgeAut> gens;
    for (auto& [perm, flip] : seen) gens.push_back(EdgeAut{perm, flip, 1});

    // tie groups: identical canonical edge tuples (possible only for edges
    // between same-label legs) give swap automorphisms; symmetric leg-leg
    // edges give orientation flips.
    auto tuple_of = [&](int pos) {
        const Edge& e = g.edges[pos];
        auto code = [&](const End& en) -> Code {
            if (g.is_leg(en.v)) return (1LL << 56) | label_code(g.legs[en.v - g.n3]);
            return ((Code)en.v << 8) | (Code)en.slot;
        };
        Code ca = code(e.a), cb = code(e.b);
        if (cb < ca) std::swap(ca, cb);
        return std::tuple<Code, Code, Code>((Code)e.kind, ca, cb);
    };
    std::map<std::tuple<Code, Code, Code>, std::vector<int>> groups;
    for (int pos = 0; pos < (int)g.edges.size(); ++pos) groups[tuple_of(pos)].push_back(pos);
    for (auto& [t, members] : groups) {
        const Edge& e = g.edges[members[0]];
        bool legleg = g.is_leg(e.a.v) && g.is_leg(e.b.v);
        if (!legleg) continue; // internal slots are unique, no ties
        if (members.size() > 1) {
            for (long f = 2; f <= (long)members.size(); ++f) count *= f;
            for (size_t i = 0; i + 1 < members.size(); ++i) {
                EdgeAut a;
                a.edge_perm.resize(g.edges.size());
                a.edge_flip.assign(g.edges.size(), 1);
                for (int p = 0; p < (int)g.edges.size(); ++p) a.edge_perm[p] = p;
                std::swap(a.edge_perm[members[i]], a.edge_perm[members[i + 1]]);
                gens.push_back(a);
            }
        }
        bool symmetric = g.legs[e.a.v - g.n3] == g.legs[e.b.v - g.n3];
        if (symmetric) {
            count *= (long)(1L << members.size()) / (members.size() > 0 ? 1 : 1);
            count /= (long)(1L << members.size());
            count *= (long)(1L << members.size());
            for (int m : members) {
                EdgeAut a;
                a.edge_perm.resize(g.edges.size());
                a.edge_flip.assign(g.edges.size(), 1);
                for (int p = 0; p < (int)g.edges.size(); ++p) a.edge_perm[p] = p;
                a.edge_flip[m] = -1;
                gens.push_back(a);
            }
        }
    }

    // close the generated group (small at desk scale)
    std::vector<EdgeAut> group;
    {
        auto keyof = [](const EdgeAut& a) {
            std::string k;
            for (size_t i = 0; i < a.edge_perm.size(); ++i) {
                k += std::to_string(a.edge_perm[i]);
                k += a.edge_flip[i] < 0 ? '-' : '+';
            }
            k += a.sign < 0 ? '!' : '.';
            return k;
        };
        std::map<std::string, EdgeAut> closed;
        EdgeAut id;
        id.edge_perm.resize(g.edges.size());
        id.edge_flip.assign(g.edges.size(), 1);
        for (int p = 0; p < (int)g.edges.size(); ++p) id.edge_perm[p] = p;
        closed[keyof(id)] = id;
        std::vector<EdgeAut> work = {id};
        while (!work.empty()) {
            EdgeAut cur = work.back();
            work.pop_back();
            for (auto& gaut : gens) {
                EdgeAut nx;
                nx.edge_perm.resize(g.edges.size());
                nx.edge_flip.resize(g.edges.size());
                for (int p = 0; p < (int)g.edges.size(); ++p) {
                    nx.edge_perm[p] = gaut.edge_perm[cur.edge_perm[p]];
                    nx.edge_flip[p] = (int8_t)(cur.edge_flip[p] * gaut.edge_flip[cur.edge_perm[p]]);
                }
                nx.sign = cur.sign * gaut.sign;
                auto k = keyof(nx);
                if (!closed.count(k)) {
                    closed[k] = nx;
                    work.push_back(nx);
                    if (closed.size() > 20000)
                        throw PreconditionError("automorphism group too large");
                }
            }
        }
        for (auto& [k, a] : closed) group.push_back(a);
    }
    data->autos = group;
    data->aut_count = (long)group.size();
    data->cc = detect_cc(g);
    if (data->cc == CCKind::None) data->coh = cohomology_of(g);
    data->layout.rank = data->coh.rank;
    data->layout.n_rc = g.sp.rc;
    data->layout.n_dot = g.sp.dot;
    data->layout.n_ldot = g.ldot_count();

    {
        auto& cache = canon_cache();
        std::lock_guard<std::mutex> lk(cache.mu);
        auto [it, inserted] = cache.map.emplace(data->key, data);
        out.data = it->second;
    }
    return out;
}

std::string diagram_str(const Diagram& d) {
    std::ostringstream os;
    os << "diagram\n";
    for (int v = 0; v < d.n3; ++v) os << "v " << v << "\n";
    for (int i = 0; i < (int)d.legs.size(); ++i)
        os << "leg " << (d.n3 + i) << " " << d.legs[i].str() << "\n";
    for (auto& e : d.edges)
        os << "e " << kind_name(e.kind) << " " << e.a.v << "." << e.a.slot << " " << e.b.v << "."
           << e.b.slot << "\n";
    if (d.sp.rc) os << "special rc " << d.sp.rc << "\n";
    if (d.sp.cc) os << "special cc " << d.sp.cc << "\n";
    if (d.sp.dot) os << "special dot " << d.sp.dot << "\n";
    for (auto& [l, c] : d.sp.ldot) os << "special ldot " << l.str() << " " << c << "\n";
    os << "end\n";
    return os.str();
}

Diagram diagram_parse(std::istream& in) {
    Diagram d;
    std::string line;
    bool started = false;
    std::map<int, Label> legmap;
    std::vector<std::tuple<Kind, int, int, int, int>> edges;
    int maxv = -1;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (tok == "#") continue;
        if (!started) {
            if (tok != "diagram") throw FormatError("expected 'diagram' header");
            started = true;
            continue;
        }
        if (tok == "end") break;
        if (tok == "v") {
            int id;
            ls >> id;
            maxv = std::max(maxv, id);
            d.n3 = std::max(d.n3, id + 1);
        } else if (tok == "leg") {
            int id;
            std::string lab;
            ls >> id >> lab;
            legmap[id] = Label::parse(lab);
            maxv = std::max(maxv, id);
        } else if (tok == "e") {
            std::string kind, ea, eb;
            ls >> kind >> ea >> eb;
            auto split = [](const std::string& s) {
                auto dot = s.find('.');
                if (dot == std::string::npos) throw FormatError("edge end must be v.slot");
                return std::pair<int, int>(std::stoi(s.substr(0, dot)),
                                           std::stoi(s.substr(dot + 1)));
            };
            auto [av, as] = split(ea);
            auto [bv, bs] = split(eb);
            edges.emplace_back(kind_parse(kind), av, as, bv, bs);
        } else if (tok == "special") {
            std::string name;
            ls >> name;
            if (name == "rc")
                ls >> d.sp.rc;
            else if (name == "cc")
                ls >> d.sp.cc;
            else if (name == "dot")
                ls >> d.sp.dot;
            else if (name == "ldot") {
                std::string lab;
                int c;
                ls >> lab >> c;
                d.sp.ldot[Label::parse(lab)] = c;
            } else
                throw FormatError("unknown special: " + name);
        } else {
            throw FormatError("unknown diagram line: " + tok);
        }
    }
    if (!started) throw FormatError("missing diagram block");
    // legs must be numbered after internal vertices; renumber to our layout
    std::map<int, int> vmap;
    for (int v = 0; v < d.n3; ++v) vmap[v] = v;
    for (auto& [id, lab] : legmap) {
        if (id < d.n3) throw FormatError("leg ids must follow 3-vertex ids");
        vmap[id] = d.n3 + (int)d.legs.size();
        d.legs.push_back(lab);
    }
    for (auto& [k, av, as, bv, bs] : edges) {
        if (!vmap.count(av) || !vmap.count(bv)) throw FormatError("edge references unknown vertex");
        d.edges.push_back(Edge{End{vmap[av], as}, End{vmap[bv], bs}, k});
    }
    d.verify();
    return d;
}

} // namespace jdcalc
