#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>

#include "jdcalc/diagram.hpp"
#include "jdcalc/logcoef.hpp"

namespace jdcalc {

/// Shared variable bookkeeping for a family of diagram sums.
/// L counts the Cartan symbols a_1..a_L that decorations range over; each
/// decoration slot contributes L graded series variables. `aux` lists free
/// bookkeeping variables (one-parameter families, hbar, regulators).
struct VarTable {
    int L = 0;
    std::vector<std::string> aux;
    int acap = 4;
    int slack = 8;
    int degcap = 6;
    int chicap = 2;

    int cap() const { return acap + slack; }
    int floor_v() const { return -acap - slack; }
    int naux() const { return (int)aux.size(); }
    int nvars(int nslots) const { return nslots * L + naux(); }
    int ngraded(int nslots) const { return nslots * L; }
    int dvar(int slot, int j) const { return slot * L + j; }
    int avar(int nslots, int k) const { return nslots * L + k; }

    LogCoef zero_coef(int nslots) const {
        return LogCoef(nvars(nslots), ngraded(nslots), cap(), floor_v());
    }
    LogCoef one_coef(int nslots) const {
        return LogCoef::one(nvars(nslots), ngraded(nslots), cap(), floor_v());
    }
    MultiSeries zero_series(int nslots) const {
        return MultiSeries(nvars(nslots), ngraded(nslots), cap(), floor_v());
    }
    std::vector<std::string> names(int nslots) const;
    // variable map embedding an nslots-layout into a wider one with slot offset
    std::vector<int> embed(int nslots, int into_nslots, int slot_offset) const;

    bool operator==(const VarTable& o) const {
        return L == o.L && aux == o.aux && acap == o.acap && slack == o.slack &&
               degcap == o.degcap && chicap == o.chicap;
    }
};

/// How a source decoration slot lands in a raw diagram before
/// canonicalization: a rational combination of oriented raw edges, or a
/// special component by ordinal.
struct SlotDesc {
    enum Type { Graph, Rc, Dot, Ldot } type = Graph;
    std::vector<std::pair<int, Rational>> edges; // raw edge index -> coefficient
    int ordinal = 0;   // for Rc/Dot: index among that type; for Ldot: copy per label
    Label ldot_label;
    Rational coef = Rational(1); // sign/scale for special-slot transport
};

struct DTerm {
    Canon cn;
    LogCoef deco;          // over the term layout: slots(cn) * L graded vars + aux
    std::vector<int> den;  // denominator power per root edge (coh.root_edges order)
};

/// Finite linear combination of canonical decorated diagrams, with an
/// unexpanded circle exponent: the value is
///   exp(rc_exp * root_circle + cc_exp * cartan_circle) * sum(terms).
/// rc_exp lives in a one-slot layout (the circle class), cc_exp in a
/// zero-slot layout.
class DSum {
public:
    VarTable vt;
    LogCoef rc_exp;
    LogCoef cc_exp;
    std::map<std::string, DTerm> terms;
    std::shared_ptr<const MultiSeries> den_base; // one-slot layout series (even)
    std::string den_name = "den";

    DSum() = default;
    explicit DSum(const VarTable& v);
    static DSum unit(const VarTable& v); // empty diagram, coefficient 1

    bool is_zero() const { return terms.empty(); }
    int n_terms() const { return (int)terms.size(); }

    // Number of decoration slots of a canonical diagram.
    static int slots_of(const CanonData& cd) { return cd.layout.slots(); }

    // Plain insertion: coefficient uses aux variables only (given in the
    // zero-slot layout); total edges are resolved; CC and AS zeroes dropped.
    void insert_plain(const Diagram& raw, const LogCoef& aux_coef);
    void insert_plain(const Diagram& raw, const Rational& c);

    // Decorated insertion. `deco` is over the layout with `slots.size()`
    // slots; each slot is located in the raw diagram by its SlotDesc.
    void insert_decorated(const Diagram& raw, const std::vector<SlotDesc>& slots,
                          const LogCoef& deco, const std::vector<int>& raw_den = {});

    void add_term_canonical(const Canon& cn, const LogCoef& deco, const std::vector<int>& den);

    DSum& operator+=(const DSum& o);
    DSum& operator-=(const DSum& o);
    friend DSum operator+(DSum a, const DSum& b) { a += b; return a; }
    friend DSum operator-(DSum a, const DSum& b) { a -= b; return a; }
    DSum operator-() const;
    DSum scaled(const Rational& c) const;
    DSum scaled_aux(const LogCoef& aux_coef) const; // multiply by aux-only coefficient

    // Disjoint-union product (bilinear, re-canonicalized, truncated).
    DSum operator*(const DSum& o) const;

    // Gluing of legs. Modes: once (m=1), m_times, LR (sum over all m, then
    // both labels set to zero), flat (all `x` legs consumed, `y` legs may
    // remain). Root-Cartan fusions and CC results vanish.
    enum class GlueMode { Once, MTimes, LR, Flat };
    DSum glue(Label x, Label y, GlueMode mode, int m = 1) const;

    // Cartan-leg shaving into decorations: legs labeled a_1..a_L are removed,
    // Cartan struts become dots / labeled dots, other removed legs contribute
    // their merged root edge's cohomology class.
    DSum shave_cartan() const;

    // Wheeling on the legs labeled `x`: glue the wheels of the inverse Duflo
    // element (legs carrying the derivative companion of x) into x legs.
    DSum wheeling(Label x) const;

    // Label utilities.
    DSum relabeled(const std::map<Label, Label>& m) const; // plain relabel (base+index)
    DSum set_label_zero(Label x) const;                    // drop terms carrying x
    DSum flip_label_sign(Label x) const;                   // x -> -x
    DSum parity_symbol(int j) const;                       // a_j-degree parity on decorations
    std::vector<Label> labels_present() const;
    int count_legs(const Diagram& g, Label x) const;

    // derivative of all coefficients with respect to aux variable k
    DSum diff_aux(int k) const;

    // exp of a sum all of whose terms have positive degree; log of a sum with
    // empty-diagram coefficient 1.
    DSum exp_sum() const;
    DSum log_sum() const;

    // Drops terms violating the degree/chi caps (applied on insertion too).
    int term_min_deg(const DTerm& t) const;

    bool operator==(const DSum& o) const;

    std::string str() const;
    std::string serialize() const;
    static DSum deserialize(std::istream& in, const VarTable& vt);

    // Per-diagram access for reports and tests.
    const DTerm* find(const std::string& key) const;
    LogCoef coeff_of(const Diagram& raw) const; // transported to that diagram's layout
};

// Binary gluing: pairs A's x legs with B's y legs only (B's y legs are
// retagged first so equal labels on both sides do not self-pair).
DSum glue_pair(const DSum& A, const DSum& B, Label x, Label y, DSum::GlueMode mode, int m = 1);

// (1/2) log(sinh(x/2)/(x/2)) = sum b_{2n} x^{2n}; returns b by degree.
std::vector<Rational> modified_bernoulli(int maxdeg);

// Connected components of a diagram; specials count one component each.
int component_count(const Diagram& d);
// True when every term of s is a single connected component.
bool is_narrow(const DSum& s);

} // namespace jdcalc
