#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "jdcalc/label.hpp"

namespace jdcalc {

/// Edge endpoint: vertex id and slot. Internal (3-valent) vertices occupy ids
/// [0, n3) with slots 0..2 whose order encodes the cyclic order; legs occupy
/// ids [n3, n3 + #legs) with slot 0.
struct End {
    int v = -1;
    int slot = 0;
    bool operator==(const End& o) const { return v == o.v && slot == o.slot; }
    bool operator<(const End& o) const { return v != o.v ? v < o.v : slot < o.slot; }
};

struct Edge {
    End a, b;
    Kind kind = Kind::Root;
};

/// Multiset of special components. Root and Cartan circles, the dot produced
/// by shaving a Cartan-Cartan strut, and labeled dots from mixed Cartan struts.
struct Specials {
    int rc = 0;
    int cc = 0;
    int dot = 0;
    std::map<Label, int> ldot;
    bool empty() const { return rc == 0 && cc == 0 && dot == 0 && ldot.empty(); }
    bool operator==(const Specials& o) const {
        return rc == o.rc && cc == o.cc && dot == o.dot && ldot == o.ldot;
    }
};

struct Diagram {
    int n3 = 0;
    std::vector<Label> legs;
    std::vector<Edge> edges;
    Specials sp;

    int n_vertices() const { return n3 + (int)legs.size(); }
    bool is_leg(int v) const { return v >= n3; }
    // Throws FormatError when slot occupancy is inconsistent.
    void verify() const;

    // Gradings including specials (dot/ldot count chi = -1, circles 0).
    int chi() const;
    int leg_count() const { return (int)legs.size() + ldot_count(); }
    int deg() const { return leg_count() + chi(); }
    int ldot_count() const;
};

/// Rational relative cohomology of the Cartan-deleted graph, with a
/// deterministic basis: reduced row echelon form of the vertex relations over
/// the canonical root-edge order; basis classes are the non-pivot edges.
struct CohBasis {
    int rank = 0;
    std::vector<int> root_edges;                    // canonical edge indices, ascending
    std::vector<std::vector<Rational>> edge_class;  // per root edge (same order), length rank
    std::vector<int> basis_edge;                    // representing edge index per basis class
};

enum class CCKind { None, CC1, CC2 };

/// Automorphism action on edges: image position, orientation flip, AS sign.
struct EdgeAut {
    std::vector<int> edge_perm;
    std::vector<int8_t> edge_flip; // -1 when the image reverses orientation
    int sign = 1;
};

/// Decoration slot layout: graph cohomology classes first, then one slot per
/// root circle, per dot, per labeled dot (canonical special order).
struct DecorLayout {
    int rank = 0;
    int n_rc = 0, n_dot = 0, n_ldot = 0;
    int slots() const { return rank + n_rc + n_dot + n_ldot; }
    int rc_slot(int i) const { return rank + i; }
    int dot_slot(int i) const { return rank + n_rc + i; }
    int ldot_slot(int i) const { return rank + n_rc + n_dot + i; }
};

struct CanonData {
    Diagram g;
    std::string key;
    long aut_count = 1;
    std::vector<EdgeAut> autos;
    CohBasis coh;
    DecorLayout layout;
    CCKind cc = CCKind::None;
};

/// Result of canonicalization: zero (an AS automorphism negates the diagram),
/// or a shared canonical form with the sign relating the input to it and the
/// induced edge mapping for decoration transport.
struct Canon {
    bool zero = false;
    int sign = 1;
    std::shared_ptr<const CanonData> data;
    std::vector<int> edge_map;
    std::vector<int8_t> edge_flip;
};

Canon canonicalize(const Diagram& d);

CCKind detect_cc(const Diagram& d);

// Cohomology of the canonical representative. Requires detect_cc == None.
CohBasis cohomology(const Diagram& d);

std::string diagram_str(const Diagram& d);
// Text format:
//   diagram
//   v <id>
//   leg <id> <label>
//   e <kind> <v>.<slot> <v>.<slot>
//   special <rc|cc|dot> <count> | special ldot <label> <count>
//   end
Diagram diagram_parse(std::istream& in);

// Reduced row echelon form over the rationals; returns pivot column per row
// (-1 for zero rows). Deterministic: first nonzero column pivoting.
std::vector<int> rref(std::vector<std::vector<Rational>>& m);

} // namespace jdcalc
