#pragma once

#include "jdcalc/graphmap.hpp"

namespace jdcalc {

/// log(e^A e^B) in the free Lie algebra, expressed in the right-normed
/// bracket basis: word w = w_1..w_n over {'A','B'} carries the coefficient of
/// [w_1,[w_2,...[w_{n-1},w_n]]]. Computed through the free associative
/// algebra and the Dynkin projection.
std::map<std::string, Rational> bch_coefficients(int depth);

// caterpillar tree [u_1,[u_2,...[u_{n-1},u_n]]] -> out with total edges
Diagram caterpillar(const std::vector<Label>& leaves, Label out);

// Z = E(first, second), all edges total
GraphMap bch_map(const VarTable& vt, Label first, Label second, Label out, int depth);

// S = inverse of (E_r, E_c): inputs (xr root, xc cartan), outputs (y, b)
GraphMap bch_split(const VarTable& vt, Label xr, Label xc, Label y, Label b, int depth);

// F_y(x) and the Cartan companion: z = F_y(x) root, h = Ftilde_y(x) Cartan
struct FPair {
    GraphMap F;       // out = {z}
    GraphMap Ftilde;  // out = {h}
};
FPair f_maps(const VarTable& vt, Label y, Label x, Label z, Label h, int depth);

// Ad_{e^y}(x) as a map of x with parameter y
GraphMap ad_exp_map(const VarTable& vt, Label y, Label x, Label out, int depth);

// orbit map D_a(x) = Ad_{e^x}(a); `out` is a total label
GraphMap orbit_map(const VarTable& vt, Label a, Label x, Label out, int depth);

// invariant measure on the root coordinate x: exp of root-internal wheels
DSum measure_mu(const VarTable& vt, Label x);

} // namespace jdcalc
