#pragma once

#include "jdcalc/dsum.hpp"

namespace jdcalc {

/// A map y = F(x): every term carries exactly one output leg (a label from
/// `out`); all other legs are inputs or parameters.
struct GraphMap {
    DSum body;
    std::vector<Label> in;
    std::vector<Label> out;
};

/// A matrix field: every term carries exactly one differential leg d x_j and
/// one derivative leg del y_i.
struct MatrixField {
    DSum body;
    std::vector<Label> x; // column coordinates (carry the d legs)
    std::vector<Label> y; // row coordinates (carry the del legs)
};

GraphMap identity_map(const VarTable& vt, const std::vector<Label>& out,
                      const std::vector<Label>& in);

// Substitute the maps for their output labels inside `body` (all occurrences,
// an independent copy per leg).
DSum substituted_body(const DSum& body, const std::vector<GraphMap>& maps);

GraphMap compose(const GraphMap& g, const GraphMap& f);

// Strut and linear parts (struts whose non-output leg is an input coordinate).
GraphMap strut_part(const GraphMap& f);
GraphMap linear_part(const GraphMap& f);

// Inverse map; requires a Laurent-invertible linear part.
GraphMap invert_map(const GraphMap& f);

MatrixField derivative(const GraphMap& f);

MatrixField mat_identity(const VarTable& vt, const std::vector<Label>& coords);
MatrixField mat_mul(const MatrixField& m1, const MatrixField& m2);
DSum mat_trace(const MatrixField& m);
MatrixField mat_transpose(const MatrixField& m);
MatrixField mat_inverse(const MatrixField& m);
MatrixField mat_add(const MatrixField& a, const MatrixField& b);
MatrixField mat_scale(const MatrixField& a, const Rational& c);

// Determinant per the root/Cartan strut block formula times exp(Tr log) of
// the perturbative part; returns the zero sum for a degenerate strut part.
DSum det_field(const MatrixField& m);

// Strut coefficient matrix of a matrix field (entries in the one-slot layout;
// class oriented from the d leg towards the del leg).
std::vector<std::vector<MultiSeries>> strut_matrix(const MatrixField& m);

// determinant of a square series matrix by cofactor expansion
MultiSeries det_series(const std::vector<std::vector<MultiSeries>>& m);
std::vector<std::vector<MultiSeries>> invert_series_matrix(
    const std::vector<std::vector<MultiSeries>>& m);

// ---- vector fields and Lie operations ----

// total differential: relabel one coordinate leg x_j -> d x_j in all ways
DSum nabla(const DSum& t, const std::vector<Label>& coords);
// directional derivative along a vector field (one del-leg per term)
DSum nabla_along(const DSum& xi, const DSum& t, const std::vector<Label>& coords);
// divergence: glue the del leg of xi onto its own coordinate legs
DSum divergence(const DSum& xi, const std::vector<Label>& coords);
// Lie derivative of an integration measure
DSum lie_deriv_measure(const DSum& xi, const DSum& g, const std::vector<Label>& coords);

// the ad matrix field over a single coordinate: [x, .]
MatrixField ad_matrix(const VarTable& vt, Label x);
// the vector field [param, coord] carrying a del(coord) leg
DSum ad_vector_field(const VarTable& vt, Label param, Label coord);
// div_ad of a vector field over one total coordinate
DSum div_ad(const VarTable& vt, const DSum& xi, Label x);

} // namespace jdcalc
