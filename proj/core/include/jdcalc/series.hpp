#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jdcalc/rational.hpp"

namespace jdcalc {

using ExpVec = std::vector<int16_t>;

struct LeadSplit;

/// Truncated multivariate Laurent series with exact rational coefficients.
///
/// Variables split into two windows: indices [0, ngraded) are "graded"
/// (their total degree is truncated to [floor, cap]) and indices
/// [ngraded, nvars) are auxiliary bookkeeping variables (one-parameter
/// families, hbar, regulators) truncated per-variable at +-kAuxCap.
/// No zero coefficient is ever stored.
///
/// Truncation of a Laurent window is not a ring congruence: a term dropped
/// above `cap` can re-enter below it after multiplication by a negative
/// degree factor. Results are therefore exact only on the window narrowed by
/// the total negative degree of the factors involved. Pipelines compute with
/// a widened internal window (see VarTable slack) and compare on the
/// requested one.
class MultiSeries {
public:
    static constexpr int kAuxCap = 16;

    int nvars = 0;
    int ngraded = 0;
    int cap = 0;
    int floor_ = 0;
    std::map<ExpVec, Rational> terms;

    MultiSeries() = default;
    MultiSeries(int nvars_, int ngraded_, int cap_, int floor_v)
        : nvars(nvars_), ngraded(ngraded_), cap(cap_), floor_(floor_v) {}

    static MultiSeries zero(int nvars, int ngraded, int cap, int floor_v);
    static MultiSeries constant(const Rational& c, int nvars, int ngraded, int cap, int floor_v);
    static MultiSeries variable(int j, int nvars, int ngraded, int cap, int floor_v);
    static MultiSeries monomial(const Rational& c, const ExpVec& e, int ngraded, int cap, int floor_v);

    bool is_zero() const { return terms.empty(); }
    bool is_constant() const;
    Rational constant_term() const;
    bool same_shape(const MultiSeries& o) const;
    void check_shape(const MultiSeries& o) const;

    int graded_degree(const ExpVec& e) const;
    // Minimal graded total degree over all stored terms; nullopt when zero.
    std::optional<int> min_graded_degree() const;

    void add_term(const ExpVec& e, const Rational& c); // truncating insert
    MultiSeries& operator+=(const MultiSeries& o);
    MultiSeries& operator-=(const MultiSeries& o);
    friend MultiSeries operator+(MultiSeries a, const MultiSeries& b) { a += b; return a; }
    friend MultiSeries operator-(MultiSeries a, const MultiSeries& b) { a -= b; return a; }
    MultiSeries operator-() const;
    MultiSeries operator*(const MultiSeries& o) const;
    MultiSeries scaled(const Rational& c) const;
    MultiSeries pow(unsigned k) const;

    bool operator==(const MultiSeries& o) const;

    // Laurent inverse. Requires the minimal-total-degree part to be a single
    // monomial; otherwise throws PreconditionError naming the leading part.
    MultiSeries inverted() const;

    // exp(f); requires every term to have positive total degree.
    MultiSeries exp_series() const;

    // Splits f = c * x^m * (1 + s). Requires unique minimal-total-degree term.
    LeadSplit lead_split() const;

    // log(1 + s) for s with positive-degree terms only.
    static MultiSeries log1p(const MultiSeries& s);

    MultiSeries derivative(int j) const;
    MultiSeries parity_flip(int j) const;            // x_j -> -x_j
    MultiSeries parity_flip_set(const std::vector<int>& js) const;
    MultiSeries set_var_zero(int j) const;           // drops terms with e_j != 0
    // Substitute variable j by g (same shape). Negative powers require g invertible.
    MultiSeries substituted(int j, const MultiSeries& g) const;
    // Simultaneous linear substitution x_j -> sum_k M[j][k] x_k for a subset of vars;
    // vars not present in M are left alone.
    MultiSeries substituted_linear(const std::map<int, std::vector<Rational>>& lin) const;
    // Reinterpret into a wider variable table, old var j becomes new var map[j].
    MultiSeries reindexed(int new_nvars, int new_ngraded, const std::vector<int>& var_map) const;

    // Keeps only terms whose graded degree is d.
    MultiSeries graded_part(int d) const;
    MultiSeries truncated(int new_cap, int new_floor) const;
    int total_degree(const ExpVec& e) const;

    std::string str(const std::vector<std::string>& names) const;
};

struct LeadSplit {
    Rational coeff;
    ExpVec mono;
    MultiSeries tail; // s, all terms of positive total degree
};

// Parses a series literal: sum of terms `c * v1^e1 * ... * vk^ek`, rational c,
// whitespace-insensitive, `^` powers optional, variables from `names`.
MultiSeries series_parse(const std::string& text, const std::vector<std::string>& names,
                         int ngraded, int cap, int floor_v);

} // namespace jdcalc
