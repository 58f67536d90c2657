#pragma once

#include <map>
#include <vector>

#include "jdcalc/series.hpp"

namespace jdcalc {

/// Formal logarithm symbols. Encoded in one integer:
///   sym >= 0          -> log of series variable `sym`
///   sym == -1         -> log(-1)
///   sym <= -2         -> log(prime (-sym - 2))
using LogSym = long long;

constexpr LogSym kLogMinusOne = -1;
inline LogSym log_prime(long long p) { return -p - 2; }

using LogMono = std::vector<std::pair<LogSym, int>>; // sorted, powers > 0

/// Series-valued polynomial in formal log symbols. This is the coefficient
/// ring of diagram sums: plain coefficients sit in the empty-monomial slot;
/// determinant circle factors contribute log(c), log(p) and log(var) symbols.
class LogCoef {
public:
    int nvars = 0, ngraded = 0, cap = 0, floor_ = 0;
    std::map<LogMono, MultiSeries> parts;

    LogCoef() = default;
    LogCoef(int nvars_, int ngraded_, int cap_, int floor_v)
        : nvars(nvars_), ngraded(ngraded_), cap(cap_), floor_(floor_v) {}

    static LogCoef from_series(const MultiSeries& s);
    static LogCoef constant(const Rational& c, int nvars, int ngraded, int cap, int floor_v);
    static LogCoef one(int nvars, int ngraded, int cap, int floor_v) {
        return constant(Rational(1), nvars, ngraded, cap, floor_v);
    }

    // Exact log of a Laurent-invertible series, as a LogCoef linear in symbols.
    static LogCoef log_of(const MultiSeries& s);

    bool is_zero() const { return parts.empty(); }
    bool is_series() const { return parts.empty() || (parts.size() == 1 && parts.begin()->first.empty()); }
    const MultiSeries& series_part() const;
    MultiSeries as_series() const; // throws when log symbols are present

    void add_part(const LogMono& m, const MultiSeries& s);
    LogCoef& operator+=(const LogCoef& o);
    LogCoef& operator-=(const LogCoef& o);
    friend LogCoef operator+(LogCoef a, const LogCoef& b) { a += b; return a; }
    friend LogCoef operator-(LogCoef a, const LogCoef& b) { a -= b; return a; }
    LogCoef operator-() const;
    LogCoef operator*(const LogCoef& o) const;
    LogCoef mul_series(const MultiSeries& s) const;
    LogCoef scaled(const Rational& c) const;
    bool operator==(const LogCoef& o) const;

    // x_j -> -x_j, including in log symbols: log(-x) = log(-1) + log(x).
    LogCoef parity_flip_set(const std::vector<int>& js) const;
    LogCoef set_var_zero(int j) const;
    // Monomial substitution var j -> c * var k (c = +-1 typical); log symbols follow.
    LogCoef substituted_signed_perm(const std::vector<int>& target, const std::vector<int>& sign) const;
    // Linear substitution on variables; only valid when no log symbol mentions a substituted var.
    LogCoef substituted_linear(const std::map<int, std::vector<Rational>>& lin) const;
    LogCoef reindexed(int new_nvars, int new_ngraded, const std::vector<int>& var_map) const;
    LogCoef derivative(int j) const;

    // exp of this coefficient. Log symbols must enter linearly with integer
    // rational coefficients that are plain constants; they exponentiate back
    // to rational factors and variable powers.
    LogCoef exp_coef() const;

    std::string str(const std::vector<std::string>& names) const;
};

} // namespace jdcalc
