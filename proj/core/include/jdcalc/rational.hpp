#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace jdcalc {

using Int = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Thrown when an operation's stated precondition is violated
/// (mismatched caps, non-invertible leading term, degenerate strut part, ...).
struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown on malformed input files or malformed in-memory structures.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Parses "p", "-p" or "p/q" (q > 0 after normalization).
Rational rat_parse(const std::string& s);
std::string rat_str(const Rational& r);

// r^e for integer e; r != 0 when e < 0.
Rational rat_pow(const Rational& r, long e);

// Prime factorization of |num*den| of a nonzero rational: prime -> signed exponent.
// Used to keep log(c) exact as a sum of log(p) symbols.
std::map<long long, long> rat_factor(const Rational& r);

} // namespace jdcalc
