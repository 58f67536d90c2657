#include "jdcalc/rational.hpp"

namespace jdcalc {

Rational rat_parse(const std::string& s) {
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return Rational(Int(s));
        Int num(s.substr(0, slash));
        Int den(s.substr(slash + 1));
        if (den == 0) throw FormatError("rational with zero denominator: " + s);
        return Rational(num, den);
    } catch (const std::exception&) {
        throw FormatError("bad rational literal: " + s);
    }
}

std::string rat_str(const Rational& r) {
    std::string s = numerator(r).str();
    if (denominator(r) != 1) s += "/" + denominator(r).str();
    return s;
}

Rational rat_pow(const Rational& r, long e) {
    if (e == 0) return Rational(1);
    if (r == 0) {
        if (e < 0) throw PreconditionError("0 raised to a negative power");
        return Rational(0);
    }
    Rational base = e > 0 ? r : Rational(1) / r;
    unsigned long n = e > 0 ? (unsigned long)e : (unsigned long)(-e);
    Rational acc(1);
    while (n) {
        if (n & 1) acc *= base;
        base *= base;
        n >>= 1;
    }
    return acc;
}

static void factor_into(Int n, int sign, std::map<long long, long>& out) {
    if (n < 0) n = -n;
    for (Int p = 2; p * p <= n; ++p) {
        while (n % p == 0) {
            out[(long long)p] += sign;
            n /= p;
        }
    }
    if (n > 1) out[(long long)n] += sign;
}

std::map<long long, long> rat_factor(const Rational& r) {
    if (r == 0) throw PreconditionError("cannot factor zero");
    std::map<long long, long> out;
    factor_into(numerator(r), +1, out);
    factor_into(denominator(r), -1, out);
    for (auto it = out.begin(); it != out.end();)
        it = it->second == 0 ? out.erase(it) : std::next(it);
    return out;
}

} // namespace jdcalc
