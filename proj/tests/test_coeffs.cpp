#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "jdcalc/logcoef.hpp"
#include "jdcalc/series.hpp"

using namespace jdcalc;

namespace {

const std::vector<std::string> kAB = {"a1", "a2"};

MultiSeries S(const std::string& text, int cap = 8, int floor_v = -8) {
    return series_parse(text, kAB, 2, cap, floor_v);
}

MultiSeries random_series(std::mt19937& rng, int cap, bool laurent) {
    std::uniform_int_distribution<int> coef(-4, 4);
    std::uniform_int_distribution<int> expo(laurent ? -1 : 0, 2);
    MultiSeries s(2, 2, cap, -cap);
    for (int k = 0; k < 6; ++k) {
        ExpVec e = {(int16_t)expo(rng), (int16_t)expo(rng)};
        s.add_term(e, Rational(coef(rng)));
    }
    return s;
}

} // namespace

TEST_CASE("series arithmetic basics") {
    CHECK(S("1 + a1") * S("1 - a1") == S("1 - a1^2"));
    MultiSeries s = S("2*a1 - 1/3*a2^2");
    CHECK((s + (-s)).is_zero());
    CHECK(S("a1^-1") * S("a1") == S("1"));
    CHECK_THROWS_AS(S("1", 4, -4) + S("1", 6, -6), PreconditionError);
}

TEST_CASE("series ring laws on random truncated series") {
    std::mt19937 rng(7);
    // Ordinary series (floor 0): truncation is a congruence, laws exact.
    for (int it = 0; it < 30; ++it) {
        MultiSeries a = random_series(rng, 6, false).truncated(6, 0);
        MultiSeries b = random_series(rng, 6, false).truncated(6, 0);
        MultiSeries c = random_series(rng, 6, false).truncated(6, 0);
        CHECK((a * b) * c == a * (b * c));
        CHECK(a * (b + c) == a * b + a * c);
        CHECK(a * b == b * a);
    }
    // Laurent factors: exact on the window narrowed by the factors'
    // negative degrees (here each factor reaches degree -2, so 3 products
    // are exact through degree 10 - 4 at the top and above -6 at the bottom).
    for (int it = 0; it < 30; ++it) {
        MultiSeries a = random_series(rng, 10, true);
        MultiSeries b = random_series(rng, 10, true);
        MultiSeries c = random_series(rng, 10, true);
        CHECK(((a * b) * c).truncated(6, -6) == (a * (b * c)).truncated(6, -6));
        CHECK((a * (b + c)).truncated(8, -8) == (a * b + a * c).truncated(8, -8));
        CHECK(a * b == b * a);
    }
}

TEST_CASE("series inversion is a two-sided inverse up to cap") {
    CHECK(S("1").inverted() == S("1"));
    CHECK(S("1 + a1", 3, -3).inverted() == S("1 - a1 + a1^2 - a1^3", 3, -3));
    // a1*(1 + a2) inverts to a1^-1*(1 - a2 + ...): check by multiplying back
    MultiSeries f = S("a1 + a1*a2", 4, -4);
    CHECK(f * f.inverted() == S("1", 4, -4));
    CHECK(f.inverted() * f == S("1", 4, -4));
    std::mt19937 rng(11);
    for (int it = 0; it < 30; ++it) {
        MultiSeries u = random_series(rng, 5, false);
        MultiSeries f2 = S("1", 5, -5) + u - MultiSeries::constant(u.constant_term(), 2, 2, 5, -5);
        CHECK(f2 * f2.inverted() == S("1", 5, -5));
    }
    CHECK_THROWS_AS(S("a1 + a2").inverted(), PreconditionError);
}

TEST_CASE("exp and log are mutually inverse") {
    MultiSeries z(2, 2, 6, -6);
    CHECK(z.exp_series() == S("1", 6, -6));
    MultiSeries f = S("a1 + a2^2", 6, -6);
    auto ls = f.exp_series().lead_split();
    CHECK(ls.coeff == Rational(1));
    CHECK(MultiSeries::log1p(ls.tail) == f);
    CHECK_THROWS_AS(S("1 + a1").exp_series(), PreconditionError);
}

TEST_CASE("modified Bernoulli coefficients from the wheel generating series") {
    // coefficients of (1/2) log(sinh(x/2)/(x/2)): x^2 -> 1/48, x^4 -> -1/5760
    std::vector<std::string> names = {"x"};
    int cap = 8;
    MultiSeries sh(1, 1, cap, 0);
    // sinh(x/2)/(x/2) = sum x^{2n} / (4^n (2n+1)!)
    Rational fact(1);
    for (int n = 0; 2 * n <= cap; ++n) {
        ExpVec e = {(int16_t)(2 * n)};
        Rational denom = rat_pow(Rational(4), n);
        Rational f2n1(1);
        for (int k = 2; k <= 2 * n + 1; ++k) f2n1 *= k;
        sh.add_term(e, Rational(1) / (denom * f2n1));
    }
    auto ls = sh.lead_split();
    MultiSeries half_log = MultiSeries::log1p(ls.tail).scaled(Rational(1, 2));
    CHECK(half_log.terms.at(ExpVec{2}) == Rational(1, 48));
    CHECK(half_log.terms.at(ExpVec{4}) == Rational(-1, 5760));
}

TEST_CASE("log coefficients with formal symbols") {
    MultiSeries f = S("6*a1 + 6*a1*a2", 6, -6); // 6 a1 (1 + a2)
    LogCoef lg = LogCoef::log_of(f);
    LogCoef expected(2, 2, 6, -6);
    auto unit = MultiSeries::constant(Rational(1), 2, 2, 6, -6);
    expected.add_part({{log_prime(2), 1}}, unit);
    expected.add_part({{log_prime(3), 1}}, unit);
    expected.add_part({{(LogSym)0, 1}}, unit);
    expected.add_part({}, MultiSeries::log1p(S("a2", 6, -6)));
    CHECK(lg == expected);
    // exp undoes log
    CHECK(lg.exp_coef() == LogCoef::from_series(f));
    // negative leading coefficient tracked through log(-1)
    MultiSeries g = S("-1/2*a2^-1", 6, -6);
    CHECK(LogCoef::log_of(g).exp_coef() == LogCoef::from_series(g));
}

TEST_CASE("series parsing and printing round trip") {
    MultiSeries s = S("3/2*a1^2*a2^-1 - 1/3 + a2");
    MultiSeries t = series_parse(s.str(kAB), kAB, 2, 8, -8);
    CHECK(s == t);
}
