#include "jdcalc/logcoef.hpp"

#include <algorithm>
#include <sstream>

namespace jdcalc {

LogCoef LogCoef::from_series(const MultiSeries& s) {
    LogCoef c(s.nvars, s.ngraded, s.cap, s.floor_);
    if (!s.is_zero()) c.parts.emplace(LogMono{}, s);
    return c;
}

LogCoef LogCoef::constant(const Rational& q, int nvars, int ngraded, int cap, int floor_v) {
    return from_series(MultiSeries::constant(q, nvars, ngraded, cap, floor_v));
}

LogCoef LogCoef::log_of(const MultiSeries& s) {
    auto ls = s.lead_split();
    LogCoef out(s.nvars, s.ngraded, s.cap, s.floor_);
    auto unit = [&](const Rational& q) {
        return MultiSeries::constant(q, s.nvars, s.ngraded, s.cap, s.floor_);
    };
    if (ls.coeff < 0) out.add_part({{kLogMinusOne, 1}}, unit(Rational(1)));
    for (auto& [p, e] : rat_factor(ls.coeff))
        out.add_part({{log_prime(p), 1}}, unit(Rational(e)));
    for (int j = 0; j < s.nvars; ++j)
        if (ls.mono[j] != 0) out.add_part({{(LogSym)j, 1}}, unit(Rational(ls.mono[j])));
    out += from_series(MultiSeries::log1p(ls.tail));
    return out;
}

const MultiSeries& LogCoef::series_part() const {
    static const MultiSeries empty;
    auto it = parts.find(LogMono{});
    return it == parts.end() ? empty : it->second;
}

MultiSeries LogCoef::as_series() const {
    if (parts.empty()) return MultiSeries(nvars, ngraded, cap, floor_);
    if (!is_series()) throw PreconditionError("coefficient carries unresolved log symbols");
    return parts.begin()->second;
}

void LogCoef::add_part(const LogMono& m, const MultiSeries& s) {
    if (s.is_zero()) return;
    auto [it, inserted] = parts.emplace(m, s);
    if (!inserted) {
        it->second += s;
        if (it->second.is_zero()) parts.erase(it);
    }
}

LogCoef& LogCoef::operator+=(const LogCoef& o) {
    for (auto& [m, s] : o.parts) add_part(m, s);
    return *this;
}

LogCoef& LogCoef::operator-=(const LogCoef& o) {
    for (auto& [m, s] : o.parts) add_part(m, -s);
    return *this;
}

LogCoef LogCoef::operator-() const {
    LogCoef r(nvars, ngraded, cap, floor_);
    for (auto& [m, s] : parts) r.parts.emplace(m, -s);
    return r;
}

static LogMono mono_mul(const LogMono& a, const LogMono& b) {
    LogMono r = a;
    for (auto& [sym, pw] : b) {
        auto it = std::find_if(r.begin(), r.end(), [&](auto& p) { return p.first == sym; });
        if (it == r.end())
            r.emplace_back(sym, pw);
        else
            it->second += pw;
    }
    std::sort(r.begin(), r.end());
    return r;
}

LogCoef LogCoef::operator*(const LogCoef& o) const {
    LogCoef r(nvars, ngraded, cap, floor_);
    for (auto& [ma, sa] : parts)
        for (auto& [mb, sb] : o.parts) r.add_part(mono_mul(ma, mb), sa * sb);
    return r;
}

LogCoef LogCoef::mul_series(const MultiSeries& s) const {
    LogCoef r(nvars, ngraded, cap, floor_);
    for (auto& [m, sp] : parts) r.add_part(m, sp * s);
    return r;
}

LogCoef LogCoef::scaled(const Rational& c) const {
    LogCoef r(nvars, ngraded, cap, floor_);
    if (c == 0) return r;
    for (auto& [m, sp] : parts) r.parts.emplace(m, sp.scaled(c));
    return r;
}

bool LogCoef::operator==(const LogCoef& o) const { return parts == o.parts; }

LogCoef LogCoef::parity_flip_set(const std::vector<int>& js) const {
    LogCoef r(nvars, ngraded, cap, floor_);
    for (auto& [m, s] : parts) {
        // split each log(x_j) with j in the flip set into log(-1) + log(x_j)
        LogCoef piece(nvars, ngraded, cap, floor_);
        piece.add_part(LogMono{}, s.parity_flip_set(js));
        for (auto& [sym, pw] : m) {
            bool flips = sym >= 0 && std::find(js.begin(), js.end(), (int)sym) != js.end();
            LogCoef factor(nvars, ngraded, cap, floor_);
            auto unit = MultiSeries::constant(Rational(1), nvars, ngraded, cap, floor_);
            if (flips) {
                factor.add_part({{sym, 1}}, unit);
                factor.add_part({{kLogMinusOne, 1}}, unit);
            } else {
                factor.add_part({{sym, 1}}, unit);
            }
            LogCoef acc = factor;
            for (int k = 1; k < pw; ++k) acc = acc * factor;
            piece = piece * acc;
        }
        r += piece;
    }
    return r;
}

LogCoef LogCoef::set_var_zero(int j) const {
    LogCoef r(nvars, ngraded, cap, floor_);
    for (auto& [m, s] : parts) {
        bool uses = std::any_of(m.begin(), m.end(), [&](auto& p) { return p.first == (LogSym)j; });
        if (uses)
            throw PreconditionError("cannot set a variable to zero inside a log symbol");
        r.add_part(m, s.set_var_zero(j));
    }
    return r;
}

LogCoef LogCoef::substituted_signed_perm(const std::vector<int>& target,
                                         const std::vector<int>& sign) const {
    LogCoef r(nvars, ngraded, cap, floor_);
    std::map<int, std::vector<Rational>> lin;
    std::vector<int> flip_then; // vars whose substitution carries sign -1
    for (int j = 0; j < nvars; ++j) {
        if (target[j] == j && sign[j] == 1) continue;
        std::vector<Rational> row(nvars, Rational(0));
        row[target[j]] = Rational(sign[j]);
        lin[j] = row;
    }
    for (auto& [m, s] : parts) {
        LogCoef piece(nvars, ngraded, cap, floor_);
        piece.add_part(LogMono{}, s.substituted_linear(lin));
        for (auto& [sym, pw] : m) {
            LogCoef factor(nvars, ngraded, cap, floor_);
            auto unit = MultiSeries::constant(Rational(1), nvars, ngraded, cap, floor_);
            if (sym >= 0) {
                int j = (int)sym;
                factor.add_part({{(LogSym)target[j], 1}}, unit);
                if (sign[j] < 0) factor.add_part({{kLogMinusOne, 1}}, unit);
            } else {
                factor.add_part({{sym, 1}}, unit);
            }
            LogCoef acc = factor;
            for (int k = 1; k < pw; ++k) acc = acc * factor;
            piece = piece * acc;
        }
        r += piece;
    }
    return r;
}

LogCoef LogCoef::substituted_linear(const std::map<int, std::vector<Rational>>& lin) const {
    LogCoef r(nvars, ngraded, cap, floor_);
    for (auto& [m, s] : parts) {
        for (auto& [sym, pw] : m)
            if (sym >= 0 && lin.count((int)sym))
                throw PreconditionError("linear substitution touches a log symbol");
        r.add_part(m, s.substituted_linear(lin));
    }
    return r;
}

LogCoef LogCoef::reindexed(int new_nvars, int new_ngraded, const std::vector<int>& var_map) const {
    LogCoef r(new_nvars, new_ngraded, cap, floor_);
    for (auto& [m, s] : parts) {
        LogMono nm;
        for (auto& [sym, pw] : m)
            nm.emplace_back(sym >= 0 ? (LogSym)var_map.at((size_t)sym) : sym, pw);
        std::sort(nm.begin(), nm.end());
        r.add_part(nm, s.reindexed(new_nvars, new_ngraded, var_map));
    }
    return r;
}

LogCoef LogCoef::derivative(int j) const {
    // d/dx_j, with d log(x_j) = 1/x_j handled through the series part only;
    // callers differentiate in aux parameters, never inside log symbols.
    LogCoef r(nvars, ngraded, cap, floor_);
    for (auto& [m, s] : parts) {
        for (auto& [sym, pw] : m)
            if (sym == (LogSym)j)
                throw PreconditionError("derivative inside a log symbol");
        r.add_part(m, s.derivative(j));
    }
    return r;
}

LogCoef LogCoef::exp_coef() const {
    // Split into pure-series tail and linear log part with constant coefficients.
    MultiSeries tail(nvars, ngraded, cap, floor_);
    std::map<LogSym, Rational> linear;
    for (auto& [m, s] : parts) {
        if (m.empty()) {
            tail = s;
            continue;
        }
        if (m.size() != 1 || m[0].second != 1 || !s.is_constant())
            throw PreconditionError("exp of a nonlinear log expression");
        linear[m[0].first] = s.constant_term();
    }
    Rational c0 = tail.constant_term();
    MultiSeries expo = tail;
    if (c0 != 0) expo -= MultiSeries::constant(c0, nvars, ngraded, cap, floor_);
    if (c0 != 0) throw PreconditionError("exp of a nonzero constant term");
    MultiSeries result = expo.exp_series();
    Rational scalar(1);
    ExpVec mono(nvars, 0);
    for (auto& [sym, q] : linear) {
        if (denominator(q) != 1)
            throw PreconditionError("exp of a non-integer log multiple");
        long e = (long)numerator(q);
        if (sym == kLogMinusOne) {
            if (e % 2) scalar = -scalar;
        } else if (sym < -1) {
            scalar *= rat_pow(Rational(-sym - 2), e);
        } else {
            mono[(size_t)sym] = (int16_t)(mono[(size_t)sym] + e);
        }
    }
    result = result * MultiSeries::monomial(scalar, mono, ngraded, cap, floor_);
    return from_series(result);
}

std::string LogCoef::str(const std::vector<std::string>& names) const {
    if (parts.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto& [m, s] : parts) {
        if (!first) os << "  +  ";
        first = false;
        if (!m.empty()) {
            for (auto& [sym, pw] : m) {
                os << "ln(";
                if (sym == kLogMinusOne)
                    os << "-1";
                else if (sym < -1)
                    os << (-sym - 2);
                else
                    os << (sym < (LogSym)names.size() ? names[(size_t)sym]
                                                      : "v" + std::to_string(sym));
                os << ")";
                if (pw != 1) os << "^" << pw;
                os << "*";
            }
            os << "[" << s.str(names) << "]";
        } else {
            os << s.str(names);
        }
    }
    return os.str();
}

} // namespace jdcalc
