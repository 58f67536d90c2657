#include "jdcalc/series.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace jdcalc {

MultiSeries MultiSeries::zero(int nvars, int ngraded, int cap, int floor_v) {
    return MultiSeries(nvars, ngraded, cap, floor_v);
}

MultiSeries MultiSeries::constant(const Rational& c, int nvars, int ngraded, int cap, int floor_v) {
    MultiSeries s(nvars, ngraded, cap, floor_v);
    s.add_term(ExpVec(nvars, 0), c);
    return s;
}

MultiSeries MultiSeries::variable(int j, int nvars, int ngraded, int cap, int floor_v) {
    MultiSeries s(nvars, ngraded, cap, floor_v);
    ExpVec e(nvars, 0);
    e.at(j) = 1;
    s.add_term(e, Rational(1));
    return s;
}

MultiSeries MultiSeries::monomial(const Rational& c, const ExpVec& e, int ngraded, int cap, int floor_v) {
    MultiSeries s((int)e.size(), ngraded, cap, floor_v);
    s.add_term(e, c);
    return s;
}

bool MultiSeries::is_constant() const {
    if (terms.empty()) return true;
    return terms.size() == 1 &&
           std::all_of(terms.begin()->first.begin(), terms.begin()->first.end(),
                       [](int16_t v) { return v == 0; });
}

Rational MultiSeries::constant_term() const {
    auto it = terms.find(ExpVec(nvars, 0));
    return it == terms.end() ? Rational(0) : it->second;
}

bool MultiSeries::same_shape(const MultiSeries& o) const {
    return nvars == o.nvars && ngraded == o.ngraded && cap == o.cap && floor_ == o.floor_;
}

void MultiSeries::check_shape(const MultiSeries& o) const {
    if (!same_shape(o))
        throw PreconditionError("series shape mismatch (variable count or caps)");
}

int MultiSeries::graded_degree(const ExpVec& e) const {
    int d = 0;
    for (int j = 0; j < ngraded; ++j) d += e[j];
    return d;
}

int MultiSeries::total_degree(const ExpVec& e) const {
    int d = 0;
    for (int j = 0; j < nvars; ++j) d += e[j];
    return d;
}

std::optional<int> MultiSeries::min_graded_degree() const {
    std::optional<int> m;
    for (auto& [e, c] : terms) {
        int d = graded_degree(e);
        if (!m || d < *m) m = d;
    }
    return m;
}

void MultiSeries::add_term(const ExpVec& e, const Rational& c) {
    if (c == 0) return;
    if ((int)e.size() != nvars) throw PreconditionError("exponent width mismatch");
    int gd = graded_degree(e);
    if (gd > cap || gd < floor_) return;
    for (int j = ngraded; j < nvars; ++j)
        if (e[j] > kAuxCap || e[j] < -kAuxCap) return;
    auto [it, inserted] = terms.emplace(e, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0) terms.erase(it);
    }
}

MultiSeries& MultiSeries::operator+=(const MultiSeries& o) {
    check_shape(o);
    for (auto& [e, c] : o.terms) add_term(e, c);
    return *this;
}

MultiSeries& MultiSeries::operator-=(const MultiSeries& o) {
    check_shape(o);
    for (auto& [e, c] : o.terms) add_term(e, -c);
    return *this;
}

MultiSeries MultiSeries::operator-() const {
    MultiSeries r(nvars, ngraded, cap, floor_);
    for (auto& [e, c] : terms) r.terms.emplace(e, -c);
    return r;
}

MultiSeries MultiSeries::scaled(const Rational& k) const {
    if (k == 0) return MultiSeries(nvars, ngraded, cap, floor_);
    MultiSeries r(nvars, ngraded, cap, floor_);
    for (auto& [e, c] : terms) r.terms.emplace(e, c * k);
    return r;
}

MultiSeries MultiSeries::operator*(const MultiSeries& o) const {
    check_shape(o);
    MultiSeries r(nvars, ngraded, cap, floor_);
    ExpVec e(nvars);
    for (auto& [ea, ca] : terms)
        for (auto& [eb, cb] : o.terms) {
            for (int j = 0; j < nvars; ++j) e[j] = (int16_t)(ea[j] + eb[j]);
            r.add_term(e, ca * cb);
        }
    return r;
}

MultiSeries MultiSeries::pow(unsigned k) const {
    MultiSeries r = constant(Rational(1), nvars, ngraded, cap, floor_);
    MultiSeries base = *this;
    while (k) {
        if (k & 1) r = r * base;
        base = k > 1 ? base * base : base;
        k >>= 1;
    }
    return r;
}

bool MultiSeries::operator==(const MultiSeries& o) const {
    return same_shape(o) && terms == o.terms;
}

LeadSplit MultiSeries::lead_split() const {
    if (terms.empty()) throw PreconditionError("zero series has no leading part");
    int mind = 0;
    bool first = true;
    for (auto& [e, c] : terms) {
        int d = total_degree(e);
        if (first || d < mind) mind = d, first = false;
    }
    const ExpVec* lead = nullptr;
    const Rational* lc = nullptr;
    int count = 0;
    for (auto& [e, c] : terms)
        if (total_degree(e) == mind) {
            ++count;
            lead = &e;
            lc = &c;
        }
    if (count != 1) {
        std::string parts;
        for (auto& [e, c] : terms)
            if (total_degree(e) == mind) {
                parts += parts.empty() ? "" : " + ";
                parts += rat_str(c) + "*[";
                for (int j = 0; j < nvars; ++j) parts += (j ? "," : "") + std::to_string(e[j]);
                parts += "]";
            }
        throw PreconditionError("not Laurent-invertible: leading part is not a monomial: " + parts);
    }
    LeadSplit out;
    out.coeff = *lc;
    out.mono = *lead;
    out.tail = MultiSeries(nvars, ngraded, cap, floor_);
    ExpVec e(nvars);
    for (auto& [t, c] : terms) {
        if (t == out.mono) continue;
        for (int j = 0; j < nvars; ++j) e[j] = (int16_t)(t[j] - out.mono[j]);
        out.tail.add_term(e, c / out.coeff);
    }
    return out;
}

MultiSeries MultiSeries::inverted() const {
    LeadSplit ls = lead_split();
    // 1/f = c^-1 x^-m * sum (-s)^k
    MultiSeries acc = constant(Rational(1), nvars, ngraded, cap, floor_);
    MultiSeries power = acc;
    MultiSeries ms = -ls.tail;
    for (;;) {
        power = power * ms;
        if (power.is_zero()) break;
        acc += power;
    }
    ExpVec inv(nvars);
    for (int j = 0; j < nvars; ++j) inv[j] = (int16_t)(-ls.mono[j]);
    return acc * monomial(Rational(1) / ls.coeff, inv, ngraded, cap, floor_);
}

MultiSeries MultiSeries::exp_series() const {
    for (auto& [e, c] : terms)
        if (total_degree(e) <= 0)
            throw PreconditionError("exp requires all terms of positive total degree");
    MultiSeries acc = constant(Rational(1), nvars, ngraded, cap, floor_);
    MultiSeries power = acc;
    Rational fact(1);
    for (unsigned k = 1;; ++k) {
        power = power * (*this);
        if (power.is_zero()) break;
        fact *= k;
        acc += power.scaled(Rational(1) / fact);
    }
    return acc;
}

MultiSeries MultiSeries::log1p(const MultiSeries& s) {
    for (auto& [e, c] : s.terms)
        if (s.total_degree(e) <= 0)
            throw PreconditionError("log1p requires all terms of positive total degree");
    MultiSeries acc = zero(s.nvars, s.ngraded, s.cap, s.floor_);
    MultiSeries power = constant(Rational(1), s.nvars, s.ngraded, s.cap, s.floor_);
    for (unsigned k = 1;; ++k) {
        power = power * s;
        if (power.is_zero()) break;
        Rational coef = Rational((k % 2) ? 1 : -1) / k;
        acc += power.scaled(coef);
    }
    return acc;
}

MultiSeries MultiSeries::derivative(int j) const {
    MultiSeries r(nvars, ngraded, cap, floor_);
    for (auto& [e, c] : terms) {
        if (e[j] == 0) continue;
        ExpVec d = e;
        Rational k(e[j]);
        d[j] = (int16_t)(d[j] - 1);
        r.add_term(d, c * k);
    }
    return r;
}

MultiSeries MultiSeries::parity_flip(int j) const {
    MultiSeries r(nvars, ngraded, cap, floor_);
    for (auto& [e, c] : terms)
        r.terms.emplace(e, (e[j] % 2) ? -c : c);
    return r;
}

MultiSeries MultiSeries::parity_flip_set(const std::vector<int>& js) const {
    MultiSeries r(nvars, ngraded, cap, floor_);
    for (auto& [e, c] : terms) {
        long d = 0;
        for (int j : js) d += e[j];
        r.terms.emplace(e, (d % 2) ? -c : c);
    }
    return r;
}

MultiSeries MultiSeries::set_var_zero(int j) const {
    MultiSeries r(nvars, ngraded, cap, floor_);
    for (auto& [e, c] : terms)
        if (e[j] == 0) r.terms.emplace(e, c);
    return r;
}

MultiSeries MultiSeries::substituted(int j, const MultiSeries& g) const {
    check_shape(g);
    MultiSeries r(nvars, ngraded, cap, floor_);
    std::map<int, MultiSeries> powers; // e_j -> g^e_j
    for (auto& [e, c] : terms) {
        int k = e[j];
        auto it = powers.find(k);
        if (it == powers.end()) {
            MultiSeries p = k >= 0 ? g.pow((unsigned)k) : g.inverted().pow((unsigned)(-k));
            it = powers.emplace(k, std::move(p)).first;
        }
        ExpVec rest = e;
        rest[j] = 0;
        r += it->second * monomial(c, rest, ngraded, cap, floor_);
    }
    return r;
}

MultiSeries MultiSeries::substituted_linear(const std::map<int, std::vector<Rational>>& lin) const {
    MultiSeries r(nvars, ngraded, cap, floor_);
    for (auto& [e, c] : terms) {
        MultiSeries term = constant(c, nvars, ngraded, cap, floor_);
        ExpVec rest(nvars, 0);
        for (int j = 0; j < nvars; ++j) {
            if (e[j] == 0) continue;
            auto it = lin.find(j);
            if (it == lin.end()) {
                rest[j] = e[j];
                continue;
            }
            if (e[j] < 0) throw PreconditionError("linear substitution into a negative power");
            MultiSeries form(nvars, ngraded, cap, floor_);
            for (int k = 0; k < nvars; ++k)
                if (k < (int)it->second.size() && it->second[k] != 0) {
                    ExpVec ve(nvars, 0);
                    ve[k] = 1;
                    form.add_term(ve, it->second[k]);
                }
            term = term * form.pow((unsigned)e[j]);
        }
        r += term * monomial(Rational(1), rest, ngraded, cap, floor_);
    }
    return r;
}

MultiSeries MultiSeries::reindexed(int new_nvars, int new_ngraded, const std::vector<int>& var_map) const {
    MultiSeries r(new_nvars, new_ngraded, cap, floor_);
    for (auto& [e, c] : terms) {
        ExpVec ne(new_nvars, 0);
        for (int j = 0; j < nvars; ++j) {
            if (e[j] == 0) continue;
            int t = var_map.at(j);
            if (t < 0) throw PreconditionError("reindex drops a used variable");
            ne.at(t) = (int16_t)(ne.at(t) + e[j]);
        }
        r.add_term(ne, c);
    }
    return r;
}

MultiSeries MultiSeries::graded_part(int d) const {
    MultiSeries r(nvars, ngraded, cap, floor_);
    for (auto& [e, c] : terms)
        if (graded_degree(e) == d) r.terms.emplace(e, c);
    return r;
}

MultiSeries MultiSeries::truncated(int new_cap, int new_floor) const {
    MultiSeries r(nvars, ngraded, new_cap, new_floor);
    for (auto& [e, c] : terms) r.add_term(e, c);
    return r;
}

std::string MultiSeries::str(const std::vector<std::string>& names) const {
    if (terms.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto& [e, c] : terms) {
        if (!first) os << " + ";
        first = false;
        os << rat_str(c);
        for (int j = 0; j < nvars; ++j) {
            if (e[j] == 0) continue;
            os << "*" << (j < (int)names.size() ? names[j] : "v" + std::to_string(j));
            if (e[j] != 1) os << "^" << e[j];
        }
    }
    return os.str();
}

namespace {

struct Lexer {
    const std::string& s;
    size_t i = 0;
    explicit Lexer(const std::string& text) : s(text) {}
    void skip() {
        while (i < s.size() && std::isspace((unsigned char)s[i])) ++i;
    }
    bool eof() {
        skip();
        return i >= s.size();
    }
    char peek() {
        skip();
        return i < s.size() ? s[i] : '\0';
    }
    char get() {
        skip();
        return s[i++];
    }
};

} // namespace

MultiSeries series_parse(const std::string& text, const std::vector<std::string>& names,
                         int ngraded, int cap, int floor_v) {
    int nvars = (int)names.size();
    MultiSeries out(nvars, ngraded, cap, floor_v);
    Lexer lx(text);
    if (lx.eof()) return out;
    for (;;) {
        int sign = 1;
        while (lx.peek() == '+' || lx.peek() == '-') {
            if (lx.get() == '-') sign = -sign;
        }
        if (lx.eof()) throw FormatError("dangling sign in series literal");
        Rational coeff(sign);
        ExpVec e(nvars, 0);
        bool any = false;
        bool expect_factor = true;
        while (expect_factor) {
            char c = lx.peek();
            if (std::isdigit((unsigned char)c)) {
                size_t start = lx.i;
                while (lx.i < lx.s.size() &&
                       (std::isdigit((unsigned char)lx.s[lx.i]) || lx.s[lx.i] == '/'))
                    ++lx.i;
                coeff *= rat_parse(lx.s.substr(start, lx.i - start));
                any = true;
            } else if (std::isalpha((unsigned char)c)) {
                size_t start = lx.i;
                while (lx.i < lx.s.size() &&
                       (std::isalnum((unsigned char)lx.s[lx.i]) || lx.s[lx.i] == '_'))
                    ++lx.i;
                std::string name = lx.s.substr(start, lx.i - start);
                auto it = std::find(names.begin(), names.end(), name);
                if (it == names.end()) throw FormatError("unknown series variable: " + name);
                int j = (int)(it - names.begin());
                long p = 1;
                if (lx.peek() == '^') {
                    lx.get();
                    int psign = 1;
                    if (lx.peek() == '-') {
                        lx.get();
                        psign = -1;
                    }
                    size_t ps = lx.i;
                    while (lx.i < lx.s.size() && std::isdigit((unsigned char)lx.s[lx.i])) ++lx.i;
                    if (ps == lx.i) throw FormatError("missing exponent after ^");
                    p = psign * std::stol(lx.s.substr(ps, lx.i - ps));
                }
                e[j] = (int16_t)(e[j] + p);
                any = true;
            } else {
                throw FormatError("unexpected character in series literal");
            }
            if (lx.peek() == '*') {
                lx.get();
            } else {
                expect_factor = false;
            }
        }
        if (!any) throw FormatError("empty term in series literal");
        out.add_term(e, coeff);
        if (lx.eof()) break;
        if (lx.peek() != '+' && lx.peek() != '-')
            throw FormatError("expected + or - between series terms");
    }
    return out;
}

} // namespace jdcalc
