#pragma once

#include <cstdint>
#include <string>
#include <tuple>

#include "jdcalc/rational.hpp"

namespace jdcalc {

enum class Kind : uint8_t { Root = 0, Cartan = 1, Total = 2 };

inline const char* kind_name(Kind k) {
    switch (k) {
        case Kind::Root: return "r";
        case Kind::Cartan: return "c";
        default: return "t";
    }
}
Kind kind_parse(const std::string& s);

/// Leg label. The base letter fixes the label's kind: uppercase letters are
/// total, a/b/c are Cartan, other lowercase letters are root. `deco`
/// distinguishes the plain coordinate from its differential (d) and
/// derivative (p, printed for the del symbol) companions.
struct Label {
    char base = 'x';
    uint8_t deco = 0; // 0 plain, 1 differential, 2 derivative
    int16_t index = 1;

    static constexpr uint8_t kPlain = 0, kDiff = 1, kDeriv = 2;

    Kind kind() const {
        if (base >= 'A' && base <= 'Z') return Kind::Total;
        if (base == 'a' || base == 'b' || base == 'c') return Kind::Cartan;
        return Kind::Root;
    }
    Label plain() const { return Label{base, kPlain, index}; }
    Label with_deco(uint8_t d) const { return Label{base, d, index}; }

    auto tie() const { return std::tuple(base, deco, index); }
    bool operator==(const Label& o) const { return tie() == o.tie(); }
    bool operator!=(const Label& o) const { return !(*this == o); }
    bool operator<(const Label& o) const { return tie() < o.tie(); }

    std::string str() const;
    static Label parse(const std::string& s);
};

inline Label lbl(char base, int index, uint8_t deco = Label::kPlain) {
    return Label{base, deco, (int16_t)index};
}

} // namespace jdcalc
