#include "jdcalc/label.hpp"

#include <cctype>

namespace jdcalc {

Kind kind_parse(const std::string& s) {
    if (s == "r" || s == "root") return Kind::Root;
    if (s == "c" || s == "cartan") return Kind::Cartan;
    if (s == "t" || s == "total") return Kind::Total;
    throw FormatError("bad edge kind: " + s);
}

std::string Label::str() const {
    std::string s;
    if (deco == kDiff) s += 'd';
    if (deco == kDeriv) s += 'p';
    s += base;
    s += std::to_string(index);
    return s;
}

Label Label::parse(const std::string& s) {
    if (s.empty()) throw FormatError("empty label");
    size_t i = 0;
    uint8_t deco = kPlain;
    if (s.size() >= 2 && (s[0] == 'd' || s[0] == 'p') && std::isalpha((unsigned char)s[1]) &&
        std::isdigit((unsigned char)s[s.size() - 1])) {
        // 'd'/'p' prefix only when followed by a base letter and an index
        bool rest_has_digit = false;
        for (size_t k = 2; k < s.size(); ++k)
            if (std::isdigit((unsigned char)s[k])) rest_has_digit = true;
        if (rest_has_digit) {
            deco = s[0] == 'd' ? kDiff : kDeriv;
            i = 1;
        }
    }
    if (i >= s.size() || !std::isalpha((unsigned char)s[i]))
        throw FormatError("bad label: " + s);
    char base = s[i++];
    if (i >= s.size()) throw FormatError("label missing index: " + s);
    for (size_t k = i; k < s.size(); ++k)
        if (!std::isdigit((unsigned char)s[k])) throw FormatError("bad label index: " + s);
    int idx = std::stoi(s.substr(i));
    return Label{base, deco, (int16_t)idx};
}

} // namespace jdcalc
