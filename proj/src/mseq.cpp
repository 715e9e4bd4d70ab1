#include "subthz/mseq.hpp"

#include <stdexcept>
#include <string>

namespace subthz {

uint32_t default_mseq_polynomial(int degree) {
    switch (degree) {
        case 2: return 0x7;
        case 3: return 0xB;
        case 4: return 0x13;
        case 5: return 0x25;
        case 6: return 0x43;
        case 7: return 0x89;
        case 8: return 0x11D;
        case 9: return 0x211;
        case 10: return 0x409;
        case 11: return 0x805;
        case 12: return 0x1053;  // x^12 + x^6 + x^4 + x + 1
        case 13: return 0x201B;  // x^13 + x^4 + x^3 + x + 1
        case 14: return 0x4443;
        case 15: return 0x8003;
        case 16: return 0x1100B;
        default:
            throw std::invalid_argument("no default m-sequence polynomial for degree " +
                                        std::to_string(degree));
    }
}

std::vector<int8_t> generate_mseq(int degree, uint32_t polynomial, uint32_t seed) {
    if (degree < 2 || degree > 16)
        throw std::invalid_argument("m-sequence degree must be in [2, 16]");
    const uint32_t mask = (1u << degree) - 1u;
    if ((seed & mask) == 0)
        throw std::invalid_argument("m-sequence seed must be nonzero");
    if ((polynomial & 1u) == 0 || (polynomial >> degree) != 1u)
        throw std::invalid_argument("polynomial bitmask must have degree and constant terms set");

    const size_t period = (size_t(1) << degree) - 1;
    const uint32_t feedback = (polynomial >> 1) & mask;  // Galois right-shift form

    std::vector<int8_t> chips(period);
    uint32_t state = seed & mask;
    const uint32_t start = state;
    for (size_t i = 0; i < period; ++i) {
        const uint32_t out = state & 1u;
        chips[i] = out ? int8_t(1) : int8_t(-1);
        state >>= 1;
        if (out) state ^= feedback;
        if (state == start && i + 1 != period)
            throw std::invalid_argument(
                "polynomial is not primitive: LFSR period " + std::to_string(i + 1) +
                " < " + std::to_string(period));
    }
    if (state != start)
        throw std::invalid_argument("polynomial is not primitive: period exceeds 2^degree - 1");
    return chips;
}

std::vector<int8_t> generate_mseq(int degree) {
    return generate_mseq(degree, default_mseq_polynomial(degree), 1u);
}

long periodic_autocorrelation(const std::vector<int8_t>& seq, size_t lag) {
    const size_t n = seq.size();
    long acc = 0;
    for (size_t i = 0; i < n; ++i) {
        size_t j = i + lag;
        if (j >= n) j -= n;
        acc += long(seq[i]) * long(seq[j]);
    }
    return acc;
}

} // namespace subthz
