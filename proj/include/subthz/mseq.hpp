// Maximal-length (m-sequence) generation from Galois LFSRs.
#pragma once

#include <cstdint>
#include <vector>

namespace subthz {

// Default primitive generator polynomial for a given register degree,
// encoded as a bitmask with bit i = coefficient of x^i (degree and
// constant terms always set). Degrees 2..16.
uint32_t default_mseq_polynomial(int degree);

// Generates one period (2^degree - 1 chips) of a bipolar m-sequence.
// The polynomial must be primitive over GF(2); this is enforced by a
// full period check, so a non-primitive polynomial is rejected with a
// diagnostic rather than silently producing a short sequence.
// seed is the nonzero initial register state.
std::vector<int8_t> generate_mseq(int degree, uint32_t polynomial, uint32_t seed = 1);

// Convenience overload using the default polynomial table.
std::vector<int8_t> generate_mseq(int degree);

// Periodic (circular) autocorrelation of a bipolar sequence at a given lag.
// For an m-sequence this is N at lag 0 and -1 at every other lag.
long periodic_autocorrelation(const std::vector<int8_t>& seq, size_t lag);

} // namespace subthz
