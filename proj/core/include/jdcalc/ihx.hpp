#pragma once

#include "jdcalc/dsum.hpp"

namespace jdcalc {

/// Rewrites a diagram sum onto a deterministic basis of the IHX quotient.
/// Within each graded piece (leg multiset, chi, vertex count, specials), all
/// relation vectors obtained by contracting internal edges to a 4-valent
/// vertex and resolving it are generated, eliminated over the rationals, and
/// the sum is expressed on the surviving basis. Idempotent; relation vectors
/// reduce to zero. Decorations (including denominator profiles) transport
/// through the resolutions.
DSum ihx_reduce(const DSum& u);

// u == v modulo IHX.
bool ihx_equal(const DSum& u, const DSum& v);

// Clears the per-piece rewrite cache (primarily for benchmarks).
void ihx_cache_clear();

} // namespace jdcalc
