#pragma once

#include <cstdint>
#include <vector>

#include "kc/bigint.hpp"

namespace kc {

// Subset-lattice transforms over functions 2^V -> Z, arrays indexed by subset
// masks. Guarded to |V| <= 24.
std::vector<BigInt> subset_zeta(std::vector<BigInt> f, uint32_t num_elems);
std::vector<BigInt> subset_moebius(std::vector<BigInt> f, uint32_t num_elems);

// (f u g)(X) = sum over A u B = X of f(A) g(B), via moebius(zeta f * zeta g).
std::vector<BigInt> union_product(const std::vector<BigInt>& f, const std::vector<BigInt>& g,
                                  uint32_t num_elems);

// Exact linear convolution; naive for small inputs, multi-prime NTT with CRT
// reconstruction otherwise. Handles negative values.
std::vector<BigInt> linear_convolve(const std::vector<BigInt>& a, const std::vector<BigInt>& b);

// Convolution over the abelian group Z/m_1 x ... x Z/m_d: componentwise
// modular addition of indices (mixed radix, first modulus fastest).
std::vector<BigInt> group_convolve(const std::vector<BigInt>& f, const std::vector<BigInt>& g,
                                   const std::vector<uint32_t>& moduli);

}  // namespace kc
