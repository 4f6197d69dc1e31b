#pragma once

#include <gmpxx.h>

#include <cstdint>

namespace kc {

using BigInt = mpz_class;

inline BigInt pow2(uint64_t e) {
  BigInt r;
  mpz_ui_pow_ui(r.get_mpz_t(), 2, e);
  return r;
}

}  // namespace kc
