#include "kc/convolve.hpp"

#include <algorithm>

#include "kc/error.hpp"

namespace kc {

std::vector<BigInt> subset_zeta(std::vector<BigInt> f, uint32_t num_elems) {
  if (num_elems > 24) throw Error("subset_zeta: ground set capped at 24 elements");
  if (f.size() != (size_t{1} << num_elems)) throw Error("subset_zeta: wrong table size");
  for (uint32_t b = 0; b < num_elems; ++b)
    for (size_t mask = 0; mask < f.size(); ++mask)
      if (mask & (size_t{1} << b)) f[mask] += f[mask ^ (size_t{1} << b)];
  return f;
}

std::vector<BigInt> subset_moebius(std::vector<BigInt> f, uint32_t num_elems) {
  if (num_elems > 24) throw Error("subset_moebius: ground set capped at 24 elements");
  if (f.size() != (size_t{1} << num_elems)) throw Error("subset_moebius: wrong table size");
  for (uint32_t b = 0; b < num_elems; ++b)
    for (size_t mask = 0; mask < f.size(); ++mask)
      if (mask & (size_t{1} << b)) f[mask] -= f[mask ^ (size_t{1} << b)];
  return f;
}

std::vector<BigInt> union_product(const std::vector<BigInt>& f, const std::vector<BigInt>& g,
                                  uint32_t num_elems) {
  auto zf = subset_zeta(f, num_elems);
  auto zg = subset_zeta(g, num_elems);
  for (size_t i = 0; i < zf.size(); ++i) zf[i] *= zg[i];
  return subset_moebius(std::move(zf), num_elems);
}

namespace {

// NTT-friendly 30-bit primes (p = c * 2^k + 1, k >= 20) with primitive roots.
struct NttPrime {
  uint64_t p, root;
};
constexpr NttPrime kPrimes[] = {
    {998244353, 3},   {1004535809, 3}, {469762049, 3},  {167772161, 3},  {754974721, 11},
    {104857601, 3},   {1012924417, 5}, {985661441, 3},  {943718401, 7},  {935329793, 3},
    {918552577, 5},   {1045430273, 3}, {1051721729, 6}, {1053818881, 7},
};

uint64_t pow_mod(uint64_t b, uint64_t e, uint64_t p) {
  uint64_t r = 1;
  b %= p;
  while (e) {
    if (e & 1) r = r * b % p;
    b = b * b % p;
    e >>= 1;
  }
  return r;
}

void ntt(std::vector<uint64_t>& a, bool invert, const NttPrime& pr) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    uint64_t w = pow_mod(pr.root, (pr.p - 1) / len, pr.p);
    if (invert) w = pow_mod(w, pr.p - 2, pr.p);
    for (size_t i = 0; i < n; i += len) {
      uint64_t wn = 1;
      for (size_t j = 0; j < len / 2; ++j) {
        uint64_t u = a[i + j], v = a[i + j + len / 2] * wn % pr.p;
        a[i + j] = u + v < pr.p ? u + v : u + v - pr.p;
        a[i + j + len / 2] = u >= v ? u - v : u + pr.p - v;
        wn = wn * w % pr.p;
      }
    }
  }
  if (invert) {
    uint64_t inv_n = pow_mod(n, pr.p - 2, pr.p);
    for (auto& x : a) x = x * inv_n % pr.p;
  }
}

std::vector<uint64_t> convolve_mod(const std::vector<BigInt>& a, const std::vector<BigInt>& b,
                                   const NttPrime& pr) {
  size_t need = a.size() + b.size() - 1;
  size_t n = 1;
  while (n < need) n <<= 1;
  // the principal root of order n must really have that order
  uint64_t wn = pow_mod(pr.root, (pr.p - 1) / n, pr.p);
  if (n > 1 && pow_mod(wn, n / 2, pr.p) != pr.p - 1)
    throw Error("linear_convolve: transform length exceeds the prime's 2-adic order");
  std::vector<uint64_t> fa(n, 0), fb(n, 0);
  for (size_t i = 0; i < a.size(); ++i)
    fa[i] = mpz_fdiv_ui(a[i].get_mpz_t(), static_cast<unsigned long>(pr.p));
  for (size_t i = 0; i < b.size(); ++i)
    fb[i] = mpz_fdiv_ui(b[i].get_mpz_t(), static_cast<unsigned long>(pr.p));
  ntt(fa, false, pr);
  ntt(fb, false, pr);
  for (size_t i = 0; i < n; ++i) fa[i] = fa[i] * fb[i] % pr.p;
  ntt(fa, true, pr);
  fa.resize(need);
  return fa;
}

}  // namespace

std::vector<BigInt> linear_convolve(const std::vector<BigInt>& a, const std::vector<BigInt>& b) {
  if (a.empty() || b.empty()) return {};
  const size_t out_len = a.size() + b.size() - 1;
  if (a.size() * b.size() <= (size_t{1} << 14)) {
    std::vector<BigInt> out(out_len, BigInt(0));
    for (size_t i = 0; i < a.size(); ++i) {
      if (a[i] == 0) continue;
      for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
  }

  // value magnitude bound decides the prime count; shift negatives away first
  BigInt amin = 0, amax = 0, bmin = 0, bmax = 0;
  for (const auto& x : a) {
    if (x < amin) amin = x;
    if (x > amax) amax = x;
  }
  for (const auto& x : b) {
    if (x < bmin) bmin = x;
    if (x > bmax) bmax = x;
  }
  if (amin < 0 || bmin < 0) {
    // split into nonnegative parts: (a+ - a-) * (b+ - b-)
    auto split = [](const std::vector<BigInt>& v) {
      std::vector<BigInt> pos(v.size(), BigInt(0)), neg(v.size(), BigInt(0));
      for (size_t i = 0; i < v.size(); ++i)
        (v[i] >= 0 ? pos[i] : neg[i]) = v[i] >= 0 ? v[i] : -v[i];
      return std::pair{pos, neg};
    };
    auto [ap, an] = split(a);
    auto [bp, bn] = split(b);
    auto pp = linear_convolve(ap, bp);
    auto pn = linear_convolve(ap, bn);
    auto np = linear_convolve(an, bp);
    auto nn = linear_convolve(an, bn);
    std::vector<BigInt> out(out_len, BigInt(0));
    for (size_t i = 0; i < out_len; ++i) out[i] = pp[i] + nn[i] - pn[i] - np[i];
    return out;
  }

  size_t bits = mpz_sizeinbase(amax.get_mpz_t(), 2) + mpz_sizeinbase(bmax.get_mpz_t(), 2) +
                64 - __builtin_clzll(std::min(a.size(), b.size())) + 2;
  size_t num_primes = (bits + 29) / 30 + 1;
  if (num_primes > std::size(kPrimes))
    throw Error("linear_convolve: values too large for the prime pool");

  std::vector<std::vector<uint64_t>> residues;
  for (size_t k = 0; k < num_primes; ++k) residues.push_back(convolve_mod(a, b, kPrimes[k]));

  // CRT: garner-style incremental reconstruction
  std::vector<BigInt> out(out_len, BigInt(0));
  BigInt modulus = 1;
  for (size_t k = 0; k < num_primes; ++k) {
    const uint64_t p = kPrimes[k].p;
    if (k == 0) {
      for (size_t i = 0; i < out_len; ++i) out[i] = residues[0][i];
      modulus = p;
      continue;
    }
    BigInt inv;  // modulus^{-1} mod p
    {
      uint64_t m_mod_p = mpz_fdiv_ui(modulus.get_mpz_t(), static_cast<unsigned long>(p));
      inv = pow_mod(m_mod_p, p - 2, p);
    }
    const uint64_t inv_u = inv.get_ui();
    for (size_t i = 0; i < out_len; ++i) {
      uint64_t cur = mpz_fdiv_ui(out[i].get_mpz_t(), static_cast<unsigned long>(p));
      uint64_t want = residues[k][i];
      uint64_t diff = want >= cur ? want - cur : want + p - cur;
      uint64_t t = diff * inv_u % p;
      out[i] += modulus * t;
    }
    modulus *= p;
  }
  return out;
}

std::vector<BigInt> group_convolve(const std::vector<BigInt>& f, const std::vector<BigInt>& g,
                                   const std::vector<uint32_t>& moduli) {
  size_t size = 1;
  for (uint32_t m : moduli) {
    if (m < 1) throw Error("group_convolve: moduli must be positive");
    size *= m;
  }
  if (f.size() != size || g.size() != size) throw Error("group_convolve: table size mismatch");
  if (size == 0) return {};

  if (size <= 256) {
    // quadratic, componentwise modular index addition
    std::vector<BigInt> out(size, BigInt(0));
    std::vector<uint32_t> da(moduli.size()), db(moduli.size());
    for (size_t ia = 0; ia < size; ++ia) {
      if (f[ia] == 0) continue;
      {
        size_t r = ia;
        for (size_t k = 0; k < moduli.size(); ++k) {
          da[k] = r % moduli[k];
          r /= moduli[k];
        }
      }
      for (size_t ib = 0; ib < size; ++ib) {
        if (g[ib] == 0) continue;
        size_t r = ib, target = 0, mul = 1;
        for (size_t k = 0; k < moduli.size(); ++k) {
          db[k] = r % moduli[k];
          r /= moduli[k];
          target += ((da[k] + db[k]) % moduli[k]) * mul;
          mul *= moduli[k];
        }
        out[target] += f[ia] * g[ib];
      }
    }
    return out;
  }

  // embed into a carry-free linear convolution and fold indices modulo m_i
  std::vector<size_t> stride(moduli.size() + 1);
  stride[0] = 1;
  for (size_t k = 0; k < moduli.size(); ++k) stride[k + 1] = stride[k] * (2 * moduli[k] - 1);
  std::vector<BigInt> fa(stride.back(), BigInt(0)), fb(stride.back(), BigInt(0));
  auto embed = [&](const std::vector<BigInt>& src, std::vector<BigInt>& dst) {
    for (size_t i = 0; i < size; ++i) {
      size_t r = i, pos = 0;
      for (size_t k = 0; k < moduli.size(); ++k) {
        pos += (r % moduli[k]) * stride[k];
        r /= moduli[k];
      }
      dst[pos] = src[i];
    }
  };
  embed(f, fa);
  embed(g, fb);
  auto conv = linear_convolve(fa, fb);
  std::vector<BigInt> out(size, BigInt(0));
  for (size_t pos = 0; pos < conv.size(); ++pos) {
    if (conv[pos] == 0) continue;
    size_t r = pos, target = 0, mul = 1;
    for (size_t k = 0; k < moduli.size(); ++k) {
      size_t digit = r % (2 * moduli[k] - 1);
      r /= 2 * moduli[k] - 1;
      target += (digit % moduli[k]) * mul;
      mul *= moduli[k];
    }
    out[target] += conv[pos];
  }
  return out;
}

}  // namespace kc
