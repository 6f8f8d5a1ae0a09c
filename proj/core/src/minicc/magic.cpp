#include "nmdec/minicc/magic.hpp"

#include <cmath>
#include <cstdlib>

namespace nmdec::minicc {

SignedMagic signed_magic(int32_t d) {
  const uint32_t two31 = 0x80000000u;
  const uint32_t ad = static_cast<uint32_t>(std::llabs(static_cast<int64_t>(d)));
  const uint32_t t = two31 + (static_cast<uint32_t>(d) >> 31);
  const uint32_t anc = t - 1 - t % ad;
  int p = 31;
  uint32_t q1 = two31 / anc;
  uint32_t r1 = two31 - q1 * anc;
  uint32_t q2 = two31 / ad;
  uint32_t r2 = two31 - q2 * ad;
  uint32_t delta = 0;
  do {
    ++p;
    q1 *= 2;
    r1 *= 2;
    if (r1 >= anc) {
      ++q1;
      r1 -= anc;
    }
    q2 *= 2;
    r2 *= 2;
    if (r2 >= ad) {
      ++q2;
      r2 -= ad;
    }
    delta = ad - r2;
  } while (q1 < delta || (q1 == delta && r1 == 0));

  uint32_t m = q2 + 1;
  if (d < 0) m = 0u - m;
  SignedMagic out;
  out.multiplier = static_cast<int32_t>(m);
  out.shift = p - 32;
  out.add_fixup = d > 0 && out.multiplier < 0;
  return out;
}

std::optional<int32_t> divisor_from_magic(int32_t multiplier, int shift) {
  if (shift < 0 || shift > 31 || multiplier == 0) return std::nullopt;
  const double mu = static_cast<double>(static_cast<uint32_t>(multiplier));
  const double d = std::round(std::ldexp(1.0, 32 + shift) / mu);
  if (d < 2 || d > 2147483647.0) return std::nullopt;
  const auto cand = static_cast<int32_t>(d);
  SignedMagic m = signed_magic(cand);
  if (m.multiplier != multiplier || m.shift != shift) return std::nullopt;
  return cand;
}

bool is_power_of_two(int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

int log2_exact(int64_t v) {
  int k = 0;
  while ((int64_t{1} << k) < v) ++k;
  return k;
}

}  // namespace nmdec::minicc
