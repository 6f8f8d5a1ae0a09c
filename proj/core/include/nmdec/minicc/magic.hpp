#pragma once

#include <cstdint>
#include <optional>

namespace nmdec::minicc {

// Signed division by a constant as a widening multiply plus shifts
// (Hacker's Delight, 10-1). An add_fixup multiplier has its sign bit set
// and needs the dividend added to the high product.
struct SignedMagic {
  int32_t multiplier = 0;
  int shift = 0;
  bool add_fixup = false;
  bool operator==(const SignedMagic&) const = default;
};

// Valid for d >= 2.
SignedMagic signed_magic(int32_t d);

// Divisor whose magic pair is exactly (multiplier, shift), if any.
std::optional<int32_t> divisor_from_magic(int32_t multiplier, int shift);

bool is_power_of_two(int64_t v);
int log2_exact(int64_t v);  // requires is_power_of_two(v)

}  // namespace nmdec::minicc
