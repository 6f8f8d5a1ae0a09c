#pragma once

#include <string>

#include "nmdec/util/tokens.hpp"

namespace nmdec::canonical {

// Sign marker emitted before the digits of a negative number.
inline const std::string kNegToken = "NEG";

// Every numeric token becomes one token per digit ("-12" -> NEG 1 2).
TokenSeq split_digits(const TokenSeq& tokens);
// Maximal runs of single digits (optionally after NEG) fuse back into one
// number. Inverse of split_digits when no two numeric tokens are adjacent.
TokenSeq fuse_digits(const TokenSeq& tokens);

}  // namespace nmdec::canonical
