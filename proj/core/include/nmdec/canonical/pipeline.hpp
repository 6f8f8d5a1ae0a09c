#pragma once

#include <optional>

#include "nmdec/canonical/names.hpp"
#include "nmdec/lang/ast.hpp"
#include "nmdec/minicc/asm.hpp"
#include "nmdec/util/tokens.hpp"

namespace nmdec::canonical {

// Model-facing form of an assembly input: names abstracted, digits split.
struct CanonicalInput {
  TokenSeq tokens;
  NameMap names;
};
CanonicalInput canonicalize_input(const minicc::AsmProgram& a);

// (high, low) training pair: post-order source and assembly, both in the
// name space of the assembly side.
struct CanonicalPair {
  TokenSeq high;
  TokenSeq low;
};
CanonicalPair canonicalize_pair(const lang::Program& p, const minicc::AsmProgram& compiled);

// Model output back to a program in the input's original names. nullopt
// when the hypothesis is not a well-formed post-order program.
std::optional<lang::Program> decanonicalize(const TokenSeq& hypothesis, const NameMap& names);

}  // namespace nmdec::canonical
