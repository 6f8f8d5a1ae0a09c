#include "nmdec/canonical/pipeline.hpp"

#include "nmdec/canonical/digits.hpp"
#include "nmdec/canonical/postorder.hpp"

namespace nmdec::canonical {

CanonicalInput canonicalize_input(const minicc::AsmProgram& a) {
  Abstracted abs = abstract_names(minicc::asm_tokens(a));
  return {split_digits(abs.tokens), std::move(abs.names)};
}

CanonicalPair canonicalize_pair(const lang::Program& p, const minicc::AsmProgram& compiled) {
  CanonicalInput in = canonicalize_input(compiled);
  lang::Program renamed = apply_names(p, in.names);
  return {split_digits(to_postorder(renamed)), std::move(in.tokens)};
}

std::optional<lang::Program> decanonicalize(const TokenSeq& hypothesis, const NameMap& names) {
  try {
    return restore_names(from_postorder(fuse_digits(hypothesis)), names);
  } catch (const PostorderError&) {
    return std::nullopt;
  }
}

}  // namespace nmdec::canonical
