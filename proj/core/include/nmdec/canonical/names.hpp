#pragma once

#include <map>
#include <string>

#include "nmdec/lang/ast.hpp"
#include "nmdec/util/tokens.hpp"

namespace nmdec::canonical {

// Original identifier <-> generic X<i> name.
class NameMap {
 public:
  const std::string& generic(const std::string& original);  // assigns on first sight
  const std::string* find_generic(const std::string& original) const;
  const std::string* find_original(const std::string& generic) const;
  size_t size() const { return to_generic_.size(); }
  const std::map<std::string, std::string>& forward() const { return to_generic_; }

 private:
  std::map<std::string, std::string> to_generic_;
  std::map<std::string, std::string> to_original_;
};

// Identifiers are renamed X0, X1, ... in order of first occurrence.
// Opcodes, registers, labels, keywords and spill slots are left alone.
struct Abstracted {
  TokenSeq tokens;
  NameMap names;
};
Abstracted abstract_names(const TokenSeq& tokens);
bool is_reserved_token(const std::string& token);

// Applies an existing map (built from the assembly side) to a program.
// Identifiers missing from the map get fresh generic names.
lang::Program apply_names(lang::Program p, NameMap& names);
// Maps generic names back; generic names without an original keep their
// spelling unless it collides with an original, then get a fresh name.
lang::Program restore_names(lang::Program p, const NameMap& names);

}  // namespace nmdec::canonical
