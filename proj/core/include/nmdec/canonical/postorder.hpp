#pragma once

#include <stdexcept>
#include <string>

#include "nmdec/lang/ast.hpp"
#include "nmdec/util/tokens.hpp"

namespace nmdec::canonical {

class PostorderError : public std::runtime_error {
 public:
  PostorderError(size_t position, const std::string& what);
  size_t position() const { return position_; }

 private:
  size_t position_;
};

// Operands before operators:
//   expression   l r <op>   |  X ++ / X -- (postfix)  |  X pre++ / X pre--
//   assignment   <expr> X = ;
//   condition    l r <rel>
//   if           <cond> { ... } if
//   if/else      <cond> { ... } { ... } ifelse
//   while        <cond> { ... } while
// A "|" separates two adjacent numeric literals so digit splitting stays
// reversible.
TokenSeq to_postorder(const lang::Program& p);
lang::Program from_postorder(const TokenSeq& tokens);

inline const std::string kNumberSeparator = "|";

}  // namespace nmdec::canonical
