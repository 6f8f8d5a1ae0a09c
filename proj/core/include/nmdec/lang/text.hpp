#pragma once

#include <stdexcept>
#include <string>

#include "nmdec/lang/ast.hpp"
#include "nmdec/util/tokens.hpp"

namespace nmdec::lang {

class ParseError : public std::runtime_error {
 public:
  ParseError(size_t position, const std::string& what);
  size_t position() const { return position_; }

 private:
  size_t position_;
};

// Infix C tokens. Nested binary operands are parenthesized, the outermost
// operator of an assignment value or condition side is not.
TokenSeq emit_tokens(const Program& p);
TokenSeq emit_tokens(const Expr& e);
std::string to_source(const Program& p);

// Inverse of emit_tokens; also accepts unparenthesized input using the
// usual C precedence and left associativity.
Program parse_tokens(const TokenSeq& tokens);
Program parse_source(const std::string& text);

}  // namespace nmdec::lang
