#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "nmdec/util/box.hpp"

namespace nmdec::lang {

using Identifier = std::string;

enum class BinaryOp { kAdd, kSub, kMul, kDiv, kMod };
enum class UnaryOp { kInc, kDec };
enum class Fixity { kPrefix, kPostfix };
enum class Relation { kGt, kGe, kLt, kLe, kEq, kNe };

struct Expr;

struct Var {
  Identifier name;
  bool operator==(const Var&) const = default;
};

struct Num {
  int32_t value = 0;
  bool operator==(const Num&) const = default;
};

struct Binary {
  BinaryOp op;
  Box<Expr> lhs;
  Box<Expr> rhs;
  bool operator==(const Binary&) const = default;
};

// Increment/decrement, only ever applied to a variable.
struct Unary {
  UnaryOp op;
  Fixity fixity;
  Identifier var;
  bool operator==(const Unary&) const = default;
};

struct Expr {
  std::variant<Var, Num, Binary, Unary> node;
  bool operator==(const Expr&) const = default;
};

struct Condition {
  Expr lhs;
  Relation rel;
  Expr rhs;
  bool operator==(const Condition&) const = default;
};

struct Statement;

struct Assignment {
  Identifier target;
  Expr value;
  bool operator==(const Assignment&) const = default;
};

// An empty else_body means the branch has no else arm.
struct Branch {
  Condition cond;
  std::vector<Statement> then_body;
  std::vector<Statement> else_body;
  bool operator==(const Branch&) const;
};

struct Loop {
  Condition cond;
  std::vector<Statement> body;
  bool operator==(const Loop&) const;
};

struct Statement {
  std::variant<Assignment, Branch, Loop> node;
  bool operator==(const Statement&) const = default;
};

struct Program {
  std::vector<Statement> statements;
  bool operator==(const Program&) const = default;
};

inline bool Branch::operator==(const Branch& o) const {
  return cond == o.cond && then_body == o.then_body && else_body == o.else_body;
}
inline bool Loop::operator==(const Loop& o) const {
  return cond == o.cond && body == o.body;
}

// Constructors for terse test and sampler code.
Expr make_var(Identifier name);
Expr make_num(int32_t value);
Expr make_binary(BinaryOp op, Expr lhs, Expr rhs);
Expr make_unary(UnaryOp op, Fixity fixity, Identifier var);
Statement make_assign(Identifier target, Expr value);
Statement make_if(Condition cond, std::vector<Statement> then_body,
                  std::vector<Statement> else_body = {});
Statement make_while(Condition cond, std::vector<Statement> body);

const char* to_string(BinaryOp op);
const char* to_string(Relation rel);
Relation mirror(Relation rel);  // a rel b  <=>  b mirror(rel) a
Relation negate(Relation rel);  // !(a rel b) <=> a negate(rel) b
bool is_commutative(BinaryOp op);

int expr_depth(const Expr& e);  // a leaf has depth 1

// Variables read or written anywhere in the program, sorted.
std::set<Identifier> variables(const Program& p);
// Variables possibly modified by a statement list (assignments and ++/--).
std::set<Identifier> modified_variables(const std::vector<Statement>& body);
void collect_reads(const Expr& e, std::set<Identifier>& out);

// Pre-order traversal over every numeric literal, in token order.
std::vector<int32_t*> number_slots(Program& p);
std::vector<int32_t> number_values(const Program& p);

// Renames identifiers; names missing from the map are left untouched.
template <typename Fn>
void rename_variables(Program& p, Fn&& fn);

}  // namespace nmdec::lang

#include "nmdec/lang/ast_inl.hpp"
