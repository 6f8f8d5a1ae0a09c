#include "nmdec/lang/ast.hpp"

#include <algorithm>

namespace nmdec::lang {

Expr make_var(Identifier name) { return Expr{Var{std::move(name)}}; }
Expr make_num(int32_t value) { return Expr{Num{value}}; }
Expr make_binary(BinaryOp op, Expr lhs, Expr rhs) {
  return Expr{Binary{op, Box<Expr>(std::move(lhs)), Box<Expr>(std::move(rhs))}};
}
Expr make_unary(UnaryOp op, Fixity fixity, Identifier var) {
  return Expr{Unary{op, fixity, std::move(var)}};
}
Statement make_assign(Identifier target, Expr value) {
  return Statement{Assignment{std::move(target), std::move(value)}};
}
Statement make_if(Condition cond, std::vector<Statement> then_body,
                  std::vector<Statement> else_body) {
  return Statement{Branch{std::move(cond), std::move(then_body), std::move(else_body)}};
}
Statement make_while(Condition cond, std::vector<Statement> body) {
  return Statement{Loop{std::move(cond), std::move(body)}};
}

const char* to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::kAdd: return "+";
    case BinaryOp::kSub: return "-";
    case BinaryOp::kMul: return "*";
    case BinaryOp::kDiv: return "/";
    case BinaryOp::kMod: return "%";
  }
  return "?";
}

const char* to_string(Relation rel) {
  switch (rel) {
    case Relation::kGt: return ">";
    case Relation::kGe: return ">=";
    case Relation::kLt: return "<";
    case Relation::kLe: return "<=";
    case Relation::kEq: return "==";
    case Relation::kNe: return "!=";
  }
  return "?";
}

Relation mirror(Relation rel) {
  switch (rel) {
    case Relation::kGt: return Relation::kLt;
    case Relation::kGe: return Relation::kLe;
    case Relation::kLt: return Relation::kGt;
    case Relation::kLe: return Relation::kGe;
    default: return rel;
  }
}

Relation negate(Relation rel) {
  switch (rel) {
    case Relation::kGt: return Relation::kLe;
    case Relation::kGe: return Relation::kLt;
    case Relation::kLt: return Relation::kGe;
    case Relation::kLe: return Relation::kGt;
    case Relation::kEq: return Relation::kNe;
    case Relation::kNe: return Relation::kEq;
  }
  return rel;
}

bool is_commutative(BinaryOp op) { return op == BinaryOp::kAdd || op == BinaryOp::kMul; }

int expr_depth(const Expr& e) {
  if (const auto* b = std::get_if<Binary>(&e.node)) {
    return 1 + std::max(expr_depth(*b->lhs), expr_depth(*b->rhs));
  }
  return 1;
}

void collect_reads(const Expr& e, std::set<Identifier>& out) {
  std::visit(Overloaded{[&](const Var& v) { out.insert(v.name); },
                        [](const Num&) {},
                        [&](const Binary& b) {
                          collect_reads(*b.lhs, out);
                          collect_reads(*b.rhs, out);
                        },
                        [&](const Unary& u) { out.insert(u.var); }},
             e.node);
}

namespace {

void collect_unary_targets(const Expr& e, std::set<Identifier>& out) {
  if (const auto* u = std::get_if<Unary>(&e.node)) out.insert(u->var);
  if (const auto* b = std::get_if<Binary>(&e.node)) {
    collect_unary_targets(*b->lhs, out);
    collect_unary_targets(*b->rhs, out);
  }
}

void collect_all(const std::vector<Statement>& body, std::set<Identifier>& out) {
  for (const auto& s : body) {
    std::visit(Overloaded{[&](const Assignment& a) {
                            out.insert(a.target);
                            collect_reads(a.value, out);
                          },
                          [&](const Branch& b) {
                            collect_reads(b.cond.lhs, out);
                            collect_reads(b.cond.rhs, out);
                            collect_all(b.then_body, out);
                            collect_all(b.else_body, out);
                          },
                          [&](const Loop& l) {
                            collect_reads(l.cond.lhs, out);
                            collect_reads(l.cond.rhs, out);
                            collect_all(l.body, out);
                          }},
               s.node);
  }
}

void collect_modified(const std::vector<Statement>& body, std::set<Identifier>& out) {
  for (const auto& s : body) {
    std::visit(Overloaded{[&](const Assignment& a) {
                            out.insert(a.target);
                            collect_unary_targets(a.value, out);
                          },
                          [&](const Branch& b) {
                            collect_unary_targets(b.cond.lhs, out);
                            collect_unary_targets(b.cond.rhs, out);
                            collect_modified(b.then_body, out);
                            collect_modified(b.else_body, out);
                          },
                          [&](const Loop& l) {
                            collect_unary_targets(l.cond.lhs, out);
                            collect_unary_targets(l.cond.rhs, out);
                            collect_modified(l.body, out);
                          }},
               s.node);
  }
}

template <typename ExprT, typename Out>
void expr_slots(ExprT& e, Out& out) {
  if (auto* n = std::get_if<Num>(&e.node)) out.push_back(&n->value);
  if (auto* b = std::get_if<Binary>(&e.node)) {
    expr_slots(*b->lhs, out);
    expr_slots(*b->rhs, out);
  }
}

void block_slots(std::vector<Statement>& body, std::vector<int32_t*>& out) {
  for (auto& s : body) {
    std::visit(Overloaded{[&](Assignment& a) { expr_slots(a.value, out); },
                          [&](Branch& b) {
                            expr_slots(b.cond.lhs, out);
                            expr_slots(b.cond.rhs, out);
                            block_slots(b.then_body, out);
                            block_slots(b.else_body, out);
                          },
                          [&](Loop& l) {
                            expr_slots(l.cond.lhs, out);
                            expr_slots(l.cond.rhs, out);
                            block_slots(l.body, out);
                          }},
               s.node);
  }
}

}  // namespace

std::set<Identifier> variables(const Program& p) {
  std::set<Identifier> out;
  collect_all(p.statements, out);
  return out;
}

std::set<Identifier> modified_variables(const std::vector<Statement>& body) {
  std::set<Identifier> out;
  collect_modified(body, out);
  return out;
}

std::vector<int32_t*> number_slots(Program& p) {
  std::vector<int32_t*> out;
  block_slots(p.statements, out);
  return out;
}

std::vector<int32_t> number_values(const Program& p) {
  Program copy = p;
  std::vector<int32_t> out;
  for (int32_t* slot : number_slots(copy)) out.push_back(*slot);
  return out;
}

}  // namespace nmdec::lang
