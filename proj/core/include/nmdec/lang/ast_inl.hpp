#pragma once

namespace nmdec::lang::detail {

template <typename Fn>
void rename_expr(Expr& e, Fn& fn) {
  std::visit(Overloaded{[&](Var& v) { v.name = fn(v.name); },
                        [](Num&) {},
                        [&](Binary& b) {
                          rename_expr(*b.lhs, fn);
                          rename_expr(*b.rhs, fn);
                        },
                        [&](Unary& u) { u.var = fn(u.var); }},
             e.node);
}

template <typename Fn>
void rename_block(std::vector<Statement>& body, Fn& fn) {
  for (auto& s : body) {
    std::visit(Overloaded{[&](Assignment& a) {
                            a.target = fn(a.target);
                            rename_expr(a.value, fn);
                          },
                          [&](Branch& b) {
                            rename_expr(b.cond.lhs, fn);
                            rename_expr(b.cond.rhs, fn);
                            rename_block(b.then_body, fn);
                            rename_block(b.else_body, fn);
                          },
                          [&](Loop& l) {
                            rename_expr(l.cond.lhs, fn);
                            rename_expr(l.cond.rhs, fn);
                            rename_block(l.body, fn);
                          }},
               s.node);
  }
}

}  // namespace nmdec::lang::detail

namespace nmdec::lang {

template <typename Fn>
void rename_variables(Program& p, Fn&& fn) {
  detail::rename_block(p.statements, fn);
}

}  // namespace nmdec::lang
