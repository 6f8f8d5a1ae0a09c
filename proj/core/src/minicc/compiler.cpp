#include "nmdec/minicc/compiler.hpp"

#include <algorithm>
#include <climits>
#include <vector>

#include "nmdec/minicc/magic.hpp"
#include "nmdec/minicc/vm.hpp"

namespace nmdec::minicc {

using lang::Binary;
using lang::BinaryOp;
using lang::Expr;
using lang::Num;
using lang::Relation;
using lang::Unary;

namespace {

const Num* as_num(const Expr& e) { return std::get_if<Num>(&e.node); }

// Var and Num load straight into any register; prefix ++/-- only needs eax.
bool is_leaf(const Expr& e) {
  return std::holds_alternative<lang::Var>(e.node) || std::holds_alternative<Num>(e.node);
}
bool keeps_edx(const Expr& e) {
  if (is_leaf(e)) return true;
  const auto* u = std::get_if<Unary>(&e.node);
  return u && u->fixity == lang::Fixity::kPrefix;
}

Expr reassociate(BinaryOp op, Expr a, Expr b) {
  // (e op c2) op c1  ->  e op (c2 op c1) for + and *.
  if (!lang::is_commutative(op)) return lang::make_binary(op, std::move(a), std::move(b));
  if (as_num(a) && !as_num(b)) std::swap(a, b);
  if (const Num* c1 = as_num(b)) {
    if (auto* inner = std::get_if<Binary>(&a.node); inner && inner->op == op) {
      Expr* x = &*inner->lhs;
      Expr* c = &*inner->rhs;
      if (as_num(*x) && !as_num(*c)) std::swap(x, c);
      if (const Num* c2 = as_num(*c)) {
        int32_t v = eval_binary(op, c2->value, c1->value);
        return lang::make_binary(op, Expr(*x), lang::make_num(v));
      }
    }
  }
  return lang::make_binary(op, std::move(a), std::move(b));
}

class Emitter {
 public:
  Emitter(const CompilerOptions& opts, AsmProgram& out) : opts_(opts), out_(out) {}

  void block(const std::vector<lang::Statement>& body) {
    for (const auto& s : body) statement(s);
  }

 private:
  using Loc = Operand;

  void emit(Opcode op, std::vector<Operand> ops) { out_.code.push_back(make_instr(op, std::move(ops), origin_)); }
  void label(const std::string& name) {
    out_.code.push_back(make_label(name));
    out_.code.back().origin = origin_;
  }
  std::string new_label() { return ".L" + std::to_string(next_label_++); }

  Expr prepare(const Expr& e) const { return opts_.optimize ? fold_constants(e) : e; }

  // Hold slots for intermediate values: ecx, ebx, then spill memory.
  Operand acquire() {
    for (Reg r : {Reg::kEcx, Reg::kEbx}) {
      if (std::find(busy_.begin(), busy_.end(), r) == busy_.end()) {
        busy_.push_back(r);
        return r;
      }
    }
    return Mem{temp_name(temps_in_use_++)};
  }
  void release(const Operand& o) {
    if (const auto* r = std::get_if<Reg>(&o)) {
      busy_.erase(std::find(busy_.begin(), busy_.end(), *r));
    } else {
      --temps_in_use_;
    }
  }
  void release_hold(const Operand& o) {
    if (const auto* r = std::get_if<Reg>(&o); r && *r == Reg::kEdx) return;
    release(o);
  }

  Operand leaf_operand(const Expr& e) {
    if (const auto* v = std::get_if<lang::Var>(&e.node)) return Mem{v->name};
    return Imm{std::get<Num>(e.node).value};
  }

  // Registers a subtree needs beyond eax/edx, for evaluation order.
  int need(const Expr& e) const {
    const auto* b = std::get_if<Binary>(&e.node);
    if (!b) return 0;
    const Expr& l = *b->lhs;
    const Expr& r = *b->rhs;
    if (b->op == BinaryOp::kDiv || b->op == BinaryOp::kMod) {
      if (const Num* c = as_num(r); c && opts_.optimize && b->op == BinaryOp::kDiv && c->value >= 2) {
        return is_power_of_two(c->value) ? need(l) : std::max(need(l), 1);
      }
      if (as_num(l)) return std::max(need(r), 1);
      if (is_leaf(r)) return std::max(need(l), 1);
      return std::max(need(r), need(l) + 1);
    }
    if (as_num(r)) return need(l);
    if (as_num(l)) return need(r);
    int nl = need(l), nr = need(r);
    if (nl >= nr) return keeps_edx(r) ? nl : std::max(nl, nr + 1);
    return keeps_edx(l) ? nr : std::max(nr, nl + 1);
  }

  void statement(const lang::Statement& s) {
    int saved = origin_;
    origin_ = next_origin_++;
    std::visit(Overloaded{[&](const lang::Assignment& a) { assignment(a); },
                          [&](const lang::Branch& b) { branch(b); },
                          [&](const lang::Loop& l) { loop(l); }},
               s.node);
    origin_ = saved;
  }

  void assignment(const lang::Assignment& a) {
    Expr v = prepare(a.value);
    if (const Num* n = as_num(v)) {
      emit(Opcode::kMovl, {Imm{n->value}, Mem{a.target}});
      return;
    }
    expr(v);
    emit(Opcode::kMovl, {Reg::kEax, Mem{a.target}});
  }

  void branch(const lang::Branch& b) {
    if (b.else_body.empty()) {
      std::string end = new_label();
      jump_unless(b.cond, end);
      int inner = origin_;
      block(b.then_body);
      origin_ = inner;
      label(end);
      return;
    }
    std::string other = new_label();
    std::string end = new_label();
    jump_unless(b.cond, other);
    int inner = origin_;
    block(b.then_body);
    origin_ = inner;
    emit(Opcode::kJmp, {Label{end}});
    label(other);
    block(b.else_body);
    origin_ = inner;
    label(end);
  }

  void loop(const lang::Loop& l) {
    std::string body = new_label();
    std::string test = new_label();
    int inner = origin_;
    emit(Opcode::kJmp, {Label{test}});
    label(body);
    block(l.body);
    origin_ = inner;
    label(test);
    Relation rel = compare(l.cond);
    emit(jump_for(rel), {Label{body}});
  }

  void jump_unless(const lang::Condition& c, const std::string& target) {
    Relation rel = compare(c);
    emit(jump_for(lang::negate(rel)), {Label{target}});
  }

  static Opcode jump_for(Relation rel) {
    switch (rel) {
      case Relation::kGt: return Opcode::kJg;
      case Relation::kGe: return Opcode::kJge;
      case Relation::kLt: return Opcode::kJl;
      case Relation::kLe: return Opcode::kJle;
      case Relation::kEq: return Opcode::kJe;
      case Relation::kNe: return Opcode::kJne;
    }
    return Opcode::kJmp;
  }

  // Emits the cmpl; returns the relation that holds when the condition is true.
  Relation compare(const lang::Condition& c) {
    Expr lhs = prepare(c.lhs);
    Expr rhs = prepare(c.rhs);
    Relation rel = c.rel;
    if (as_num(lhs) && !as_num(rhs)) {
      std::swap(lhs, rhs);
      rel = lang::mirror(rel);
    }
    if (const Num* n = as_num(rhs)) {
      int32_t k = n->value;
      if (opts_.optimize && k != INT32_MIN) {
        if (rel == Relation::kGe) {
          rel = Relation::kGt;
          --k;
        } else if (rel == Relation::kLt) {
          rel = Relation::kLe;
          --k;
        }
      }
      expr(lhs);
      emit(Opcode::kCmpl, {Imm{k}, Reg::kEax});
      return rel;
    }
    if (need(lhs) >= need(rhs)) {
      Operand h = park(lhs, keeps_edx(rhs));
      expr(rhs);
      emit(Opcode::kCmpl, {Reg::kEax, h});
      release_hold(h);
    } else {
      Operand h = park(rhs, keeps_edx(lhs));
      expr(lhs);
      emit(Opcode::kCmpl, {h, Reg::kEax});
      release_hold(h);
    }
    return rel;
  }

  // Evaluates e and parks it in a hold slot chosen after evaluation, so the
  // evaluation itself can use every free register. Leaves load directly.
  Operand park(const Expr& e, bool use_edx) {
    if (!is_leaf(e)) expr(e);
    Operand h = use_edx ? Operand(Reg::kEdx) : acquire();
    if (is_leaf(e) && !(std::holds_alternative<Mem>(h) && std::holds_alternative<lang::Var>(e.node))) {
      emit(Opcode::kMovl, {leaf_operand(e), h});
    } else {
      if (is_leaf(e)) expr(e);
      emit(Opcode::kMovl, {Reg::kEax, h});
    }
    return h;
  }

  void expr(const Expr& e) {
    std::visit(Overloaded{[&](const lang::Var& v) { emit(Opcode::kMovl, {Mem{v.name}, Reg::kEax}); },
                          [&](const Num& n) { emit(Opcode::kMovl, {Imm{n.value}, Reg::kEax}); },
                          [&](const Unary& u) { unary(u); },
                          [&](const Binary& b) { binary(b); }},
             e.node);
  }

  void unary(const Unary& u) {
    bool inc = u.op == lang::UnaryOp::kInc;
    if (u.fixity == lang::Fixity::kPostfix) {
      emit(Opcode::kMovl, {Mem{u.var}, Reg::kEax});
      emit(Opcode::kLeal, {Imm{inc ? 1 : -1}, Reg::kEax, Reg::kEdx});
      emit(Opcode::kMovl, {Reg::kEdx, Mem{u.var}});
      return;
    }
    emit(Opcode::kMovl, {Mem{u.var}, Reg::kEax});
    emit(inc ? Opcode::kAddl : Opcode::kSubl, {Imm{1}, Reg::kEax});
    emit(Opcode::kMovl, {Reg::kEax, Mem{u.var}});
    emit(Opcode::kMovl, {Mem{u.var}, Reg::kEax});
  }

  void binary(const Binary& b) {
    const Expr& l = *b.lhs;
    const Expr& r = *b.rhs;
    if (b.op == BinaryOp::kDiv || b.op == BinaryOp::kMod) {
      division(b.op, l, r);
      return;
    }
    if (const Num* c = as_num(r)) {
      expr(l);
      immediate_op(b.op, c->value);
      return;
    }
    if (const Num* c = as_num(l)) {
      if (b.op != BinaryOp::kSub) {
        expr(r);
        immediate_op(b.op, c->value);
        return;
      }
      expr(r);
      emit(Opcode::kMovl, {Imm{c->value}, Reg::kEdx});
      emit(Opcode::kSubl, {Reg::kEax, Reg::kEdx});
      emit(Opcode::kMovl, {Reg::kEdx, Reg::kEax});
      return;
    }
    if (need(l) >= need(r)) {
      Operand h = park(l, keeps_edx(r));
      expr(r);
      switch (b.op) {
        case BinaryOp::kAdd: emit(Opcode::kAddl, {h, Reg::kEax}); break;
        case BinaryOp::kMul: emit(Opcode::kImull, {h, Reg::kEax}); break;
        default:
          emit(Opcode::kSubl, {Reg::kEax, h});
          emit(Opcode::kMovl, {h, Reg::kEax});
          break;
      }
      release_hold(h);
    } else {
      Operand h = park(r, keeps_edx(l));
      expr(l);
      Opcode op = b.op == BinaryOp::kAdd ? Opcode::kAddl : b.op == BinaryOp::kMul ? Opcode::kImull : Opcode::kSubl;
      emit(op, {h, Reg::kEax});
      release_hold(h);
    }
  }

  void immediate_op(BinaryOp op, int32_t c) {
    switch (op) {
      case BinaryOp::kAdd: emit(Opcode::kAddl, {Imm{c}, Reg::kEax}); break;
      case BinaryOp::kSub: emit(Opcode::kSubl, {Imm{c}, Reg::kEax}); break;
      default:
        if (opts_.optimize && c >= 2 && is_power_of_two(c)) {
          emit(Opcode::kSall, {Imm{log2_exact(c)}, Reg::kEax});
        } else {
          emit(Opcode::kImull, {Imm{c}, Reg::kEax, Reg::kEax});
        }
        break;
    }
  }

  void division(BinaryOp op, const Expr& l, const Expr& r) {
    const Num* c = as_num(r);
    if (c && opts_.optimize && op == BinaryOp::kDiv && c->value >= 2) {
      expr(l);
      if (is_power_of_two(c->value)) {
        int k = log2_exact(c->value);
        emit(Opcode::kMovl, {Reg::kEax, Reg::kEdx});
        emit(Opcode::kSarl, {Imm{31}, Reg::kEdx});
        emit(Opcode::kShrl, {Imm{32 - k}, Reg::kEdx});
        emit(Opcode::kAddl, {Reg::kEdx, Reg::kEax});
        emit(Opcode::kSarl, {Imm{k}, Reg::kEax});
      } else {
        SignedMagic m = signed_magic(c->value);
        Operand x = acquire();
        emit(Opcode::kMovl, {Reg::kEax, x});
        emit(Opcode::kMovl, {Imm{m.multiplier}, Reg::kEax});
        emit(Opcode::kImull, {x});
        if (m.add_fixup) emit(Opcode::kAddl, {x, Reg::kEdx});
        emit(Opcode::kSarl, {Imm{m.shift}, Reg::kEdx});
        emit(Opcode::kMovl, {x, Reg::kEax});
        emit(Opcode::kSarl, {Imm{31}, Reg::kEax});
        emit(Opcode::kSubl, {Reg::kEax, Reg::kEdx});
        emit(Opcode::kMovl, {Reg::kEdx, Reg::kEax});
        release(x);
      }
      return;
    }
    Operand d;
    bool owned = true;
    if (const Num* n = as_num(l)) {
      d = park(r, false);
      emit(Opcode::kMovl, {Imm{n->value}, Reg::kEax});
    } else if (is_leaf(r)) {
      expr(l);
      d = acquire();
      if (std::holds_alternative<Mem>(d) && std::holds_alternative<lang::Var>(r.node)) {
        release(d);
        d = leaf_operand(r);
        owned = false;
      } else {
        emit(Opcode::kMovl, {leaf_operand(r), d});
      }
    } else {
      d = park(r, false);
      expr(l);
    }
    emit(Opcode::kIdivl, {d});
    if (op == BinaryOp::kMod) emit(Opcode::kMovl, {Reg::kEdx, Reg::kEax});
    if (owned) release(d);
  }

  const CompilerOptions& opts_;
  AsmProgram& out_;
  std::vector<Reg> busy_;
  int temps_in_use_ = 0;
  int next_label_ = 0;
  int next_origin_ = 0;
  int origin_ = -1;
};

}  // namespace

Expr fold_constants(const Expr& e) {
  const auto* b = std::get_if<Binary>(&e.node);
  if (!b) return e;
  Expr l = fold_constants(*b->lhs);
  Expr r = fold_constants(*b->rhs);
  const Num* a = as_num(l);
  const Num* c = as_num(r);
  if (a && c) return lang::make_num(eval_binary(b->op, a->value, c->value));
  return reassociate(b->op, std::move(l), std::move(r));
}

AsmProgram MiniCompiler::compile_raw(const lang::Program& p) const {
  AsmProgram out;
  for (const char* d : {".text", ".globl snippet", "snippet:", "pushq rbp", "movq rsp , rbp"}) {
    out.code.push_back(make_directive(d));
  }
  Emitter(options_, out).block(p.statements);
  out.code.push_back(make_directive("popq rbp"));
  out.code.push_back(make_directive("ret"));
  return out;
}

AsmProgram MiniCompiler::compile(const lang::Program& p) const { return clean(compile_raw(p)); }

std::string MiniCompiler::describe() const {
  return std::string("minicc ") + (options_.optimize ? "-O2" : "-O0");
}

}  // namespace nmdec::minicc
