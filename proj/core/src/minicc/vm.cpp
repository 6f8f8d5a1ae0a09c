#include "nmdec/minicc/vm.hpp"

#include <array>
#include <climits>
#include <unordered_map>

namespace nmdec::minicc {

int32_t eval_binary(lang::BinaryOp op, int32_t a, int32_t b) {
  const auto ua = static_cast<uint32_t>(a);
  const auto ub = static_cast<uint32_t>(b);
  switch (op) {
    case lang::BinaryOp::kAdd: return static_cast<int32_t>(ua + ub);
    case lang::BinaryOp::kSub: return static_cast<int32_t>(ua - ub);
    case lang::BinaryOp::kMul: return static_cast<int32_t>(ua * ub);
    case lang::BinaryOp::kDiv:
      if (b == 0) return 0;
      if (a == INT32_MIN && b == -1) return INT32_MIN;
      return a / b;
    case lang::BinaryOp::kMod:
      if (b == 0 || (a == INT32_MIN && b == -1)) return 0;
      return a % b;
  }
  return 0;
}

namespace {

class Machine {
 public:
  Machine(const AsmProgram& p, Store store) : p_(p), store_(std::move(store)) {
    for (size_t i = 0; i < p.code.size(); ++i) {
      if (p.code[i].op == Opcode::kLabel) labels_[std::get<Label>(p.code[i].operands[0]).name] = i;
    }
  }

  Store run(uint64_t fuel) {
    size_t pc = 0;
    while (pc < p_.code.size()) {
      if (fuel-- == 0) throw FuelExhausted();
      pc = step(pc);
    }
    for (auto it = store_.begin(); it != store_.end();) {
      it = is_temp(it->first) ? store_.erase(it) : std::next(it);
    }
    return store_;
  }

 private:
  int32_t& reg(Reg r) { return regs_[static_cast<size_t>(r)]; }

  int32_t read(const Operand& o) {
    if (const auto* r = std::get_if<Reg>(&o)) return reg(*r);
    if (const auto* i = std::get_if<Imm>(&o)) return i->value;
    if (const auto* m = std::get_if<Mem>(&o)) {
      auto it = store_.find(m->name);
      return it == store_.end() ? 0 : it->second;
    }
    throw MalformedProgram("label used as a value");
  }

  void write(const Operand& o, int32_t v) {
    if (const auto* r = std::get_if<Reg>(&o)) {
      reg(*r) = v;
    } else if (const auto* m = std::get_if<Mem>(&o)) {
      store_[m->name] = v;
    } else {
      throw MalformedProgram("invalid destination operand");
    }
  }

  size_t target(const Instruction& ins) {
    const auto& name = std::get<Label>(ins.operands[0]).name;
    auto it = labels_.find(name);
    if (it == labels_.end()) throw MalformedProgram("jump to undefined label " + name);
    return it->second;
  }

  bool flag_holds(Opcode op) const {
    // cmpl a, b compares b against a.
    int32_t b = cmp_b_, a = cmp_a_;
    switch (op) {
      case Opcode::kJg: return b > a;
      case Opcode::kJge: return b >= a;
      case Opcode::kJl: return b < a;
      case Opcode::kJle: return b <= a;
      case Opcode::kJe: return b == a;
      case Opcode::kJne: return b != a;
      default: return true;
    }
  }

  size_t step(size_t pc) {
    const Instruction& ins = p_.code[pc];
    const auto& o = ins.operands;
    using lang::BinaryOp;
    switch (ins.op) {
      case Opcode::kMovl: write(o[1], read(o[0])); break;
      case Opcode::kAddl: write(o[1], eval_binary(BinaryOp::kAdd, read(o[1]), read(o[0]))); break;
      case Opcode::kSubl: write(o[1], eval_binary(BinaryOp::kSub, read(o[1]), read(o[0]))); break;
      case Opcode::kImull:
        if (o.size() == 1) {
          int64_t prod = static_cast<int64_t>(reg(Reg::kEax)) * read(o[0]);
          reg(Reg::kEax) = static_cast<int32_t>(static_cast<uint32_t>(static_cast<uint64_t>(prod)));
          reg(Reg::kEdx) = static_cast<int32_t>(static_cast<uint32_t>(static_cast<uint64_t>(prod) >> 32));
        } else if (o.size() == 2) {
          write(o[1], eval_binary(BinaryOp::kMul, read(o[1]), read(o[0])));
        } else {
          write(o[2], eval_binary(BinaryOp::kMul, read(o[1]), read(o[0])));
        }
        break;
      case Opcode::kIdivl: {
        int32_t divisor = read(o[0]);
        int32_t dividend = reg(Reg::kEax);
        reg(Reg::kEax) = eval_binary(BinaryOp::kDiv, dividend, divisor);
        reg(Reg::kEdx) = eval_binary(BinaryOp::kMod, dividend, divisor);
        break;
      }
      case Opcode::kSall:
        write(o[1], static_cast<int32_t>(static_cast<uint32_t>(read(o[1])) << (read(o[0]) & 31)));
        break;
      case Opcode::kSarl: write(o[1], read(o[1]) >> (read(o[0]) & 31)); break;
      case Opcode::kShrl:
        write(o[1], static_cast<int32_t>(static_cast<uint32_t>(read(o[1])) >> (read(o[0]) & 31)));
        break;
      case Opcode::kCmpl:
        cmp_a_ = read(o[0]);
        cmp_b_ = read(o[1]);
        break;
      case Opcode::kLeal: write(o[2], eval_binary(BinaryOp::kAdd, read(o[1]), read(o[0]))); break;
      case Opcode::kJmp: return target(ins);
      case Opcode::kJg: case Opcode::kJge: case Opcode::kJl:
      case Opcode::kJle: case Opcode::kJe: case Opcode::kJne:
        if (flag_holds(ins.op)) return target(ins);
        break;
      case Opcode::kLabel:
      case Opcode::kDirective:
        break;
    }
    return pc + 1;
  }

  const AsmProgram& p_;
  Store store_;
  std::array<int32_t, 4> regs_{};
  int32_t cmp_a_ = 0, cmp_b_ = 0;
  std::unordered_map<std::string, size_t> labels_;
};

class Interpreter {
 public:
  Interpreter(Store store, uint64_t fuel) : store_(std::move(store)), fuel_(fuel) {}

  void block(const std::vector<lang::Statement>& body) {
    for (const auto& s : body) statement(s);
  }
  Store result() { return std::move(store_); }

 private:
  void charge() {
    if (fuel_ == 0) throw FuelExhausted();
    --fuel_;
  }

  int32_t& var(const std::string& name) { return store_[name]; }

  int32_t eval(const lang::Expr& e) {
    return std::visit(
        Overloaded{[&](const lang::Var& v) {
                     auto it = store_.find(v.name);
                     return it == store_.end() ? 0 : it->second;
                   },
                   [](const lang::Num& n) { return n.value; },
                   [&](const lang::Binary& b) {
                     int32_t l = eval(*b.lhs);
                     int32_t r = eval(*b.rhs);
                     return eval_binary(b.op, l, r);
                   },
                   [&](const lang::Unary& u) {
                     int32_t& slot = var(u.var);
                     int32_t old = slot;
                     slot = eval_binary(u.op == lang::UnaryOp::kInc ? lang::BinaryOp::kAdd : lang::BinaryOp::kSub, old, 1);
                     return u.fixity == lang::Fixity::kPrefix ? slot : old;
                   }},
        e.node);
  }

  bool test(const lang::Condition& c) {
    charge();
    int32_t l = eval(c.lhs);
    int32_t r = eval(c.rhs);
    switch (c.rel) {
      case lang::Relation::kGt: return l > r;
      case lang::Relation::kGe: return l >= r;
      case lang::Relation::kLt: return l < r;
      case lang::Relation::kLe: return l <= r;
      case lang::Relation::kEq: return l == r;
      case lang::Relation::kNe: return l != r;
    }
    return false;
  }

  void statement(const lang::Statement& s) {
    charge();
    std::visit(Overloaded{[&](const lang::Assignment& a) {
                            int32_t v = eval(a.value);
                            var(a.target) = v;
                          },
                          [&](const lang::Branch& b) {
                            if (test(b.cond)) {
                              block(b.then_body);
                            } else {
                              block(b.else_body);
                            }
                          },
                          [&](const lang::Loop& l) {
                            while (test(l.cond)) block(l.body);
                          }},
               s.node);
  }

  Store store_;
  uint64_t fuel_;
};

}  // namespace

Store run_vm(const AsmProgram& p, Store store, uint64_t fuel) { return Machine(p, std::move(store)).run(fuel); }

Store interpret_source(const lang::Program& p, Store store, uint64_t fuel) {
  Interpreter it(std::move(store), fuel);
  it.block(p.statements);
  return it.result();
}

}  // namespace nmdec::minicc
