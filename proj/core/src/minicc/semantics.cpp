#include "nmdec/minicc/semantics.hpp"

namespace nmdec::minicc {

namespace {

Use use_of(const Operand& o, int port) {
  Use u;
  u.port = port;
  if (const auto* r = std::get_if<Reg>(&o)) u.loc = Location::reg(*r);
  if (const auto* m = std::get_if<Mem>(&o)) u.loc = Location::mem(m->name);
  if (const auto* i = std::get_if<Imm>(&o)) u.imm = i->value;
  return u;
}

Location loc_of(const Operand& o) {
  if (const auto* r = std::get_if<Reg>(&o)) return Location::reg(*r);
  return Location::mem(std::get<Mem>(o).name);
}

}  // namespace

InstructionSemantics semantics(const Instruction& ins) {
  InstructionSemantics s;
  s.op_class = opcode_name(ins.op);
  const auto& ops = ins.operands;
  switch (ins.op) {
    case Opcode::kMovl: {
      s.uses.push_back(use_of(ops[0], 0));
      s.defs.push_back(loc_of(ops[1]));
      if (std::holds_alternative<Mem>(ops[1])) {
        s.is_store = true;
        s.op_class = "store";
      } else if (std::holds_alternative<Mem>(ops[0])) {
        s.is_load = true;
        s.op_class = "load";
      } else {
        s.is_copy = true;
      }
      break;
    }
    case Opcode::kAddl:
      s.uses = {use_of(ops[0], 0), use_of(ops[1], 0)};
      s.defs = {loc_of(ops[1])};
      break;
    case Opcode::kSubl:
    case Opcode::kSall:
    case Opcode::kSarl:
    case Opcode::kShrl:
      s.uses = {use_of(ops[0], 0), use_of(ops[1], 1)};
      s.defs = {loc_of(ops[1])};
      break;
    case Opcode::kImull:
      s.op_class = "imull/" + std::to_string(ops.size());
      if (ops.size() == 1) {
        s.uses = {use_of(ops[0], 0), use_of(Reg::kEax, 0)};
        s.defs = {Location::reg(Reg::kEax)};
        s.secondary_def = Location::reg(Reg::kEdx);
      } else if (ops.size() == 2) {
        s.uses = {use_of(ops[0], 0), use_of(ops[1], 0)};
        s.defs = {loc_of(ops[1])};
      } else {
        s.uses = {use_of(ops[0], 0), use_of(ops[1], 0)};
        s.defs = {loc_of(ops[2])};
      }
      break;
    case Opcode::kIdivl:
      s.uses = {use_of(ops[0], 0), use_of(Reg::kEax, 1)};
      s.defs = {Location::reg(Reg::kEax)};
      s.secondary_def = Location::reg(Reg::kEdx);
      break;
    case Opcode::kCmpl:
      s.uses = {use_of(ops[0], 0), use_of(ops[1], 1)};
      s.defs = {Location::flags()};
      break;
    case Opcode::kLeal:
      s.uses = {use_of(ops[0], 0), use_of(ops[1], 1)};
      s.defs = {loc_of(ops[2])};
      break;
    case Opcode::kJmp:
      s.is_branch = true;
      s.target = std::get<Label>(ops[0]).name;
      break;
    case Opcode::kJg: case Opcode::kJge: case Opcode::kJl:
    case Opcode::kJle: case Opcode::kJe: case Opcode::kJne: {
      s.is_branch = true;
      s.is_conditional = true;
      s.target = std::get<Label>(ops[0]).name;
      Use u;
      u.loc = Location::flags();
      s.uses.push_back(u);
      break;
    }
    case Opcode::kLabel:
    case Opcode::kDirective:
      break;
  }
  return s;
}

}  // namespace nmdec::minicc
