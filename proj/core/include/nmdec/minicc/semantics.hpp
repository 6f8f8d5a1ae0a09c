#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nmdec/minicc/asm.hpp"

namespace nmdec::minicc {

struct Location {
  enum class Kind { kReg, kMem, kFlags };
  Kind kind = Kind::kFlags;
  std::string name;
  auto operator<=>(const Location&) const = default;
  static Location reg(Reg r) { return {Kind::kReg, reg_name(r)}; }
  static Location mem(std::string n) { return {Kind::kMem, std::move(n)}; }
  static Location flags() { return {Kind::kFlags, "flags"}; }
};

// A read of a location or an immediate, tagged with the operand role it
// plays. Commutative operands share role 0.
struct Use {
  std::optional<Location> loc;
  std::optional<int32_t> imm;
  int port = 0;
};

struct InstructionSemantics {
  std::vector<Use> uses;
  std::vector<Location> defs;
  // Second result written by idivl (remainder) and one-operand imull (high
  // half); it gets its own PDG node.
  std::optional<Location> secondary_def;
  bool is_copy = false;  // movl between registers, or an immediate into a register
  bool is_load = false;  // movl from memory into a register
  bool is_store = false; // movl into memory
  bool is_branch = false;
  bool is_conditional = false;
  std::string target;    // label name for jumps
  std::string op_class;  // opcode name plus arity, e.g. "imull/1"
};

// Def/use model for the bundled dialect.
InstructionSemantics semantics(const Instruction& ins);

}  // namespace nmdec::minicc
