#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nmdec/util/box.hpp"
#include "nmdec/util/tokens.hpp"

namespace nmdec::minicc {

enum class Reg { kEax, kEbx, kEcx, kEdx };

struct Imm {
  int32_t value = 0;
  bool operator==(const Imm&) const = default;
};
// A named memory location: a program variable or a compiler spill slot.
struct Mem {
  std::string name;
  bool operator==(const Mem&) const = default;
};
struct Label {
  std::string name;  // ".L0"
  bool operator==(const Label&) const = default;
};

using Operand = std::variant<Reg, Imm, Mem, Label>;

enum class Opcode {
  kMovl, kAddl, kSubl, kImull, kIdivl, kSall, kSarl, kShrl, kCmpl, kLeal,
  kJmp, kJg, kJge, kJl, kJle, kJe, kJne,
  kLabel,
  kDirective,  // prologue/epilogue/assembler directive; removed by clean()
};

struct Instruction {
  Opcode op = Opcode::kDirective;
  // AT&T order: sources first, destination last. leal is {disp, base, dst}.
  std::vector<Operand> operands;
  std::string raw;   // text of a directive
  int origin = -1;   // index of the source statement, -1 when unknown

  bool operator==(const Instruction& o) const { return op == o.op && operands == o.operands && raw == o.raw; }
};

struct AsmProgram {
  std::vector<Instruction> code;
  bool operator==(const AsmProgram&) const = default;
};

class AsmParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structurally invalid assembly, e.g. a jump to an undefined label.
class MalformedProgram : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const char* reg_name(Reg r);
const char* opcode_name(Opcode op);
bool is_jump(Opcode op);
bool is_conditional_jump(Opcode op);

// Spill slots use a name no source identifier can take.
std::string temp_name(int index);
bool is_temp(std::string_view name);

Instruction make_instr(Opcode op, std::vector<Operand> operands, int origin = -1);
Instruction make_label(const std::string& name);
Instruction make_directive(std::string raw);

std::string format_instruction(const Instruction& ins);
// One line, every instruction followed by " ;".
std::string format_asm(const AsmProgram& p);
TokenSeq asm_tokens(const AsmProgram& p);
// Accepts the ';'-separated listing with arbitrary whitespace, optional
// '%'/'$' sigils, and ".L0 :" label spelling.
AsmProgram parse_asm(std::string_view text);
AsmProgram parse_asm_tokens(const TokenSeq& tokens);

// Drops directives (prologue, epilogue, sections). Idempotent.
AsmProgram clean(const AsmProgram& p);

}  // namespace nmdec::minicc
