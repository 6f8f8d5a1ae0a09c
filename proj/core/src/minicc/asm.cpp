#include "nmdec/minicc/asm.hpp"

#include <array>
#include <cctype>
#include <optional>

namespace nmdec::minicc {

namespace {

constexpr std::array<std::pair<Opcode, const char*>, 17> kOpcodes = {{
    {Opcode::kMovl, "movl"}, {Opcode::kAddl, "addl"}, {Opcode::kSubl, "subl"},
    {Opcode::kImull, "imull"}, {Opcode::kIdivl, "idivl"}, {Opcode::kSall, "sall"},
    {Opcode::kSarl, "sarl"}, {Opcode::kShrl, "shrl"}, {Opcode::kCmpl, "cmpl"},
    {Opcode::kLeal, "leal"}, {Opcode::kJmp, "jmp"}, {Opcode::kJg, "jg"},
    {Opcode::kJge, "jge"}, {Opcode::kJl, "jl"}, {Opcode::kJle, "jle"},
    {Opcode::kJe, "je"}, {Opcode::kJne, "jne"},
}};

std::optional<Opcode> lookup_opcode(std::string_view name) {
  for (const auto& [op, text] : kOpcodes) {
    if (name == text) return op;
  }
  return std::nullopt;
}

std::optional<Reg> lookup_reg(std::string_view name) {
  if (name == "eax") return Reg::kEax;
  if (name == "ebx") return Reg::kEbx;
  if (name == "ecx") return Reg::kEcx;
  if (name == "edx") return Reg::kEdx;
  return std::nullopt;
}

bool is_label_name(std::string_view t) {
  if (t.size() < 3 || t[0] != '.' || t[1] != 'L') return false;
  for (size_t i = 2; i < t.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
  }
  return true;
}

std::string format_operand(const Operand& o) {
  return std::visit(Overloaded{[](Reg r) { return std::string(reg_name(r)); },
                               [](const Imm& i) { return std::to_string(i.value); },
                               [](const Mem& m) { return m.name; },
                               [](const Label& l) { return l.name; }},
                    o);
}

TokenSeq lex(std::string_view text) {
  TokenSeq out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(cur);
    cur.clear();
  };
  for (char c : text) {
    if (c == '\n' || c == ';') {
      flush();
      out.emplace_back(";");
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (c == ',' || c == '(' || c == ')') {
      flush();
      out.emplace_back(1, c);
    } else if ((c == '%' || c == '$') && cur.empty()) {
      // AT&T sigils carry no information in this dialect.
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

Operand parse_operand(const TokenSeq& toks, const std::string& context) {
  if (toks.size() != 1) throw AsmParseError("malformed operand in '" + context + "'");
  const std::string& t = toks[0];
  if (auto r = lookup_reg(t)) return *r;
  if (auto v = parse_int32(t)) return Imm{*v};
  if (is_label_name(t)) return Label{t};
  if (is_identifier(t) || is_temp(t)) return Mem{t};
  throw AsmParseError("unknown operand '" + t + "' in '" + context + "'");
}

Instruction parse_group(const TokenSeq& g) {
  std::string context = join(g);
  if ((g.size() == 1 && g[0].size() > 1 && g[0].back() == ':' &&
       is_label_name(std::string_view(g[0]).substr(0, g[0].size() - 1))) ||
      (g.size() == 2 && g[1] == ":" && is_label_name(g[0]))) {
    std::string name = g[0].back() == ':' ? g[0].substr(0, g[0].size() - 1) : g[0];
    return make_label(name);
  }
  auto op = lookup_opcode(g[0]);
  if (!op) return make_directive(context);

  std::vector<TokenSeq> parts(1);
  for (size_t i = 1; i < g.size(); ++i) {
    if (g[i] == ",") {
      parts.emplace_back();
    } else {
      parts.back().push_back(g[i]);
    }
  }
  if (parts.size() == 1 && parts[0].empty()) parts.clear();

  Instruction ins;
  ins.op = *op;
  if (*op == Opcode::kLeal) {
    if (parts.size() != 2) throw AsmParseError("leal expects 2 operands: '" + context + "'");
    const TokenSeq& m = parts[0];
    // d ( base )  or  ( base )
    size_t open = m.size() == 4 ? 1 : 0;
    if (!((m.size() == 4 || m.size() == 3) && m[open] == "(" && m[open + 2] == ")")) {
      throw AsmParseError("malformed leal address: '" + context + "'");
    }
    int32_t disp = 0;
    if (open == 1) {
      auto d = parse_int32(m[0]);
      if (!d) throw AsmParseError("malformed leal displacement: '" + context + "'");
      disp = *d;
    }
    auto base = lookup_reg(m[open + 1]);
    if (!base) throw AsmParseError("leal base must be a register: '" + context + "'");
    ins.operands = {Imm{disp}, *base, parse_operand(parts[1], context)};
    return ins;
  }
  for (const auto& part : parts) ins.operands.push_back(parse_operand(part, context));

  size_t n = ins.operands.size();
  bool ok = true;
  switch (*op) {
    case Opcode::kImull: ok = n >= 1 && n <= 3; break;
    case Opcode::kIdivl: ok = n == 1; break;
    case Opcode::kJmp: case Opcode::kJg: case Opcode::kJge: case Opcode::kJl:
    case Opcode::kJle: case Opcode::kJe: case Opcode::kJne:
      ok = n == 1 && std::holds_alternative<Label>(ins.operands[0]);
      break;
    default: ok = n == 2; break;
  }
  if (ok && !is_jump(*op)) {
    for (const auto& o : ins.operands) ok = ok && !std::holds_alternative<Label>(o);
  }
  if (!ok) throw AsmParseError("bad operands for " + g[0] + ": '" + context + "'");
  return ins;
}

}  // namespace

const char* reg_name(Reg r) {
  switch (r) {
    case Reg::kEax: return "eax";
    case Reg::kEbx: return "ebx";
    case Reg::kEcx: return "ecx";
    case Reg::kEdx: return "edx";
  }
  return "?";
}

const char* opcode_name(Opcode op) {
  for (const auto& [o, text] : kOpcodes) {
    if (o == op) return text;
  }
  return op == Opcode::kLabel ? "label" : "directive";
}

bool is_jump(Opcode op) { return op >= Opcode::kJmp && op <= Opcode::kJne; }
bool is_conditional_jump(Opcode op) { return op > Opcode::kJmp && op <= Opcode::kJne; }

std::string temp_name(int index) { return "@t" + std::to_string(index); }
bool is_temp(std::string_view name) { return name.size() > 2 && name[0] == '@' && name[1] == 't'; }

Instruction make_instr(Opcode op, std::vector<Operand> operands, int origin) {
  Instruction ins;
  ins.op = op;
  ins.operands = std::move(operands);
  ins.origin = origin;
  return ins;
}

Instruction make_label(const std::string& name) {
  Instruction ins;
  ins.op = Opcode::kLabel;
  ins.operands = {Label{name}};
  return ins;
}

Instruction make_directive(std::string raw) {
  Instruction ins;
  ins.op = Opcode::kDirective;
  ins.raw = std::move(raw);
  return ins;
}

std::string format_instruction(const Instruction& ins) {
  switch (ins.op) {
    case Opcode::kDirective: return ins.raw;
    case Opcode::kLabel: return std::get<Label>(ins.operands.at(0)).name + ":";
    case Opcode::kLeal:
      return "leal " + format_operand(ins.operands.at(0)) + " ( " + format_operand(ins.operands.at(1)) +
             " ) , " + format_operand(ins.operands.at(2));
    default: break;
  }
  std::string out = opcode_name(ins.op);
  for (size_t i = 0; i < ins.operands.size(); ++i) {
    out += i ? " , " : " ";
    out += format_operand(ins.operands[i]);
  }
  return out;
}

std::string format_asm(const AsmProgram& p) {
  std::string out;
  for (const auto& ins : p.code) {
    if (!out.empty()) out += ' ';
    out += format_instruction(ins);
    out += " ;";
  }
  return out;
}

TokenSeq asm_tokens(const AsmProgram& p) { return split_ws(format_asm(p)); }

AsmProgram parse_asm_tokens(const TokenSeq& tokens) {
  AsmProgram p;
  TokenSeq group;
  auto finish = [&] {
    if (!group.empty()) p.code.push_back(parse_group(group));
    group.clear();
  };
  for (const auto& t : tokens) {
    if (t == ";") {
      finish();
    } else {
      group.push_back(t);
    }
  }
  finish();
  return p;
}

AsmProgram parse_asm(std::string_view text) { return parse_asm_tokens(lex(text)); }

AsmProgram clean(const AsmProgram& p) {
  AsmProgram out;
  for (const auto& ins : p.code) {
    if (ins.op != Opcode::kDirective) out.code.push_back(ins);
  }
  return out;
}

}  // namespace nmdec::minicc
