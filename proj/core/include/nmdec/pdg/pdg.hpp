#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nmdec/minicc/asm.hpp"
#include "nmdec/minicc/compiler.hpp"

namespace nmdec::pdg {

enum class NodeKind { kVar, kConst, kOp };

// Edge ports. Operand roles come from the semantics model (0 for
// commutative operands); the rest tie values to variables and results.
constexpr int kPortDefines = 2;   // store -> the variable it writes
constexpr int kPortFinal = 3;     // definition live at exit -> its variable
constexpr int kPortSecondary = 4; // idivl/imull -> remainder/high-half node
constexpr int kPortControl = 5;   // used for control-edge self loops

struct Node {
  NodeKind kind = NodeKind::kOp;
  std::string label;      // variable name or opcode class
  int32_t value = 0;      // constant value
  int instruction = -1;   // defining instruction, -1 for variables
  int origin = -1;        // source statement of that instruction
  uint32_t self_loops = 0;  // bit p: edge n -> n on port p
};

struct Edge {
  int from = 0;
  int to = 0;
  int port = 0;
  auto operator<=>(const Edge&) const = default;
};

// One variable node per program variable serves as both the initial value
// and the exit sink, which keeps variable identity in the graph. Copies
// between registers collapse into edges. Self loops are node flags.
struct Pdg {
  std::vector<Node> nodes;
  std::vector<Edge> data;     // sorted, unique, no self loops
  std::vector<Edge> control;  // port 0, sorted, unique, no self loops

  int find_var(const std::string& name) const;  // -1 if absent
};

// Throws MalformedProgram for jumps to undefined or duplicated labels.
Pdg build_pdg(const minicc::AsmProgram& a, const minicc::Compiler& compiler);
Pdg build_pdg(const minicc::AsmProgram& a);  // bundled dialect semantics

std::string export_dot(const Pdg& g);
std::string describe(const Node& n);

}  // namespace nmdec::pdg
