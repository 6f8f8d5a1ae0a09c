#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nmdec/lang/ast.hpp"
#include "nmdec/minicc/compiler.hpp"
#include "nmdec/pdg/isomorphism.hpp"
#include "nmdec/pdg/pdg.hpp"

namespace nmdec::templatefill {

// A numeric literal of the template, identified by its index in token order.
struct Slot {
  int id = 0;
  int32_t initial = 0;
};

struct Template {
  lang::Program program;
  std::vector<Slot> slots;

  static Template from_program(lang::Program p);
};

// A constant of the recompiled graph whose value differs from the input
// constant it is matched to.
struct Mismatch {
  int recompiled_node = -1;
  int input_node = -1;
  int32_t current = 0;
  int32_t target = 0;
  bool operator==(const Mismatch&) const = default;
};

// iso maps recompiled nodes to input nodes. Ordered by recompiled node id.
std::vector<Mismatch> find_mismatches(const pdg::Isomorphism& iso, const pdg::Pdg& input,
                                      const pdg::Pdg& recompiled);

struct NodeChange {
  int32_t before = 0;
  int32_t after = 0;
};

struct SlotInfluence {
  int32_t probe = 0;                  // value that kept the structure
  std::map<int, NodeChange> changes;  // recompiled node -> values at initial/probe
  std::set<int> coupled;              // nodes moved only by later probes of a magic multiplier
};

struct InfluenceMap {
  std::map<int, SlotInfluence> slots;  // slot id -> influence
  std::set<int> rigid;                 // slots whose every probe broke the structure
};

struct CompileBudget {
  int limit = 64;
  int used = 0;
  bool exhausted() const { return used >= limit; }
};

// Perturbs each slot in turn: value+1 first, then further powers of two for
// power-of-two values (or +2, -1, 2x otherwise). Slots feeding a magic
// multiplier run every probe and record the extra nodes as coupled.
InfluenceMap probe_influence(const Template& t, const minicc::Compiler& compiler, CompileBudget& budget);

enum class Pattern { kIdentity, kLinear, kPow2Exponent, kConditionOffset, kMagicDivisor };

const char* to_string(Pattern p);

struct Candidate {
  int32_t value = 0;
  Pattern pattern = Pattern::kIdentity;
};

constexpr size_t kMaxCandidates = 8;

// Source values that may compile to m.target, chosen by what the input
// constant feeds. `probe` adds the integer solution of the probed linear
// relation, when one exists.
std::vector<Candidate> invert_candidates(const Mismatch& m, const pdg::Pdg& input, int32_t slot_value = 0,
                                         const SlotInfluence* probe = nullptr);

struct FillFailure {
  enum class Reason { kNotIsomorphic, kUnresolved, kTimeout };
  Reason reason = Reason::kUnresolved;
  std::vector<Mismatch> unresolved;
};

const char* to_string(FillFailure::Reason r);

struct FillOptions {
  int max_compiles = 64;
  pdg::IsoOptions iso{};
};

struct FillResult {
  std::optional<lang::Program> program;
  FillFailure failure;
  std::vector<std::string> trace;  // one line per repair step
  int compiles = 0;

  bool ok() const { return program.has_value(); }
};

// Repairs the template's constants so that its compilation matches `input`
// with equal constants. Each tentative value is checked by recompiling.
FillResult fill(const Template& t, const minicc::AsmProgram& input, const minicc::Compiler& compiler,
                const FillOptions& options = {});

}  // namespace nmdec::templatefill
