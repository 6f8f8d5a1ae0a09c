#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nmdec/lang/ast.hpp"
#include "nmdec/minicc/compiler.hpp"
#include "nmdec/util/tokens.hpp"

namespace nmdec::rules {

bool is_placeholder(const std::string& token);

// Placeholder name (without a trailing ':') -> concrete token.
using Binding = std::map<std::string, std::string>;

// Placeholders are X_i (variables), N_i (numbers) and L_i (labels, L_i: at
// the definition), numbered from 1 in order of first use on the low side.
// A number derived from a source literal by anything but identity (shift
// amounts, tightened comparisons) keeps its placeholder on the low side but
// is pinned to its value in `fixed`; the source literal stays concrete.
struct Rule {
  TokenSeq low_pattern;
  TokenSeq high_pattern;
  Binding fixed;
  size_t support = 0;
  bool operator==(const Rule&) const = default;
};

class CorrespondenceUnknown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Abstraction {
  TokenSeq low;
  TokenSeq high;
  Binding fixed;
  Binding binding;
};

// Replaces variables, labels and numbers by placeholders. Which source
// literal an assembly number comes from is found by recompiling with each
// literal changed in turn. Numbers that move with no literal (or only with
// literals whose every change alters the listing's shape) stay concrete.
// Throws CorrespondenceUnknown when an assembly number depends on several
// source literals or the recompilation differs from the input.
Abstraction abstract_pair(const minicc::AsmProgram& input, const lang::Program& decompiled,
                          const minicc::Compiler& compiler);

using SuccessPair = std::pair<minicc::AsmProgram, lang::Program>;

struct Extraction {
  std::vector<Rule> rules;  // by support, descending
  size_t skipped = 0;       // pairs without a known correspondence
};

Extraction extract_rules(const std::vector<SuccessPair>& successes, const minicc::Compiler& compiler);

// Binding under which `pattern` equals `tokens`; distinct X placeholders
// bind distinct variables.
std::optional<Binding> match(const TokenSeq& pattern, const TokenSeq& tokens);
std::optional<Binding> match(const Rule& r, const TokenSeq& tokens);  // also honours r.fixed
TokenSeq instantiate(const TokenSeq& pattern, const Binding& binding);

std::optional<lang::Program> apply_rule(const Rule& r, const minicc::AsmProgram& a);

class RulesIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One {"low", "high", "fixed", "support"} object per line.
void write_jsonl(const std::vector<Rule>& rules, const std::filesystem::path& path);
std::vector<Rule> read_jsonl(const std::filesystem::path& path);

}  // namespace nmdec::rules
