#pragma once

#include <string>

#include "nmdec/lang/ast.hpp"
#include "nmdec/minicc/asm.hpp"
#include "nmdec/minicc/semantics.hpp"

namespace nmdec::minicc {

struct CompilerOptions {
  bool optimize = true;  // constant folding, strength reduction, relation tightening
};

// The pipeline only needs a deterministic compiler and its semantics model.
class Compiler {
 public:
  virtual ~Compiler() = default;
  virtual AsmProgram compile(const lang::Program& p) const = 0;
  virtual InstructionSemantics instruction_semantics(const Instruction& ins) const {
    return semantics(ins);
  }
  virtual std::string describe() const = 0;
};

class MiniCompiler final : public Compiler {
 public:
  explicit MiniCompiler(CompilerOptions options = {}) : options_(options) {}

  // Cleaned output: clean(compile_raw(p)).
  AsmProgram compile(const lang::Program& p) const override;
  // Full listing with function prologue and epilogue.
  AsmProgram compile_raw(const lang::Program& p) const;
  std::string describe() const override;
  const CompilerOptions& options() const { return options_; }

 private:
  CompilerOptions options_;
};

// Folds constant subtrees and reassociates constant factors/addends of
// nested + and *. Exposed for tests.
lang::Expr fold_constants(const lang::Expr& e);

}  // namespace nmdec::minicc
