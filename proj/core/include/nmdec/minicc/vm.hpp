#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "nmdec/lang/ast.hpp"
#include "nmdec/minicc/asm.hpp"

namespace nmdec::minicc {

using Store = std::map<std::string, int32_t>;

constexpr uint64_t kDefaultFuel = 1'000'000;

class FuelExhausted : public std::runtime_error {
 public:
  FuelExhausted() : std::runtime_error("fuel exhausted") {}
};

// 32-bit two's complement semantics shared by the VM and the interpreter.
// Division and remainder by zero yield 0; INT_MIN / -1 wraps.
int32_t eval_binary(lang::BinaryOp op, int32_t a, int32_t b);

// Executes cleaned assembly. Registers start at 0, variables absent from
// the store read as 0. Spill slots are dropped from the result.
Store run_vm(const AsmProgram& p, Store store, uint64_t fuel = kDefaultFuel);

// Reference interpreter for source programs, evaluating left to right.
// Fuel is charged per statement and per condition evaluation.
Store interpret_source(const lang::Program& p, Store store, uint64_t fuel = kDefaultFuel);

}  // namespace nmdec::minicc
