#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nmdec/lang/ast.hpp"

namespace nmdec::lang {

// Level 1: numeric assignments; 2: variable assignments; 3: ++/--;
// 4: binary operators (no ++/--); 5: both; 6: if; 7: while; 8: nesting.
constexpr int kMinLevel = 1;
constexpr int kMaxLevel = 8;

struct GrammarConfig {
  int level = 8;
  int max_statements = 5;
  int max_expr_depth = 3;  // leaves count as depth 1
  int max_number = 100;    // literals drawn from [1, max_number]
  int num_variables = 15;  // pool X0..X{n-1}
  int max_nesting = 2;     // block depth at level 8

  void validate() const;  // throws std::invalid_argument
};

std::vector<Identifier> variable_pool(const GrammarConfig& cfg);

// Random programs from the level grammar. While loops are generated in a
// terminating shape: the condition compares a counter that the body steps
// towards exit and that nothing else in the body modifies.
class Sampler {
 public:
  Sampler(GrammarConfig cfg, uint64_t seed);

  Program sample();
  const GrammarConfig& config() const { return cfg_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  struct Scope;

  std::vector<Statement> sample_block(int count, int nesting, Scope& scope);
  Statement sample_statement(int nesting, Scope& scope);
  Statement sample_assignment(Scope& scope);
  Statement sample_branch(int nesting, Scope& scope);
  Statement sample_loop(int nesting, Scope& scope);
  Condition sample_condition(Scope& scope);
  Expr sample_expr(int depth, Scope& scope, bool allow_unary);
  Expr sample_leaf(Scope& scope, bool allow_unary);
  Identifier pick_var(Scope& scope);
  int32_t pick_number();
  int pick_count(int max);
  bool coin(double p);
  int condition_start_depth() const;

  GrammarConfig cfg_;
  std::vector<Identifier> pool_;
  std::mt19937_64 rng_;
};

// Lowest level whose constructs cover p.
int classify_level(const Program& p);

}  // namespace nmdec::lang
