#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmdec/canonical/pipeline.hpp"
#include "nmdec/driver/dataset.hpp"
#include "nmdec/lang/grammar.hpp"
#include "nmdec/minicc/compiler.hpp"
#include "nmdec/nmt/model.hpp"
#include "nmdec/templatefill/templatefill.hpp"

namespace nmdec::driver {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoopConfig {
  size_t initial_train = 2000;
  size_t per_iter_train = 1000;
  size_t val_target = 200;
  double keep_fraction = 0.5;      // survival chance of each older random sample
  double success_threshold = 95;   // percent
  int patience_iters = 10;         // iterations without a new success
  std::optional<int> iteration_limit;
  int beam = 5;
  lang::GrammarConfig grammar{};
  nmt::Hyper hyper = nmt::Hyper::desk();  // hyper.seed is derived from `seed`
  templatefill::FillOptions fill{};
  uint64_t seed = 1;
  int threads = 1;

  static LoopConfig desk();
  static LoopConfig paper();
  void validate() const;  // throws ConfigError
};

struct IterationStats {
  int iteration = 0;  // 0 is the translate-only pass of a preloaded model
  int epochs = 0;
  long batches = 0;
  double train_seconds = 0;
  double translate_seconds = 0;
  double val_exact_match = 0;
  size_t train_size = 0;
  size_t val_size = 0;
  size_t pending_before = 0;
  size_t pending = 0;
  size_t new_successes = 0;
  size_t successes = 0;  // cumulative
  double percent = 0;    // cumulative, of all inputs
  size_t new_failures = 0;
  // Furthest phase reached by inputs still pending after this iteration.
  size_t failed_parse = 0;
  size_t failed_structure = 0;
  size_t failed_fill = 0;
  size_t failed_timeout = 0;
};

enum class StopReason { kThresholdMet, kNoProgress, kLimit };
const char* to_string(StopReason r);

// Threshold, then no progress, then iteration limit.
std::optional<StopReason> check_stop(const std::vector<IterationStats>& stats, const LoopConfig& cfg);

// Older random pairs survive with probability keep_fraction; failures are
// all added; then per_iter_train fresh pairs. Pairs whose low side is in
// `exclude` (validation and test inputs) are never added.
Dataset extend_training(const Dataset& train, const Dataset& failures, const LoopConfig& cfg,
                        PairGenerator& generator, const KeySet& exclude, std::mt19937_64& rng);

enum class Phase { kSolved, kParse, kStructure, kFill, kTimeout };
const char* to_string(Phase p);

struct HypothesisReport {
  TokenSeq tokens;
  double score = 0;
  std::optional<lang::Program> program;  // absent when the tokens do not parse
  bool duplicate = false;                // same program as an earlier hypothesis
  Phase phase = Phase::kParse;
  std::vector<std::string> fill_trace;
};

struct SolveOutcome {
  std::optional<lang::Program> solution;
  Phase phase = Phase::kParse;  // kSolved, or the furthest phase any hypothesis reached
  int solved_by = -1;           // hypothesis index
  canonical::CanonicalInput canonical;
  std::vector<HypothesisReport> hypotheses;
  // Parsed hypotheses that failed; each compiles to a fresh training pair.
  std::vector<lang::Program> recompilable;
};

// Checks hypotheses in order: post-order parse, structural match, fill.
SolveOutcome solve_hypotheses(const std::vector<nmt::Hypothesis>& hyps, const minicc::AsmProgram& input,
                              const minicc::Compiler& compiler, const templatefill::FillOptions& fill = {});
SolveOutcome solve(const nmt::Model& model, const minicc::AsmProgram& input, const minicc::Compiler& compiler,
                   int beam, const templatefill::FillOptions& fill = {});

// Recompiles p and requires an exact graph match with the input.
bool verify_success(const lang::Program& p, const minicc::AsmProgram& input, const minicc::Compiler& compiler);

struct Success {
  size_t input = 0;
  lang::Program program;
  int iteration = 0;
};

struct LoopHooks {
  std::function<void(const nmt::ValidationPoint&)> on_validation;
  // Called after each iteration's stats are final.
  std::function<void(const IterationStats&, const nmt::Model&, const Dataset& train, const Dataset& val)>
      on_iteration;
};

struct LoopResult {
  std::vector<Success> successes;
  std::vector<IterationStats> report;
  StopReason stop = StopReason::kLimit;
  std::optional<nmt::Model> model;
};

// Train, translate pending inputs, verify and fill, feed failures back.
// With a preloaded model the first pass only translates (iteration 0).
LoopResult run_loop(const std::vector<minicc::AsmProgram>& inputs, const minicc::Compiler& compiler,
                    const LoopConfig& cfg, const LoopHooks& hooks = {},
                    std::optional<nmt::Model> initial = std::nullopt);

}  // namespace nmdec::driver
