#include "nmdec/driver/driver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "nmdec/lang/text.hpp"
#include "nmdec/pdg/isomorphism.hpp"
#include "nmdec/pdg/pdg.hpp"

namespace nmdec::driver {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int phase_rank(Phase p) {
  switch (p) {
    case Phase::kParse: return 0;
    case Phase::kStructure: return 1;
    case Phase::kTimeout: return 2;
    case Phase::kFill: return 3;
    case Phase::kSolved: return 4;
  }
  return 0;
}

Phase phase_of(templatefill::FillFailure::Reason r) {
  switch (r) {
    case templatefill::FillFailure::Reason::kNotIsomorphic: return Phase::kStructure;
    case templatefill::FillFailure::Reason::kUnresolved: return Phase::kFill;
    case templatefill::FillFailure::Reason::kTimeout: return Phase::kTimeout;
  }
  return Phase::kStructure;
}

template <class Fn>
void parallel_for(size_t n, int threads, Fn&& fn) {
  size_t workers = std::min<size_t>(static_cast<size_t>(std::max(threads, 1)), n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto run = [&] {
    for (size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void require_disjoint(const Dataset& train, const Dataset& val, const KeySet& test) {
  for (const auto& p : val.pairs())
    if (train.contains_low(p.low) || test.count(seq_key(p.low)))
      throw std::logic_error("validation pair overlaps training or test data");
  for (const auto& p : train.pairs())
    if (test.count(seq_key(p.low))) throw std::logic_error("training pair overlaps test data");
}

KeySet merged(const KeySet& a, const KeySet& b) {
  KeySet out = a;
  out.insert(b.begin(), b.end());
  return out;
}

}  // namespace

LoopConfig LoopConfig::desk() { return LoopConfig{}; }

LoopConfig LoopConfig::paper() {
  LoopConfig c;
  c.initial_train = 10000;
  c.per_iter_train = 5000;
  c.val_target = 1000;
  c.hyper = nmt::Hyper::paper();
  return c;
}

void LoopConfig::validate() const {
  if (!(success_threshold > 0 && success_threshold <= 100))
    throw ConfigError("success threshold must be in (0, 100]");
  if (!(keep_fraction > 0 && keep_fraction <= 1)) throw ConfigError("keep fraction must be in (0, 1]");
  if (initial_train == 0) throw ConfigError("initial training set must not be empty");
  if (val_target == 0) throw ConfigError("validation target must be at least 1");
  if (patience_iters < 1) throw ConfigError("iteration patience must be at least 1");
  if (iteration_limit && *iteration_limit < 1) throw ConfigError("iteration limit must be at least 1");
  if (beam < 1) throw ConfigError("beam must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  try {
    grammar.validate();
    hyper.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::kThresholdMet: return "threshold-met";
    case StopReason::kNoProgress: return "no-progress";
    case StopReason::kLimit: return "limit";
  }
  return "?";
}

const char* to_string(Phase p) {
  switch (p) {
    case Phase::kSolved: return "solved";
    case Phase::kParse: return "parse";
    case Phase::kStructure: return "structure";
    case Phase::kFill: return "fill";
    case Phase::kTimeout: return "timeout";
  }
  return "?";
}

std::optional<StopReason> check_stop(const std::vector<IterationStats>& stats, const LoopConfig& cfg) {
  if (stats.empty()) return std::nullopt;
  const IterationStats& last = stats.back();
  if (last.percent >= cfg.success_threshold) return StopReason::kThresholdMet;
  int flat = 0;
  for (auto it = stats.rbegin(); it != stats.rend() && it->pending == it->pending_before; ++it) ++flat;
  if (flat >= cfg.patience_iters) return StopReason::kNoProgress;
  if (cfg.iteration_limit && last.iteration >= *cfg.iteration_limit) return StopReason::kLimit;
  return std::nullopt;
}

Dataset extend_training(const Dataset& train, const Dataset& failures, const LoopConfig& cfg,
                        PairGenerator& generator, const KeySet& exclude, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(cfg.keep_fraction);
  Dataset out;
  for (const auto& p : train.pairs()) {
    if (p.provenance == Provenance::kRandom && !keep(rng)) continue;
    if (!exclude.count(seq_key(p.low))) out.add(p);
  }
  for (const auto& p : failures.pairs())
    if (!exclude.count(seq_key(p.low))) out.add(p);
  generator.add_fresh(out, cfg.per_iter_train, exclude);
  return out;
}

SolveOutcome solve_hypotheses(const std::vector<nmt::Hypothesis>& hyps, const minicc::AsmProgram& input,
                              const minicc::Compiler& compiler, const templatefill::FillOptions& fill) {
  SolveOutcome out;
  out.canonical = canonical::canonicalize_input(input);
  std::map<std::string, Phase> seen;
  for (size_t i = 0; i < hyps.size(); ++i) {
    HypothesisReport r;
    r.tokens = hyps[i].tokens;
    r.score = hyps[i].score;
    r.program = canonical::decanonicalize(hyps[i].tokens, out.canonical.names);
    if (r.program) {
      std::string text = lang::to_source(*r.program);
      if (auto it = seen.find(text); it != seen.end()) {
        r.duplicate = true;
        r.phase = it->second;
      } else {
        templatefill::FillResult f = templatefill::fill(templatefill::Template::from_program(*r.program), input,
                                                        compiler, fill);
        r.fill_trace = f.trace;
        if (f.ok()) {
          r.phase = Phase::kSolved;
          out.solution = std::move(f.program);
          out.solved_by = static_cast<int>(i);
        } else {
          r.phase = phase_of(f.failure.reason);
          out.recompilable.push_back(*r.program);
        }
        seen.emplace(std::move(text), r.phase);
      }
    }
    if (phase_rank(r.phase) > phase_rank(out.phase)) out.phase = r.phase;
    out.hypotheses.push_back(std::move(r));
    if (out.solution) break;
  }
  return out;
}

SolveOutcome solve(const nmt::Model& model, const minicc::AsmProgram& input, const minicc::Compiler& compiler,
                   int beam, const templatefill::FillOptions& fill) {
  auto canon = canonical::canonicalize_input(input);
  return solve_hypotheses(model.translate(canon.tokens, beam), input, compiler, fill);
}

bool verify_success(const lang::Program& p, const minicc::AsmProgram& input, const minicc::Compiler& compiler) {
  pdg::Pdg expected = pdg::build_pdg(input, compiler);
  pdg::Pdg actual = pdg::build_pdg(compiler.compile(p), compiler);
  try {
    return pdg::find_isomorphism(actual, expected, {pdg::MatchMode::kExact}).has_value();
  } catch (const pdg::IsoTimeout&) {
    return false;
  }
}

LoopResult run_loop(const std::vector<minicc::AsmProgram>& inputs, const minicc::Compiler& compiler,
                    const LoopConfig& cfg, const LoopHooks& hooks, std::optional<nmt::Model> initial) {
  cfg.validate();
  if (inputs.empty()) throw ConfigError("no inputs to decompile");

  KeySet test_keys;
  for (const auto& a : inputs) test_keys.insert(seq_key(canonical::canonicalize_input(a).tokens));

  std::mt19937_64 rng(derive_seed(cfg.seed, 0));
  PairGenerator train_gen(cfg.grammar, compiler, derive_seed(cfg.seed, 1));
  PairGenerator val_gen(cfg.grammar, compiler, derive_seed(cfg.seed, 2));
  nmt::Hyper hyper = cfg.hyper;
  hyper.seed = derive_seed(cfg.seed, 3);

  LoopResult result;
  result.model = std::move(initial);
  if (result.model) {
    nmt::Hyper& h = result.model->mutable_hyper();
    h.batch_size = hyper.batch_size;
    h.validate_every_batches = hyper.validate_every_batches;
    h.patience = hyper.patience;
    h.max_epochs = hyper.max_epochs;
    h.learning_rate = hyper.learning_rate;
    h.clip_norm = hyper.clip_norm;
  }
  std::vector<size_t> pending(inputs.size());
  for (size_t i = 0; i < pending.size(); ++i) pending[i] = i;
  Dataset train, val, failures;

  auto translate_pending = [&](IterationStats& st) {
    auto t0 = Clock::now();
    std::vector<SolveOutcome> outcomes(pending.size());
    parallel_for(pending.size(), cfg.threads, [&](size_t k) {
      outcomes[k] = solve(*result.model, inputs[pending[k]], compiler, cfg.beam, cfg.fill);
    });
    st.pending_before = pending.size();
    std::vector<size_t> still;
    for (size_t k = 0; k < pending.size(); ++k) {
      SolveOutcome& o = outcomes[k];
      if (o.solution) {
        result.successes.push_back({pending[k], std::move(*o.solution), st.iteration});
        continue;
      }
      still.push_back(pending[k]);
      switch (o.phase) {
        case Phase::kParse: ++st.failed_parse; break;
        case Phase::kStructure: ++st.failed_structure; break;
        case Phase::kFill: ++st.failed_fill; break;
        case Phase::kTimeout: ++st.failed_timeout; break;
        case Phase::kSolved: break;
      }
      for (const auto& prog : o.recompilable)
        if (failures.add(make_pair(prog, compiler, Provenance::kFailedTranslation))) ++st.new_failures;
    }
    st.new_successes = pending.size() - still.size();
    pending = std::move(still);
    st.pending = pending.size();
    st.successes = result.successes.size();
    st.percent = 100.0 * static_cast<double>(st.successes) / static_cast<double>(inputs.size());
    st.translate_seconds = seconds_since(t0);
  };

  auto finish = [&](IterationStats st) {
    result.report.push_back(st);
    if (hooks.on_iteration) hooks.on_iteration(st, *result.model, train, val);
    return check_stop(result.report, cfg);
  };

  if (result.model) {
    IterationStats st;
    translate_pending(st);
    if (auto stop = finish(st); stop == StopReason::kThresholdMet) {
      result.stop = *stop;
      return result;
    }
  }

  for (int iteration = 1;; ++iteration) {
    IterationStats st;
    st.iteration = iteration;

    KeySet excluded_from_train = merged(val.low_keys(), test_keys);
    if (iteration == 1) {
      train_gen.add_fresh(train, cfg.initial_train, excluded_from_train);
      for (const auto& p : failures.pairs())
        if (!excluded_from_train.count(seq_key(p.low))) train.add(p);
    } else {
      train = extend_training(train, failures, cfg, train_gen, excluded_from_train, rng);
    }
    size_t fresh_val = iteration == 1 ? cfg.val_target : std::max<size_t>(1, cfg.val_target / 2);
    val_gen.add_fresh(val, fresh_val, merged(train.low_keys(), test_keys));
    val.shuffle(rng);
    val.truncate(cfg.val_target);
    require_disjoint(train, val, test_keys);
    st.train_size = train.size();
    st.val_size = val.size();

    nmt::Vocab src = result.model ? result.model->src_vocab() : nmt::Vocab();
    nmt::Vocab tgt = result.model ? result.model->tgt_vocab() : nmt::Vocab();
    for (const Dataset* d : {&train, &val})
      for (const auto& p : d->pairs()) {
        src.add_all(p.low);
        tgt.add_all(p.high);
      }
    if (!result.model) {
      result.model.emplace(std::move(src), std::move(tgt), hyper);
    } else if (src.size() != result.model->src_vocab().size() || tgt.size() != result.model->tgt_vocab().size()) {
      result.model = result.model->extended(src, tgt);
    }

    nmt::TrainReport tr = result.model->train(train.examples(), val.examples(), hooks.on_validation);
    st.epochs = tr.epochs;
    st.batches = tr.batches;
    st.train_seconds = tr.seconds;
    st.val_exact_match = tr.best_exact_match;

    translate_pending(st);
    if (auto stop = finish(st)) {
      result.stop = *stop;
      return result;
    }
  }
}

}  // namespace nmdec::driver
