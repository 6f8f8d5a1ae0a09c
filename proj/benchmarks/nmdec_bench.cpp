#include <benchmark/benchmark.h>

#include <vector>

#include "nmdec/canonical/pipeline.hpp"
#include "nmdec/canonical/postorder.hpp"
#include "nmdec/driver/dataset.hpp"
#include "nmdec/driver/driver.hpp"
#include "nmdec/lang/grammar.hpp"
#include "nmdec/lang/text.hpp"
#include "nmdec/minicc/compiler.hpp"
#include "nmdec/minicc/vm.hpp"
#include "nmdec/pdg/isomorphism.hpp"
#include "nmdec/pdg/pdg.hpp"
#include "nmdec/templatefill/templatefill.hpp"

namespace {

using namespace nmdec;

const minicc::MiniCompiler kCompiler;

std::vector<lang::Program> programs(int level, size_t n, uint64_t seed = 1) {
  lang::GrammarConfig g;
  g.level = level;
  lang::Sampler s(g, seed);
  std::vector<lang::Program> out;
  for (size_t i = 0; i < n; ++i) out.push_back(s.sample());
  return out;
}

void BM_Compile(benchmark::State& state) {
  auto ps = programs(static_cast<int>(state.range(0)), 256);
  size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(kCompiler.compile(ps[i++ % ps.size()]));
}
BENCHMARK(BM_Compile)->Arg(2)->Arg(4)->Arg(8);

void BM_RunVm(benchmark::State& state) {
  auto ps = programs(8, 64);
  std::vector<minicc::AsmProgram> as;
  for (const auto& p : ps) as.push_back(kCompiler.compile(p));
  size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(minicc::run_vm(as[i++ % as.size()], {}));
}
BENCHMARK(BM_RunVm);

void BM_CanonicalizePair(benchmark::State& state) {
  auto ps = programs(6, 256);
  std::vector<minicc::AsmProgram> as;
  for (const auto& p : ps) as.push_back(kCompiler.compile(p));
  size_t i = 0;
  for (auto _ : state) {
    size_t k = i++ % ps.size();
    benchmark::DoNotOptimize(canonical::canonicalize_pair(ps[k], as[k]));
  }
}
BENCHMARK(BM_CanonicalizePair);

void BM_PostorderRoundTrip(benchmark::State& state) {
  auto ps = programs(8, 256);
  size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(canonical::from_postorder(canonical::to_postorder(ps[i++ % ps.size()])));
}
BENCHMARK(BM_PostorderRoundTrip);

void BM_BuildPdg(benchmark::State& state) {
  auto ps = programs(static_cast<int>(state.range(0)), 64);
  std::vector<minicc::AsmProgram> as;
  for (const auto& p : ps) as.push_back(kCompiler.compile(p));
  size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(pdg::build_pdg(as[i++ % as.size()], kCompiler));
}
BENCHMARK(BM_BuildPdg)->Arg(4)->Arg(8);

void BM_FindIsomorphism(benchmark::State& state) {
  auto ps = programs(static_cast<int>(state.range(0)), 64);
  std::vector<pdg::Pdg> gs;
  for (const auto& p : ps) gs.push_back(pdg::build_pdg(kCompiler.compile(p), kCompiler));
  size_t i = 0;
  for (auto _ : state) {
    const auto& g = gs[i++ % gs.size()];
    benchmark::DoNotOptimize(pdg::find_isomorphism(g, g));
  }
}
BENCHMARK(BM_FindIsomorphism)->Arg(4)->Arg(8);

// Template with the shift constant off by one power of two.
void BM_FillShift(benchmark::State& state) {
  auto input = kCompiler.compile(lang::parse_source("y = ( 14 + x ) * 4 ;"));
  auto t = templatefill::Template::from_program(lang::parse_source("y = ( 14 + x ) * 2 ;"));
  for (auto _ : state) benchmark::DoNotOptimize(templatefill::fill(t, input, kCompiler));
}
BENCHMARK(BM_FillShift);

void BM_FillMagicDivisor(benchmark::State& state) {
  auto input = kCompiler.compile(lang::parse_source("y = x / 7 ;"));
  auto t = templatefill::Template::from_program(lang::parse_source("y = x / 9 ;"));
  for (auto _ : state) benchmark::DoNotOptimize(templatefill::fill(t, input, kCompiler));
}
BENCHMARK(BM_FillMagicDivisor);

struct ModelFixture {
  std::vector<nmt::Example> data;
  nmt::Model model;

  static ModelFixture make(int hidden, int embedding) {
    lang::GrammarConfig g;
    g.level = 4;
    driver::Dataset d;
    driver::PairGenerator gen(g, kCompiler, 3);
    gen.add_fresh(d, 64, {});
    auto data = d.examples();
    nmt::Vocab src, tgt;
    for (const auto& e : data) {
      src.add_all(e.src);
      tgt.add_all(e.tgt);
    }
    nmt::Hyper h = nmt::Hyper::desk();
    h.hidden_size = hidden;
    h.embedding_size = embedding;
    return {data, nmt::Model(src, tgt, h)};
  }
};

void BM_Translate(benchmark::State& state) {
  auto f = ModelFixture::make(64, 64);
  int beam = static_cast<int>(state.range(0));
  size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(f.model.translate(f.data[i++ % f.data.size()].src, beam));
}
BENCHMARK(BM_Translate)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_EvaluateLoss(benchmark::State& state) {
  auto f = ModelFixture::make(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(f.model.evaluate_loss(f.data));
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * f.data.size()));
}
BENCHMARK(BM_EvaluateLoss)->Args({64, 64})->Args({100, 300})->Unit(benchmark::kMillisecond);

void BM_SolveHypotheses(benchmark::State& state) {
  auto input = kCompiler.compile(lang::parse_source("y = ( 14 + x ) * 4 ;"));
  auto names = canonical::canonicalize_input(input).names;
  std::vector<nmt::Hypothesis> hyps;
  for (const char* src : {"X0 = X1 - 3 ;", "X0 = ( 14 + X1 ) * 2 ;"}) {
    nmt::Hypothesis h;
    h.tokens = canonical::canonicalize_pair(lang::parse_source(src), kCompiler.compile(lang::parse_source(src))).high;
    hyps.push_back(h);
  }
  for (auto _ : state) benchmark::DoNotOptimize(driver::solve_hypotheses(hyps, input, kCompiler));
}
BENCHMARK(BM_SolveHypotheses);

}  // namespace

BENCHMARK_MAIN();
